//! The four application models.

pub mod colored_graph;
pub mod curie_weiss;
pub mod heisenberg;
pub mod quadratic;

pub use colored_graph::{ColoredGraphModel, Graph, GraphSpec};
pub use curie_weiss::{BaseMeasure, BaseMeasureSpec, CurieWeissModel, CwConfig, DensityFamily};
pub use heisenberg::{HeisenbergModel, SpinConfig};
pub use quadratic::{MatrixSpec, QuadraticModel, SymmetricMatrix, XLaw};
