use steinlab_core::models::{ColoredGraphModel, CurieWeissModel, HeisenbergModel, QuadraticModel};

/// One of the four application models, built at a fixed `n`.
#[derive(Clone, Debug)]
pub enum Model {
    Quadratic(QuadraticModel),
    CurieWeiss(CurieWeissModel),
    Heisenberg(HeisenbergModel),
    ColoredGraph(ColoredGraphModel),
}

/// Evaluates `$body` with `$m` bound to the concrete model.
#[macro_export]
macro_rules! with_model {
    ($model:expr, $m:ident => $body:expr) => {
        match $model {
            $crate::model::Model::Quadratic($m) => $body,
            $crate::model::Model::CurieWeiss($m) => $body,
            $crate::model::Model::Heisenberg($m) => $body,
            $crate::model::Model::ColoredGraph($m) => $body,
        }
    };
}

impl Model {
    /// The model's theoretical bound factor with the absolute constant set
    /// to 1, where one is defined.
    pub fn bracket(&self) -> Option<f64> {
        match self {
            Model::Quadratic(m) => Some(m.theoretical_bound_factor()),
            Model::ColoredGraph(m) => Some(m.theoretical_bound_factor()),
            _ => None,
        }
    }
}
