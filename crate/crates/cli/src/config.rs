//! Experiment configuration: parsing, validation and the config hash.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use steinlab_core::models::{
    BaseMeasure, BaseMeasureSpec, ColoredGraphModel, CurieWeissModel, GraphSpec, HeisenbergModel, MatrixSpec,
    QuadraticModel, XLaw,
};

use crate::model::Model;

/// Smallest replication count accepted in `rates` mode.
pub const MIN_RATE_REPLICATIONS: u64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Rates,
    Bound,
    Diagnose,
    TargetTable,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rates => "rates",
            Mode::Bound => "bound",
            Mode::Diagnose => "diagnose",
            Mode::TargetTable => "target-table",
        }
    }
}

/// Coupling matrix family; generators take `n` from the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixFamily {
    Tridiagonal,
    ErdosRenyi { p: f64, seed: u64 },
    Rank1 { eps: f64, seed: u64 },
    Csv { path: String },
    Dense { rows: Vec<Vec<f64>> },
}

impl MatrixFamily {
    fn spec(&self, n: usize) -> MatrixSpec {
        match self.clone() {
            MatrixFamily::Tridiagonal => MatrixSpec::Tridiagonal { n },
            MatrixFamily::ErdosRenyi { p, seed } => MatrixSpec::ErdosRenyi { n, p, seed },
            MatrixFamily::Rank1 { eps, seed } => MatrixSpec::Rank1 { n, eps, seed },
            MatrixFamily::Csv { path } => MatrixSpec::Csv { path },
            MatrixFamily::Dense { rows } => MatrixSpec::Dense { rows },
        }
    }

    fn fixed_size(&self) -> bool {
        matches!(self, MatrixFamily::Csv { .. } | MatrixFamily::Dense { .. })
    }
}

/// Graph family; generators take `n` from the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphFamily {
    Complete,
    ErdosRenyi { p: f64, seed: u64 },
    RandomRegular { d: usize, seed: u64 },
    EdgeList { path: String },
    Edges { edges: Vec<(usize, usize)> },
}

impl GraphFamily {
    fn spec(&self, n: usize) -> GraphSpec {
        match self.clone() {
            GraphFamily::Complete => GraphSpec::Complete { n },
            GraphFamily::ErdosRenyi { p, seed } => GraphSpec::ErdosRenyi { n, p, seed },
            GraphFamily::RandomRegular { d, seed } => GraphSpec::RandomRegular { n, d, seed },
            GraphFamily::EdgeList { path } => GraphSpec::EdgeList { path, n: Some(n) },
            GraphFamily::Edges { edges } => GraphSpec::Edges { n, edges },
        }
    }
}

/// Color count: a fixed number, or `"n"` to use one color per vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Colors {
    Fixed(u32),
    Symbol(String),
}

impl Colors {
    fn resolve(&self, n: usize) -> Result<u32> {
        match self {
            Colors::Fixed(c) => Ok(*c),
            Colors::Symbol(s) if s == "n" => u32::try_from(n).context("n too large for a color count"),
            Colors::Symbol(s) => bail!("colors must be a number or \"n\", got {s:?}"),
        }
    }
}

fn two_point() -> BaseMeasureSpec {
    BaseMeasureSpec::TwoPoint
}

fn rademacher() -> XLaw {
    XLaw::Rademacher
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Quadratic {
        matrix: MatrixFamily,
        #[serde(default = "rademacher")]
        x_law: XLaw,
    },
    CurieWeiss {
        beta: f64,
        #[serde(default = "two_point")]
        rho: BaseMeasureSpec,
    },
    Heisenberg {
        beta: f64,
    },
    ColoredGraph {
        graph: GraphFamily,
        colors: Colors,
    },
}

impl ModelSpec {
    /// Builds and validates the model at size `n`.
    pub fn build(&self, n: usize) -> Result<Model> {
        Ok(match self {
            ModelSpec::Quadratic { matrix, x_law } => {
                let a = matrix.spec(n).build()?;
                if matrix.fixed_size() && a.n() != n {
                    bail!("matrix has size {} but the grid asks for n = {n}", a.n());
                }
                Model::Quadratic(QuadraticModel::new(a, *x_law)?)
            }
            ModelSpec::CurieWeiss { beta, rho } => {
                Model::CurieWeiss(CurieWeissModel::new(BaseMeasure::new(rho.clone())?, *beta, n)?)
            }
            ModelSpec::Heisenberg { beta } => Model::Heisenberg(HeisenbergModel::new(*beta, n)?),
            ModelSpec::ColoredGraph { graph, colors } => {
                let g = graph.spec(n).build()?;
                Model::ColoredGraph(ColoredGraphModel::new(g, colors.resolve(n)?)?)
            }
        })
    }
}

fn default_bootstrap() -> usize {
    steinlab_core::stats::rate::DEFAULT_BOOTSTRAP
}

fn default_table_points() -> usize {
    1001
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub n_grid: Vec<usize>,
    #[serde(rename = "M")]
    pub replications: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Bootstrap resamples of the rate fit.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
    /// Slope window checked by `rates --check`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_slope: Option<(f64, f64)>,
    /// Abscissae of the exported target table.
    #[serde(default = "default_table_points")]
    pub table_points: usize,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow!("config does not parse: {e}"))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text)
    }

    /// Checks the grid and replication count against `mode`, then builds
    /// the model at every grid point.
    pub fn validate(&self, mode: Mode) -> Result<Vec<Model>> {
        if self.n_grid.is_empty() {
            bail!("n_grid is empty");
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            bail!("n_grid must be strictly increasing, got {:?}", self.n_grid);
        }
        match mode {
            Mode::Rates => {
                if self.replications < MIN_RATE_REPLICATIONS {
                    bail!(
                        "rates mode needs M >= {MIN_RATE_REPLICATIONS}, got {}",
                        self.replications
                    );
                }
                if self.n_grid.len() < 3 {
                    bail!("rates mode needs at least 3 grid points");
                }
            }
            Mode::Bound | Mode::Diagnose if self.replications < 2 => {
                bail!("M must be at least 2, got {}", self.replications)
            }
            _ => {}
        }
        if let Some((lo, hi)) = self.expected_slope {
            if !(lo <= hi) {
                bail!("expected_slope window [{lo}, {hi}] is empty");
            }
        }
        self.n_grid
            .iter()
            .map(|&n| self.model.build(n).with_context(|| format!("model at n = {n}")))
            .collect()
    }

    /// SHA-256 of the canonical JSON form, without the output directory
    /// and mode so that the same experiment hashes identically wherever
    /// it is written.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.outputs = None;
        c.mode = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
