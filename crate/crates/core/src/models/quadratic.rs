//! Quadratic forms `W = σ⁻¹ Σ_{i≠j} a_ij X_i X_j` of i.i.d. standardized
//! variables.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pair::{CondStats, PairModel};
use crate::quadrature;
use crate::stats::{derive_stream, StreamRng};
use crate::targets::TargetLaw;

/// Law of the coordinates, standardized to mean 0 and variance 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XLaw {
    /// ±1 with probability 1/2 each.
    Rademacher,
    /// Uniform on `[−√3, √3]`.
    Uniform,
    /// `E − 1` with `E` standard exponential.
    Exponential,
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

impl XLaw {
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            XLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            XLaw::Uniform => SQRT3 * (2.0 * rng.random::<f64>() - 1.0),
            XLaw::Exponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
        }
    }

    pub fn third_moment(&self) -> f64 {
        match self {
            XLaw::Rademacher | XLaw::Uniform => 0.0,
            XLaw::Exponential => 2.0,
        }
    }

    pub fn fourth_moment(&self) -> f64 {
        match self {
            XLaw::Rademacher => 1.0,
            XLaw::Uniform => 9.0 / 5.0,
            XLaw::Exponential => 9.0,
        }
    }

    /// `E[(x − X')|x − X'|]` for an independent copy `X'`.
    pub fn signed_square(&self, x: f64) -> f64 {
        match self {
            // ((x-1)|x-1| + (x+1)|x+1|)/2 = 2x on {−1, 1}
            XLaw::Rademacher => 0.5 * ((x - 1.0) * (x - 1.0).abs() + (x + 1.0) * (x + 1.0).abs()),
            XLaw::Uniform => {
                let gl = quadrature::rule(64);
                let x = x.clamp(-SQRT3, SQRT3);
                let below = gl.integrate(|t| (x - t) * (x - t), -SQRT3, x);
                let above = gl.integrate(|t| (x - t) * (x - t), x, SQRT3);
                (below - above) / (2.0 * SQRT3)
            }
            XLaw::Exponential => {
                let gl = quadrature::rule(64);
                let x = x.max(-1.0);
                let below = gl.integrate(|t| (x - t) * (x - t) * (-(t + 1.0)).exp(), -1.0, x);
                // ∫_x^∞ (t − x)² e^{−(t+1)} dt = 2 e^{−(x+1)}
                let above = 2.0 * (-(x + 1.0)).exp();
                below - above
            }
        }
    }

    /// `E[(x − X')³] = x³ + 3x − E X³`.
    pub fn cubic(&self, x: f64) -> f64 {
        x * x * x + 3.0 * x - self.third_moment()
    }
}

/// Symmetric sparse matrix with zero diagonal in compressed-row form; both
/// `(i, j)` and `(j, i)` are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymmetricMatrix {
    /// From dense rows; validates symmetry (to 1e−12 relative) and the
    /// zero diagonal.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(invalid("matrix needs at least 2 rows"));
        }
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(invalid(format!("entry ({i}, {j}) is not finite")));
                }
                if i == j && v != 0.0 {
                    return Err(invalid(format!("diagonal entry ({i}, {i}) = {v} is not zero")));
                }
                let u = rows[j][i];
                if (v - u).abs() > 1e-12 * v.abs().max(u.abs()) {
                    return Err(invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
                if j > i && v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_upper(n, &triplets)
    }

    /// From upper-triangle entries `(i, j, a_ij)` with `i < j`.
    pub fn from_upper(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            if i >= j || j >= n {
                return Err(invalid(format!(
                    "entry ({i}, {j}) is not strictly upper triangular in {n}x{n}"
                )));
            }
            rows[i].push((j, v));
            rows[j].push((i, v));
        }
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            if r.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(invalid("duplicate matrix entry"));
            }
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_start.push(cols.len());
        }
        Ok(Self {
            n,
            row_start,
            cols,
            vals,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `Σ_j a_ij x_j`
    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| v * x[c])
            .sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum()
    }

    /// `Σ_i (Σ_j a_ij²)²`
    pub fn row_norm_fourth(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let s: f64 = self.row(i).map(|(_, v)| v * v).sum();
                s * s
            })
            .sum()
    }

    /// `Tr(A⁴) = Σ_{ij} (A²)_{ij}²`, accumulated row by row.
    pub fn trace_a4(&self) -> f64 {
        let mut acc = vec![0.0; self.n];
        let mut touched = Vec::new();
        let mut total = 0.0;
        for i in 0..self.n {
            for (k, a_ik) in self.row(i) {
                for (j, a_kj) in self.row(k) {
                    if acc[j] == 0.0 {
                        touched.push(j);
                    }
                    acc[j] += a_ik * a_kj;
                }
            }
            for &j in &touched {
                total += acc[j] * acc[j];
                acc[j] = 0.0;
            }
            touched.clear();
        }
        total
    }

    /// Reads a dense CSV matrix (no header; commas or whitespace).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read matrix file {}: {e}", path.display())))?;
        Self::parse_csv(&text)
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(str::parse::<f64>)
                .collect();
            rows.push(row.map_err(|e| invalid(format!("matrix line {}: {e}", ln + 1)))?);
        }
        Self::from_dense(&rows)
    }
}

/// Matrix source in an experiment configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MatrixSpec {
    /// `a_{i,i+1} = a_{i+1,i} = 1`.
    Tridiagonal { n: usize },
    /// Each pair `i < j` kept with probability `p`, weight `N(0,1)`.
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    /// Tridiagonal plus `eps · (u uᵀ)` off the diagonal, `u` Gaussian with
    /// unit norm.
    Rank1 { n: usize, eps: f64, seed: u64 },
    /// Dense CSV file.
    Csv { path: String },
    /// Dense rows given inline.
    Dense { rows: Vec<Vec<f64>> },
}

impl MatrixSpec {
    pub fn build(&self) -> Result<SymmetricMatrix> {
        match self {
            MatrixSpec::Tridiagonal { n } => {
                if *n < 2 {
                    return Err(invalid("tridiagonal matrix needs n >= 2"));
                }
                let e: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
                SymmetricMatrix::from_upper(*n, &e)
            }
            MatrixSpec::ErdosRenyi { n, p, seed } => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(invalid(format!("edge probability {p} not in (0, 1]")));
                }
                let mut rng = derive_stream(*seed, u64::MAX, 0);
                let mut e = Vec::new();
                for i in 0..*n {
                    for j in i + 1..*n {
                        if rng.random::<f64>() < *p {
                            e.push((i, j, StandardNormal.sample(&mut rng)));
                        }
                    }
                }
                if e.is_empty() {
                    return Err(invalid("random matrix has no non-zero entries"));
                }
                SymmetricMatrix::from_upper(*n, &e)
            }
            MatrixSpec::Rank1 { n, eps, seed } => {
                if *n < 2 {
                    return Err(invalid("rank-1 matrix needs n >= 2"));
                }
                let mut rng = derive_stream(*seed, u64::MAX, 1);
                let u: Vec<f64> = (0..*n).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
                let mut e = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..*n {
                    for j in i + 1..*n {
                        let t = if j == i + 1 { 1.0 } else { 0.0 };
                        let v = t + eps * u[i] * u[j] / (norm * norm);
                        if v != 0.0 {
                            e.push((i, j, v));
                        }
                    }
                }
                SymmetricMatrix::from_upper(*n, &e)
            }
            MatrixSpec::Csv { path } => SymmetricMatrix::read_csv(Path::new(path)),
            MatrixSpec::Dense { rows } => SymmetricMatrix::from_dense(rows),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadraticModel {
    a: SymmetricMatrix,
    sigma: f64,
    law: XLaw,
    target: TargetLaw,
}

impl QuadraticModel {
    pub fn new(a: SymmetricMatrix, law: XLaw) -> Result<Self> {
        let s2 = 2.0 * a.frobenius_sq();
        if !(s2 > 0.0) {
            return Err(invalid("matrix is zero, the quadratic form is degenerate"));
        }
        Ok(Self {
            a,
            sigma: s2.sqrt(),
            law,
            target: TargetLaw::normal(1.0)?,
        })
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn law(&self) -> XLaw {
        self.law
    }

    /// `(E X⁴/σ²)(√Σ_i(Σ_j a_ij²)² + √Tr A⁴)`, the bound with its absolute
    /// constant set to 1.
    pub fn theoretical_bound_factor(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.law.fourth_moment() / s2 * (self.a.row_norm_fourth().sqrt() + self.a.trace_a4().sqrt())
    }

    /// `σ⁻⁴ Σ_i(Σ_j a_ij²)² + σ⁻² √Tr A⁴` (the conjectured sharper rate;
    /// reported only).
    pub fn conjectured_bound_factor(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.a.row_norm_fourth() / (s2 * s2) + self.a.trace_a4().sqrt() / s2
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.a.n() {
            return Err(invalid(format!(
                "configuration has length {}, expected {}",
                x.len(),
                self.a.n()
            )));
        }
        Ok(())
    }

    /// Replaces `count` uniformly chosen coordinates (with repetition) by
    /// fresh draws and returns `(W, W')`.
    pub fn resample_coordinates(&self, x: &[f64], rng: &mut StreamRng, count: usize) -> (f64, f64) {
        let mut y = x.to_vec();
        for _ in 0..count {
            let i = rng.random_range(0..y.len());
            y[i] = self.law.sample(rng);
        }
        (self.statistic(&x.to_vec()), self.statistic(&y))
    }
}

impl PairModel for QuadraticModel {
    type Config = Vec<f64>;

    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({ "n": self.a.n(), "x_law": self.law, "nnz": self.a.nnz() })
    }

    fn n(&self) -> usize {
        self.a.n()
    }

    fn lambda(&self) -> f64 {
        2.0 / self.a.n() as f64
    }

    fn target(&self) -> &TargetLaw {
        &self.target
    }

    fn residual_is_zero(&self) -> bool {
        true
    }

    fn sample_config(&self, rng: &mut StreamRng) -> Vec<f64> {
        (0..self.a.n()).map(|_| self.law.sample(rng)).collect()
    }

    fn statistic(&self, x: &Vec<f64>) -> f64 {
        let s: f64 = (0..self.a.n()).map(|i| x[i] * self.a.row_dot(i, x)).sum();
        s / self.sigma
    }

    fn cond_stats(&self, x: &Vec<f64>) -> Result<CondStats> {
        self.check_len(x)?;
        let n = self.a.n();
        let (mut s_w, mut s2, mut sabs, mut s3) = (0.0, 0.0, 0.0, 0.0);
        for (i, &xi) in x.iter().enumerate() {
            let l = self.a.row_dot(i, x);
            s_w += xi * l;
            s2 += (xi * xi + 1.0) * l * l;
            sabs += l * l.abs() * self.law.signed_square(xi);
            s3 += l * l * l * self.law.cubic(xi);
        }
        let nf = n as f64;
        let sg = self.sigma;
        let w = s_w / sg;
        if !w.is_finite() {
            return Err(Error::Kernel {
                reason: "non-finite statistic".into(),
                config: String::new(),
            });
        }
        Ok(CondStats {
            w,
            ed: 2.0 * w / nf,
            ed2: 4.0 * s2 / (nf * sg * sg),
            edabs: 4.0 * sabs / (nf * sg * sg),
            ed3: 8.0 * s3 / (nf * sg * sg * sg),
        })
    }

    fn sample_pair(&self, x: &Vec<f64>, rng: &mut StreamRng) -> (f64, f64) {
        self.resample_coordinates(x, rng, 1)
    }
}
