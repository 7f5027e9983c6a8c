//! General Curie–Weiss model `dP ∝ exp(β S²/(2n)) ∏ ρ(dx_i)` with
//! `0 < β ≤ 1`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::aux::TabulatedSampler;
use crate::error::{invalid, Error, Result};
use crate::pair::{CondStats, PairModel};
use crate::quadrature::{self, EndpointNode};
use crate::special::{ln_cosh, log_sum_exp};
use crate::stats::StreamRng;
use crate::targets::{DriftSpec, TargetLaw};

/// Cells of the auxiliary-field inverse-CDF table.
pub const AUX_CELLS: usize = 4096;

/// Base measure spec: `"two_point"`, `{"atoms": [[x, p], ...]}` or
/// `{"density": {"family": ...}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMeasureSpec {
    TwoPoint,
    Atoms(Vec<[f64; 2]>),
    Density(DensityFamily),
}

/// Built-in continuous families, standardized to mean 0 and variance 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityFamily {
    /// Uniform on `[−√3, √3]`.
    Uniform,
    /// Density `∝ (1 − x²/s²)^{α−1}` on `[−s, s]` with `s = √(2α + 1)`,
    /// `α ≥ 1`.
    SymmetricBeta { alpha: f64 },
}

#[derive(Clone, Debug)]
enum Repr {
    Atoms {
        x: Vec<f64>,
        ln_p: Vec<f64>,
        two_point: bool,
    },
    Density {
        alpha: f64,
        half: f64,
        ln_norm: f64,
    },
}

/// A validated base measure ρ.
#[derive(Clone, Debug)]
pub struct BaseMeasure {
    spec: BaseMeasureSpec,
    repr: Repr,
}

const STANDARDIZATION_TOL: f64 = 1e-10;

impl BaseMeasure {
    pub fn new(spec: BaseMeasureSpec) -> Result<Self> {
        let repr = match &spec {
            BaseMeasureSpec::TwoPoint => Repr::Atoms {
                x: vec![-1.0, 1.0],
                ln_p: vec![0.5f64.ln(); 2],
                two_point: true,
            },
            BaseMeasureSpec::Atoms(atoms) => {
                if atoms.len() < 2 {
                    return Err(invalid("an atomic base measure needs at least 2 atoms"));
                }
                let mut sorted = atoms.clone();
                sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
                if sorted.windows(2).any(|w| w[0][0] == w[1][0]) {
                    return Err(invalid("duplicate atom location"));
                }
                if sorted
                    .iter()
                    .any(|a| !a[0].is_finite() || !(a[1] > 0.0) || !a[1].is_finite())
                {
                    return Err(invalid("atoms need finite locations and positive weights"));
                }
                let total: f64 = sorted.iter().map(|a| a[1]).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("atom weights sum to {total}, not 1")));
                }
                Repr::Atoms {
                    x: sorted.iter().map(|a| a[0]).collect(),
                    ln_p: sorted.iter().map(|a| (a[1] / total).ln()).collect(),
                    two_point: false,
                }
            }
            BaseMeasureSpec::Density(family) => {
                let alpha = match *family {
                    DensityFamily::Uniform => 1.0,
                    DensityFamily::SymmetricBeta { alpha } => alpha,
                };
                if !(alpha >= 1.0 && alpha.is_finite()) {
                    return Err(invalid(format!("symmetric beta family needs alpha >= 1, got {alpha}")));
                }
                let half = (2.0 * alpha + 1.0).sqrt();
                let mut r = Repr::Density {
                    alpha,
                    half,
                    ln_norm: 0.0,
                };
                let z: f64 = density_nodes(&r, -half, half).map(|(_, w)| w).sum();
                if let Repr::Density { ln_norm, .. } = &mut r {
                    *ln_norm = z.ln();
                }
                r
            }
        };
        let m = Self { spec, repr };
        let (m1, m2) = (m.moment(1), m.moment(2));
        if m1.abs() > STANDARDIZATION_TOL || (m2 - 1.0).abs() > STANDARDIZATION_TOL {
            return Err(invalid(format!(
                "base measure must have mean 0 and variance 1, got mean {m1} and second moment {m2}"
            )));
        }
        Ok(m)
    }

    pub fn spec(&self) -> &BaseMeasureSpec {
        &self.spec
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.repr, Repr::Atoms { .. })
    }

    /// Atom locations and probabilities (empty for densities).
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match &self.repr {
            Repr::Atoms { x, ln_p, .. } => x.iter().zip(ln_p).map(|(&x, &l)| (x, l.exp())).collect(),
            Repr::Density { .. } => Vec::new(),
        }
    }

    /// `∫ h dρ`
    pub fn expect<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        match &self.repr {
            Repr::Atoms { x, ln_p, .. } => x.iter().zip(ln_p).map(|(&x, &l)| l.exp() * h(x)).sum(),
            Repr::Density { half, .. } => density_nodes(&self.repr, -half, *half).map(|(x, w)| w * h(x)).sum(),
        }
    }

    pub fn moment(&self, j: u32) -> f64 {
        self.expect(|x| x.powi(j as i32))
    }

    /// `ln ∫ e^{tx} dρ(x)`, accurate for small `|t|` (computed through
    /// `ln(1 + ∫(e^{tx} − 1)dρ)`) and overflow-free for large `|t|`.
    pub fn ln_mgf(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Atoms { two_point: true, .. } => ln_cosh(t),
            Repr::Atoms { x, ln_p, .. } => {
                if t.abs() < 1.0 {
                    let em1: f64 = x.iter().zip(ln_p).map(|(&x, &l)| l.exp() * (t * x).exp_m1()).sum();
                    em1.ln_1p()
                } else {
                    let terms: Vec<f64> = x.iter().zip(ln_p).map(|(&x, &l)| l + t * x).collect();
                    log_sum_exp(&terms)
                }
            }
            Repr::Density { half, .. } => {
                if t.abs() < 1.0 {
                    self.expect(|x| (t * x).exp_m1()).ln_1p()
                } else {
                    let edge = t.abs() * half;
                    self.expect(|x| (t * x - edge).exp()).ln() + edge
                }
            }
        }
    }

    /// Tilted distribution `∝ e^{tx} ρ(dx)` restricted to the atoms.
    fn tilted_atoms(&self, t: f64) -> Vec<f64> {
        match &self.repr {
            Repr::Atoms { x, ln_p, .. } => {
                let e: Vec<f64> = x.iter().zip(ln_p).map(|(&x, &l)| l + t * x).collect();
                let z = log_sum_exp(&e);
                e.iter().map(|v| (v - z).exp()).collect()
            }
            Repr::Density { .. } => Vec::new(),
        }
    }

    /// One draw from the tilted density (continuous families only).
    fn sample_tilted_density<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        let Repr::Density { alpha, half, .. } = self.repr else {
            unreachable!("tilted density draw on a discrete measure")
        };
        loop {
            // tilted uniform by inversion, then accept by the beta factor
            let u: f64 = rng.random();
            let x = if (t * half).abs() < 1e-12 {
                half * (2.0 * u - 1.0)
            } else if t > 0.0 {
                -half + (u * (2.0 * t * half).exp_m1()).ln_1p() / t
            } else {
                half - (u * (-2.0 * t * half).exp_m1()).ln_1p() / (-t)
            };
            let x = x.clamp(-half, half);
            if alpha == 1.0 {
                return x;
            }
            let r = x / half;
            let accept = ((alpha - 1.0) * ((1.0 - r) * (1.0 + r)).ln()).exp();
            if rng.random::<f64>() < accept {
                return x;
            }
        }
    }

    fn support_half_width(&self) -> f64 {
        match &self.repr {
            Repr::Atoms { x, .. } => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            Repr::Density { half, .. } => *half,
        }
    }
}

/// Tanh-sinh nodes on `[a, b] ⊆ [−s, s]` carrying `ρ(x)dx` weights
/// (unnormalized until `ln_norm` is set).
fn density_nodes(repr: &Repr, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let Repr::Density { alpha, half, ln_norm } = *repr else {
        unreachable!("density nodes of a discrete measure")
    };
    quadrature::tanh_sinh(a, b).map(
        move |EndpointNode {
                  x,
                  from_lo,
                  from_hi,
                  weight,
              }| {
            // 1 − x²/s² = (s − x)(s + x)/s², with both factors kept exact near
            // the interval ends
            let plus = if a == -half { from_lo } else { x + half };
            let minus = if b == half { from_hi } else { half - x };
            let f = if alpha == 1.0 {
                1.0
            } else {
                ((alpha - 1.0) * (plus * minus / (half * half)).ln()).exp()
            };
            (x, weight * f * (-ln_norm).exp())
        },
    )
}

/// Outcome of the exponential-moment probe.
#[derive(Clone, Debug, Serialize)]
pub struct MgfConditionReport {
    pub passed: bool,
    /// Sub-critical: `b = 1/sup_t 2 ln E e^{tξ}/t²`. Critical: `b₂`.
    pub b: f64,
    /// Critical regime only: the split point `b₀` and `b₁`.
    pub b0: Option<f64>,
    pub b1: Option<f64>,
    pub probe_range: f64,
    pub note: String,
}

const PROBE_RANGE: f64 = 40.0;
const PROBE_STEP: f64 = 0.01;

fn probe_ts() -> impl Iterator<Item = f64> {
    let m = (PROBE_RANGE / PROBE_STEP) as i32;
    (1..=m).flat_map(|j| {
        let t = j as f64 * PROBE_STEP;
        [t, -t]
    })
}

/// Probes `E e^{tξ} ≤ e^{t²/(2b)}` for some `b > β` (β < 1) or the split
/// condition with `b₀, b₁ > 0`, `b₂ > 1` (β = 1) on a grid of `t`.
pub fn check_mgf_conditions(rho: &BaseMeasure, beta: f64, k: u32) -> MgfConditionReport {
    let note = format!("verified on |t| <= {PROBE_RANGE} step {PROBE_STEP} only; not refuted outside");
    if beta < 1.0 {
        let sup = probe_ts()
            .map(|t| 2.0 * rho.ln_mgf(t) / (t * t))
            .fold(f64::NEG_INFINITY, f64::max);
        let b = 1.0 / sup;
        return MgfConditionReport {
            passed: b > beta,
            b,
            b0: None,
            b1: None,
            probe_range: PROBE_RANGE,
            note,
        };
    }
    let ts: Vec<f64> = probe_ts().collect();
    let mut best = None;
    for b0 in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let mut b1 = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        for &t in &ts {
            let l = rho.ln_mgf(t);
            if t.abs() <= b0 {
                b1 = b1.min((t * t / 2.0 - l) / t.abs().powi(2 * k as i32));
            } else {
                sup = sup.max(2.0 * l / (t * t));
            }
        }
        let b2 = 1.0 / sup;
        let ok = b1 > 0.0 && b2 > 1.0;
        if ok || best.is_none() {
            best = Some((b0, b1, b2, ok));
        }
        if ok {
            break;
        }
    }
    let (b0, b1, b2, ok) = best.expect("at least one split point probed");
    MgfConditionReport {
        passed: ok,
        b: b2,
        b0: Some(b0),
        b1: Some(b1),
        probe_range: PROBE_RANGE,
        note,
    }
}

/// `k` with the first `2k − 1` moments of ρ equal to the standard normal's
/// and a positive deficit `λ_ρ` at order `2k`.
pub fn type_order(rho: &BaseMeasure) -> Result<(u32, f64)> {
    let mut normal = 1.0; // (j-1)!! for even j
    for j in 3..=12u32 {
        let target = if j % 2 == 0 {
            normal *= (j - 1) as f64;
            normal
        } else {
            0.0
        };
        let m = rho.moment(j);
        let gap = target - m;
        if gap.abs() > 1e-9 * target.abs().max(1.0) {
            if j % 2 == 1 {
                return Err(invalid(format!(
                    "base measure has a non-zero odd moment at order {j}; it is not of type k"
                )));
            }
            if gap < 0.0 {
                return Err(invalid(format!(
                    "moment {j} exceeds the normal moment; the strength must be positive"
                )));
            }
            return Ok((j / 2, gap));
        }
    }
    Err(invalid(
        "base measure matches normal moments up to order 12; no type order found",
    ))
}

/// `H^{(2k)}(0)/(2k)!` with `H(s) = s²/2 − ln E e^{sξ}`, by central
/// differences of order `2k` on `ln M` with 4 levels of Richardson
/// extrapolation.
pub fn critical_c2(rho: &BaseMeasure, k: u32) -> f64 {
    let order = 2 * k as usize;
    let h0: f64 = if k <= 2 { 1e-2 } else { 8e-2 };
    let binom = |n: usize, r: usize| (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    let diff = |h: f64| {
        let mut s = 0.0;
        for j in 0..=order {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * binom(order, j) * rho.ln_mgf((k as f64 - j as f64) * h);
        }
        s / h.powi(order as i32)
    };
    let mut table: Vec<f64> = (0..4).map(|l| diff(h0 / f64::powi(2.0, l))).collect();
    for level in 1..4 {
        let f = f64::powi(4.0, level as i32);
        for i in (level..4).rev() {
            table[i] = (f * table[i] - table[i - 1]) / (f - 1.0);
        }
    }
    let deriv = -table[3]; // H^{(2k)} = −(ln M)^{(2k)} for 2k ≥ 3
    let fact: f64 = (1..=order).map(|i| i as f64).product();
    deriv / fact
}

/// Model configuration: atom counts for discrete ρ, coordinates otherwise.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CwConfig {
    Counts(Vec<u32>),
    Values(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct CurieWeissModel {
    rho: BaseMeasure,
    beta: f64,
    n: usize,
    k: Option<u32>,
    c2: Option<f64>,
    scale: f64,
    lambda: f64,
    target: TargetLaw,
    aux: TabulatedSampler,
    atoms: Vec<f64>,
    conditions: MgfConditionReport,
}

impl CurieWeissModel {
    pub fn new(rho: BaseMeasure, beta: f64, n: usize) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(invalid(format!("beta must lie in (0, 1], got {beta}")));
        }
        if n == 0 {
            return Err(invalid("n must be positive"));
        }
        let nf = n as f64;
        let (k, c2, scale, lambda, target) = if beta < 1.0 {
            (
                None,
                None,
                nf.powf(-0.5),
                1.0 / nf,
                TargetLaw::normal(1.0 / (1.0 - beta))?,
            )
        } else {
            let (k, _) = type_order(&rho)?;
            let c2 = critical_c2(&rho, k);
            if !(c2 > 0.0) {
                return Err(invalid(format!(
                    "c2 = {c2} is not positive; the base measure is not of type {k}"
                )));
            }
            let kf = k as f64;
            let drift = DriftSpec::OddMonomial { c: 2.0 * kf * c2, k };
            let law = TargetLaw::build(drift, (f64::NEG_INFINITY, f64::INFINITY), 0.0)?;
            (
                Some(k),
                Some(c2),
                nf.powf(-1.0 + 1.0 / (2.0 * kf)),
                nf.powf(-2.0 + 1.0 / kf),
                law,
            )
        };
        let conditions = check_mgf_conditions(&rho, beta, k.unwrap_or(1));
        if !conditions.passed {
            return Err(invalid(format!(
                "exponential-moment condition fails on the probe grid (b = {}, {})",
                conditions.b, conditions.note
            )));
        }
        let a = (beta / nf).sqrt();
        let rho_ref = &rho;
        let aux = TabulatedSampler::new(
            |z| -0.5 * z * z + nf * rho_ref.ln_mgf(a * z),
            0.0,
            (f64::NEG_INFINITY, f64::INFINITY),
            AUX_CELLS,
        )?;
        let atoms = rho.atoms().iter().map(|a| a.0).collect();
        Ok(Self {
            rho,
            beta,
            n,
            k,
            c2,
            scale,
            lambda,
            target,
            aux,
            atoms,
            conditions,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn rho(&self) -> &BaseMeasure {
        &self.rho
    }

    /// Type order; `None` in the sub-critical regime.
    pub fn k(&self) -> Option<u32> {
        self.k
    }

    pub fn c2(&self) -> Option<f64> {
        self.c2
    }

    /// `W = scale · S`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn conditions(&self) -> &MgfConditionReport {
        &self.conditions
    }

    /// `ln E_{ρ⊗n} exp(β S²/(2n))`, from the auxiliary-field normalizer.
    pub fn log_partition_ratio(&self) -> f64 {
        self.aux.log_normalizer() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    fn tilt(&self, rng: &mut StreamRng) -> f64 {
        let z = self.aux.sample(rng);
        (self.beta / self.n as f64).sqrt() * z
    }

    /// `S` of a configuration.
    pub fn magnetization(&self, x: &CwConfig) -> f64 {
        match x {
            CwConfig::Counts(c) => c.iter().zip(&self.atoms).map(|(&c, &a)| c as f64 * a).sum(),
            CwConfig::Values(v) => v.iter().sum(),
        }
    }

    /// Log-weights of the resampled value given the rest, for the atoms,
    /// when the removed coordinate leaves the sum `rest`.
    fn conditional_atoms(&self, rest: f64) -> Vec<f64> {
        let nf = self.n as f64;
        let bar = rest / nf;
        let ln_w: Vec<f64> = self
            .rho
            .atoms()
            .iter()
            .map(|&(x, p)| p.ln() + self.beta * x * x / (2.0 * nf) + self.beta * bar * x)
            .collect();
        let z = log_sum_exp(&ln_w);
        ln_w.iter().map(|l| (l - z).exp()).collect()
    }

    /// `E(X_i' | rest)` for the site whose removal leaves the sum `rest`.
    pub fn conditional_mean(&self, rest: f64) -> f64 {
        if self.rho.is_discrete() {
            self.conditional_atoms(rest)
                .iter()
                .zip(&self.atoms)
                .map(|(p, x)| p * x)
                .sum()
        } else {
            let m = self.site_moments(0.0, rest);
            -m[0]
        }
    }

    /// `[E d, E d², E d|d|, E d³]` for `d = x − X'`, `X'` drawn from the
    /// conditional with the rest summing to `rest`.
    fn site_moments(&self, x: f64, rest: f64) -> [f64; 4] {
        let nf = self.n as f64;
        let bar = rest / nf;
        let beta = self.beta;
        if self.rho.is_discrete() {
            let q = self.conditional_atoms(rest);
            let mut m = [0.0; 4];
            for (p, &y) in q.iter().zip(&self.atoms) {
                let d = x - y;
                m[0] += p * d;
                m[1] += p * d * d;
                m[2] += p * d * d.abs();
                m[3] += p * d * d * d;
            }
            return m;
        }
        let Repr::Density { half, .. } = self.rho.repr else {
            unreachable!()
        };
        let peak = beta * half * half / (2.0 * nf) + beta * bar.abs() * half;
        let tilt = |y: f64| (beta * y * y / (2.0 * nf) + beta * bar * y - peak).exp();
        let x = x.clamp(-half, half);
        let mut z = 0.0;
        let mut m = [0.0; 4];
        for (lo, hi, sign) in [(-half, x, 1.0), (x, half, -1.0)] {
            if hi <= lo {
                continue;
            }
            for (y, w) in density_nodes(&self.rho.repr, lo, hi) {
                let e = w * tilt(y);
                let d = x - y;
                z += e;
                m[0] += e * d;
                m[1] += e * d * d;
                m[2] += sign * e * d * d;
                m[3] += e * d * d * d;
            }
        }
        m.map(|v| v / z)
    }

    fn sample_site<R: Rng + ?Sized>(&self, rest: f64, rng: &mut R) -> f64 {
        if self.rho.is_discrete() {
            let q = self.conditional_atoms(rest);
            let mut u: f64 = rng.random();
            for (p, &x) in q.iter().zip(&self.atoms) {
                if u < *p {
                    return x;
                }
                u -= p;
            }
            *self.atoms.last().expect("at least two atoms")
        } else {
            // rejection from ρ by the bounded conditional factor
            let nf = self.n as f64;
            let half = self.rho.support_half_width();
            let bar = rest / nf;
            let peak = self.beta * half * half / (2.0 * nf) + self.beta * bar.abs() * half;
            loop {
                let y = self.rho.sample_tilted_density(0.0, rng);
                let acc = (self.beta * y * y / (2.0 * nf) + self.beta * bar * y - peak).exp();
                if rng.random::<f64>() < acc {
                    return y;
                }
            }
        }
    }

    fn pick_site<R: Rng + ?Sized>(&self, x: &CwConfig, rng: &mut R) -> (usize, f64) {
        let i = rng.random_range(0..self.n);
        match x {
            CwConfig::Counts(c) => {
                let mut acc = 0usize;
                for (a, &cnt) in c.iter().enumerate() {
                    acc += cnt as usize;
                    if i < acc {
                        return (a, self.atoms[a]);
                    }
                }
                unreachable!("counts sum to n")
            }
            CwConfig::Values(v) => (i, v[i]),
        }
    }

    /// Applies `count` sequential single-site Gibbs updates and returns
    /// `(W, W')`.
    pub fn resample_coordinates(&self, x: &CwConfig, rng: &mut StreamRng, count: usize) -> (f64, f64) {
        let w = self.statistic(x);
        let mut y = x.clone();
        for _ in 0..count {
            let s = self.magnetization(&y);
            let (slot, old) = self.pick_site(&y, rng);
            let new = self.sample_site(s - old, rng);
            match &mut y {
                CwConfig::Counts(c) => {
                    c[slot] -= 1;
                    let b = self
                        .atoms
                        .iter()
                        .position(|&a| a == new)
                        .expect("drawn value is an atom");
                    c[b] += 1;
                }
                CwConfig::Values(v) => v[slot] = new,
            }
        }
        (w, self.statistic(&y))
    }
}

impl PairModel for CurieWeissModel {
    type Config = CwConfig;

    fn name(&self) -> &'static str {
        "curie_weiss"
    }

    fn params(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "beta": self.beta,
            "rho": self.rho.spec,
            "k": self.k,
            "c2": self.c2,
        })
    }

    fn n(&self) -> usize {
        self.n
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn target(&self) -> &TargetLaw {
        &self.target
    }

    fn sample_config(&self, rng: &mut StreamRng) -> CwConfig {
        let t = self.tilt(rng);
        if self.rho.is_discrete() {
            let q = self.rho.tilted_atoms(t);
            let mut counts = vec![0u32; q.len()];
            let mut remaining = self.n as u64;
            let mut mass = 1.0;
            for (j, &p) in q.iter().enumerate() {
                if remaining == 0 {
                    break;
                }
                if j + 1 == q.len() {
                    counts[j] = remaining as u32;
                    break;
                }
                let pr = (p / mass).clamp(0.0, 1.0);
                let c = Binomial::new(remaining, pr).expect("valid binomial").sample(rng);
                counts[j] = c as u32;
                remaining -= c;
                mass -= p;
            }
            CwConfig::Counts(counts)
        } else {
            CwConfig::Values((0..self.n).map(|_| self.rho.sample_tilted_density(t, rng)).collect())
        }
    }

    fn statistic(&self, x: &CwConfig) -> f64 {
        self.scale * self.magnetization(x)
    }

    fn cond_stats(&self, x: &CwConfig) -> Result<CondStats> {
        let s = self.magnetization(x);
        let mut acc = [0.0; 4];
        match x {
            CwConfig::Counts(c) => {
                if c.len() != self.atoms.len() || c.iter().map(|&v| v as usize).sum::<usize>() != self.n {
                    return Err(invalid("count vector does not match the model"));
                }
                for (&cnt, &a) in c.iter().zip(&self.atoms) {
                    if cnt == 0 {
                        continue;
                    }
                    let m = self.site_moments(a, s - a);
                    for (t, v) in acc.iter_mut().zip(m) {
                        *t += cnt as f64 * v;
                    }
                }
            }
            CwConfig::Values(v) => {
                if v.len() != self.n {
                    return Err(invalid("configuration length does not match n"));
                }
                for &xi in v {
                    let m = self.site_moments(xi, s - xi);
                    for (t, v) in acc.iter_mut().zip(m) {
                        *t += v;
                    }
                }
            }
        }
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::Kernel {
                reason: "conditional moments are not finite".into(),
                config: String::new(),
            });
        }
        let nf = self.n as f64;
        let h = self.scale;
        Ok(CondStats {
            w: h * s,
            ed: h * acc[0] / nf,
            ed2: h * h * acc[1] / nf,
            edabs: h * h * acc[2] / nf,
            ed3: h * h * h * acc[3] / nf,
        })
    }

    fn sample_pair(&self, x: &CwConfig, rng: &mut StreamRng) -> (f64, f64) {
        self.resample_coordinates(x, rng, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::derive_stream;

    fn pm() -> BaseMeasure {
        BaseMeasure::new(BaseMeasureSpec::TwoPoint).unwrap()
    }

    #[test]
    fn two_point_constants() {
        let (k, strength) = type_order(&pm()).unwrap();
        assert_eq!(k, 2);
        assert!((strength - 2.0).abs() < 1e-12);
        let c2 = critical_c2(&pm(), 2);
        assert!((c2 - 1.0 / 12.0).abs() < 1e-8, "{c2}");
    }

    #[test]
    fn c2_agrees_with_cumulants() {
        // c2 = −κ4/4! for a standardized type-2 measure
        let a = 1.5f64.sqrt();
        let atoms = BaseMeasure::new(BaseMeasureSpec::Atoms(vec![
            [-a, 1.0 / 3.0],
            [0.0, 1.0 / 3.0],
            [a, 1.0 / 3.0],
        ]))
        .unwrap();
        let (k, _) = type_order(&atoms).unwrap();
        assert_eq!(k, 2);
        let kappa4 = atoms.moment(4) - 3.0;
        assert!((critical_c2(&atoms, 2) + kappa4 / 24.0).abs() < 1e-8);
        let uni = BaseMeasure::new(BaseMeasureSpec::Density(DensityFamily::Uniform)).unwrap();
        assert!((uni.moment(4) - 1.8).abs() < 1e-12);
        assert!((critical_c2(&uni, 2) - 1.2 / 24.0).abs() < 1e-7);
    }

    #[test]
    fn nonstandard_measures_are_rejected() {
        assert!(BaseMeasure::new(BaseMeasureSpec::Atoms(vec![[-1.0, 0.5], [2.0, 0.5]])).is_err());
        assert!(BaseMeasure::new(BaseMeasureSpec::Density(DensityFamily::SymmetricBeta { alpha: 0.5 })).is_err());
        let beta = BaseMeasure::new(BaseMeasureSpec::Density(DensityFamily::SymmetricBeta { alpha: 2.5 })).unwrap();
        assert!((beta.moment(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_conditional() {
        let m = CurieWeissModel::new(pm(), 0.5, 8).unwrap();
        for rest in [-7.0, -3.0, 0.0, 1.0, 5.0] {
            let want = (0.5 * rest / 8.0f64).tanh();
            assert!((m.conditional_mean(rest) - want).abs() < 1e-15);
        }
    }

    #[test]
    fn single_spin_is_symmetric() {
        let m = CurieWeissModel::new(pm(), 0.5, 1).unwrap();
        let mut rng = derive_stream(1, 2, 3);
        let plus = (0..40_000)
            .filter(|_| matches!(m.sample_config(&mut rng), CwConfig::Counts(ref c) if c[1] == 1))
            .count();
        assert!((plus as f64 / 40_000.0 - 0.5).abs() < 4.0 * 0.0025);
    }

    #[test]
    fn mgf_conditions() {
        let r = check_mgf_conditions(&pm(), 0.5, 1);
        assert!(r.passed && (r.b - 1.0).abs() < 1e-3);
        let r = check_mgf_conditions(&pm(), 1.0, 2);
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn continuous_kernel_is_consistent() {
        let uni = BaseMeasure::new(BaseMeasureSpec::Density(DensityFamily::Uniform)).unwrap();
        let m = CurieWeissModel::new(uni, 0.4, 6).unwrap();
        let mut rng = derive_stream(5, 0, 0);
        let x = m.sample_config(&mut rng);
        let cs = m.cond_stats(&x).unwrap();
        cs.check().unwrap();
        assert_eq!(m.conditional_mean(0.0).abs() < 1e-14, true);
    }
}
