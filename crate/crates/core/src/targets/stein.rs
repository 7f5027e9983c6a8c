use serde::Serialize;

use super::law::TargetLaw;

/// Solution `f_z` of the Stein equation `f'(w) − g(w) f(w) = 1{w ≤ z} − F(z)`.
///
/// `f_z(w) = F(w)(1 − F(z))/p(w)` for `w ≤ z` and `F(z)(1 − F(w))/p(w)`
/// above `z`. The ratios `F/p` and `(1 − F)/p` are taken from the law's
/// Mills ratios, so the evaluation never divides an underflowed density.
#[derive(Clone, Copy, Debug)]
pub struct SteinSolution<'a> {
    law: &'a TargetLaw,
    z: f64,
    fz: f64,
    sz: f64,
}

impl<'a> SteinSolution<'a> {
    pub fn new(law: &'a TargetLaw, z: f64) -> Self {
        Self {
            law,
            z,
            fz: law.cdf(z),
            sz: law.sf(z),
        }
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn law(&self) -> &TargetLaw {
        self.law
    }

    /// `(f_z(w), f_z'(w))`, the derivative taken from the equation itself.
    pub fn eval(&self, w: f64) -> (f64, f64) {
        let (a, b) = self.law.domain();
        if !(w > a && w < b) {
            return (0.0, 0.0);
        }
        let g = self.law.g(w);
        if w <= self.z {
            let f = guard(self.law.mills_left(w) * self.sz);
            (f, g * f + self.sz)
        } else {
            let f = guard(self.fz * self.law.mills_right(w));
            (f, g * f - self.fz)
        }
    }

    /// Checks the bounds of the Stein solution on `grid`.
    pub fn verify_lemma41(&self, grid: &[f64], opts: &Lemma41Options) -> PropertyReport {
        let c1 = opts.c1_override.unwrap_or_else(|| self.law.c1());
        let mut checks = [
            PropertyCheck::new("f_nonnegative"),
            PropertyCheck::new("f_below_inverse_c1"),
            PropertyCheck::new("fprime_bounded"),
            PropertyCheck::new("gf_bounded"),
            PropertyCheck::new("gf_nondecreasing"),
        ];
        let mut prev_gf: Option<f64> = None;
        for &w in grid {
            let (f, fp) = self.eval(w);
            let gf = self.law.g(w) * f;
            checks[0].observe(w, -f, -f <= opts.tol);
            checks[1].observe(w, f - 1.0 / c1, f <= 1.0 / c1 + opts.tol);
            checks[2].observe(w, fp.abs(), fp.abs() <= 1.0 + opts.tol);
            checks[3].observe(w, gf.abs(), gf.abs() <= 1.0 + opts.tol);
            if let Some(p) = prev_gf {
                let drop = p - gf;
                checks[4].observe(w, drop, drop <= opts.monotone_tol);
            }
            prev_gf = Some(gf);
        }
        PropertyReport {
            z: self.z,
            points: grid.len(),
            checks: checks.to_vec(),
        }
    }
}

fn guard(f: f64) -> f64 {
    if f.is_finite() {
        f.max(0.0)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Lemma41Options {
    pub tol: f64,
    pub monotone_tol: f64,
    /// Replaces `c1` in the `f ≤ 1/c1` check (negative controls).
    pub c1_override: Option<f64>,
}

impl Default for Lemma41Options {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            monotone_tol: 1e-8,
            c1_override: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyCheck {
    pub property: &'static str,
    pub passed: bool,
    /// Largest checked quantity (the excess for the signed checks).
    pub worst: f64,
    pub worst_at: f64,
    /// First abscissa where the property failed.
    pub first_failure: Option<f64>,
}

impl PropertyCheck {
    fn new(property: &'static str) -> Self {
        Self {
            property,
            passed: true,
            worst: f64::NEG_INFINITY,
            worst_at: f64::NAN,
            first_failure: None,
        }
    }

    fn observe(&mut self, w: f64, value: f64, ok: bool) {
        if value > self.worst || value.is_nan() {
            self.worst = value;
            self.worst_at = w;
        }
        if !ok {
            self.passed = false;
            self.first_failure.get_or_insert(w);
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub z: f64,
    pub points: usize,
    pub checks: Vec<PropertyCheck>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| {
                format!(
                    "{} fails at w = {} (z = {}); worst {:e} at w = {}",
                    c.property,
                    c.first_failure.unwrap_or(f64::NAN),
                    self.z,
                    c.worst,
                    c.worst_at
                )
            })
            .collect()
    }
}

/// Uniform grid on `[from, to]` with the given step (both ends included).
pub fn uniform_grid(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|i| from + step * i as f64).collect()
}

/// Runs the Lemma 4.1 property suite for every threshold in `zs`.
pub fn verify_lemma41(law: &TargetLaw, zs: &[f64], grid: &[f64], opts: &Lemma41Options) -> Vec<PropertyReport> {
    zs.iter()
        .map(|&z| SteinSolution::new(law, z).verify_lemma41(grid, opts))
        .collect()
}
