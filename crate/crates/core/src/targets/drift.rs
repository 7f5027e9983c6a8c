use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Drift `g` of the regression condition `E(W - W' | W) = λ(g(W) + R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftSpec {
    /// `g(w) = c·w`.
    Linear { c: f64 },
    /// `g(w) = c·w^(2k-1)` with `k ≥ 1`.
    OddMonomial { c: f64, k: u32 },
    /// User drift given as `(w, g(w))` pairs, interpolated by a natural cubic
    /// spline and extended linearly beyond the table.
    Tabulated { points: Vec<(f64, f64)> },
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriftSpec::Linear { c } if !c.is_finite() => Err(invalid("linear drift coefficient must be finite")),
            DriftSpec::OddMonomial { c, .. } if !c.is_finite() => {
                Err(invalid("monomial drift coefficient must be finite"))
            }
            DriftSpec::OddMonomial { k: 0, .. } => Err(invalid("monomial drift needs k >= 1")),
            DriftSpec::Tabulated { points } => {
                if points.len() < 4 {
                    return Err(invalid("tabulated drift needs at least 4 points"));
                }
                if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                    return Err(invalid("tabulated drift abscissae must be strictly increasing"));
                }
                if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
                    return Err(invalid("tabulated drift values must be finite"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// True for `g(w) = w`, the standard normal target.
    pub fn is_standard_normal(&self) -> bool {
        matches!(self, DriftSpec::Linear { c } if *c == 1.0)
            || matches!(self, DriftSpec::OddMonomial { c, k: 1 } if *c == 1.0)
    }
}

#[derive(Clone, Debug)]
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
    // ∫_{x[0]}^{x[i]} of the spline
    cum: Vec<f64>,
}

impl Spline {
    fn natural(points: &[(f64, f64)]) -> Self {
        let n = points.len();
        let x: Vec<f64> = points.iter().map(|p| p.0).collect();
        let y: Vec<f64> = points.iter().map(|p| p.1).collect();
        // Tridiagonal solve for second derivatives with m[0] = m[n-1] = 0.
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let cc = h1;
            let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (rhs - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        let mut s = Self {
            x,
            y,
            m,
            cum: vec![0.0; n],
        };
        for i in 1..n {
            s.cum[i] = s.cum[i - 1] + s.segment_integral(i - 1, 1.0);
        }
        s
    }

    // ∫ over [x_i, x_i + bb·h] of segment i.
    fn segment_integral(&self, i: usize, bb: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let ab = 1.0 - bb;
        let lin = self.y[i] * (bb - 0.5 * bb * bb) + self.y[i + 1] * 0.5 * bb * bb;
        let ca = -0.25 * ab.powi(4) + 0.5 * ab * ab - 0.25;
        let cb = 0.25 * bb.powi(4) - 0.5 * bb * bb;
        h * (lin + (ca * self.m[i] + cb * self.m[i + 1]) * h * h / 6.0)
    }

    // ∫_{x[0]}^t, consistent with the linear extension.
    fn primitive(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            let dt = t - self.x[0];
            return self.y[0] * dt + 0.5 * self.slope_at(0) * dt * dt;
        }
        if t >= self.x[n - 1] {
            let dt = t - self.x[n - 1];
            return self.cum[n - 1] + self.y[n - 1] * dt + 0.5 * self.slope_at(n - 1) * dt * dt;
        }
        let i = self.x.partition_point(|v| *v <= t).clamp(1, n - 1) - 1;
        let bb = (t - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.cum[i] + self.segment_integral(i, bb)
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0] + self.slope_at(0) * (t - self.x[0]);
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1] + self.slope_at(n - 1) * (t - self.x[n - 1]);
        }
        let i = self.x.partition_point(|v| *v <= t).clamp(1, n - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    fn slope_at(&self, i: usize) -> f64 {
        let n = self.x.len();
        if i == 0 {
            let h = self.x[1] - self.x[0];
            (self.y[1] - self.y[0]) / h - h * (2.0 * self.m[0] + self.m[1]) / 6.0
        } else {
            let h = self.x[n - 1] - self.x[n - 2];
            (self.y[n - 1] - self.y[n - 2]) / h + h * (self.m[n - 2] + 2.0 * self.m[n - 1]) / 6.0
        }
    }

    fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }
}

/// Evaluable drift built from a [`DriftSpec`].
#[derive(Clone, Debug)]
pub struct Drift {
    spec: DriftSpec,
    spline: Option<Spline>,
}

impl Drift {
    pub fn new(spec: DriftSpec) -> Result<Self> {
        spec.validate()?;
        let spline = match &spec {
            DriftSpec::Tabulated { points } => Some(Spline::natural(points)),
            _ => None,
        };
        Ok(Self { spec, spline })
    }

    pub fn spec(&self) -> &DriftSpec {
        &self.spec
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        match &self.spec {
            DriftSpec::Linear { c } => c * w,
            DriftSpec::OddMonomial { c, k } => c * w.powi(2 * *k as i32 - 1),
            DriftSpec::Tabulated { .. } => self.spline.as_ref().map_or(f64::NAN, |s| s.eval(w)),
        }
    }

    /// First derivative: analytic for the closed-form kinds, 5-point
    /// differences (one-sided near the table edges) for tabulated drifts.
    pub fn derivative(&self, w: f64) -> f64 {
        match &self.spec {
            DriftSpec::Linear { c } => *c,
            DriftSpec::OddMonomial { c, k } => {
                let p = 2 * *k as i32 - 1;
                if p == 1 {
                    *c
                } else {
                    c * p as f64 * w.powi(p - 1)
                }
            }
            DriftSpec::Tabulated { .. } => self.differences(w).0,
        }
    }

    pub fn second_derivative(&self, w: f64) -> f64 {
        match &self.spec {
            DriftSpec::Linear { .. } => 0.0,
            DriftSpec::OddMonomial { c, k } => {
                let p = 2 * *k as i32 - 1;
                if p <= 1 {
                    0.0
                } else {
                    c * (p * (p - 1)) as f64 * w.powi(p - 2)
                }
            }
            DriftSpec::Tabulated { .. } => self.differences(w).1,
        }
    }

    fn differences(&self, w: f64) -> (f64, f64) {
        let s = self.spline.as_ref().expect("tabulated drift has a spline");
        let (lo, hi) = s.range();
        let h = 1e-3 * (hi - lo) / s.x.len() as f64;
        let f = |t: f64| s.eval(t);
        if w - 2.0 * h < lo {
            one_sided(f, w, h)
        } else if w + 2.0 * h > hi {
            let (d1, d2) = one_sided(f, w, -h);
            (d1, d2)
        } else {
            let (fm2, fm1, f0, fp1, fp2) = (f(w - 2.0 * h), f(w - h), f(w), f(w + h), f(w + 2.0 * h));
            let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
            let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
            (d1, d2)
        }
    }

    /// `∫_from^to g` in closed form (the spline is integrated piecewise).
    pub fn antiderivative(&self, from: f64, to: f64) -> f64 {
        match &self.spec {
            DriftSpec::Linear { c } => 0.5 * c * (to * to - from * from),
            DriftSpec::OddMonomial { c, k } => {
                let p = 2 * *k as i32;
                if to * from > 0.0 {
                    // (t − f) Σ t^j f^(p−1−j): no cancellation between
                    // two large powers in the tails
                    let (mut tj, mut sum) = (1.0, 0.0);
                    for j in 0..p {
                        sum += tj * from.powi(p - 1 - j);
                        tj *= to;
                    }
                    c * (to - from) * sum / p as f64
                } else {
                    c * (to.powi(p) - from.powi(p)) / p as f64
                }
            }
            DriftSpec::Tabulated { .. } => {
                let s = self.spline.as_ref().expect("tabulated drift has a spline");
                s.primitive(to) - s.primitive(from)
            }
        }
    }
}

// Forward (h > 0) or backward (h < 0) 5-point stencils of order h^4 / h^3.
fn one_sided<F: Fn(f64) -> f64>(f: F, w: f64, h: f64) -> (f64, f64) {
    let v: Vec<f64> = (0..5).map(|k| f(w + k as f64 * h)).collect();
    let d1 = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    let d2 = (35.0 * v[0] - 104.0 * v[1] + 114.0 * v[2] - 56.0 * v[3] + 11.0 * v[4]) / (12.0 * h * h);
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_derivatives() {
        let d = Drift::new(DriftSpec::OddMonomial { c: 1.0 / 3.0, k: 2 }).unwrap();
        assert!((d.eval(2.0) - 8.0 / 3.0).abs() < 1e-15);
        assert!((d.derivative(2.0) - 4.0).abs() < 1e-15);
        assert!((d.second_derivative(2.0) - 4.0).abs() < 1e-15);
        assert!((d.antiderivative(0.0, 2.0) - 16.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn tabulated_cubic_is_reproduced() {
        let pts: Vec<(f64, f64)> = (0..=80)
            .map(|i| {
                let w = -4.0 + 0.1 * i as f64;
                (w, w * w * w / 3.0)
            })
            .collect();
        let d = Drift::new(DriftSpec::Tabulated { points: pts }).unwrap();
        for w in [-3.0, -0.55, 0.0, 1.234, 3.5] {
            assert!((d.eval(w) - w * w * w / 3.0).abs() < 2e-3, "w={w}");
            assert!((d.derivative(w) - w * w).abs() < 2e-2, "w={w}");
            assert!((d.second_derivative(w) - 2.0 * w).abs() < 0.2, "w={w}");
        }
    }

    #[test]
    fn spline_primitive_matches_quadrature() {
        let pts: Vec<(f64, f64)> = (0..=12)
            .map(|i| {
                let w = -3.0 + 0.5 * i as f64;
                (w, w.sin() + 0.3 * w)
            })
            .collect();
        let d = Drift::new(DriftSpec::Tabulated { points: pts }).unwrap();
        for (a, b) in [(-5.0, -3.2), (-2.9, 0.1), (0.0, 2.75), (-1.0, 4.5), (-4.0, 4.0)] {
            let q = crate::quadrature::adaptive(|t| d.eval(t), a, b, Default::default()).unwrap();
            assert!((d.antiderivative(a, b) - q.value).abs() < 1e-11, "[{a}, {b}]");
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(Drift::new(DriftSpec::OddMonomial { c: 1.0, k: 0 }).is_err());
        assert!(Drift::new(DriftSpec::Tabulated {
            points: vec![(0.0, 0.0), (1.0, 1.0)]
        })
        .is_err());
        assert!(Drift::new(DriftSpec::Tabulated {
            points: vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 2.0)]
        })
        .is_err());
    }
}
