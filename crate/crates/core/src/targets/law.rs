use serde::Serialize;

use super::drift::{Drift, DriftSpec};
use crate::error::{invalid, Error, Result};
use crate::quadrature::{self, AdaptiveOptions};
use crate::special::solve_increasing;
use crate::stats::pairwise_sum;

/// Truncation level: the density is cut where `G ≥ min G + TAIL_CUT`.
pub const TAIL_CUT: f64 = 46.0;
const PANELS: usize = 512;
const MAX_REACH: f64 = 1e12;

/// Target law with density `p(y) = c1·exp(−G(y))`, `G(y) = ∫_{w0}^y g`.
///
/// The CDF is tabulated on uniform panels between the truncation points
/// `lo` and `hi`; the mass beyond them is kept through Mills-type ratios
/// `∫ exp(G(w) − G(t)) dt`, so tail probabilities and the Stein solution
/// stay accurate (relative to their own size) far outside the table.
#[derive(Clone, Debug)]
pub struct TargetLaw {
    drift: Drift,
    domain: (f64, f64),
    w0: f64,
    ln_c1: f64,
    lo: f64,
    hi: f64,
    step: f64,
    nodes: Vec<f64>,
    cum_left: Vec<f64>,
    cum_right: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TableRow {
    pub y: f64,
    #[serde(rename = "G")]
    pub big_g: f64,
    pub p: f64,
    #[serde(rename = "F")]
    pub cdf: f64,
}

impl TargetLaw {
    /// Builds the law of drift `spec` on the open interval `domain`.
    pub fn build(spec: DriftSpec, domain: (f64, f64), w0: f64) -> Result<Self> {
        let (a, b) = domain;
        if a.is_nan() || b.is_nan() || a >= b || a == f64::INFINITY || b == f64::NEG_INFINITY {
            return Err(invalid(format!("domain ({a}, {b}) is not an open interval")));
        }
        if !(w0 > a && w0 < b) || !w0.is_finite() {
            return Err(invalid(format!("w0 = {w0} lies outside the domain ({a}, {b})")));
        }
        let drift = Drift::new(spec)?;
        let gfun = |y: f64| drift.antiderivative(w0, y);

        let right = scan_side(&gfun, w0, 1.0, b)?;
        let left = scan_side(&gfun, w0, -1.0, a)?;
        let g_min = right.min.min(left.min);
        let hi = cut_point(&gfun, &drift, &right, g_min, 1.0)?;
        let lo = cut_point(&gfun, &drift, &left, g_min, -1.0)?;

        let step = (hi - lo) / PANELS as f64;
        let nodes: Vec<f64> = (0..=PANELS).map(|i| lo + step * i as f64).collect();
        let opts = AdaptiveOptions {
            abs_tol: 0.0,
            rel_tol: 1e-13,
            max_depth: 40,
        };
        let mut masses = Vec::with_capacity(PANELS);
        for w in nodes.windows(2) {
            let m = quadrature::adaptive(|t| (g_min - gfun(t)).exp(), w[0], w[1], opts)?;
            masses.push(m.value);
        }
        let mut law = Self {
            drift,
            domain,
            w0,
            ln_c1: 0.0,
            lo,
            hi,
            step,
            nodes,
            cum_left: Vec::new(),
            cum_right: Vec::new(),
        };
        // Unnormalized tail masses in the e^{-(G - g_min)} scale.
        let tail_left = if lo > a {
            (g_min - law.big_g(lo)).exp() * law.raw_mills(lo, -1.0)?
        } else {
            0.0
        };
        let tail_right = if hi < b {
            (g_min - law.big_g(hi)).exp() * law.raw_mills(hi, 1.0)?
        } else {
            0.0
        };
        let total = pairwise_sum(&masses) + tail_left + tail_right;
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::Construction(format!("density has non-finite mass {total}")));
        }
        law.ln_c1 = g_min - total.ln();
        let mut cum_left = vec![0.0; PANELS + 1];
        let mut run = tail_left;
        cum_left[0] = run / total;
        for i in 0..PANELS {
            run += masses[i];
            cum_left[i + 1] = (run / total).min(1.0);
        }
        let mut cum_right = vec![0.0; PANELS + 1];
        let mut run = tail_right;
        cum_right[PANELS] = run / total;
        for i in (0..PANELS).rev() {
            run += masses[i];
            cum_right[i] = (run / total).min(1.0);
        }
        law.cum_left = cum_left;
        law.cum_right = cum_right;
        Ok(law)
    }

    /// `N(0, variance)` as the law of the drift `w / variance`.
    pub fn normal(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(invalid(format!("normal variance must be positive, got {variance}")));
        }
        Self::build(
            DriftSpec::Linear { c: 1.0 / variance },
            (f64::NEG_INFINITY, f64::INFINITY),
            0.0,
        )
    }

    pub fn spec(&self) -> &DriftSpec {
        self.drift.spec()
    }

    pub fn drift(&self) -> &Drift {
        &self.drift
    }

    #[inline]
    pub fn g(&self, w: f64) -> f64 {
        self.drift.eval(w)
    }

    /// `G(y) = ∫_{w0}^y g`.
    #[inline]
    pub fn big_g(&self, y: f64) -> f64 {
        self.drift.antiderivative(self.w0, y)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    /// Truncation points of the tabulated part, `G = min G + 46`, or the
    /// finite domain endpoint when the density is still above that level.
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn tail_cut(&self) -> f64 {
        TAIL_CUT
    }

    pub fn c1(&self) -> f64 {
        self.ln_c1.exp()
    }

    pub fn ln_c1(&self) -> f64 {
        self.ln_c1
    }

    pub fn is_standard_normal(&self) -> bool {
        self.spec().is_standard_normal() && self.w0 == 0.0 && self.domain == (f64::NEG_INFINITY, f64::INFINITY)
    }

    /// Factor applied to `E|R|` in the bound: 1 for the standard normal,
    /// `1/c1` otherwise.
    pub fn residual_factor(&self) -> f64 {
        if self.is_standard_normal() {
            1.0
        } else {
            1.0 / self.c1()
        }
    }

    fn inside(&self, w: f64) -> bool {
        w > self.domain.0 && w < self.domain.1
    }

    pub fn ln_pdf(&self, w: f64) -> f64 {
        if !self.inside(w) {
            return f64::NEG_INFINITY;
        }
        self.ln_c1 - self.big_g(w)
    }

    pub fn pdf(&self, w: f64) -> f64 {
        self.ln_pdf(w).exp()
    }

    fn panel(&self, w: f64) -> usize {
        (((w - self.lo) / self.step) as usize).min(PANELS - 1)
    }

    fn piece(&self, from: f64, to: f64) -> f64 {
        let shift = self.ln_c1;
        quadrature::rule(32).integrate(|t| (shift - self.big_g(t)).exp(), from, to)
    }

    pub fn cdf(&self, w: f64) -> f64 {
        if w.is_nan() {
            return f64::NAN;
        }
        if w <= self.domain.0 {
            return 0.0;
        }
        if w >= self.domain.1 {
            return 1.0;
        }
        if w < self.lo {
            return (self.pdf(w) * self.raw_mills_or_zero(w, -1.0)).min(1.0);
        }
        if w > self.hi {
            return (1.0 - self.sf(w)).max(0.0);
        }
        let j = self.panel(w);
        let left = self.cum_left[j] + self.piece(self.nodes[j], w);
        if left <= 0.5 {
            left.clamp(0.0, 1.0)
        } else {
            (1.0 - self.cum_right[j + 1] - self.piece(w, self.nodes[j + 1])).clamp(0.0, 1.0)
        }
    }

    /// Survival function `1 − F(w)`, accurate in the right tail.
    pub fn sf(&self, w: f64) -> f64 {
        if w.is_nan() {
            return f64::NAN;
        }
        if w <= self.domain.0 {
            return 1.0;
        }
        if w >= self.domain.1 {
            return 0.0;
        }
        if w > self.hi {
            return (self.pdf(w) * self.raw_mills_or_zero(w, 1.0)).min(1.0);
        }
        if w < self.lo {
            return (1.0 - self.cdf(w)).max(0.0);
        }
        let j = self.panel(w);
        let right = self.cum_right[j + 1] + self.piece(w, self.nodes[j + 1]);
        if right <= 0.5 {
            right.clamp(0.0, 1.0)
        } else {
            (1.0 - self.cum_left[j] - self.piece(self.nodes[j], w)).clamp(0.0, 1.0)
        }
    }

    pub fn ln_cdf(&self, w: f64) -> f64 {
        if w > self.domain.0 && w < self.lo {
            return self.ln_pdf(w) + self.raw_mills_or_zero(w, -1.0).ln();
        }
        self.cdf(w).ln()
    }

    pub fn ln_sf(&self, w: f64) -> f64 {
        if w < self.domain.1 && w > self.hi {
            return self.ln_pdf(w) + self.raw_mills_or_zero(w, 1.0).ln();
        }
        self.sf(w).ln()
    }

    /// `F(w)/p(w)`, finite wherever the density is positive.
    pub fn mills_left(&self, w: f64) -> f64 {
        if !self.inside(w) {
            return 0.0;
        }
        if w < self.lo {
            return self.raw_mills_or_zero(w, -1.0);
        }
        let r = self.cdf(w) / self.pdf(w);
        if r.is_finite() {
            r
        } else {
            0.0
        }
    }

    /// `(1 − F(w))/p(w)`.
    pub fn mills_right(&self, w: f64) -> f64 {
        if !self.inside(w) {
            return 0.0;
        }
        if w > self.hi {
            return self.raw_mills_or_zero(w, 1.0);
        }
        let r = self.sf(w) / self.pdf(w);
        if r.is_finite() {
            r
        } else {
            0.0
        }
    }

    fn raw_mills_or_zero(&self, w: f64, dir: f64) -> f64 {
        self.raw_mills(w, dir).unwrap_or(0.0)
    }

    // ∫ exp(G(w) − G(t)) dt over t beyond w in direction `dir`, to the
    // domain end or until the integrand has fallen by TAIL_CUT nats.
    fn raw_mills(&self, w: f64, dir: f64) -> Result<f64> {
        let end = if dir > 0.0 { self.domain.1 } else { self.domain.0 };
        let rise = |t: f64| self.drift.antiderivative(w, t);
        let slope = self.g(w).abs().max(1e-3);
        let mut reach = (1.0 / slope).min(1.0);
        let limit = (end - w).abs();
        loop {
            if reach >= limit {
                reach = limit;
                break;
            }
            if rise(w + dir * reach) >= TAIL_CUT {
                break;
            }
            reach *= 2.0;
            if reach > MAX_REACH {
                return Err(Error::Construction(format!("tail of e^(-G) beyond {w} does not decay")));
            }
        }
        let opts = AdaptiveOptions {
            abs_tol: 0.0,
            // spline primitives still cancel at large |G(w)|
            rel_tol: (8.0 * f64::EPSILON * self.big_g(w).abs()).max(1e-13),
            max_depth: 40,
        };
        let (x0, x1) = if dir > 0.0 { (w, w + reach) } else { (w - reach, w) };
        let r = quadrature::adaptive(|t| (-rise(t)).exp(), x0, x1, opts)?;
        Ok(r.value)
    }

    /// Quantile by safeguarded Newton on `ln F` (lower half) or `ln(1 − F)`.
    pub fn quantile(&self, u: f64) -> f64 {
        if u.is_nan() {
            return f64::NAN;
        }
        if u <= 0.0 {
            return self.domain.0;
        }
        if u >= 1.0 {
            return self.domain.1;
        }
        if u <= 0.5 {
            let target = u.ln();
            let (lo, hi) = self.bracket_left(u);
            solve_increasing(|w| (self.ln_cdf(w) - target, 1.0 / self.mills_left(w)), lo, hi, 1e-14)
        } else {
            let v = 1.0 - u;
            let target = v.ln();
            let (lo, hi) = self.bracket_right(v);
            solve_increasing(|w| (target - self.ln_sf(w), 1.0 / self.mills_right(w)), lo, hi, 1e-14)
        }
    }

    fn bracket_left(&self, u: f64) -> (f64, f64) {
        if u >= self.cum_left[0] {
            let j = self.cum_left.partition_point(|c| *c <= u);
            if j == 0 {
                return (self.lo, self.nodes[1]);
            }
            let j = j.min(PANELS);
            return (self.nodes[j - 1], self.nodes[j]);
        }
        let mut width = self.step;
        loop {
            let cand = self.lo - width;
            if cand <= self.domain.0 {
                return (self.domain.0.max(-MAX_REACH), self.lo);
            }
            if self.ln_cdf(cand) < u.ln() {
                return (cand, self.lo);
            }
            width *= 2.0;
        }
    }

    fn bracket_right(&self, v: f64) -> (f64, f64) {
        if v >= self.cum_right[PANELS] {
            // cum_right is decreasing in the node index
            let j = self.cum_right.partition_point(|c| *c > v);
            let j = j.clamp(1, PANELS);
            return (self.nodes[j - 1], self.nodes[j]);
        }
        let mut width = self.step;
        loop {
            let cand = self.hi + width;
            if cand >= self.domain.1 {
                return (self.hi, self.domain.1.min(MAX_REACH));
            }
            if self.ln_sf(cand) < v.ln() {
                return (self.hi, cand);
            }
            width *= 2.0;
        }
    }

    /// `∫ y^k p(y) dy` over the tabulated range (tails beyond it carry
    /// less than `e^{-46}` relative mass).
    pub fn moment(&self, k: i32) -> f64 {
        let gl = quadrature::rule(32);
        let parts: Vec<f64> = self
            .nodes
            .windows(2)
            .map(|w| gl.integrate(|t| t.powi(k) * self.pdf(t), w[0], w[1]))
            .collect();
        pairwise_sum(&parts)
    }

    /// `y, G, p, F` at `points` equally spaced abscissae over the support.
    pub fn table(&self, points: usize) -> Vec<TableRow> {
        let points = points.max(2);
        let h = (self.hi - self.lo) / (points - 1) as f64;
        (0..points)
            .map(|i| {
                let y = if i + 1 == points {
                    self.hi
                } else {
                    self.lo + h * i as f64
                };
                TableRow {
                    y,
                    big_g: self.big_g(y),
                    p: self.pdf(y),
                    cdf: self.cdf(y),
                }
            })
            .collect()
    }
}

struct SideScan {
    // (distance from w0, G) sorted by distance
    samples: Vec<(f64, f64)>,
    min: f64,
    // the scan stopped at a finite domain endpoint with G below the cut
    hit_endpoint: bool,
    end: f64,
    w0: f64,
}

fn scan_side<F: Fn(f64) -> f64>(gfun: &F, w0: f64, dir: f64, end: f64) -> Result<SideScan> {
    let limit = (end - w0).abs();
    let mut samples = vec![(0.0, 0.0)];
    let mut min: f64 = 0.0;
    let mut prev = 0.0;
    let mut dist: f64 = 1.0;
    loop {
        let capped = dist.min(limit);
        let reached_end = capped >= limit;
        let sub = 256;
        for s in 1..=sub {
            let d = prev + (capped - prev) * s as f64 / sub as f64;
            // stay strictly inside an open finite endpoint
            let d = if reached_end && s == sub && limit.is_finite() {
                d * (1.0 - 1e-15)
            } else {
                d
            };
            let v = gfun(w0 + dir * d);
            if v.is_nan() {
                return Err(Error::Construction(format!("G is undefined at {}", w0 + dir * d)));
            }
            min = min.min(v);
            samples.push((d, v));
        }
        let last = samples.last().map(|s| s.1).unwrap_or(0.0);
        if last >= min + TAIL_CUT {
            return Ok(SideScan {
                samples,
                min,
                hit_endpoint: false,
                end,
                w0,
            });
        }
        if reached_end {
            return Ok(SideScan {
                samples,
                min,
                hit_endpoint: true,
                end,
                w0,
            });
        }
        prev = capped;
        dist *= 2.0;
        if dist > MAX_REACH {
            return Err(Error::Construction(format!(
                "e^(-G) is not integrable: G stays below min + {TAIL_CUT} beyond {}",
                w0 + dir * prev
            )));
        }
    }
}

fn cut_point<F: Fn(f64) -> f64>(gfun: &F, drift: &Drift, scan: &SideScan, g_min: f64, dir: f64) -> Result<f64> {
    let thr = g_min + TAIL_CUT;
    let w0 = scan.w0;
    if scan.hit_endpoint && scan.samples.last().map(|s| s.1 < thr).unwrap_or(true) {
        return Ok(scan.end);
    }
    // outermost sample below the threshold, then the next one above it
    let idx = scan
        .samples
        .iter()
        .rposition(|s| s.1 < thr)
        .ok_or_else(|| Error::Construction("no sample below the truncation level".into()))?;
    if idx + 1 >= scan.samples.len() {
        return Ok(scan.end);
    }
    let (d_in, d_out) = (scan.samples[idx].0, scan.samples[idx + 1].0);
    let d = solve_increasing(
        |d| (gfun(w0 + dir * d) - thr, dir * drift.eval(w0 + dir * d)),
        d_in,
        d_out,
        1e-13,
    );
    Ok(w0 + dir * d)
}
