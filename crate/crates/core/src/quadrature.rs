//! Gauss–Legendre rules and an adaptive composite integrator.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// An `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes nodes and weights by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[a, b]`.
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

static RULES: [OnceLock<GaussLegendre>; 5] = [
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
];

/// Cached rule with 4, 8, 16, 32 or 64 nodes.
pub fn rule(n: usize) -> &'static GaussLegendre {
    let slot = match n {
        4 => 0,
        8 => 1,
        16 => 2,
        32 => 3,
        64 => 4,
        _ => panic!("no cached Gauss-Legendre rule with {n} nodes"),
    };
    RULES[slot].get_or_init(|| GaussLegendre::new(n))
}

/// Node of a tanh-sinh rule mapped to `[a, b]`, carrying its distances to
/// both endpoints so that integrands singular at an endpoint lose no
/// precision.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndpointNode {
    pub x: f64,
    pub from_lo: f64,
    pub from_hi: f64,
    pub weight: f64,
}

const TS_STEP: f64 = 1.0 / 32.0;
const TS_REACH: f64 = 4.0;

static TANH_SINH: OnceLock<Vec<EndpointNode>> = OnceLock::new();

fn tanh_sinh_unit() -> &'static [EndpointNode] {
    TANH_SINH.get_or_init(|| {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let steps = (TS_REACH / TS_STEP).round() as i32;
        (-steps..=steps)
            .map(|j| {
                let t = j as f64 * TS_STEP;
                let u = half_pi * t.sinh();
                let c = u.cosh();
                EndpointNode {
                    x: u.tanh(),
                    from_lo: 2.0 / (1.0 + (-2.0 * u).exp()),
                    from_hi: 2.0 / (1.0 + (2.0 * u).exp()),
                    weight: TS_STEP * half_pi * t.cosh() / (c * c),
                }
            })
            .collect()
    })
}

/// Double-exponential rule on `[a, b]` (257 nodes), accurate to near
/// machine precision for integrands analytic inside the interval, including
/// algebraic endpoint singularities.
pub fn tanh_sinh(a: f64, b: f64) -> impl Iterator<Item = EndpointNode> {
    let half = 0.5 * (b - a);
    tanh_sinh_unit().iter().map(move |n| EndpointNode {
        x: if n.x <= 0.0 {
            a + half * n.from_lo
        } else {
            b - half * n.from_hi
        },
        from_lo: half * n.from_lo,
        from_hi: half * n.from_hi,
        weight: half * n.weight,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_depth: 40,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
}

/// Adaptive composite Gauss–Legendre integration.
///
/// Each panel is integrated with the 16-point rule and compared against the
/// sum over its two halves; panels are bisected until the difference falls
/// below `max(abs_tol, rel_tol * |panel estimate|)` or the panel's
/// width-proportional share of `rel_tol` times the whole-interval estimate.
pub fn adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: AdaptiveOptions) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error_estimate: 0.0,
            panels: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
    }
    let gl = rule(16);
    let whole = gl.integrate(&f, a, b);
    let mut stack = vec![(a, b, whole, 0u32)];
    let mut value = 0.0;
    let mut err = 0.0;
    let mut panels = 0;
    while let Some((lo, hi, coarse, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gl.integrate(&f, lo, mid);
        let right = gl.integrate(&f, mid, hi);
        let fine = left + right;
        let diff = (fine - coarse).abs();
        if !fine.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        // each panel may also use its width share of the global tolerance
        let share = opts.rel_tol * whole.abs() * (hi - lo) / (b - a).abs();
        if diff <= opts.abs_tol.max(opts.rel_tol * fine.abs()).max(share) || diff == 0.0 {
            value += fine;
            err += diff;
            panels += 1;
        } else if depth >= opts.max_depth {
            return Err(Error::Quadrature(format!(
                "panel [{lo}, {hi}] still has error {diff:e} at depth {depth}"
            )));
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(Integral {
        value,
        error_estimate: err,
        panels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in [4, 8, 16, 32, 64] {
            let gl = rule(n);
            let deg = 2 * n - 1;
            let got = gl.integrate(|x| x.powi(deg as i32 - 1) + 1.0, -1.0, 1.0);
            let want = 2.0 / deg as f64 + 2.0;
            assert!((got - want).abs() < 1e-13, "n={n}: {got} vs {want}");
            let wsum: f64 = gl.weights().iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn odd_rule_has_centre_node() {
        let gl = GaussLegendre::new(5);
        assert_eq!(gl.nodes()[2], 0.0);
        assert!((gl.weights()[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_gaussian() {
        let r = adaptive(|x: f64| (-0.5 * x * x).exp(), -12.0, 12.0, AdaptiveOptions::default()).unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let r = adaptive(|x: f64| x.abs(), -1.0, 2.0, AdaptiveOptions::default()).unwrap();
        assert!((r.value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn adaptive_rejects_infinite_bounds() {
        assert!(adaptive(|x| x, 0.0, f64::INFINITY, AdaptiveOptions::default()).is_err());
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // ∫_0^1 x^{-1/2} dx = 2 and ∫_{-1}^1 √(1 - x²) dx = π/2
        let v: f64 = tanh_sinh(0.0, 1.0).map(|n| n.weight / n.from_lo.sqrt()).sum();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
        let v: f64 = tanh_sinh(-1.0, 1.0)
            .map(|n| n.weight * (n.from_lo * n.from_hi).sqrt())
            .sum();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-14, "{v}");
        let v: f64 = tanh_sinh(-2.0, 3.0).map(|n| n.weight * n.x.exp()).sum();
        assert!((v - (3f64.exp() - (-2f64).exp())).abs() < 1e-13);
    }
}
