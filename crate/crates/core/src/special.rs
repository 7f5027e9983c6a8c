//! Special functions shared by the spin models.

use crate::quadrature;

/// Langevin function `ψ(x) = coth(x) - 1/x`, odd, with `ψ(0) = 0`.
pub fn langevin(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.1 {
        let x2 = x * x;
        // x/3 - x^3/45 + 2x^5/945 - x^7/4725 + 2x^9/93555
        return x * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * (2.0 / 93555.0)))));
    }
    if ax > 20.0 {
        return x.signum() * (1.0 + 2.0 * (-2.0 * ax).exp()) - 1.0 / x;
    }
    1.0 / x.tanh() - 1.0 / x
}

/// Derivative `ψ'(x) = 1/x² - 1/sinh²(x)`.
pub fn langevin_prime(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 0.1 {
        let x2 = x * x;
        return 1.0 / 3.0 + x2 * (-1.0 / 15.0 + x2 * (2.0 / 189.0 + x2 * (-1.0 / 675.0 + x2 * (2.0 / 10395.0))));
    }
    let s = if ax > 350.0 { 0.0 } else { 1.0 / ax.sinh() };
    1.0 / (x * x) - s * s
}

/// `ln(sinh(x) / x)`, even, accurate for all real `x`.
pub fn ln_sinhc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-3 {
        let x2 = ax * ax;
        return x2 / 6.0 - x2 * x2 / 180.0;
    }
    if ax < 20.0 {
        return (ax.sinh() / ax).ln();
    }
    ax - std::f64::consts::LN_2 - ax.ln() + (-(-2.0 * ax).exp()).ln_1p()
}

/// `ln(cosh(x))` without overflow, with full relative precision near 0.
pub fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1.0 {
        // cosh x − 1 = 2 sinh²(x/2)
        let s = (0.5 * ax).sinh();
        return (2.0 * s * s).ln_1p();
    }
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// Log-sum-exp of a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// First three moments of the cosine `u` of a von Mises–Fisher direction
/// on S² with concentration `b ≥ 0`, i.e. of the density `∝ e^{b u}` on
/// `[-1, 1]`.
pub fn vmf_cos_moments(b: f64) -> [f64; 3] {
    if b < 0.5 {
        let gl = quadrature::rule(16);
        let mut z = 0.0;
        let mut m = [0.0; 3];
        for (x, w) in gl.nodes().iter().zip(gl.weights()) {
            let e = w * (b * x).exp();
            z += e;
            m[0] += e * x;
            m[1] += e * x * x;
            m[2] += e * x * x * x;
        }
        return [m[0] / z, m[1] / z, m[2] / z];
    }
    let coth = 1.0 / b.tanh();
    let m1 = coth - 1.0 / b;
    let m2 = 1.0 - 2.0 * m1 / b;
    let m3 = coth - 3.0 * m2 / b;
    [m1, m2, m3]
}

/// `E[(x - u)|x - u|]` for the von Mises–Fisher cosine `u` with
/// concentration `b`, at a fixed `x ∈ [-1, 1]`.
pub fn vmf_signed_square(x: f64, b: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    if b < 0.5 {
        let gl = quadrature::rule(16);
        let dens = |u: f64| (b * (u - 1.0)).exp();
        let z = gl.integrate(dens, -1.0, 1.0);
        let below = gl.integrate(|u| (x - u) * (x - u) * dens(u), -1.0, x);
        let above = gl.integrate(|u| (x - u) * (x - u) * dens(u), x, 1.0);
        return (below - above) / z;
    }
    // Antiderivative of (x-u)^2 e^{b(u-1)}:
    // Q(u) = e^{b(u-1)} [ (x-u)^2/b + 2(x-u)/b^2 + 2/b^3 ].
    let q = |u: f64| {
        let d = x - u;
        (b * (u - 1.0)).exp() * (d * d / b + 2.0 * d / (b * b) + 2.0 / (b * b * b))
    };
    let qx = q(x);
    let below = qx - q(-1.0);
    let above = q(1.0) - qx;
    // ∫ e^{b(u-1)} du over [-1, 1]
    let z = -(-2.0 * b).exp_m1() / b;
    (below - above) / z
}

/// Root of an increasing function on `[lo, hi]` by safeguarded Newton.
///
/// `f` returns the value and the derivative; the bracket must satisfy
/// `f(lo) <= 0 <= f(hi)`. Iterates until the bracket is narrower than
/// `xtol` (absolute, plus a relative ulp allowance) or 200 steps.
pub fn solve_increasing<F: Fn(f64) -> (f64, f64)>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, d) = f(x);
        if v == 0.0 {
            return x;
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= xtol + 4.0 * f64::EPSILON * x.abs() {
            break;
        }
        let newton = x - v / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (x - lo).min(hi - x) <= 0.0 {
            x = 0.5 * (lo + hi);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn safeguarded_newton_finds_cube_root() {
        let r = solve_increasing(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 4.0, 1e-15);
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
        // flat derivative at the left end forces bisection steps
        let r = solve_increasing(|x| (x.powi(9) - 1e-9, 9.0 * x.powi(8)), 0.0, 1.0, 1e-16);
        assert!((r - 0.1).abs() < 1e-14);
    }

    #[test]
    fn langevin_branches_agree() {
        for x in [0.0999, 0.1, 0.1001, 0.5, 3.0, 19.9, 20.1] {
            let direct = 1.0 / f64::tanh(x) - 1.0 / x;
            assert!((langevin(x) - direct).abs() < 1e-13, "x={x}");
            assert!((langevin(-x) + langevin(x)).abs() < 1e-15);
        }
        assert_eq!(langevin(0.0), 0.0);
    }

    #[test]
    fn langevin_prime_matches_difference_quotient() {
        for x in [0.05, 0.3, 1.0, 2.4, 7.0] {
            let h = 1e-5;
            let fd = (langevin(x + h) - langevin(x - h)) / (2.0 * h);
            assert!((langevin_prime(x) - fd).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn ln_sinhc_is_continuous() {
        for x in [1e-3, 20.0] {
            let a = ln_sinhc(x * (1.0 - 1e-12));
            let b = ln_sinhc(x * (1.0 + 1e-12));
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
        }
        assert!((ln_sinhc(200.0) - (200.0 - 2f64.ln() - 200f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn vmf_moments_match_quadrature() {
        for b in [0.01, 0.4999, 0.5, 2.0, 10.0] {
            let gl = quadrature::rule(64);
            let z = gl.integrate(|u| (b * u).exp(), -1.0, 1.0);
            let m = vmf_cos_moments(b);
            for (k, mk) in m.iter().enumerate() {
                let p = (k + 1) as i32;
                let q = gl.integrate(|u| u.powi(p) * (b * u).exp(), -1.0, 1.0) / z;
                assert!((mk - q).abs() < 1e-12, "b={b} k={p}: {mk} vs {q}");
            }
            assert!((m[0] - langevin(b)).abs() < 1e-12);
        }
    }

    #[test]
    fn vmf_signed_square_matches_split_quadrature() {
        for b in [0.2, 0.6, 2.4, 9.0] {
            for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
                let gl = quadrature::rule(64);
                let z = gl.integrate(|u| (b * u).exp(), -1.0, 1.0);
                let lo = gl.integrate(|u| (x - u) * (x - u) * (b * u).exp(), -1.0, x);
                let hi = gl.integrate(|u| (x - u) * (x - u) * (b * u).exp(), x, 1.0);
                let want = (lo - hi) / z;
                let got = vmf_signed_square(x, b);
                assert!((got - want).abs() < 1e-11, "b={b} x={x}: {got} vs {want}");
            }
        }
    }
}
