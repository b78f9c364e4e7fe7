//! Gaussian tail probability and its inverse.

use crate::error::{Error, Result};
use statrs::function::erf;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Upper tail of the standard normal, `Q(x) = P[N(0,1) > x]`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * erf::erfc(x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of [`qfunc`] on (0,1).
///
/// Seeded with the closed-form complementary-error-function inverse and
/// polished by Newton iterations on `Q` itself until the residual in
/// probability is below 1e-12 (relative).
pub fn qfunc_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0,1), got {eps}")));
    }
    if eps == 0.5 {
        return Ok(0.0);
    }
    let mut x = SQRT_2 * erf::erfc_inv(2.0 * eps);
    for _ in 0..60 {
        let q = qfunc(x);
        let dq = q - eps;
        if dq.abs() <= 1e-14 * eps.min(1.0 - eps) {
            break;
        }
        let pdf = norm_pdf(x);
        if pdf == 0.0 {
            break;
        }
        // Q'(x) = -pdf(x)
        let step = dq / pdf;
        x += step;
        if step.abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(qfunc(0.0), 0.5);
    }

    #[test]
    fn q_far_tail() {
        assert!(qfunc(10.0) < 1e-22);
    }

    #[test]
    fn q_monotone_decreasing() {
        let xs = [-4.0, -1.0, 0.0, 0.5, 1.0, 3.0, 6.0];
        for w in xs.windows(2) {
            assert!(qfunc(w[0]) > qfunc(w[1]));
        }
    }

    // Expected value from a trapezoid quadrature of the Gaussian tail,
    // independent of the erfc implementation.
    fn qfunc_quadrature(x: f64) -> f64 {
        let upper = x + 40.0;
        let n = 4_000_000usize;
        let h = (upper - x) / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = 0.5 * (f(x) + f(upper));
        for i in 1..n {
            s += f(x + i as f64 * h);
        }
        s * h
    }

    #[test]
    fn q_matches_quadrature_oracle() {
        let x = 3.0902;
        let oracle = qfunc_quadrature(x);
        let got = qfunc(x);
        assert!((got - oracle).abs() / oracle < 1e-6, "got {got}, oracle {oracle}");
        assert!((got - 1e-3).abs() < 2e-7);
    }

    #[test]
    fn qinv_half_is_zero() {
        assert_eq!(qfunc_inv(0.5).unwrap(), 0.0);
    }

    #[test]
    fn qinv_bisection_oracle() {
        // bisection on qfunc, independent of the Newton path
        let eps = 1e-3;
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if qfunc(mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let got = qfunc_inv(eps).unwrap();
        assert!((got - oracle).abs() < 1e-4);
        assert!((got - 3.0902).abs() < 1e-4);
    }

    #[test]
    fn qinv_roundtrip_and_symmetry() {
        for &eps in &[1e-8, 1e-6, 1e-3, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999] {
            let x = qfunc_inv(eps).unwrap();
            assert!((qfunc(x) - eps).abs() <= 1e-10, "eps={eps}");
            let y = qfunc_inv(1.0 - eps).unwrap();
            assert!((x + y).abs() < 1e-9, "eps={eps}: {x} vs {y}");
        }
    }

    #[test]
    fn qinv_rejects_out_of_range() {
        assert!(qfunc_inv(0.0).is_err());
        assert!(qfunc_inv(1.0).is_err());
        assert!(qfunc_inv(-0.1).is_err());
    }
}
