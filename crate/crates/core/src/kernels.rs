//! Closed-form integrals of linear functions against the Cauchy kernels.
//!
//! Every routine integrates `f(t) = v0 + s (t - t0)` over `[t0, t1]` with
//! `s = (v1 - v0) / (t1 - t0)`. Nothing here divides by pi.

use num_complex::Complex64;
use std::f64::consts::PI;

/// `ln(1 + w)` without cancellation for small `|w|`.
fn complex_ln_1p(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let re = 0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p();
        let im = w.im.atan2(1.0 + w.re);
        Complex64::new(re, im)
    } else {
        (Complex64::new(1.0, 0.0) + w).ln()
    }
}

/// `Log(t1 - z) - Log(t0 - z)` for `Im z > 0`. Both arguments lie in
/// `(-pi, 0)`, so the difference is the principal log of the ratio.
fn log_ratio(t0: f64, t1: f64, z: Complex64) -> Complex64 {
    let w = Complex64::new(t1 - t0, 0.0) / (Complex64::new(t0, 0.0) - z);
    if w.norm() < 0.5 {
        complex_ln_1p(w)
    } else {
        (Complex64::new(t1, 0.0) - z).ln() - (Complex64::new(t0, 0.0) - z).ln()
    }
}

/// `int_{t0}^{t1} f(t) / (t - z) dt` for `Im z > 0`.
pub fn segment_cauchy(t0: f64, t1: f64, v0: f64, v1: f64, z: Complex64) -> Complex64 {
    let width = t1 - t0;
    if width <= 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let slope = (v1 - v0) / width;
    let f_at_z = Complex64::new(v0, 0.0) + (z - t0) * slope;
    Complex64::new(slope * width, 0.0) + f_at_z * log_ratio(t0, t1, z)
}

/// `int_{t0}^{t1} f(t) t / (t^2 + 1) dt`.
pub fn segment_correction(t0: f64, t1: f64, v0: f64, v1: f64) -> f64 {
    let width = t1 - t0;
    if width <= 0.0 {
        return 0.0;
    }
    let slope = (v1 - v0) / width;
    let intercept = v0 - slope * t0;
    let log_part = ((t1 * t1 + 1.0) / (t0 * t0 + 1.0)).ln();
    0.5 * intercept * log_part + slope * (width - (t1.atan() - t0.atan()))
}

/// `int_{t0}^{t1} f(t) / (t^2 + 1) dt`.
pub fn segment_poisson_weight(t0: f64, t1: f64, v0: f64, v1: f64) -> f64 {
    let width = t1 - t0;
    if width <= 0.0 {
        return 0.0;
    }
    let slope = (v1 - v0) / width;
    let intercept = v0 - slope * t0;
    intercept * (t1.atan() - t0.atan()) + 0.5 * slope * ((t1 * t1 + 1.0) / (t0 * t0 + 1.0)).ln()
}

/// Boundary value of [`segment_cauchy`] as `z -> x + i0`.
///
/// Returns `(regular, coeff)`: the limit equals
/// `regular + coeff * Log(x - z)`, where `coeff` is non-zero only if `x`
/// coincides with an endpoint carrying a non-zero value. Summed over a
/// continuous profile the coefficients cancel.
pub fn segment_boundary(t0: f64, t1: f64, v0: f64, v1: f64, x: f64) -> (Complex64, f64) {
    let width = t1 - t0;
    if width <= 0.0 {
        return (Complex64::new(0.0, 0.0), 0.0);
    }
    let slope = (v1 - v0) / width;
    let f_at_x = v0 + slope * (x - t0);
    let mut regular = Complex64::new(slope * width, 0.0);
    let mut coeff = 0.0;
    // Log(t - x - i0) = ln|t - x| - i pi [t < x]
    let boundary_log = |t: f64| Complex64::new((t - x).abs().ln(), if t < x { -PI } else { 0.0 });
    if t1 == x {
        coeff += v1;
    } else {
        regular += f_at_x * boundary_log(t1);
    }
    if t0 == x {
        coeff -= v0;
    } else {
        regular -= f_at_x * boundary_log(t0);
    }
    (regular, coeff)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simpson<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, n: usize) -> Complex64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(a + h * i as f64) * w;
        }
        acc * (h / 3.0)
    }

    #[test]
    fn cauchy_matches_quadrature() {
        let z = Complex64::new(0.3, 0.7);
        let (t0, t1, v0, v1) = (-0.5, 1.25, 2.0, 0.5);
        let f = |t: f64| {
            let v = v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            Complex64::new(v, 0.0) / (Complex64::new(t, 0.0) - z)
        };
        let q = simpson(f, t0, t1, 20000);
        let c = segment_cauchy(t0, t1, v0, v1, z);
        assert!((q - c).norm() < 1e-10, "{q} vs {c}");
    }

    #[test]
    fn far_field_has_no_cancellation_loss() {
        let z = Complex64::new(1e6, 1.0);
        let c = segment_cauchy(0.0, 1e-3, 1.0, 1.0, z);
        // approximately -(1e-3)/z
        let approx = -Complex64::new(1e-3, 0.0) / (z - 5e-4);
        assert!(((c - approx) / approx).norm() < 1e-9);
    }

    #[test]
    fn correction_and_poisson_weight_match_quadrature() {
        let (t0, t1, v0, v1) = (-2.0, 3.0, 1.0, 4.0);
        let lin = |t: f64| v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        let q1 = simpson(|t| Complex64::new(lin(t) * t / (t * t + 1.0), 0.0), t0, t1, 20000).re;
        let q2 = simpson(|t| Complex64::new(lin(t) / (t * t + 1.0), 0.0), t0, t1, 20000).re;
        assert!((q1 - segment_correction(t0, t1, v0, v1)).abs() < 1e-11);
        assert!((q2 - segment_poisson_weight(t0, t1, v0, v1)).abs() < 1e-11);
    }

    #[test]
    fn boundary_limit_matches_small_height() {
        let (t0, t1, v0, v1) = (0.0, 1.0, 0.5, 2.0);
        let x = 0.4;
        let (reg, coeff) = segment_boundary(t0, t1, v0, v1, x);
        assert_eq!(coeff, 0.0);
        let near = segment_cauchy(t0, t1, v0, v1, Complex64::new(x, 1e-10));
        assert!((reg - near).norm() < 1e-8);
        // imaginary part is pi f(x)
        assert!((reg.im - PI * (0.5 + 1.5 * 0.4)).abs() < 1e-14);
    }

    #[test]
    fn boundary_at_endpoint_reports_log_coefficient() {
        let (reg, coeff) = segment_boundary(0.0, 1.0, 3.0, 3.0, 0.0);
        assert_eq!(coeff, -3.0);
        // 3 * Log(1 - 0) = 0, nothing else
        assert!(reg.norm() < 1e-15);
    }
}
