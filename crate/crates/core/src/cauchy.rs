//! Cauchy transforms of measures on the upper half-plane and their
//! boundary values on the real axis.
//!
//! `K tau(z) = (1/pi) int dtau(t) / (t - z)` and the regularized
//! `K1 tau(z) = (1/pi) int [1/(t - z) - t/(t^2 + 1)] dtau(t)`. Atoms are
//! summed exactly and each linear density segment is integrated in closed
//! form, so there is no quadrature error anywhere in this module.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels;
use crate::measures::Measure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    K,
    K1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Interior,
    BoundaryExtrapolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyEvaluation {
    pub point: Complex64,
    pub value: Complex64,
    pub mode: Mode,
    pub converged: bool,
    /// Size of the last extrapolation step (zero for interior points).
    pub residual: f64,
    /// Heights actually evaluated, empty for interior points.
    pub schedule: Vec<f64>,
}

/// Geometric approach heights for boundary limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSchedule(Vec<f64>);

impl EpsSchedule {
    pub fn new(heights: Vec<f64>) -> Result<Self> {
        if heights.len() < 4 {
            return Err(Error::Argument("schedule needs at least four heights".into()));
        }
        if heights.iter().any(|h| !(*h > 0.0) || !h.is_finite()) || heights.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::Argument("schedule must be positive and strictly decreasing".into()));
        }
        Ok(Self(heights))
    }

    /// `2^-j` for `j` in `first..=last`.
    pub fn geometric(first: i32, last: i32) -> Result<Self> {
        Self::new((first..=last).map(|j| 2f64.powi(-j)).collect())
    }

    pub fn heights(&self) -> &[f64] {
        &self.0
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        Self::geometric(4, 40).expect("static schedule")
    }
}

/// Exact transform at an interior point.
pub fn cauchy_transform(measure: &Measure, z: Complex64, variant: Variant) -> Result<CauchyEvaluation> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("Im z = {} is not positive", z.im)));
    }
    let value = match variant {
        Variant::K => transform_k(measure, z),
        Variant::K1 => transform_k(measure, z) - k1_offset(measure),
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Integrability(format!("transform at {z} is not finite")));
    }
    Ok(CauchyEvaluation { point: z, value, mode: Mode::Interior, converged: true, residual: 0.0, schedule: vec![] })
}

/// `K tau(z)` without argument checks; `z` must lie in the upper half-plane.
pub(crate) fn transform_k(measure: &Measure, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(t, m) in measure.atoms() {
        acc += m / (Complex64::new(t, 0.0) - z);
    }
    for piece in measure.ac_pieces() {
        for (t0, t1, v0, v1) in piece.segments() {
            acc += kernels::segment_cauchy(t0, t1, v0, v1, z);
        }
    }
    acc / PI
}

/// `K tau - K1 tau`, a real constant.
pub(crate) fn k1_offset(measure: &Measure) -> f64 {
    let atoms: f64 = measure.atoms().iter().map(|&(t, m)| m * t / (t * t + 1.0)).sum();
    let ac: f64 = measure
        .ac_pieces()
        .iter()
        .flat_map(|p| p.segments())
        .map(|(t0, t1, v0, v1)| kernels::segment_correction(t0, t1, v0, v1))
        .sum();
    (atoms + ac) / PI
}

/// Exact `K tau(x + i0)` from the closed forms, or `None` where it diverges
/// (at atoms, and at density jumps).
pub fn boundary_exact(measure: &Measure, x: f64) -> Option<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for &(t, m) in measure.atoms() {
        if t == x {
            return None;
        }
        acc += m / (t - x);
    }
    let mut coeff = 0.0;
    for piece in measure.ac_pieces() {
        for (t0, t1, v0, v1) in piece.segments() {
            let (regular, c) = kernels::segment_boundary(t0, t1, v0, v1, x);
            acc += regular;
            coeff += c;
        }
    }
    if coeff.abs() > 1e-12 * (1.0 + acc.norm()) {
        return None;
    }
    Some(acc / PI)
}

/// Result of extrapolating a function of the approach height to zero.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Extrapolation {
    pub value: Complex64,
    pub converged: bool,
    pub residual: f64,
    pub used: usize,
}

/// First-order Richardson extrapolation along a geometric schedule.
///
/// Convergence means two consecutive extrapolated steps both changed by less
/// than `tol`.
pub(crate) fn extrapolate<F: Fn(f64) -> Complex64>(schedule: &EpsSchedule, f: F, tol: f64) -> Extrapolation {
    let h = schedule.heights();
    let mut raw: Vec<Complex64> = Vec::with_capacity(h.len());
    let mut previous: Option<Complex64> = None;
    let mut calm_steps = 0;
    let mut last_step = f64::INFINITY;
    let mut best = Complex64::new(f64::NAN, f64::NAN);
    for (j, &eps) in h.iter().enumerate() {
        raw.push(f(eps));
        if j == 0 {
            best = raw[0];
            continue;
        }
        let ratio = h[j - 1] / eps;
        let extrapolated = (raw[j] * ratio - raw[j - 1]) / (ratio - 1.0);
        if !extrapolated.re.is_finite() || !extrapolated.im.is_finite() {
            break;
        }
        if let Some(prev) = previous {
            last_step = (extrapolated - prev).norm();
            calm_steps = if last_step < tol { calm_steps + 1 } else { 0 };
        }
        previous = Some(extrapolated);
        best = extrapolated;
        if calm_steps >= 2 {
            return Extrapolation { value: best, converged: true, residual: last_step, used: j + 1 };
        }
    }
    Extrapolation { value: best, converged: false, residual: last_step, used: raw.len() }
}

/// Relative band within which the atom-mass products must agree.
const ATOM_STABILITY: f64 = 0.01;
/// Number of trailing heights over which they must agree.
const ATOM_RUN: usize = 4;

/// Mass estimate from `pi eps Im K tau(x + i eps)` if it is stable over the
/// last [`ATOM_RUN`] heights and exceeds `tol`.
///
/// Towards small heights the bias of the products shrinks but rounding in
/// the transform grows. The products are followed while successive changes
/// keep shrinking; the estimate is the last product before they stop.
pub(crate) fn detect_atom(products: &[f64], tol: f64) -> Option<f64> {
    if products.len() < ATOM_RUN {
        return None;
    }
    let tail = &products[products.len() - ATOM_RUN..];
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > tol && hi <= lo * (1.0 + ATOM_STABILITY)) {
        return None;
    }
    let mut previous_step = f64::INFINITY;
    let mut shrinking = 0;
    for j in 1..products.len() {
        let step = (products[j] - products[j - 1]).abs();
        if step == 0.0 || step <= previous_step / STEP_SHRINK {
            shrinking += 1;
        } else if shrinking >= 2 {
            return Some(products[j - 1]);
        } else {
            shrinking = 0;
        }
        previous_step = step;
    }
    Some(*tail.last().unwrap())
}

/// Factor by which successive product changes must shrink while the bias
/// still dominates (2 for a linear bias, 4 for a quadratic one).
const STEP_SHRINK: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub position: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValue {
    pub evaluation: CauchyEvaluation,
    pub atom: Option<AtomReport>,
}

/// `lim_{eps -> 0} K tau(x + i eps)` by extrapolation along `schedule`.
///
/// Non-convergence is reported through the `converged` flag. When
/// `pi eps Im K tau(x + i eps)` settles above `tol`, the measure has an atom at
/// `x` and its mass is reported.
pub fn boundary_value(measure: &Measure, x: f64, schedule: &EpsSchedule, tol: f64) -> BoundaryValue {
    boundary_value_of(|z| transform_k(measure, z), x, schedule, tol)
}

/// Boundary extrapolation for any function of the upper half-plane.
pub(crate) fn boundary_value_of<F: Fn(Complex64) -> Complex64>(
    transform: F,
    x: f64,
    schedule: &EpsSchedule,
    tol: f64,
) -> BoundaryValue {
    let ext = extrapolate(schedule, |eps| transform(Complex64::new(x, eps)), tol);
    let products: Vec<f64> =
        schedule.heights().iter().map(|&eps| PI * eps * transform(Complex64::new(x, eps)).im).collect();
    let atom = detect_atom(&products, tol).map(|mass| AtomReport { position: x, mass });
    BoundaryValue {
        evaluation: CauchyEvaluation {
            point: Complex64::new(x, 0.0),
            value: ext.value,
            mode: Mode::BoundaryExtrapolated,
            converged: ext.converged && atom.is_none(),
            residual: ext.residual,
            schedule: schedule.heights()[..ext.used].to_vec(),
        },
        atom,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub estimate: f64,
    pub converged: bool,
    pub residual: f64,
}

/// Limit of `K tau_tilde / K tau` at `x + i eps` as `eps -> 0`.
///
/// Meaningful where `x` is an atom of `tau` or a point of its singular part;
/// the limit is then the density of `tau_tilde` with respect to `tau` there.
pub fn poltoratski_ratio(
    tau_tilde: &Measure,
    tau: &Measure,
    x: f64,
    schedule: &EpsSchedule,
    tol: f64,
) -> Result<RatioEstimate> {
    let usable = schedule.heights().iter().any(|&eps| transform_k(tau, Complex64::new(x, eps)).norm() >= 1e-300);
    if !usable {
        return Err(Error::IndeterminateRatio(format!("K tau vanishes along the whole schedule at {x}")));
    }
    let ext = extrapolate(
        schedule,
        |eps| {
            let z = Complex64::new(x, eps);
            transform_k(tau_tilde, z) / transform_k(tau, z)
        },
        tol,
    );
    Ok(RatioEstimate { estimate: ext.value.re, converged: ext.converged, residual: ext.residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{build_measure, AcPiece};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_atom_at_origin() {
        let d0 = Measure::dirac(0.0, 1.0).unwrap();
        let v = cauchy_transform(&d0, c(0.0, 1.0), Variant::K).unwrap().value;
        assert!((v - c(0.0, 1.0 / PI)).norm() < 1e-16);
        let v1 = cauchy_transform(&d0, c(0.0, 1.0), Variant::K1).unwrap().value;
        assert!((v1 - c(0.0, 1.0 / PI)).norm() < 1e-16);
    }

    #[test]
    fn uniform_density_at_i() {
        let u = Measure::uniform(0.0, 1.0, 1.0).unwrap();
        let v = cauchy_transform(&u, c(0.0, 1.0), Variant::K).unwrap().value;
        // (1/pi) ln(1 + i) = (1/pi)(ln(2)/2 + i pi/4)
        let expected = c(0.5 * 2f64.ln() / PI, 0.25);
        assert!((v - expected).norm() < 1e-15, "{v}");
        assert!((v.re - 0.11032).abs() < 5e-6);
    }

    #[test]
    fn rejects_lower_half_plane() {
        let d0 = Measure::dirac(0.0, 1.0).unwrap();
        assert!(matches!(cauchy_transform(&d0, c(0.0, 0.0), Variant::K), Err(Error::Domain(_))));
        assert!(matches!(cauchy_transform(&d0, c(1.0, -1.0), Variant::K1), Err(Error::Domain(_))));
    }

    #[test]
    fn schedule_validation() {
        assert!(EpsSchedule::new(vec![1.0, 0.5, 0.25]).is_err());
        assert!(EpsSchedule::new(vec![1.0, 0.5, 0.5, 0.1]).is_err());
        assert!(EpsSchedule::new(vec![1.0, 0.5, 0.25, 0.0]).is_err());
        assert_eq!(EpsSchedule::default().heights().len(), 37);
    }

    #[test]
    fn boundary_recovers_uniform_density() {
        let u = Measure::uniform(0.0, 1.0, 1.0).unwrap();
        let tol = 1e-9;
        let bv = boundary_value(&u, 0.5, &EpsSchedule::default(), tol);
        assert!(bv.evaluation.converged);
        assert!((bv.evaluation.value.im - 1.0).abs() < 10.0 * tol);
        assert!(bv.atom.is_none());
    }

    #[test]
    fn boundary_off_an_atom() {
        let d0 = Measure::dirac(0.0, 1.0).unwrap();
        let tol = 1e-10;
        let bv = boundary_value(&d0, 0.5, &EpsSchedule::default(), tol);
        assert!(bv.evaluation.converged);
        assert!((bv.evaluation.value.re + 2.0 / PI).abs() < 10.0 * tol);
        assert!(bv.evaluation.value.im.abs() < 10.0 * tol);
    }

    #[test]
    fn boundary_at_an_atom_reports_mass() {
        let d0 = Measure::dirac(0.0, 1.0).unwrap();
        let bv = boundary_value(&d0, 0.0, &EpsSchedule::default(), 1e-6);
        let atom = bv.atom.expect("atom detected");
        assert!((atom.mass - 1.0).abs() < 1e-12);
        assert!(!bv.evaluation.converged);
    }

    #[test]
    fn nearby_atom_is_not_reported() {
        let d = Measure::dirac(1e-3, 1.0).unwrap();
        let bv = boundary_value(&d, 0.0, &EpsSchedule::default(), 1e-6);
        assert!(bv.atom.is_none());
    }

    #[test]
    fn boundary_exact_matches_extrapolation() {
        let m = build_measure(
            vec![(-1.0, 0.3)],
            vec![AcPiece::new(vec![0.0, 0.4, 1.0], vec![0.5, 1.5, 0.2]).unwrap()],
        )
        .unwrap();
        for x in [-2.0, 0.2, 0.7, 1.5] {
            let exact = boundary_exact(&m, x).unwrap();
            let bv = boundary_value(&m, x, &EpsSchedule::default(), 1e-10);
            assert!(bv.evaluation.converged, "x = {x}");
            assert!((exact - bv.evaluation.value).norm() < 1e-8, "x = {x}: {exact} vs {}", bv.evaluation.value);
        }
        assert!(boundary_exact(&m, -1.0).is_none());
        assert!(boundary_exact(&m, 0.0).is_none());
    }

    #[test]
    fn ratio_examples() {
        let s = EpsSchedule::default();
        let d0 = Measure::dirac(0.0, 1.0).unwrap();
        let two_d0 = Measure::dirac(0.0, 2.0).unwrap();
        let r = poltoratski_ratio(&two_d0, &d0, 0.0, &s, 1e-10).unwrap();
        assert!((r.estimate - 2.0).abs() < 1e-12);

        let tau = build_measure(vec![(0.0, 1.0), (1.0, 1.0)], vec![]).unwrap();
        let tilde = build_measure(vec![(0.0, 2.0), (1.0, 3.0)], vec![]).unwrap();
        let r0 = poltoratski_ratio(&tilde, &tau, 0.0, &s, 1e-10).unwrap();
        let r1 = poltoratski_ratio(&tilde, &tau, 1.0, &s, 1e-10).unwrap();
        assert!(r0.converged && r1.converged);
        assert!((r0.estimate - 2.0).abs() < 1e-9);
        assert!((r1.estimate - 3.0).abs() < 1e-9);

        let far = d0.add(&Measure::uniform(2.0, 3.0, 1.0).unwrap()).unwrap();
        let r = poltoratski_ratio(&far, &d0, 0.0, &s, 1e-10).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ratio_against_zero_measure_is_indeterminate() {
        let d0 = Measure::dirac(0.0, 1.0).unwrap();
        let r = poltoratski_ratio(&d0, &Measure::zero(), 0.0, &EpsSchedule::default(), 1e-10);
        assert!(matches!(r, Err(Error::IndeterminateRatio(_))));
    }
}
