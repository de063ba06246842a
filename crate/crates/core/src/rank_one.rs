//! Rank-one perturbations `A_alpha = A + alpha (., phi) phi`.
//!
//! The spectral measure `mu_alpha` is reachable two ways: through the
//! Aronszajn–Krein formula `K mu_alpha = K mu / (1 + pi alpha K mu)`, and for
//! atomic `mu` through an explicit eigensolve of `diag(t) + alpha w w^T`.
//! The second is kept independent of the first so each can check the other.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::cauchy::{self, EpsSchedule};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::{build_measure, AcPiece, Measure};

/// Largest atomic base accepted by [`perturb_discrete`].
pub const MAX_ORACLE_ATOMS: usize = 4000;
/// Above this size the oracle uses the Householder/QR solver instead of
/// cyclic Jacobi.
const JACOBI_LIMIT: usize = 256;
/// Allowed deviation of the base mass from 1.
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneFamily {
    pub base: Measure,
    pub alpha: f64,
}

impl RankOneFamily {
    pub fn new(base: Measure, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Argument(format!("coupling {alpha} is not finite")));
        }
        Ok(Self { base, alpha })
    }

    /// `K mu_alpha(z)` by the Aronszajn–Krein formula.
    pub fn transform(&self, z: Complex64) -> Result<Complex64> {
        perturbed_transform(self, z)
    }
}

/// `K mu(z) / (1 + pi alpha K mu(z))` for `Im z > 0`.
pub fn perturbed_transform(fam: &RankOneFamily, z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("Im z = {} is not positive", z.im)));
    }
    let k = cauchy::transform_k(&fam.base, z);
    let denominator = 1.0 + PI * fam.alpha * k;
    if denominator.norm() < 1e-300 {
        return Err(Error::PoleProximity(format!("1 + pi alpha K mu vanishes at {z}")));
    }
    Ok(k / denominator)
}

/// Aronszajn–Krein map applied to a transform value.
pub(crate) fn aronszajn_krein(k: Complex64, alpha: f64) -> Complex64 {
    k / (1.0 + PI * alpha * k)
}

/// Spectral measure of `diag(t) + alpha w w^T` with respect to `w`,
/// `w_i = sqrt(m_i)`, for a probability base.
pub fn perturb_discrete(fam: &RankOneFamily) -> Result<Measure> {
    let base = &fam.base;
    if !base.is_purely_atomic() {
        return Err(Error::Representation("matrix oracle needs a purely atomic base".into()));
    }
    let mass = base.total_mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::Normalization(format!("base mass {mass} differs from 1 by more than {MASS_TOL:e}")));
    }
    let atoms = matrix_oracle(base.atoms(), fam.alpha)?;
    build_measure(atoms, vec![])
}

/// Eigenvalues and spectral weights of `diag(t) + alpha w w^T`, any total
/// mass. Zero weights are dropped.
pub(crate) fn matrix_oracle(atoms: &[(f64, f64)], alpha: f64) -> Result<Vec<(f64, f64)>> {
    let n = atoms.len();
    if n > MAX_ORACLE_ATOMS {
        return Err(Error::Resource(format!("{n} atoms exceed the oracle limit of {MAX_ORACLE_ATOMS}")));
    }
    if n == 0 {
        return Ok(vec![]);
    }
    let w: Vec<f64> = atoms.iter().map(|a| a.1.sqrt()).collect();
    let mut matrix = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            matrix[i * n + j] = alpha * w[i] * w[j];
        }
        matrix[i * n + i] += atoms[i].0;
    }
    let eigen = if n <= JACOBI_LIMIT {
        linalg::jacobi_eigen(&matrix, n)?
    } else {
        linalg::dense_eigen(DMatrix::from_row_slice(n, n, &matrix))?
    };
    Ok(eigen
        .values
        .iter()
        .zip(&eigen.vectors)
        .map(|(&lambda, v)| {
            let overlap: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            (lambda, overlap * overlap)
        })
        .filter(|&(_, m)| m > 0.0)
        .collect())
}

/// Roots of `1 + alpha sum m_i / (t_i - x) = 0`, one per gap between atoms
/// and one in the unbounded gap on the side given by the sign of `alpha`.
pub fn secular_roots(fam: &RankOneFamily) -> Result<Vec<f64>> {
    if fam.alpha == 0.0 {
        return Err(Error::Argument("secular equation is degenerate at alpha = 0".into()));
    }
    if !fam.base.is_purely_atomic() {
        return Err(Error::Representation("secular roots need a purely atomic base".into()));
    }
    let atoms = fam.base.atoms();
    if atoms.is_empty() {
        return Ok(vec![]);
    }
    let alpha = fam.alpha;
    let f = |x: f64| 1.0 + alpha * atoms.iter().map(|&(t, m)| m / (t - x)).sum::<f64>();
    let reach = 10.0 * (1.0 + alpha.abs()) * fam.base.total_mass().max(1.0);
    let n = atoms.len();
    let mut roots = Vec::with_capacity(n);
    if alpha < 0.0 {
        let t1 = atoms[0].0;
        roots.push(bisect_unbounded(&f, t1, -1.0, reach, alpha)?);
    }
    for w in atoms.windows(2) {
        // f runs from -inf to +inf (alpha > 0) or +inf to -inf (alpha < 0)
        roots.push(bisect(&f, w[0].0, w[1].0, alpha > 0.0));
    }
    if alpha > 0.0 {
        let tn = atoms[n - 1].0;
        roots.push(bisect_unbounded(&f, tn, 1.0, reach, alpha)?);
    }
    Ok(roots)
}

/// Bisection on an open bracket whose end signs are known: `increasing`
/// means negative just right of `lo` and positive just left of `hi`.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, increasing: bool) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if (v < 0.0) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root beyond the outermost atom `edge` in direction `dir` (+1 or -1).
fn bisect_unbounded<F: Fn(f64) -> f64>(f: &F, edge: f64, dir: f64, cap: f64, alpha: f64) -> Result<f64> {
    // Next to the edge atom f has the sign of -alpha * dir * inf; far away it tends to 1.
    let mut step = 1e-3 * cap;
    loop {
        let probe = edge + dir * step.min(cap);
        if f(probe) > 0.0 {
            let (lo, hi) = if dir > 0.0 { (edge, probe) } else { (probe, edge) };
            return Ok(bisect(f, lo, hi, alpha > 0.0));
        }
        if step >= cap {
            return Err(Error::Numeric(format!("no sign change within {cap} of the outermost atom {edge}")));
        }
        step *= 2.0;
    }
}

/// Real solutions of `1 + pi alpha K mu(x) = 0` off the closed support of
/// `mu` (atoms and segments of positive density). `K mu` is real and
/// strictly increasing on every gap, so each gap holds at most one.
pub(crate) fn real_zeros(measure: &Measure, alpha: f64) -> Vec<f64> {
    if alpha == 0.0 || measure.is_zero() {
        return vec![];
    }
    let mut blocks: Vec<(f64, f64)> = measure.atoms().iter().map(|&(t, _)| (t, t)).collect();
    for piece in measure.ac_pieces() {
        for (t0, t1, v0, v1) in piece.segments() {
            if v0 > 0.0 || v1 > 0.0 {
                blocks.push((t0, t1));
            }
        }
    }
    blocks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut support: Vec<(f64, f64)> = Vec::new();
    for (a, b) in blocks {
        match support.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => support.push((a, b)),
        }
    }
    let target = -1.0 / (PI * alpha);
    let g = |x: f64| cauchy::boundary_exact(measure, x).map(|k| k.re - target);
    let offset = |x: f64| 1e-12 * (1.0 + x.abs());
    let reach = 10.0 * (1.0 + alpha.abs()) * measure.total_mass().max(1.0);
    let mut gaps: Vec<(f64, f64)> = Vec::new();
    gaps.push((f64::NEG_INFINITY, support[0].0));
    for w in support.windows(2) {
        gaps.push((w[0].1, w[1].0));
    }
    gaps.push((support[support.len() - 1].1, f64::INFINITY));

    let mut roots = Vec::new();
    for (l, r) in gaps {
        let lo = if l.is_finite() { l + offset(l) } else { r - reach };
        let hi = if r.is_finite() { r - offset(r) } else { l + reach };
        if !(lo < hi) {
            continue;
        }
        let (Some(glo), Some(ghi)) = (g(lo), g(hi)) else { continue };
        if glo < 0.0 && ghi > 0.0 {
            let f = |x: f64| g(x).unwrap_or(0.0);
            roots.push(bisect(&f, lo, hi, true));
        }
    }
    roots
}

/// Options for [`perturb_via_transform`].
#[derive(Debug, Clone)]
pub struct TransformRoute {
    /// Sub-cells per density cell of the base.
    pub refinement: usize,
    pub schedule: EpsSchedule,
    /// Atom detection threshold.
    pub tol: f64,
}

impl Default for TransformRoute {
    fn default() -> Self {
        Self { refinement: 256, schedule: EpsSchedule::default(), tol: 1e-12 }
    }
}

/// `mu_alpha` for any base from the Aronszajn–Krein transform alone.
///
/// The density is `f / |1 + pi alpha K mu(x + i0)|^2` sampled on the base's
/// density grid refined by `opts.refinement`. Atoms sit at the real zeros of
/// `1 + pi alpha K mu` off the support; their masses come from atom
/// detection on the boundary of `K mu_alpha`.
pub fn perturb_via_transform(fam: &RankOneFamily, opts: &TransformRoute) -> Result<Measure> {
    if opts.refinement == 0 {
        return Err(Error::Argument("refinement must be at least 1".into()));
    }
    let base = &fam.base;
    if fam.alpha == 0.0 {
        return Ok(base.clone());
    }
    let mut atoms = Vec::new();
    for x in real_zeros(base, fam.alpha) {
        let bv = cauchy::boundary_value_of(
            |z| aronszajn_krein(cauchy::transform_k(base, z), fam.alpha),
            x,
            &opts.schedule,
            opts.tol,
        );
        match bv.atom {
            Some(atom) => atoms.push((x, atom.mass)),
            None => return Err(Error::Numeric(format!("no stable atom mass at the secular root {x}"))),
        }
    }
    let density = |x: f64| -> f64 {
        let f = base.density(x);
        match cauchy::boundary_exact(base, x) {
            Some(k) if f > 0.0 => f / (1.0 + PI * fam.alpha * k).norm_sqr(),
            _ => 0.0,
        }
    };
    let mut pieces = Vec::new();
    for piece in base.ac_pieces() {
        let mut grid = Vec::new();
        for (t0, t1, _, _) in piece.segments() {
            for k in 0..opts.refinement {
                grid.push(t0 + (t1 - t0) * k as f64 / opts.refinement as f64);
            }
        }
        grid.push(piece.b());
        // interior evaluation at the piece ends: the density there is a
        // one-sided limit, and K mu may diverge only on the outside
        let inset = 1e-9 * (piece.b() - piece.a());
        let n = grid.len();
        let values: Vec<f64> = grid
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let x = if i == 0 { x + inset } else if i == n - 1 { x - inset } else { x };
                density(x)
            })
            .collect();
        if values.iter().any(|&v| v > 0.0) {
            pieces.push(AcPiece::new(grid, values)?);
        }
    }
    build_measure(atoms, pieces)
}

/// One atom of `mu_alpha` and the boundary value of `K mu` there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomCondition {
    pub position: f64,
    pub mass: f64,
    pub k_boundary: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum AronszajnDonoghueReport {
    NotApplicable {
        reason: String,
    },
    Checked {
        /// Smallest distance between an atom of `mu_alpha` and one of `mu_beta`.
        min_atom_distance: f64,
        disjoint: bool,
        atoms: Vec<AtomCondition>,
        max_condition_error: f64,
        condition_holds: bool,
    },
}

impl AronszajnDonoghueReport {
    pub fn passed(&self) -> bool {
        match self {
            Self::NotApplicable { .. } => false,
            Self::Checked { disjoint, condition_holds, .. } => *disjoint && *condition_holds,
        }
    }
}

/// Checks that `mu_alpha` and `mu_beta` share no atoms and that every atom
/// `x` of `mu_alpha` satisfies `K mu(x) = -1 / (pi alpha)`.
pub fn verify_aronszajn_donoghue(base: &Measure, alpha: f64, beta: f64, tol: f64) -> Result<AronszajnDonoghueReport> {
    if alpha == beta {
        return Ok(AronszajnDonoghueReport::NotApplicable {
            reason: "identical family member; theorem not applicable".into(),
        });
    }
    if !base.is_purely_atomic() {
        return Err(Error::Representation("Aronszajn–Donoghue check needs a purely atomic base".into()));
    }
    if alpha == 0.0 || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Argument(format!("couplings must be finite with alpha non-zero (got {alpha}, {beta})")));
    }
    let mu_alpha = matrix_oracle(base.atoms(), alpha)?;
    let mu_beta = matrix_oracle(base.atoms(), beta)?;

    let mut min_atom_distance = f64::INFINITY;
    let (mut i, mut j) = (0, 0);
    while i < mu_alpha.len() && j < mu_beta.len() {
        let (a, b) = (mu_alpha[i].0, mu_beta[j].0);
        min_atom_distance = min_atom_distance.min((a - b).abs());
        if a < b {
            i += 1;
        } else {
            j += 1;
        }
    }

    let target = -1.0 / (PI * alpha);
    let atoms: Vec<AtomCondition> = mu_alpha
        .iter()
        .map(|&(x, m)| {
            let k = cauchy::boundary_exact(base, x).map_or(f64::INFINITY, |k| k.re);
            AtomCondition { position: x, mass: m, k_boundary: k, target }
        })
        .collect();
    let max_condition_error = atoms.iter().map(|a| (a.k_boundary - a.target).abs()).fold(0.0, f64::max);
    Ok(AronszajnDonoghueReport::Checked {
        min_atom_distance,
        disjoint: min_atom_distance > tol,
        condition_holds: max_condition_error <= tol,
        max_condition_error,
        atoms,
    })
}
