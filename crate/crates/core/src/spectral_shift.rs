//! Krein–Lifshits spectral shift functions.
//!
//! For `alpha > 0` the shift function of the pair `(mu, mu_alpha)` is
//! `u(x) = arg(1 + pi alpha K mu(x + i0))` in `[0, pi]`, and
//! `1 + pi alpha K mu = exp(K1 u + c)` on the upper half-plane. This module
//! computes `u` from a family, recovers the pair `(mu, nu)` from `u` in the
//! `alpha = 1` convention, performs the surgery that replaces a two-valued
//! stretch of `u` by a tent, and classifies the jump structure.
//!
//! A [`ShiftFunction`] is piecewise linear. A jump at `x` is written as two
//! consecutive breakpoints at the same `x`, carrying the left and the right
//! limit. Outside its grid a shift function is zero.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::cauchy::{self, EpsSchedule};
use crate::error::{Error, Result};
use crate::kernels;
use crate::measures::{build_measure, AcPiece, Measure, ATOM_MERGE_TOL};
use crate::rank_one::{self, RankOneFamily};
use crate::region::RegionSet;

pub const DEFAULT_JUMP_TOL: f64 = 0.05 * PI;
/// Values this far outside `[0, pi]` are clamped rather than rejected.
pub const RANGE_SLACK: f64 = 1e-9;
/// Share of grid points allowed to miss boundary convergence.
pub const MAX_UNCONVERGED_SHARE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    c: f64,
}

#[derive(Deserialize)]
struct ShiftJson {
    grid: Vec<f64>,
    values: Vec<f64>,
    c: f64,
}

impl<'de> Deserialize<'de> for ShiftFunction {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = ShiftJson::deserialize(deserializer)?;
        ShiftFunction::new(raw.grid, raw.values, raw.c).map_err(serde::de::Error::custom)
    }
}

/// A jump of a shift function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub position: f64,
    pub left: f64,
    pub right: f64,
}

impl ShiftFunction {
    /// Validates breakpoints and clamps values into `[0, pi]`.
    pub fn new(grid: Vec<f64>, values: Vec<f64>, c: f64) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Construction(format!("{} breakpoints but {} values", grid.len(), values.len())));
        }
        if grid.len() < 2 {
            return Err(Error::Construction("a shift function needs at least two breakpoints".into()));
        }
        if !c.is_finite() || grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Construction("non-finite breakpoint, value or constant".into()));
        }
        if grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Construction("breakpoints must be non-decreasing".into()));
        }
        if grid.windows(3).any(|w| w[0] == w[2]) {
            return Err(Error::Construction("a breakpoint may appear at most twice".into()));
        }
        if grid[0] == grid[grid.len() - 1] {
            return Err(Error::Construction("the grid spans no interval".into()));
        }
        if let Some(v) = values.iter().find(|&&v| !(-RANGE_SLACK..=PI + RANGE_SLACK).contains(&v)) {
            return Err(Error::Construction(format!("value {v} lies outside [0, pi]")));
        }
        let values = values.into_iter().map(|v| v.clamp(0.0, PI)).collect();
        Ok(Self { grid, values, c })
    }

    /// Step function equal to `value` on `(a, b)` inside the window `[lo, hi]`.
    pub fn step(lo: f64, a: f64, b: f64, hi: f64, value: f64) -> Result<Self> {
        if !(lo < a && a < b && b < hi) {
            return Err(Error::Argument(format!("need lo < a < b < hi, got {lo}, {a}, {b}, {hi}")));
        }
        Self::new(vec![lo, a, a, b, b, hi], vec![0.0, 0.0, value, value, 0.0, 0.0], 0.0)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn window(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// Segments of positive width as `(t0, t1, v0, v1)`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .filter(|(g, _)| g[1] > g[0])
            .map(|(g, v)| (g[0], g[1], v[0], v[1]))
    }

    /// Left and right limits at `x`.
    pub fn limits(&self, x: f64) -> (f64, f64) {
        let (lo, hi) = self.window();
        if x < lo || x > hi {
            return (0.0, 0.0);
        }
        let first = self.grid.partition_point(|&g| g < x);
        let past = self.grid.partition_point(|&g| g <= x);
        if first < past {
            let left = if first == 0 { 0.0 } else { self.values[first] };
            let right = if past == self.grid.len() { 0.0 } else { self.values[past - 1] };
            return (left, right);
        }
        let (t0, t1) = (self.grid[first - 1], self.grid[first]);
        let (v0, v1) = (self.values[first - 1], self.values[first]);
        let v = v0 + (v1 - v0) * (x - t0) / (t1 - t0);
        (v, v)
    }

    /// Value at `x`; at a jump, the mean of the two limits.
    pub fn eval(&self, x: f64) -> f64 {
        let (l, r) = self.limits(x);
        0.5 * (l + r)
    }

    /// All discontinuities, including the window ends when the function
    /// does not vanish there.
    pub fn jumps(&self) -> Vec<Jump> {
        let n = self.grid.len();
        let mut out = Vec::new();
        if self.grid[0] < self.grid[1] && self.values[0] != 0.0 {
            out.push(Jump { position: self.grid[0], left: 0.0, right: self.values[0] });
        }
        for i in 0..n - 1 {
            if self.grid[i] == self.grid[i + 1] && self.values[i] != self.values[i + 1] {
                out.push(Jump { position: self.grid[i], left: self.values[i], right: self.values[i + 1] });
            }
        }
        if self.grid[n - 2] < self.grid[n - 1] && self.values[n - 1] != 0.0 {
            out.push(Jump { position: self.grid[n - 1], left: self.values[n - 1], right: 0.0 });
        }
        out
    }

    pub fn integral(&self) -> f64 {
        self.segments().map(|(t0, t1, v0, v1)| 0.5 * (t1 - t0) * (v0 + v1)).sum()
    }

    /// `(1/pi) int u(t) t / (t^2 + 1) dt`, the constant with
    /// `K1 u(z) + that -> 0` as `z -> i inf`.
    pub fn k1_tail(&self) -> f64 {
        self.segments().map(|(t0, t1, v0, v1)| kernels::segment_correction(t0, t1, v0, v1)).sum::<f64>() / PI
    }

    /// `K1 u(z)` for `Im z > 0`.
    pub fn k1(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (t0, t1, v0, v1) in self.segments() {
            acc += kernels::segment_cauchy(t0, t1, v0, v1, z) - kernels::segment_correction(t0, t1, v0, v1);
        }
        acc / PI
    }

    /// Boundary behaviour of `K1 u` at real `x`: as `z -> x + i0`,
    /// `K1 u(z) = regular + coeff Log(x - z) + o(1)`. `coeff` is
    /// `(u(x-) - u(x+)) / pi` and vanishes where `u` is continuous.
    pub fn k1_boundary(&self, x: f64) -> (Complex64, f64) {
        let mut regular = Complex64::new(0.0, 0.0);
        let mut coeff = 0.0;
        for (t0, t1, v0, v1) in self.segments() {
            let (r, c) = kernels::segment_boundary(t0, t1, v0, v1, x);
            regular += r - kernels::segment_correction(t0, t1, v0, v1);
            coeff += c;
        }
        (regular / PI, coeff / PI)
    }

    /// `exp(K1 u(z) + c)`, which equals `1 + pi K mu(z)` for the pair
    /// recovered by [`measures_from_shift`].
    pub fn exp_transform(&self, z: Complex64) -> Complex64 {
        (self.k1(z) + self.c).exp()
    }

    /// CSV with header `x,u`; one line per breakpoint.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,u\n");
        for (x, u) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{x},{u}\n"));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// forward direction

#[derive(Debug, Clone)]
pub struct ShiftOptions {
    pub schedule: EpsSchedule,
    /// Convergence tolerance of the boundary extrapolation.
    pub tol: f64,
}

impl Default for ShiftOptions {
    fn default() -> Self {
        Self { schedule: EpsSchedule::default(), tol: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardShift {
    pub shift: ShiftFunction,
    /// `max |u - u'|` with `u' = -arg(1 - pi alpha K mu_alpha(x + i0))`.
    pub consistency_residual: f64,
    pub evaluated_points: usize,
    pub unconverged_points: usize,
    /// Imaginary mismatch of `Log(1 + pi alpha K mu) = K1 u + c` at the
    /// reference point used to fit `c`.
    pub fit_residual: f64,
    pub reference_point: Complex64,
    /// Atoms of `mu`, where `u` jumps up.
    pub up_jumps: Vec<f64>,
    /// Real zeros of `1 + pi alpha K mu`, where `u` jumps down.
    pub down_jumps: Vec<f64>,
}

/// `arg w` for a value whose imaginary part is non-negative up to noise.
fn upper_arg(w: Complex64) -> f64 {
    let im = if w.im > 0.0 { w.im } else { 0.0 };
    im.atan2(w.re)
}

/// Samples the shift function of `fam` on `grid` and inserts the jumps at
/// atoms of `mu` and at atoms of `mu_alpha` off the support of `mu`.
pub fn shift_from_measure(fam: &RankOneFamily, grid: &[f64], opts: &ShiftOptions) -> Result<ForwardShift> {
    let alpha = fam.alpha;
    if !(alpha > 0.0) {
        return Err(Error::Argument(format!("shift functions need alpha > 0, got {alpha}")));
    }
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Argument("grid must be finite and strictly increasing with two or more points".into()));
    }
    let base = &fam.base;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let up: Vec<f64> = base.atoms().iter().map(|a| a.0).collect();
    let down = if base.is_purely_atomic() { rank_one::secular_roots(fam)? } else { rank_one::real_zeros(base, alpha) };
    if let Some((a, b)) = base.support_hull() {
        let outermost = down.iter().copied().fold(b, f64::max);
        if !(lo < a && outermost < hi) {
            return Err(Error::Argument(format!(
                "grid [{lo}, {hi}] must strictly contain the support [{a}, {b}] and the secular roots up to {outermost}"
            )));
        }
    }

    // evaluation points, dropping grid points that sit on a jump
    let near_jump = |x: f64| up.iter().chain(&down).any(|&j| (x - j).abs() <= ATOM_MERGE_TOL);
    let points: Vec<f64> = grid.iter().copied().filter(|&x| !near_jump(x)).collect();
    let samples: Vec<(f64, f64, bool)> = points
        .par_iter()
        .map(|&x| {
            let bv = cauchy::boundary_value(base, x, &opts.schedule, opts.tol);
            let w = 1.0 + PI * alpha * bv.evaluation.value;
            let herglotz_ok = w.im >= -RANGE_SLACK * (1.0 + w.norm());
            let u = upper_arg(w);
            let bv_alpha = cauchy::boundary_value_of(
                |z| rank_one::aronszajn_krein(cauchy::transform_k(base, z), alpha),
                x,
                &opts.schedule,
                opts.tol,
            );
            let w_alpha = 1.0 - PI * alpha * bv_alpha.evaluation.value;
            let u_prime = upper_arg(w_alpha.conj());
            let ok = bv.evaluation.converged && bv_alpha.evaluation.converged && herglotz_ok;
            (u, (u - u_prime).abs(), ok)
        })
        .collect();
    let unconverged = samples.iter().filter(|s| !s.2).count();
    if unconverged as f64 > MAX_UNCONVERGED_SHARE * points.len() as f64 {
        return Err(Error::Accuracy(format!(
            "boundary limits failed to converge at {unconverged} of {} grid points",
            points.len()
        )));
    }
    let consistency_residual = samples.iter().filter(|s| s.2).map(|s| s.1).fold(0.0, f64::max);

    let mut breakpoints: Vec<(f64, u8, f64)> = points.iter().zip(&samples).map(|(&x, s)| (x, 0, s.0)).collect();
    for &x in &up {
        breakpoints.push((x, 0, 0.0));
        breakpoints.push((x, 1, PI));
    }
    for &x in &down {
        breakpoints.push((x, 0, PI));
        breakpoints.push((x, 1, 0.0));
    }
    breakpoints.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let shift = ShiftFunction::new(
        breakpoints.iter().map(|b| b.0).collect(),
        breakpoints.iter().map(|b| b.2).collect(),
        0.0,
    )?;

    // c from Log(1 + pi alpha K mu) = K1 u + c away from the axis
    let reference_point = Complex64::new(0.5 * (lo + hi), (0.5 * (hi - lo)).max(1.0));
    let lhs = (1.0 + PI * alpha * cauchy::transform_k(base, reference_point)).ln();
    let gap = lhs - shift.k1(reference_point);
    Ok(ForwardShift {
        shift: shift.with_c(gap.re),
        consistency_residual,
        evaluated_points: points.len(),
        unconverged_points: unconverged,
        fit_residual: gap.im.abs(),
        reference_point,
        up_jumps: up,
        down_jumps: down,
    })
}

// ---------------------------------------------------------------------------
// inverse direction

/// How the constant `c` is fixed when recovering measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Normalization {
    /// `mu` has an atom of the given mass at `point`, where `u` must jump
    /// from 0 to pi.
    ReferenceMass { point: f64, mass: f64 },
    /// `1 + pi K mu(z) -> 1` as `z -> i inf`, i.e. `mu` and `nu` are finite
    /// with total mass `(1/pi) int u`.
    Fitted,
}

#[derive(Debug, Clone)]
pub struct InverseOptions {
    pub schedule: EpsSchedule,
    /// Threshold for atom detection.
    pub tol: f64,
    /// Density samples per cell of the shift function.
    pub refinement: usize,
    /// Next to a jump the samples are spaced geometrically, each this
    /// fraction of the distance of the previous one.
    pub grading_ratio: f64,
    /// Closest graded sample, relative to the grading reach.
    pub grading_depth: f64,
}

impl Default for InverseOptions {
    fn default() -> Self {
        Self { schedule: EpsSchedule::default(), tol: 1e-12, refinement: 8, grading_ratio: 0.97, grading_depth: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurePair {
    pub mu: Measure,
    pub nu: Measure,
    pub c: f64,
    pub normalization: Normalization,
}

/// Tolerance for calling a jump full (from 0 to pi or back).
const FULL_JUMP_TOL: f64 = 1e-6;

fn is_full_up(j: &Jump) -> bool {
    j.left <= FULL_JUMP_TOL && j.right >= PI - FULL_JUMP_TOL
}

fn is_full_down(j: &Jump) -> bool {
    j.left >= PI - FULL_JUMP_TOL && j.right <= FULL_JUMP_TOL
}

/// Mass from `eps Im g(x + i eps)` along the schedule.
fn atom_mass<G: Fn(Complex64) -> Complex64>(g: G, x: f64, opts: &InverseOptions) -> Option<f64> {
    let products: Vec<f64> =
        opts.schedule.heights().iter().map(|&eps| eps * g(Complex64::new(x, eps)).im).collect();
    cauchy::detect_atom(&products, opts.tol)
}

/// Recovers `(mu, nu)` with `1 + pi K mu = exp(K1 u + c)` and
/// `1 - pi K nu = exp(-K1 u - c)`.
///
/// Densities are `exp(+-(Re K1 u + c)) sin(u) / pi`, sampled on the cells of
/// `u` refined by `opts.refinement`. Atoms sit at the full jumps of `u`
/// (0 to pi for `mu`, pi to 0 for `nu`) and their masses come from atom
/// detection on the boundary of the respective transform.
pub fn measures_from_shift(u: &ShiftFunction, normalization: &Normalization, opts: &InverseOptions) -> Result<MeasurePair> {
    if opts.refinement == 0 {
        return Err(Error::Argument("refinement must be at least 1".into()));
    }
    if !(opts.grading_ratio > 0.0 && opts.grading_ratio < 1.0 && opts.grading_depth > 0.0 && opts.grading_depth < 1.0) {
        return Err(Error::Argument("grading ratio and depth must lie in (0, 1)".into()));
    }
    let jumps = u.jumps();
    let c = match *normalization {
        Normalization::Fitted => u.k1_tail(),
        Normalization::ReferenceMass { point, mass } => {
            if !(mass > 0.0) || !mass.is_finite() {
                return Err(Error::Normalization(format!("reference mass {mass} must be positive")));
            }
            let jump = jumps.iter().find(|j| (j.position - point).abs() <= ATOM_MERGE_TOL && is_full_up(j));
            let Some(jump) = jump else {
                return Err(Error::Normalization(format!("u has no jump from 0 to pi at {point}")));
            };
            let bare = u.clone().with_c(0.0);
            let Some(unit) = atom_mass(|z| bare.exp_transform(z), jump.position, opts) else {
                return Err(Error::Normalization(format!("no stable atom at {point} for any c")));
            };
            (mass / unit).ln()
        }
    };
    let u = u.clone().with_c(c);

    let mut mu_atoms = Vec::new();
    let mut nu_atoms = Vec::new();
    for j in &jumps {
        if is_full_up(j) {
            let m = atom_mass(|z| u.exp_transform(z), j.position, opts)
                .ok_or_else(|| Error::Numeric(format!("atom of mu at {} did not stabilize", j.position)))?;
            mu_atoms.push((j.position, m));
        } else if is_full_down(j) {
            let m = atom_mass(|z| -1.0 / u.exp_transform(z), j.position, opts)
                .ok_or_else(|| Error::Numeric(format!("atom of nu at {} did not stabilize", j.position)))?;
            nu_atoms.push((j.position, m));
        }
    }

    let (mu_pieces, nu_pieces) = density_pieces(&u, &jumps, opts)?;
    Ok(MeasurePair {
        mu: build_measure(mu_atoms, mu_pieces)?,
        nu: build_measure(nu_atoms, nu_pieces)?,
        c,
        normalization: normalization.clone(),
    })
}

/// Densities of `mu` and `nu` at `x`, where `u` is continuous with value
/// `value`.
fn densities_at(u: &ShiftFunction, x: f64, value: f64) -> (f64, f64) {
    let s = value.sin();
    if value <= 1e-12 || value >= PI - 1e-12 || s <= 0.0 {
        return (0.0, 0.0);
    }
    let (k1, _) = u.k1_boundary(x);
    let e = k1.re + u.c;
    (e.exp() * s / PI, (-e).exp() * s / PI)
}

/// Density values at a jump `x0` of `u`, seen from the side `dir` (+1 looks
/// right) where `u` tends to `side_value`. `h` is the distance to the next
/// sample.
///
/// Near the jump the densities behave like `|x - x0|^s` with `s = coeff` for
/// `mu` and `s = -coeff` for `nu`. An integrable singularity gets the
/// endpoint value that gives the first sub-cell the mass of the power law.
fn endpoint_density(u: &ShiftFunction, x0: f64, dir: f64, side_value: f64, h: f64) -> (f64, f64) {
    let at = |d: f64| {
        let x = x0 + dir * d;
        densities_at(u, x, u.eval(x))
    };
    if side_value <= 1e-12 || side_value >= PI - 1e-12 {
        return at(0.5 * h);
    }
    let (_, coeff) = u.k1_boundary(x0);
    let (fm, fn_) = at(h);
    let matched = |fh: f64, s: f64| {
        if s <= -1.0 + 1e-9 {
            fh
        } else if s < 0.0 {
            fh * (1.0 - s) / (1.0 + s)
        } else {
            0.0
        }
    };
    (matched(fm, coeff), matched(fn_, -coeff))
}

type Pieces = (Vec<AcPiece>, Vec<AcPiece>);

fn density_pieces(u: &ShiftFunction, jumps: &[Jump], opts: &InverseOptions) -> Result<Pieces> {
    let is_jump = |x: f64| jumps.iter().any(|j| j.position == x);
    let flat = |v: f64| v <= 1e-12 || v >= PI - 1e-12;
    let segments: Vec<(f64, f64, f64, f64)> = u.segments().collect();

    // runs of consecutive segments not separated by a jump
    let mut runs: Vec<Vec<(f64, f64, f64, f64)>> = Vec::new();
    for seg in segments {
        let active = !(flat(seg.2) && flat(seg.3) && (seg.2 - seg.3).abs() < 1e-12);
        let continues = runs
            .last()
            .and_then(|r| r.last())
            .is_some_and(|last: &(f64, f64, f64, f64)| last.1 == seg.0 && !is_jump(seg.0));
        if !active {
            runs.push(Vec::new());
            continue;
        }
        if continues {
            runs.last_mut().unwrap().push(seg);
        } else {
            runs.push(vec![seg]);
        }
    }

    let refinement = opts.refinement;
    let per_run: Vec<Option<(AcPiece, AcPiece)>> = runs
        .par_iter()
        .filter(|r| !r.is_empty())
        .map(|run| -> Result<Option<(AcPiece, AcPiece)>> {
            let (first, last) = (run[0], run[run.len() - 1]);
            let grade_left = is_jump(first.0);
            let grade_right = is_jump(last.1);
            let (a, b) = (first.0, last.1);
            // grading reach: spacing ratio * reach equals the regular spacing
            let reach = |t0: f64, t1: f64| ((t1 - t0) / refinement as f64 / (1.0 - opts.grading_ratio)).min(0.5 * (b - a));
            let left_reach = if grade_left { reach(first.0, first.1) } else { 0.0 };
            let right_reach = if grade_right { reach(last.0, last.1) } else { 0.0 };
            let mut xs: Vec<f64> = Vec::new();
            for &(t0, t1, _, _) in run {
                let h = (t1 - t0) / refinement as f64;
                for k in 0..refinement {
                    xs.push(t0 + h * k as f64);
                }
            }
            xs.push(b);
            xs.retain(|&x| x == a || x == b || (x - a >= left_reach && b - x >= right_reach));
            for (grade, end, dir, r) in [(grade_left, a, 1.0, left_reach), (grade_right, b, -1.0, right_reach)] {
                if !grade {
                    continue;
                }
                let floor = r * opts.grading_depth;
                let mut d = r;
                while d > floor {
                    xs.push(end + dir * d);
                    d *= opts.grading_ratio;
                }
            }
            xs.sort_by(f64::total_cmp);
            xs.dedup();
            let n = xs.len();
            let mut fm = Vec::with_capacity(n);
            let mut fn_ = Vec::with_capacity(n);
            for (i, &x) in xs.iter().enumerate() {
                let (a, b) = if i == 0 && grade_left {
                    endpoint_density(u, x, 1.0, first.2, xs[1] - x)
                } else if i == n - 1 && grade_right {
                    endpoint_density(u, x, -1.0, last.3, x - xs[n - 2])
                } else {
                    let value = if i == 0 {
                        first.2
                    } else if i == n - 1 {
                        last.3
                    } else {
                        u.eval(x)
                    };
                    densities_at(u, x, value)
                };
                fm.push(a);
                fn_.push(b);
            }
            if fm.iter().all(|&v| v == 0.0) && fn_.iter().all(|&v| v == 0.0) {
                return Ok(None);
            }
            Ok(Some((AcPiece::new(xs.clone(), fm)?, AcPiece::new(xs, fn_)?)))
        })
        .collect::<Result<_>>()?;
    Ok(per_run.into_iter().flatten().unzip())
}

// ---------------------------------------------------------------------------
// surgery

/// Minimum number of breakpoints per component of the surgery region.
pub const SURGERY_POINTS: usize = 32;
const TWO_VALUED_TOL: f64 = 1e-9;

fn two_valued(v: f64) -> bool {
    v.abs() <= TWO_VALUED_TOL || (v - PI).abs() <= TWO_VALUED_TOL
}

/// Replaces `u` on the bounded open set `region` by
/// `|u(x) - min(dist(x, R \ O), pi/2)|`. Breakpoints off `region` keep their
/// values bit for bit.
pub fn dm_surgery(u: &ShiftFunction, region: &RegionSet) -> Result<ShiftFunction> {
    let comps = region.intervals();
    if comps.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::Argument("surgery region must be bounded".into()));
    }
    let mut points: Vec<(f64, f64)> = u
        .grid
        .iter()
        .zip(&u.values)
        .filter(|(x, _)| !region.contains(**x))
        .map(|(&x, &v)| (x, v))
        .collect();
    for &(a, b) in comps {
        // two-valuedness on (a, b), including the inside limits at a and b
        let inner: Vec<f64> = u.grid.iter().copied().filter(|&x| x > a && x < b).collect();
        let mut checks = vec![(a, u.limits(a).1)];
        for &x in &inner {
            let (l, r) = u.limits(x);
            checks.push((x, l));
            checks.push((x, r));
        }
        checks.push((b, u.limits(b).0));
        for w in checks.windows(2) {
            if !two_valued(w[0].1) || (w[1].0 > w[0].0 && (w[1].1 - w[0].1).abs() > TWO_VALUED_TOL) {
                return Err(Error::Precondition(format!("u is not {{0, pi}}-valued on ({a}, {b})")));
            }
        }
        if !two_valued(checks[checks.len() - 1].1) {
            return Err(Error::Precondition(format!("u is not {{0, pi}}-valued on ({a}, {b})")));
        }

        for end in [a, b] {
            if !u.grid.contains(&end) {
                points.push((end, u.eval(end)));
            }
        }
        let mut xs: Vec<f64> =
            (1..SURGERY_POINTS - 1).map(|k| a + (b - a) * k as f64 / (SURGERY_POINTS - 1) as f64).collect();
        xs.push(0.5 * (a + b));
        for kink in [a + FRAC_PI_2, b - FRAC_PI_2] {
            if kink > a && kink < b {
                xs.push(kink);
            }
        }
        xs.extend_from_slice(&inner);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let tent = |x: f64| (x - a).min(b - x).min(FRAC_PI_2);
        for x in xs {
            let (l, r) = u.limits(x);
            if inner.contains(&x) && l != r {
                points.push((x, (l - tent(x)).abs()));
                points.push((x, (r - tent(x)).abs()));
            } else {
                points.push((x, (l - tent(x)).abs()));
            }
        }
    }
    // stable: duplicates keep their left/right order
    points.sort_by(|p, q| p.0.total_cmp(&q.0));
    ShiftFunction::new(points.iter().map(|p| p.0).collect(), points.iter().map(|p| p.1).collect(), u.c)
}

/// `K1 (u - v)` at a real point where `u` and `v` have the same jumps.
pub fn k1_difference(u: &ShiftFunction, v: &ShiftFunction, x: f64) -> Result<f64> {
    let (ru, cu) = u.k1_boundary(x);
    let (rv, cv) = v.k1_boundary(x);
    if (cu - cv).abs() > 1e-12 {
        return Err(Error::Domain(format!("K1 (u - v) diverges at {x}")));
    }
    Ok((ru - rv).re)
}

// ---------------------------------------------------------------------------
// classification

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftClassification {
    pub up_jumps: Vec<f64>,
    pub down_jumps: Vec<f64>,
    pub ac_region: RegionSet,
}

/// Full jumps between consecutive breakpoints (placed where the linear
/// interpolant crosses pi/2) and the union of cells whose mean value lies
/// strictly between `jump_tol` and `pi - jump_tol`.
pub fn classify_shift(u: &ShiftFunction, jump_tol: f64) -> ShiftClassification {
    let (lo, hi) = u.window();
    let mut xs = vec![lo];
    let mut vs = vec![0.0];
    xs.extend_from_slice(&u.grid);
    vs.extend_from_slice(&u.values);
    xs.push(hi);
    vs.push(0.0);
    let mut up_jumps = Vec::new();
    let mut down_jumps = Vec::new();
    let mut cells = Vec::new();
    for i in 0..xs.len() - 1 {
        let (x0, x1, v0, v1) = (xs[i], xs[i + 1], vs[i], vs[i + 1]);
        let crossing = || if x1 == x0 { x0 } else { x0 + (x1 - x0) * (FRAC_PI_2 - v0) / (v1 - v0) };
        if v0 < jump_tol && v1 > PI - jump_tol {
            up_jumps.push(crossing());
        } else if v0 > PI - jump_tol && v1 < jump_tol {
            down_jumps.push(crossing());
        }
        let mean = 0.5 * (v0 + v1);
        if x1 > x0 && mean > jump_tol && mean < PI - jump_tol {
            cells.push((x0, x1));
        }
    }
    ShiftClassification {
        up_jumps,
        down_jumps,
        ac_region: RegionSet::new(cells).expect("finite cells"),
    }
}
