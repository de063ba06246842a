//! Finite measures on the real line: atoms plus piecewise-linear densities.
//!
//! Singular-continuous measures are carried as deep atomic approximants with
//! an [`ScTag`] recording what they stand for.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels;
use crate::region::RegionSet;

/// Atoms closer than this are merged and their masses summed.
pub const ATOM_MERGE_TOL: f64 = 1e-9;

/// Largest supported depth of [`cantor_measure`].
pub const MAX_CANTOR_DEPTH: u32 = 24;

pub const DEFAULT_ESUPP_THETA: f64 = 1e-6;
pub const DEFAULT_ESUPP_CEILING: f64 = 1e6;

/// A non-negative density, linear between consecutive grid points and zero
/// outside `[grid[0], grid[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcPiece {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl AcPiece {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::Construction(format!(
                "density needs at least two grid points and one value per point (got {} and {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::Construction("density grid must be finite and strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Construction(format!("negative or NaN density value {v}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Integrability("density value is not finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Constant density on `[a, b]`.
    pub fn constant(a: f64, b: f64, value: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![value, value])
    }

    pub fn a(&self) -> f64 {
        self.grid[0]
    }

    pub fn b(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear segments `(t0, t1, v0, v1)`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        (0..self.grid.len() - 1).map(move |i| (self.grid[i], self.grid[i + 1], self.values[i], self.values[i + 1]))
    }

    /// Density at `x` (zero outside the piece).
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.a() || x > self.b() {
            return 0.0;
        }
        let i = self.grid.partition_point(|&g| g <= x);
        if i == 0 {
            return self.values[0];
        }
        if i >= self.grid.len() {
            return *self.values.last().unwrap();
        }
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (x - t0) / (t1 - t0)
    }

    pub fn mass(&self) -> f64 {
        self.segments().map(|(t0, t1, v0, v1)| 0.5 * (t1 - t0) * (v0 + v1)).sum()
    }

    /// Mass on `[lo, hi]`, exact for the linear representation.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for (t0, t1, v0, v1) in self.segments() {
            let a = t0.max(lo);
            let b = t1.min(hi);
            if a < b {
                let fa = v0 + (v1 - v0) * (a - t0) / (t1 - t0);
                let fb = v0 + (v1 - v0) * (b - t0) / (t1 - t0);
                total += 0.5 * (b - a) * (fa + fb);
            }
        }
        total
    }

    /// Restriction to the open interval `(lo, hi)`, or `None` if nothing remains.
    fn clip(&self, lo: f64, hi: f64) -> Option<AcPiece> {
        let a = self.a().max(lo);
        let b = self.b().min(hi);
        if !(a < b) {
            return None;
        }
        let mut grid = vec![a];
        grid.extend(self.grid.iter().copied().filter(|&g| g > a && g < b));
        grid.push(b);
        let values = grid.iter().map(|&g| self.eval(g)).collect();
        Some(AcPiece { grid, values })
    }

    fn scaled(&self, factor: f64) -> AcPiece {
        AcPiece { grid: self.grid.clone(), values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// Marks an atomic measure as a stand-in for a singular-continuous one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScTag {
    pub generator: String,
    pub depth: u32,
}

/// A finite positive measure: atoms plus an absolutely continuous part.
///
/// Atoms are sorted and at least [`ATOM_MERGE_TOL`] apart (except for
/// tagged singular-continuous approximants, whose atoms are only required to
/// be distinct). Density pieces are sorted and may touch but not overlap.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure {
    atoms: Vec<(f64, f64)>,
    ac: Vec<AcPiece>,
    sc_tag: Option<ScTag>,
}

/// Normalizes atoms and density pieces into a [`Measure`].
pub fn build_measure(atoms: Vec<(f64, f64)>, ac: Vec<AcPiece>) -> Result<Measure> {
    for &(x, m) in &atoms {
        if !x.is_finite() {
            return Err(Error::Integrability(format!("atom position {x} is not finite")));
        }
        if !(m > 0.0) {
            return Err(Error::Construction(format!("atom mass {m} at {x} is not strictly positive")));
        }
        if !m.is_finite() {
            return Err(Error::Integrability(format!("atom mass at {x} is not finite")));
        }
    }
    let measure = Measure { atoms: merge_atoms(atoms), ac: normalize_pieces(ac), sc_tag: None };
    if !measure.poisson_weight().is_finite() {
        return Err(Error::Integrability("integral of dmu/(t^2+1) is not finite".into()));
    }
    Ok(measure)
}

fn merge_atoms(mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    // Each cluster keeps the position of its leftmost member.
    for (x, m) in atoms {
        match merged.last_mut() {
            Some(last) if x - last.0 <= ATOM_MERGE_TOL => last.1 += m,
            _ => merged.push((x, m)),
        }
    }
    merged
}

/// Sums overlapping pieces. The result is split wherever the summed density
/// is discontinuous, so touching pieces can carry jumps.
fn normalize_pieces(mut pieces: Vec<AcPiece>) -> Vec<AcPiece> {
    pieces.retain(|p| p.values.iter().any(|&v| v > 0.0));
    pieces.sort_by(|p, q| p.a().total_cmp(&q.a()));
    let mut out = Vec::new();
    let mut cluster: Vec<AcPiece> = Vec::new();
    let mut cluster_end = f64::NEG_INFINITY;
    for p in pieces {
        if !cluster.is_empty() && p.a() >= cluster_end {
            flush_cluster(&mut cluster, &mut out);
        }
        cluster_end = if cluster.is_empty() { p.b() } else { cluster_end.max(p.b()) };
        cluster.push(p);
    }
    flush_cluster(&mut cluster, &mut out);
    out
}

fn flush_cluster(cluster: &mut Vec<AcPiece>, out: &mut Vec<AcPiece>) {
    match cluster.len() {
        0 => {}
        1 => out.push(cluster.pop().unwrap()),
        _ => {
            let mut points: Vec<f64> = cluster.iter().flat_map(|p| p.grid.iter().copied()).collect();
            points.sort_by(f64::total_cmp);
            points.dedup();
            // one-sided values on each elementary interval
            let side = |x: f64, lo: f64, hi: f64| -> f64 {
                cluster.iter().filter(|p| p.a() <= lo && p.b() >= hi).map(|p| p.eval(x)).sum()
            };
            let mut grid = vec![points[0]];
            let mut values = vec![side(points[0], points[0], points[1])];
            for w in points.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let left = side(lo, lo, hi);
                let right = side(hi, lo, hi);
                if left != *values.last().unwrap() {
                    // discontinuity at lo: close the current piece, start a new one
                    if grid.len() >= 2 {
                        out.push(AcPiece { grid: std::mem::take(&mut grid), values: std::mem::take(&mut values) });
                    } else {
                        grid.clear();
                        values.clear();
                    }
                    grid.push(lo);
                    values.push(left);
                }
                grid.push(hi);
                values.push(right);
            }
            if grid.len() >= 2 {
                out.push(AcPiece { grid, values });
            }
            out.retain(|p| p.values.iter().any(|&v| v > 0.0));
            cluster.clear();
        }
    }
}

impl Measure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn dirac(x: f64, mass: f64) -> Result<Self> {
        build_measure(vec![(x, mass)], vec![])
    }

    /// Constant density on `[a, b]` with the given total mass.
    pub fn uniform(a: f64, b: f64, mass: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Construction(format!("empty interval [{a}, {b}]")));
        }
        build_measure(vec![], vec![AcPiece::constant(a, b, mass / (b - a))?])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn ac_pieces(&self) -> &[AcPiece] {
        &self.ac
    }

    pub fn sc_tag(&self) -> Option<&ScTag> {
        self.sc_tag.as_ref()
    }

    pub fn with_sc_tag(mut self, tag: Option<ScTag>) -> Self {
        self.sc_tag = tag;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.ac.is_empty()
    }

    pub fn is_purely_atomic(&self) -> bool {
        self.ac.is_empty()
    }

    pub fn atomic_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn ac_mass(&self) -> f64 {
        self.ac.iter().map(AcPiece::mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atomic_mass() + self.ac_mass()
    }

    /// First moment `int t dmu(t)`.
    pub fn first_moment(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|(x, m)| x * m).sum();
        let ac: f64 = self
            .ac
            .iter()
            .flat_map(|p| p.segments())
            .map(|(t0, t1, v0, v1)| (t1 - t0) * (v0 * (2.0 * t0 + t1) + v1 * (t0 + 2.0 * t1)) / 6.0)
            .sum();
        atoms + ac
    }

    /// `int dmu(t) / (t^2 + 1)`.
    pub fn poisson_weight(&self) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|(x, m)| m / (x * x + 1.0)).sum();
        let ac: f64 = self
            .ac
            .iter()
            .flat_map(|p| p.segments())
            .map(|(t0, t1, v0, v1)| kernels::segment_poisson_weight(t0, t1, v0, v1))
            .sum();
        atoms + ac
    }

    /// Density of the absolutely continuous part at `x` (pieces may touch;
    /// at a shared endpoint the larger one-sided value is returned).
    pub fn density(&self, x: f64) -> f64 {
        self.ac.iter().map(|p| p.eval(x)).fold(0.0, f64::max)
    }

    /// Mass of the closed interval `[lo, hi]`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.atom_mass_in(lo, hi) + self.ac_mass_in(lo, hi)
    }

    pub fn atom_mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.atoms.iter().filter(|(x, _)| *x >= lo && *x <= hi).map(|a| a.1).sum()
    }

    pub fn ac_mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.ac.iter().map(|p| p.mass_in(lo, hi)).sum()
    }

    /// Smallest closed interval containing the support, if any.
    pub fn support_hull(&self) -> Option<(f64, f64)> {
        let lo = self.atoms.iter().map(|a| a.0).chain(self.ac.iter().map(AcPiece::a)).fold(f64::INFINITY, f64::min);
        let hi = self.atoms.iter().map(|a| a.0).chain(self.ac.iter().map(AcPiece::b)).fold(f64::NEG_INFINITY, f64::max);
        (lo <= hi).then_some((lo, hi))
    }

    pub fn scale(&self, factor: f64) -> Result<Measure> {
        if !(factor >= 0.0) || !factor.is_finite() {
            return Err(Error::Argument(format!("scale factor {factor} must be finite and non-negative")));
        }
        if factor == 0.0 {
            return Ok(Measure::zero());
        }
        Ok(Measure {
            atoms: self.atoms.iter().map(|&(x, m)| (x, m * factor)).collect(),
            ac: self.ac.iter().map(|p| p.scaled(factor)).collect(),
            sc_tag: self.sc_tag.clone(),
        })
    }

    /// Sum of two measures, renormalized (atoms merged, densities summed).
    pub fn add(&self, other: &Measure) -> Result<Measure> {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        let mut ac = self.ac.clone();
        ac.extend(other.ac.iter().cloned());
        build_measure(atoms, ac)
    }
}

/// Cantor-type approximant: `2^depth` atoms of mass `2^-depth` at the
/// midpoints of the level-`depth` middle-thirds intervals of `[0, 1]`.
///
/// The atoms are exactly distinct but closer than [`ATOM_MERGE_TOL`] from
/// depth 20 on, so the merge rule is not applied.
pub fn cantor_measure(depth: u32) -> Result<Measure> {
    if depth > MAX_CANTOR_DEPTH {
        return Err(Error::Resource(format!("cantor depth {depth} exceeds {MAX_CANTOR_DEPTH}")));
    }
    let count = 1usize << depth;
    let mass = (0.5f64).powi(depth as i32);
    let width = (1.0 / 3.0f64).powi(depth as i32);
    let steps: Vec<f64> = (1..=depth).map(|k| 2.0 * (1.0 / 3.0f64).powi(k as i32)).collect();
    let atoms = (0..count)
        .map(|index| {
            let left: f64 = (0..depth as usize)
                .filter(|&k| index >> (depth as usize - 1 - k) & 1 == 1)
                .map(|k| steps[k])
                .sum();
            (left + 0.5 * width, mass)
        })
        .collect();
    Ok(Measure { atoms, ac: vec![], sc_tag: Some(ScTag { generator: "middle-thirds cantor".into(), depth }) })
}

/// The first `count` rationals of `[0, 3]`, ordered by denominator and then
/// numerator, each listed once.
pub fn enumerate_rationals_0_3(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut q = 1u64;
    while out.len() < count {
        for p in 0..=3 * q {
            if gcd(p, q) == 1 {
                out.push(p as f64 / q as f64);
                if out.len() == count {
                    break;
                }
            }
        }
        q += 1;
    }
    out
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Lebesgue measure on the union of intervals of width `2^-n` centered at
/// the `n`-th rational of `[0, 3]`, for `n = 1..=truncation`.
pub fn rational_intervals_measure(truncation: usize) -> Result<Measure> {
    let centers = enumerate_rationals_0_3(truncation);
    let intervals: Vec<(f64, f64)> = centers
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let half = 0.5 * (0.5f64).powi(i as i32 + 1);
            (c - half, c + half)
        })
        .collect();
    let union = RegionSet::new(intervals)?;
    let pieces = union.intervals().iter().map(|&(a, b)| AcPiece::constant(a, b, 1.0)).collect::<Result<Vec<_>>>()?;
    build_measure(vec![], pieces)
}

/// Restriction to an open set. Atoms on the boundary of `region` are dropped;
/// density pieces are clipped.
pub fn restrict(measure: &Measure, region: &RegionSet) -> Measure {
    let atoms = measure.atoms.iter().copied().filter(|&(x, _)| region.contains(x)).collect();
    let ac = measure
        .ac
        .iter()
        .flat_map(|p| region.intervals().iter().filter_map(move |&(lo, hi)| p.clip(lo, hi)))
        .collect();
    Measure { atoms, ac: normalize_pieces(ac), sc_tag: measure.sc_tag.clone() }
}

/// Grid estimate of the essential support of the absolutely continuous part.
///
/// The window is cut into cells of width `resolution` aligned to integer
/// multiples of it. Halving the symmetric window around a cell centre ends at
/// the cell itself, and the average there stands in for the upper limit. A
/// cell is kept when that average of the density lies strictly between
/// `theta` and `ceiling` and no atom sits in the cell (an atom in the finest
/// window makes the averages diverge under further halving).
pub fn essential_support_ac(
    measure: &Measure,
    window: &RegionSet,
    resolution: f64,
    theta: f64,
    ceiling: f64,
) -> Result<RegionSet> {
    if !(resolution > 0.0) {
        return Err(Error::Argument(format!("resolution {resolution} must be positive")));
    }
    if !(theta < ceiling) {
        return Err(Error::Argument(format!("theta {theta} must be below the ceiling {ceiling}")));
    }
    if window.is_empty() {
        return Err(Error::Argument("empty window".into()));
    }
    if window.intervals().iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::Argument("window must be bounded".into()));
    }
    let half = 0.5 * resolution;
    let mut cells = Vec::new();
    for &(lo, hi) in window.intervals() {
        let first = (lo / resolution).floor() as i64;
        let last = (hi / resolution).ceil() as i64;
        for k in first..last {
            let centre = (k as f64 + 0.5) * resolution;
            if !window.contains(centre) {
                continue;
            }
            let finest = finest_average(measure, centre, half);
            if finest.atom_in_window {
                continue;
            }
            if finest.ac_average > theta && finest.ac_average < ceiling {
                cells.push((k as f64 * resolution, (k + 1) as f64 * resolution));
            }
        }
    }
    RegionSet::new(cells)
}

struct WindowAverage {
    ac_average: f64,
    atom_in_window: bool,
}

fn finest_average(measure: &Measure, centre: f64, half_width: f64) -> WindowAverage {
    let (lo, hi) = (centre - half_width, centre + half_width);
    WindowAverage {
        ac_average: measure.ac_mass_in(lo, hi) / (2.0 * half_width),
        atom_in_window: measure.atom_mass_in(lo, hi) > 0.0,
    }
}

/// Outcome of [`compare_measures`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Classification {
    MutuallySingular,
    /// Mutually absolutely continuous, with `lower <= dnu/dmu <= upper`.
    /// `upper` is infinite (or `lower` zero) when the derivative is unbounded.
    Equivalent { lower: f64, upper: f64 },
    /// Exactly one direction of absolute continuity holds.
    OneSided { second_ac_wrt_first: bool },
    Neither,
}

impl Classification {
    /// The classification obtained when the two measures are swapped.
    pub fn swapped(&self) -> Classification {
        match *self {
            Classification::Equivalent { lower, upper } => Classification::Equivalent { lower: 1.0 / upper, upper: 1.0 / lower },
            Classification::OneSided { second_ac_wrt_first } => {
                Classification::OneSided { second_ac_wrt_first: !second_ac_wrt_first }
            }
            ref other => other.clone(),
        }
    }
}

/// Classifies `mu` and `nu` restricted to `region`.
///
/// Atoms are paired when within `tol`; density mass below `tol` is ignored.
/// Comparing a tagged singular-continuous approximant against an untagged
/// measure is rejected: matching approximant atoms has no meaning.
pub fn compare_measures(mu: &Measure, nu: &Measure, region: &RegionSet, tol: f64) -> Result<Classification> {
    let mu = restrict(mu, region);
    let nu = restrict(nu, region);
    if !mu.is_zero() && !nu.is_zero() && mu.sc_tag.is_some() != nu.sc_tag.is_some() {
        return Err(Error::Representation(
            "singular-continuous approximant compared against an ordinary measure".into(),
        ));
    }

    let mut lower = f64::INFINITY;
    let mut upper = 0.0f64;
    let mut matched_atoms = 0usize;
    let mut mu_only = 0.0f64;
    let mut nu_only = 0.0f64;

    // atoms: two-pointer pairing
    let (a, b) = (&mu.atoms, &nu.atoms);
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if i < a.len() && j < b.len() && (a[i].0 - b[j].0).abs() <= tol {
            let ratio = b[j].1 / a[i].1;
            lower = lower.min(ratio);
            upper = upper.max(ratio);
            matched_atoms += 1;
            i += 1;
            j += 1;
        } else if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            mu_only += a[i].1;
            i += 1;
        } else {
            nu_only += b[j].1;
            j += 1;
        }
    }
    // an unmatched atom is never absolutely continuous w.r.t. the other side
    let mut mu_ac_nu = mu_only == 0.0;
    let mut nu_ac_mu = nu_only == 0.0;

    // densities on the merged grid
    let mut points: Vec<f64> = mu.ac.iter().chain(nu.ac.iter()).flat_map(|p| p.grid.iter().copied()).collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut overlap = 0.0;
    let mut mu_only_ac = 0.0;
    let mut nu_only_ac = 0.0;
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let f = one_sided(&mu, lo, hi);
        let g = one_sided(&nu, lo, hi);
        let width = hi - lo;
        let f_zero = f.0 == 0.0 && f.1 == 0.0;
        let g_zero = g.0 == 0.0 && g.1 == 0.0;
        match (f_zero, g_zero) {
            (true, true) => continue,
            (false, true) => mu_only_ac += 0.5 * width * (f.0 + f.1),
            (true, false) => nu_only_ac += 0.5 * width * (g.0 + g.1),
            (false, false) => {
                overlap += min_of_linear_integral(width, f, g);
                for (fv, gv) in [(f.0, g.0), (f.1, g.1)] {
                    let ratio = match (fv > 0.0, gv > 0.0) {
                        (true, _) => gv / fv,
                        (false, true) => f64::INFINITY,
                        // common zero: limit is the ratio of slopes
                        (false, false) => (g.1 - g.0) / (f.1 - f.0),
                    };
                    if ratio.is_finite() || ratio == f64::INFINITY {
                        lower = lower.min(ratio);
                        upper = upper.max(ratio);
                    }
                }
            }
        }
    }
    if mu_only_ac > tol {
        mu_ac_nu = false;
    }
    if nu_only_ac > tol {
        nu_ac_mu = false;
    }

    if matched_atoms == 0 && overlap < tol {
        return Ok(Classification::MutuallySingular);
    }
    Ok(match (mu_ac_nu, nu_ac_mu) {
        (true, true) => Classification::Equivalent { lower, upper },
        (false, true) => Classification::OneSided { second_ac_wrt_first: true },
        (true, false) => Classification::OneSided { second_ac_wrt_first: false },
        (false, false) => Classification::Neither,
    })
}

/// Density limits from inside `[lo, hi]` at both ends.
fn one_sided(measure: &Measure, lo: f64, hi: f64) -> (f64, f64) {
    measure
        .ac
        .iter()
        .filter(|p| p.a() <= lo && p.b() >= hi)
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.eval_inside(lo, lo, hi), acc.1 + p.eval_inside(hi, lo, hi)))
}

impl AcPiece {
    /// Value at `x` using the segment that contains `[lo, hi]`.
    fn eval_inside(&self, x: f64, lo: f64, hi: f64) -> f64 {
        let mid = 0.5 * (lo + hi);
        let i = self.grid.partition_point(|&g| g <= mid).clamp(1, self.grid.len() - 1);
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (x - t0) / (t1 - t0)
    }
}

/// Integral over an interval of width `w` of `min(f, g)` for linear `f`, `g`
/// given by their endpoint values.
fn min_of_linear_integral(w: f64, f: (f64, f64), g: (f64, f64)) -> f64 {
    let d0 = f.0 - g.0;
    let d1 = f.1 - g.1;
    if d0 * d1 >= 0.0 {
        let lower = if d0 + d1 <= 0.0 { f } else { g };
        return 0.5 * w * (lower.0 + lower.1);
    }
    let s = d0 / (d0 - d1);
    let cross = f.0 + (f.1 - f.0) * s;
    let (first, second) = if d0 < 0.0 { (f.0, g.1) } else { (g.0, f.1) };
    0.5 * w * s * (first + cross) + 0.5 * w * (1.0 - s) * (cross + second)
}

// ---------------------------------------------------------------------------
// JSON representation

#[derive(Serialize, Deserialize)]
struct AcJson {
    a: f64,
    b: f64,
    grid: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<[f64; 2]>,
    ac: Vec<AcJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sc_tag: Option<ScTag>,
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureJson {
            atoms: self.atoms.iter().map(|&(x, m)| [x, m]).collect(),
            ac: self
                .ac
                .iter()
                .map(|p| AcJson { a: p.a(), b: p.b(), grid: p.grid.clone(), values: p.values.clone() })
                .collect(),
            sc_tag: self.sc_tag.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = MeasureJson::deserialize(deserializer)?;
        let pieces = raw
            .ac
            .into_iter()
            .map(|p| {
                if p.grid.first() != Some(&p.a) || p.grid.last() != Some(&p.b) {
                    return Err(Error::Construction(format!("density grid must span [{}, {}]", p.a, p.b)));
                }
                AcPiece::new(p.grid, p.values)
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let atoms: Vec<(f64, f64)> = raw.atoms.into_iter().map(|[x, m]| (x, m)).collect();
        match raw.sc_tag {
            None => build_measure(atoms, pieces).map_err(D::Error::custom),
            Some(tag) => {
                // approximant atoms are kept as given; only check validity
                if atoms.iter().any(|&(x, m)| !x.is_finite() || !(m > 0.0) || !m.is_finite())
                    || atoms.windows(2).any(|w| !(w[0].0 < w[1].0))
                {
                    return Err(D::Error::custom("approximant atoms must be sorted, distinct and positive"));
                }
                let base = build_measure(vec![], pieces).map_err(D::Error::custom)?;
                Ok(Measure { atoms, ac: base.ac, sc_tag: Some(tag) })
            }
        }
    }
}
