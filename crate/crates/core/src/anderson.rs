//! Finite-volume random Schrödinger operators
//! `H_omega = H_0 + sum_x omega_x (., delta_x) delta_x` on a box in `Z` or
//! `Z^2`, with `H_0 f(x) = -sum_{|n| = 1} (f(x + n) - f(x))`.
//!
//! Disorder is drawn from the counter-based generator in [`crate::rng`], so
//! every realization is a pure function of `(master_seed, index, site)` and
//! Monte Carlo reports do not depend on thread scheduling.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg;
use crate::region::RegionSet;
use crate::rng;

/// Largest box volume accepted by a model.
pub const MAX_SITES: usize = 40_000;
/// Volumes up to this size are diagonalized densely.
pub const DENSE_LIMIT: usize = 2000;
/// Dense fallback limit for boxes that are not tridiagonal.
pub const DENSE_MAX: usize = 4096;
pub const DEFAULT_THETA: f64 = 1e-2;
/// Share of samples in which a cell must hold eigenvalues.
pub const OCCUPANCY: f64 = 0.9;
/// Empty cells separating an isolated cluster from the rest.
pub const ISOLATION_GAP: usize = 3;
/// Largest eigenvalue count per sample of an isolated cluster.
pub const ISOLATED_MAX_COUNT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// Single-site distribution of the i.i.d. disorder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionJson", into = "DistributionJson")]
pub enum Distribution {
    Uniform { a: f64, b: f64 },
    /// `b` with probability `p`, otherwise `a`.
    Bernoulli { a: f64, b: f64, p: f64 },
    Constant { c: f64 },
}

#[derive(Serialize, Deserialize)]
struct DistributionJson {
    kind: String,
    params: Vec<f64>,
}

impl TryFrom<DistributionJson> for Distribution {
    type Error = Error;

    fn try_from(raw: DistributionJson) -> Result<Self> {
        let p = &raw.params;
        let want = |n: usize| -> Result<()> {
            if p.len() != n {
                return Err(Error::Construction(format!("{} takes {n} parameters, got {}", raw.kind, p.len())));
            }
            Ok(())
        };
        let d = match raw.kind.as_str() {
            "uniform" => {
                want(2)?;
                Distribution::Uniform { a: p[0], b: p[1] }
            }
            "bernoulli" => {
                want(3)?;
                Distribution::Bernoulli { a: p[0], b: p[1], p: p[2] }
            }
            "constant" => {
                want(1)?;
                Distribution::Constant { c: p[0] }
            }
            other => return Err(Error::Construction(format!("unknown distribution kind {other:?}"))),
        };
        d.validate()?;
        Ok(d)
    }
}

impl From<Distribution> for DistributionJson {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Uniform { a, b } => Self { kind: "uniform".into(), params: vec![a, b] },
            Distribution::Bernoulli { a, b, p } => Self { kind: "bernoulli".into(), params: vec![a, b, p] },
            Distribution::Constant { c } => Self { kind: "constant".into(), params: vec![c] },
        }
    }
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Distribution::Uniform { a, b } => a.is_finite() && b.is_finite() && a <= b,
            Distribution::Bernoulli { a, b, p } => a.is_finite() && b.is_finite() && (0.0..=1.0).contains(&p),
            Distribution::Constant { c } => c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Construction(format!("invalid distribution parameters {self:?}")))
        }
    }

    /// Inverse CDF applied to a uniform variate in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => a + (b - a) * u,
            Distribution::Bernoulli { a, b, p } => {
                if u < p {
                    b
                } else {
                    a
                }
            }
            Distribution::Constant { c } => c,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => 0.5 * (a + b),
            Distribution::Bernoulli { a, b, p } => a + p * (b - a),
            Distribution::Constant { c } => c,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::Uniform { a, b } => (b - a).powi(2) / 12.0,
            Distribution::Bernoulli { a, b, p } => p * (1.0 - p) * (b - a).powi(2),
            Distribution::Constant { .. } => 0.0,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(*self, Distribution::Uniform { a, b } if b > a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct AndersonModel {
    pub dim: usize,
    pub side: usize,
    pub boundary: Boundary,
    pub distribution: Distribution,
    pub master_seed: u64,
    /// Reference sites, one coordinate per dimension.
    pub sites: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    dim: usize,
    #[serde(rename = "L")]
    side: usize,
    boundary: Boundary,
    distribution: Distribution,
    master_seed: u64,
    #[serde(default)]
    sites: Vec<Vec<usize>>,
}

impl TryFrom<ModelJson> for AndersonModel {
    type Error = Error;

    fn try_from(raw: ModelJson) -> Result<Self> {
        AndersonModel::new(raw.dim, raw.side, raw.boundary, raw.distribution, raw.master_seed, raw.sites)
    }
}

impl From<AndersonModel> for ModelJson {
    fn from(m: AndersonModel) -> Self {
        Self {
            dim: m.dim,
            side: m.side,
            boundary: m.boundary,
            distribution: m.distribution,
            master_seed: m.master_seed,
            sites: m.sites,
        }
    }
}

impl AndersonModel {
    pub fn new(
        dim: usize,
        side: usize,
        boundary: Boundary,
        distribution: Distribution,
        master_seed: u64,
        sites: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Construction(format!("dimension {dim} is not 1 or 2")));
        }
        if side == 0 {
            return Err(Error::Construction("side length must be positive".into()));
        }
        let volume = side.checked_pow(dim as u32).unwrap_or(usize::MAX);
        if volume > MAX_SITES {
            return Err(Error::Construction(format!("{volume} sites exceed the limit of {MAX_SITES}")));
        }
        distribution.validate()?;
        let model = Self { dim, side, boundary, distribution, master_seed, sites };
        for site in &model.sites {
            model.site_index(site)?;
        }
        Ok(model)
    }

    pub fn volume(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Linear index `x + L y` of a site.
    pub fn site_index(&self, site: &[usize]) -> Result<usize> {
        if site.len() != self.dim || site.iter().any(|&c| c >= self.side) {
            return Err(Error::Argument(format!("site {site:?} is outside the {}-dimensional box of side {}", self.dim, self.side)));
        }
        Ok(site.iter().rev().fold(0, |acc, &c| acc * self.side + c))
    }

    /// The reference sites, or the centre of the box when none are given.
    pub fn reference_sites(&self) -> Vec<Vec<usize>> {
        if self.sites.is_empty() {
            vec![vec![self.side / 2; self.dim]]
        } else {
            self.sites.clone()
        }
    }

    fn is_tridiagonal(&self) -> bool {
        self.dim == 1 && (self.boundary == Boundary::Dirichlet || self.side <= 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaRealization {
    pub index: u64,
    pub values: Vec<f64>,
}

/// Disorder of sample `index`: site `x` gets `quantile(uniform(seed, index, x))`.
pub fn sample_omega(model: &AndersonModel, index: u64) -> OmegaRealization {
    let values = (0..model.volume())
        .map(|site| model.distribution.quantile(rng::uniform(model.master_seed, index, site as u64)))
        .collect();
    OmegaRealization { index, values }
}

/// Sparse symmetric matrix: diagonal plus off-diagonal entries `(i, j, v)`
/// with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<(usize, usize, f64)>,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, &d) in self.diagonal.iter().enumerate() {
            m[(i, i)] = d;
        }
        for &(i, j, v) in &self.off_diagonal {
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        m
    }

    /// `(d, e)` if the matrix is tridiagonal in site order.
    pub fn tridiagonal(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.dim();
        let mut e = vec![0.0; n.saturating_sub(1)];
        let mut d = self.diagonal.clone();
        for &(i, j, v) in &self.off_diagonal {
            if i == j {
                d[i] += 2.0 * v;
            } else if j == i + 1 {
                e[i] += v;
            } else {
                return None;
            }
        }
        Some((d, e))
    }
}

/// `2 dim + omega_x` on the diagonal and `-1` per nearest-neighbour bond;
/// periodic boxes wrap around (bonds that meet the same pair twice add up).
pub fn build_hamiltonian(model: &AndersonModel, omega: &OmegaRealization) -> Result<Hamiltonian> {
    let n = model.volume();
    if omega.values.len() != n {
        return Err(Error::Argument(format!("realization has {} values for {n} sites", omega.values.len())));
    }
    let diagonal: Vec<f64> = omega.values.iter().map(|w| 2.0 * model.dim as f64 + w).collect();
    let l = model.side;
    let mut bonds: std::collections::BTreeMap<(usize, usize), f64> = std::collections::BTreeMap::new();
    for site in 0..n {
        let coords: Vec<usize> = (0..model.dim).map(|k| (site / l.pow(k as u32)) % l).collect();
        for axis in 0..model.dim {
            let next = coords[axis] + 1;
            let neighbour_coord = if next < l {
                next
            } else if model.boundary == Boundary::Periodic {
                0
            } else {
                continue;
            };
            let mut nb = coords.clone();
            nb[axis] = neighbour_coord;
            let other = nb.iter().rev().fold(0, |acc, &c| acc * l + c);
            let key = (site.min(other), site.max(other));
            *bonds.entry(key).or_insert(0.0) -= 1.0;
        }
    }
    let mut diagonal = diagonal;
    let mut off_diagonal = Vec::with_capacity(bonds.len());
    for ((i, j), v) in bonds {
        if i == j {
            // a bond to itself (L = 1, periodic) enters the quadratic form twice
            diagonal[i] += 2.0 * v;
        } else {
            off_diagonal.push((i, j, v));
        }
    }
    Ok(Hamiltonian { diagonal, off_diagonal })
}

/// Spectral data of one realization: all eigenvalues and the spectral
/// weights `|psi_k(x)|^2` at each requested site.
#[derive(Debug, Clone, PartialEq)]
struct Spectrum {
    values: Vec<f64>,
    weights: Vec<Vec<f64>>,
}

fn diagonalize(model: &AndersonModel, h: &Hamiltonian, sites: &[usize]) -> Result<Spectrum> {
    let n = h.dim();
    if n <= DENSE_LIMIT || (!model.is_tridiagonal() && n <= DENSE_MAX) {
        if sites.is_empty() {
            return Ok(Spectrum { values: linalg::dense_eigenvalues(h.to_dense()), weights: vec![] });
        }
        let eigen = linalg::dense_eigen(h.to_dense())?;
        let weights = sites.iter().map(|&s| eigen.vectors.iter().map(|v| v[s] * v[s]).collect()).collect();
        return Ok(Spectrum { values: eigen.values, weights });
    }
    let Some((d, e)) = h.tridiagonal() else {
        return Err(Error::Resource(format!("{n} sites exceed the dense limit of {DENSE_MAX} for a non-tridiagonal box")));
    };
    Ok(tridiagonal_spectrum(&d, &e, sites))
}

fn tridiagonal_spectrum(d: &[f64], e: &[f64], sites: &[usize]) -> Spectrum {
    let values = linalg::tridiagonal_eigenvalues(d, e);
    let weights = if sites.is_empty() {
        vec![]
    } else {
        let vectors: Vec<Vec<f64>> = values.par_iter().map(|&l| linalg::tridiagonal_eigenvector(d, e, l)).collect();
        sites.iter().map(|&s| vectors.iter().map(|v| v[s] * v[s]).collect()).collect()
    };
    Spectrum { values, weights }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub omega_index: u64,
    pub site: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SpectralSample {
    /// CSV rows `index,eigenvalue,weight` without header.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for (l, w) in self.eigenvalues.iter().zip(&self.weights) {
            out.push_str(&format!("{},{l},{w}\n", self.omega_index));
        }
        out
    }
}

pub const SAMPLE_CSV_HEADER: &str = "index,eigenvalue,weight\n";

/// Spectral measure of `H_omega` with respect to `delta_site`.
pub fn spectral_measure_at_site(model: &AndersonModel, omega: &OmegaRealization, site: &[usize]) -> Result<SpectralSample> {
    let idx = model.site_index(site)?;
    let h = build_hamiltonian(model, omega)?;
    let spectrum = diagonalize(model, &h, &[idx])?;
    Ok(SpectralSample {
        omega_index: omega.index,
        site: site.to_vec(),
        eigenvalues: spectrum.values,
        weights: spectrum.weights.into_iter().next().unwrap_or_default(),
    })
}

/// Replacement of the disorder value at one site, applied to every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteEdit {
    pub site: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub n_samples: usize,
    pub resolution: f64,
    /// Poisson smoothing width; defaults to `4 (spectral width) / L^dim`.
    pub eps_smooth: Option<f64>,
    pub theta: f64,
    #[serde(default)]
    pub edits: Vec<SiteEdit>,
}

impl EstimateOptions {
    pub fn new(n_samples: usize, resolution: f64) -> Self {
        Self { n_samples, resolution, eps_smooth: None, theta: DEFAULT_THETA, edits: vec![] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchVariation {
    pub sigma_ess: f64,
    pub ac_support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicSets {
    pub n_samples: usize,
    pub resolution: f64,
    pub eps_smooth: f64,
    pub theta: f64,
    pub reference_sites: Vec<Vec<usize>>,
    pub sigma_ess_estimate: RegionSet,
    pub ac_support_estimate: RegionSet,
    /// Estimates from the first and the second half of the samples.
    pub sigma_ess_halves: [RegionSet; 2],
    pub ac_support_halves: [RegionSet; 2],
    pub batch_variation: BatchVariation,
    pub isolated_cells_removed: usize,
    pub eigenvalue_range: (f64, f64),
    /// Largest `|sum of weights - 1|` over samples and reference sites.
    pub max_weight_defect: f64,
    /// `(cell start, eigenvalues per unit length per site)` averaged over samples.
    pub density_of_states: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

fn realization(model: &AndersonModel, index: u64, edits: &[(usize, f64)]) -> OmegaRealization {
    let mut omega = sample_omega(model, index);
    for &(site, value) in edits {
        omega.values[site] = value;
    }
    omega
}

/// Monte Carlo estimates of the deterministic spectral sets.
///
/// * `sigma_ess_estimate`: cells of width `resolution` (aligned to its
///   multiples) holding eigenvalues in at least 90% of the samples, minus
///   isolated clusters (three or more empty cells away from everything else,
///   at most three eigenvalues per sample), unless every cluster is isolated.
/// * `ac_support_estimate`: cells of `sigma_ess_estimate` whose centre sees a
///   Poisson-smoothed density `sum_k w_k P_eps(x - lambda_k)` above `theta`
///   in both halves of the samples, averaged over samples and reference sites.
pub fn estimate_deterministic_sets(model: &AndersonModel, opts: &EstimateOptions) -> Result<DeterministicSets> {
    estimate_with_samples(model, opts).map(|(sets, _)| sets)
}

/// [`estimate_deterministic_sets`] together with the spectral samples of the
/// first reference site, in sample order.
pub fn estimate_with_samples(model: &AndersonModel, opts: &EstimateOptions) -> Result<(DeterministicSets, Vec<SpectralSample>)> {
    if opts.n_samples < 2 {
        return Err(Error::Argument(format!("need at least two samples, got {}", opts.n_samples)));
    }
    if !(opts.resolution > 0.0) || !opts.resolution.is_finite() {
        return Err(Error::Argument(format!("resolution {} must be positive", opts.resolution)));
    }
    if let Some(eps) = opts.eps_smooth {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Argument(format!("smoothing width {eps} must be positive")));
        }
    }
    let edits: Vec<(usize, f64)> = opts
        .edits
        .iter()
        .map(|e| Ok((model.site_index(&e.site)?, e.value)))
        .collect::<Result<_>>()?;
    let sites = model.reference_sites();
    let site_idx: Vec<usize> = sites.iter().map(|s| model.site_index(s)).collect::<Result<_>>()?;

    let spectra: Vec<Spectrum> = (0..opts.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let omega = realization(model, i, &edits);
            let h = build_hamiltonian(model, &omega)?;
            diagonalize(model, &h, &site_idx)
        })
        .collect::<Result<_>>()?;

    let lo = spectra.iter().map(|s| s.values[0]).fold(f64::INFINITY, f64::min);
    let hi = spectra.iter().map(|s| s.values[s.values.len() - 1]).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(opts.resolution);
    let eps = opts.eps_smooth.unwrap_or(4.0 * width / model.volume() as f64);
    let max_weight_defect = spectra
        .iter()
        .flat_map(|s| s.weights.iter().map(|w| (w.iter().sum::<f64>() - 1.0).abs()))
        .fold(0.0, f64::max);

    let r = opts.resolution;
    let first_cell = (lo / r).floor() as i64;
    let last_cell = (hi / r).floor() as i64;
    let cells = CellGrid { first: first_cell, count: (last_cell - first_cell + 1) as usize, r };

    let half = opts.n_samples / 2;
    let batches: [&[Spectrum]; 2] = [&spectra[..half], &spectra[half..]];
    let densities: Vec<Vec<f64>> = batches.iter().map(|b| smoothed_density(b, &cells, eps)).collect();

    let (sigma, removed) = sigma_estimate(&spectra, &cells);
    let ac = ac_estimate(&[&densities[0], &densities[1]], &cells, opts.theta).intersection(&sigma);

    let mut sigma_halves = Vec::new();
    let mut ac_halves = Vec::new();
    for (b, d) in batches.iter().zip(&densities) {
        let (s, _) = sigma_estimate(b, &cells);
        ac_halves.push(ac_estimate(&[d], &cells, opts.theta).intersection(&s));
        sigma_halves.push(s);
    }
    let batch_variation = BatchVariation {
        sigma_ess: sigma_halves[0].hausdorff(&sigma_halves[1]),
        ac_support: ac_halves[0].hausdorff(&ac_halves[1]),
    };

    let n = model.volume() as f64;
    let mut counts = vec![0usize; cells.count];
    for s in &spectra {
        for &l in &s.values {
            counts[cells.index(l)] += 1;
        }
    }
    let density_of_states = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| (cells.start(k), c as f64 / (opts.n_samples as f64 * n * r)))
        .collect();

    let samples = spectra
        .iter()
        .enumerate()
        .map(|(i, s)| SpectralSample {
            omega_index: i as u64,
            site: sites[0].clone(),
            eigenvalues: s.values.clone(),
            weights: s.weights[0].clone(),
        })
        .collect();
    let sets = DeterministicSets {
        n_samples: opts.n_samples,
        resolution: r,
        eps_smooth: eps,
        theta: opts.theta,
        reference_sites: sites,
        sigma_ess_estimate: sigma,
        ac_support_estimate: ac,
        sigma_ess_halves: [sigma_halves[0].clone(), sigma_halves[1].clone()],
        ac_support_halves: [ac_halves[0].clone(), ac_halves[1].clone()],
        batch_variation,
        isolated_cells_removed: removed,
        eigenvalue_range: (lo, hi),
        max_weight_defect,
        density_of_states,
        notes: vec![
            "finite boxes have pure point spectrum; the ac estimate is a smoothed-density proxy".into(),
            "cyclicity of the essential part is not checked at finite volume".into(),
        ],
    };
    Ok((sets, samples))
}

/// Cells `[k r, (k + 1) r)` for `k` in `first..first + count`.
struct CellGrid {
    first: i64,
    count: usize,
    r: f64,
}

impl CellGrid {
    fn index(&self, x: f64) -> usize {
        (((x / self.r).floor() as i64 - self.first).max(0) as usize).min(self.count - 1)
    }

    fn start(&self, k: usize) -> f64 {
        (self.first + k as i64) as f64 * self.r
    }

    fn interval(&self, k: usize) -> (f64, f64) {
        (self.start(k), (self.first + k as i64 + 1) as f64 * self.r)
    }
}

fn sigma_estimate(samples: &[Spectrum], cells: &CellGrid) -> (RegionSet, usize) {
    let n = samples.len();
    let mut occupancy = vec![0usize; cells.count];
    let mut totals = vec![0usize; cells.count];
    for s in samples {
        let mut hit = vec![false; cells.count];
        for &l in &s.values {
            let k = cells.index(l);
            hit[k] = true;
            totals[k] += 1;
        }
        for (o, h) in occupancy.iter_mut().zip(hit) {
            *o += h as usize;
        }
    }
    let occupied: Vec<usize> =
        (0..cells.count).filter(|&k| occupancy[k] as f64 >= OCCUPANCY * n as f64 - 1e-9).collect();

    // clusters of occupied cells separated by fewer than ISOLATION_GAP empty cells
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in &occupied {
        match clusters.last_mut() {
            Some(c) if k - c[c.len() - 1] - 1 < ISOLATION_GAP => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    let per_sample = |c: &Vec<usize>| -> f64 {
        let (a, b) = (c[0], c[c.len() - 1]);
        totals[a..=b].iter().sum::<usize>() as f64 / n as f64
    };
    let small: Vec<bool> = clusters.iter().map(|c| per_sample(c) <= ISOLATED_MAX_COUNT).collect();
    let drop_small = small.iter().any(|s| !s);
    let mut removed = 0;
    let mut intervals = Vec::new();
    for (c, is_small) in clusters.iter().zip(small) {
        if drop_small && is_small {
            removed += c.len();
            continue;
        }
        intervals.extend(c.iter().map(|&k| cells.interval(k)));
    }
    (RegionSet::new(intervals).expect("finite cells"), removed)
}

/// Sample- and site-averaged `sum_k w_k P_eps(x - lambda_k)` at cell centres.
fn smoothed_density(samples: &[Spectrum], cells: &CellGrid, eps: f64) -> Vec<f64> {
    let mut out = vec![0.0; cells.count];
    let mut terms = 0usize;
    for s in samples {
        for w in &s.weights {
            terms += 1;
            for (k, slot) in out.iter_mut().enumerate() {
                let x = cells.start(k) + 0.5 * cells.r;
                *slot += s.values.iter().zip(w).map(|(&l, &wk)| wk * eps / (PI * ((x - l).powi(2) + eps * eps))).sum::<f64>();
            }
        }
    }
    if terms > 0 {
        for v in &mut out {
            *v /= terms as f64;
        }
    }
    out
}

fn ac_estimate(batches: &[&Vec<f64>], cells: &CellGrid, theta: f64) -> RegionSet {
    let intervals = (0..cells.count).filter(|&k| batches.iter().all(|d| d[k] > theta)).map(|k| cells.interval(k)).collect();
    RegionSet::new(intervals).expect("finite cells")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SingularityCheck {
    Checked { min_distance: f64, shared: usize, shared_fraction: f64 },
    IdenticalRealization { shared: usize },
    NotApplicable { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpenSetOutcome {
    Empty,
    PositiveLength,
    /// Non-empty with zero length, which the open-set theorem rules out.
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub omega_index: u64,
    pub eta_index: u64,
    pub singularity: SingularityCheck,
    pub intersection: RegionSet,
    pub open_set: OpenSetOutcome,
}

/// Compares the spectra of realizations `omega_index` and `eta_index`:
/// eigenvalues closer than `tol`, and the intersection of `region` with the
/// spectral estimate from the two realizations at `resolution`.
pub fn pairwise_checks(
    model: &AndersonModel,
    omega_index: u64,
    eta_index: u64,
    region: &RegionSet,
    tol: f64,
    resolution: f64,
) -> Result<PairwiseReport> {
    if !(resolution > 0.0) || !(tol >= 0.0) {
        return Err(Error::Argument("resolution must be positive and tol non-negative".into()));
    }
    let spectra: Vec<Spectrum> = [omega_index, eta_index]
        .par_iter()
        .map(|&i| diagonalize(model, &build_hamiltonian(model, &sample_omega(model, i))?, &[]))
        .collect::<Result<_>>()?;
    let (a, b) = (&spectra[0].values, &spectra[1].values);

    let singularity = if omega_index == eta_index {
        SingularityCheck::IdenticalRealization { shared: a.len() }
    } else if !model.distribution.is_continuous() {
        SingularityCheck::NotApplicable { reason: "disorder is not continuously distributed".into() }
    } else {
        let mut min_distance = f64::INFINITY;
        let mut shared = 0;
        let mut j = 0;
        for &x in a {
            while j + 1 < b.len() && b[j + 1] <= x {
                j += 1;
            }
            let mut d = (b[j] - x).abs();
            if j + 1 < b.len() {
                d = d.min((b[j + 1] - x).abs());
            }
            min_distance = min_distance.min(d);
            if d <= tol {
                shared += 1;
            }
        }
        SingularityCheck::Checked { min_distance, shared, shared_fraction: shared as f64 / a.len() as f64 }
    };

    let lo = a[0].min(b[0]);
    let hi = a[a.len() - 1].max(b[b.len() - 1]);
    let first = (lo / resolution).floor() as i64;
    let cells = CellGrid { first, count: ((hi / resolution).floor() as i64 - first + 1) as usize, r: resolution };
    let (sigma, _) = sigma_estimate(&spectra, &cells);
    let intersection = region.intersection(&sigma);
    let open_set = if intersection.is_empty() {
        OpenSetOutcome::Empty
    } else if intersection.length() > 0.0 {
        OpenSetOutcome::PositiveLength
    } else {
        OpenSetOutcome::Violation
    };
    Ok(PairwiseReport { omega_index, eta_index, singularity, intersection, open_set })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(l: usize, distribution: Distribution) -> AndersonModel {
        AndersonModel::new(1, l, Boundary::Dirichlet, distribution, 42, vec![vec![l / 2]]).unwrap()
    }

    #[test]
    fn free_chain_of_three() {
        let model = chain(3, Distribution::Constant { c: 0.0 });
        let omega = sample_omega(&model, 0);
        let sample = spectral_measure_at_site(&model, &omega, &[1]).unwrap();
        let s2 = 2f64.sqrt();
        for (v, e) in sample.eigenvalues.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((v - e).abs() < 1e-14);
        }
        assert!(sample.weights[1].abs() < 1e-15);
        assert!((sample.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let moment: f64 = sample.eigenvalues.iter().zip(&sample.weights).map(|(l, w)| l * w).sum();
        assert!((moment - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_shift_and_symmetry() {
        let base = chain(6, Distribution::Constant { c: 0.0 });
        let shifted = chain(6, Distribution::Constant { c: 0.7 });
        let a = spectral_measure_at_site(&base, &sample_omega(&base, 0), &[2]).unwrap();
        let b = spectral_measure_at_site(&shifted, &sample_omega(&shifted, 0), &[2]).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x + 0.7 - y).abs() < 1e-13);
        }
        let model = AndersonModel::new(2, 5, Boundary::Periodic, Distribution::Uniform { a: 0.0, b: 1.0 }, 3, vec![]).unwrap();
        let m = build_hamiltonian(&model, &sample_omega(&model, 4)).unwrap().to_dense();
        assert_eq!(m, m.transpose());
        // periodic 2D: every row has four -1 bonds
        for i in 0..25 {
            let off: f64 = (0..25).filter(|&j| j != i).map(|j| m[(i, j)]).sum();
            assert_eq!(off, -4.0);
        }
    }

    #[test]
    fn periodic_ring_spectrum() {
        let l = 8;
        let model = AndersonModel::new(1, l, Boundary::Periodic, Distribution::Constant { c: 0.0 }, 0, vec![]).unwrap();
        let h = build_hamiltonian(&model, &sample_omega(&model, 0)).unwrap();
        let mut exact: Vec<f64> =
            (0..l).map(|k| 2.0 - 2.0 * (2.0 * PI * k as f64 / l as f64).cos()).collect();
        exact.sort_by(f64::total_cmp);
        for (v, e) in linalg::dense_eigenvalues(h.to_dense()).iter().zip(exact) {
            assert!((v - e).abs() < 1e-13);
        }
    }

    #[test]
    fn omega_is_reproducible_and_in_range() {
        let model = chain(50, Distribution::Uniform { a: 0.0, b: 1.0 });
        let a = sample_omega(&model, 9);
        assert_eq!(a, sample_omega(&model, 9));
        assert_ne!(a, sample_omega(&model, 10));
        assert!(a.values.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn empirical_means_within_clt_band() {
        for d in [
            Distribution::Uniform { a: 0.0, b: 1.0 },
            Distribution::Uniform { a: -2.0, b: 3.0 },
            Distribution::Bernoulli { a: 0.0, b: 1.0, p: 0.3 },
        ] {
            let model = AndersonModel::new(1, 1, Boundary::Dirichlet, d, 2024, vec![]).unwrap();
            let n = 10_000;
            let mean = (0..n).map(|i| sample_omega(&model, i).values[0]).sum::<f64>() / n as f64;
            let band = 3.0 * d.variance().sqrt() / 100.0;
            assert!((mean - d.mean()).abs() <= band, "{d:?}: {mean}");
        }
    }

    #[test]
    fn model_json_round_trip_and_validation() {
        let text = r#"{"dim":1,"L":200,"boundary":"dirichlet","distribution":{"kind":"uniform","params":[0,1]},"master_seed":7,"sites":[[100]]}"#;
        let model: AndersonModel = serde_json::from_str(text).unwrap();
        assert_eq!(model.side, 200);
        let back: AndersonModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(back, model);
        for bad in [
            r#"{"dim":3,"L":2,"boundary":"dirichlet","distribution":{"kind":"constant","params":[0]},"master_seed":1}"#,
            r#"{"dim":2,"L":300,"boundary":"dirichlet","distribution":{"kind":"constant","params":[0]},"master_seed":1}"#,
            r#"{"dim":1,"L":5,"boundary":"dirichlet","distribution":{"kind":"bernoulli","params":[0,1,2]},"master_seed":1}"#,
            r#"{"dim":1,"L":5,"boundary":"dirichlet","distribution":{"kind":"gauss","params":[0,1]},"master_seed":1}"#,
            r#"{"dim":1,"L":5,"boundary":"dirichlet","distribution":{"kind":"constant","params":[0]},"master_seed":1,"sites":[[5]]}"#,
        ] {
            assert!(serde_json::from_str::<AndersonModel>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let model = chain(4, Distribution::Constant { c: 0.0 });
        let omega = OmegaRealization { index: 0, values: vec![0.0; 3] };
        assert!(matches!(build_hamiltonian(&model, &omega), Err(Error::Argument(_))));
    }

    #[test]
    fn tridiagonal_path_matches_dense() {
        let model = chain(300, Distribution::Uniform { a: 0.0, b: 1.0 });
        let omega = sample_omega(&model, 1);
        let h = build_hamiltonian(&model, &omega).unwrap();
        let site = model.side / 2;
        let (d, e) = h.tridiagonal().unwrap();
        let fast = tridiagonal_spectrum(&d, &e, &[site]);
        let dense = linalg::dense_eigen(h.to_dense()).unwrap();
        for (a, b) in fast.values.iter().zip(&dense.values) {
            assert!((a - b).abs() < 1e-11);
        }
        assert!((fast.weights[0].iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for (w, v) in fast.weights[0].iter().zip(&dense.vectors) {
            assert!((w - v[site] * v[site]).abs() < 1e-8);
        }
    }

    #[test]
    fn long_chain_takes_the_tridiagonal_route() {
        let model = chain(DENSE_LIMIT + 500, Distribution::Uniform { a: 0.0, b: 1.0 });
        let sample = spectral_measure_at_site(&model, &sample_omega(&model, 2), &[7]).unwrap();
        assert_eq!(sample.eigenvalues.len(), 2500);
        assert!((sample.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let h = build_hamiltonian(&model, &sample_omega(&model, 2)).unwrap();
        let trace: f64 = h.diagonal.iter().sum();
        assert!((sample.eigenvalues.iter().sum::<f64>() - trace).abs() < 1e-8 * trace);
    }

    #[test]
    fn uniform_disorder_spectrum_in_bounds() {
        let model = chain(200, Distribution::Uniform { a: 0.0, b: 1.0 });
        let est = estimate_deterministic_sets(&model, &EstimateOptions::new(10, 0.1)).unwrap();
        assert!(est.eigenvalue_range.0 >= 0.0 && est.eigenvalue_range.1 <= 5.0);
        assert!(est.max_weight_defect < 1e-10);
        assert!(estimate_deterministic_sets(&model, &EstimateOptions::new(1, 0.1)).is_err());
    }

    #[test]
    fn isolated_cluster_is_removed() {
        let model = chain(100, Distribution::Uniform { a: 0.0, b: 1.0 });
        let mut opts = EstimateOptions::new(10, 0.1);
        let plain = estimate_deterministic_sets(&model, &opts).unwrap();
        opts.edits = vec![SiteEdit { site: vec![10], value: 8.0 }];
        let edited = estimate_deterministic_sets(&model, &opts).unwrap();
        assert!(edited.eigenvalue_range.1 > 9.0);
        assert!(edited.isolated_cells_removed > 0);
        assert!(plain.sigma_ess_estimate.hausdorff(&edited.sigma_ess_estimate) <= 0.2 + 1e-12);
    }

    #[test]
    fn pairwise_examples() {
        let model = chain(200, Distribution::Uniform { a: 0.0, b: 1.0 });
        let far = RegionSet::interval(10.0, 11.0).unwrap();
        let r = pairwise_checks(&model, 0, 1, &far, 1e-9, 0.1).unwrap();
        assert!(matches!(r.singularity, SingularityCheck::Checked { shared: 0, .. }));
        assert_eq!(r.open_set, OpenSetOutcome::Empty);
        let r = pairwise_checks(&model, 3, 3, &RegionSet::interval(1.0, 2.0).unwrap(), 1e-9, 0.1).unwrap();
        assert_eq!(r.singularity, SingularityCheck::IdenticalRealization { shared: 200 });
        assert_eq!(r.open_set, OpenSetOutcome::PositiveLength);
        let constant = chain(20, Distribution::Constant { c: 0.0 });
        let r = pairwise_checks(&constant, 0, 1, &far, 1e-9, 0.1).unwrap();
        assert!(matches!(r.singularity, SingularityCheck::NotApplicable { .. }));
    }
}
