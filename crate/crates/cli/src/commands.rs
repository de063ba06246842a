use anyhow::{bail, Context, Result};
use clap::Args;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use krein_lab::anderson::{self, AndersonModel, EstimateOptions};
use krein_lab::cauchy::{self, Variant};
use krein_lab::measures::{self, Classification, Measure};
use krein_lab::rank_one::{self, RankOneFamily, TransformRoute};
use krein_lab::spectral_shift::{self, InverseOptions, Normalization, ShiftFunction, ShiftOptions};
use krein_lab::verify::{self, CheckResult, CheckStatus};
use krein_lab::RegionSet;

use crate::output::{write_atomic, Outputs};
use crate::plot::{self, PlotOptions, Series, Style};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn check(command: &str, name: &str, value: f64, bound: f64, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        suite: command.into(),
        name: name.into(),
        status: if value <= bound { CheckStatus::Pass } else { CheckStatus::Fail },
        value: Some(value).filter(|v| v.is_finite()),
        bound,
        detail: detail.into(),
    }
}

fn default_eps() -> f64 {
    0.05
}
fn default_points() -> usize {
    401
}
fn default_shift_tol() -> f64 {
    1e-6
}
fn default_identity_tol() -> f64 {
    1e-3
}
fn default_resolution() -> f64 {
    0.05
}
fn default_theta() -> f64 {
    anderson::DEFAULT_THETA
}
fn default_suite() -> String {
    "all".into()
}
fn default_bins() -> usize {
    50
}

/// Window holding the support of `base` and every eigenvalue of the rank-one
/// family: atoms of `mu_alpha` off the support lie within `|alpha| mass` of it.
fn family_window(base: &Measure, alpha: f64) -> (f64, f64) {
    let (lo, hi) = base.support_hull().unwrap_or((0.0, 0.0));
    let pad = 1.0 + alpha.abs() * base.total_mass();
    (lo - pad, hi + pad)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbArgs {
    /// Base spectral measure (JSON)
    #[arg(long)]
    pub measure: PathBuf,
    /// Coupling constant
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Bound for the transform agreement and mass checks
    /// [default: 1e-9 for atomic bases, 1e-2 otherwise]
    #[arg(long)]
    #[serde(default)]
    pub tol: Option<f64>,
    /// Height above the real axis of the sampled transforms
    #[arg(long, default_value_t = default_eps())]
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Number of sample points in transform.csv
    #[arg(long, default_value_t = default_points())]
    #[serde(default = "default_points")]
    pub points: usize,
    /// Density sub-cells per base cell on the transform route
    #[arg(long, default_value_t = default_refinement())]
    #[serde(default = "default_refinement")]
    pub refinement: usize,
}

fn default_refinement() -> usize {
    TransformRoute::default().refinement
}

pub fn perturb(a: &PerturbArgs) -> Result<Vec<CheckResult>> {
    if a.points < 2 || !(a.eps > 0.0) {
        bail!(krein_lab::Error::Argument("need at least two points and a positive height".into()));
    }
    let base: Measure = read_json(&a.measure)?;
    let fam = RankOneFamily::new(base.clone(), a.alpha)?;
    let atomic = !base.is_zero() && base.is_purely_atomic() && (base.total_mass() - 1.0).abs() <= rank_one::MASS_TOL;
    let (mu_alpha, route) = if atomic {
        (rank_one::perturb_discrete(&fam)?, "matrix oracle")
    } else {
        (rank_one::perturb_via_transform(&fam, &TransformRoute { refinement: a.refinement, ..Default::default() })?, "transform")
    };
    let tol = a.tol.unwrap_or(if atomic { 1e-9 } else { 1e-2 });

    let (lo, hi) = family_window(&base, a.alpha);
    let mut csv = String::from("x,eps,re_formula,im_formula,re_measure,im_measure\n");
    let mut worst = 0.0f64;
    for x in linspace(lo, hi, a.points - 1) {
        let z = Complex64::new(x, a.eps);
        let formula = rank_one::perturbed_transform(&fam, z)?;
        let direct = cauchy::cauchy_transform(&mu_alpha, z, Variant::K)?.value;
        worst = worst.max((formula - direct).norm() / direct.norm().max(f64::MIN_POSITIVE));
        csv.push_str(&format!("{x},{},{},{},{},{}\n", a.eps, formula.re, formula.im, direct.re, direct.im));
    }
    let mass_defect = (mu_alpha.total_mass() - base.total_mass()).abs();

    let mut out = Outputs::default();
    out.add_json(a.out.join("mu_alpha.json"), &mu_alpha)?;
    out.add(a.out.join("transform.csv"), csv);
    out.commit()?;
    Ok(vec![
        check("perturb", "aronszajn-krein-agreement", worst, tol, format!("{route} route, {} atoms", mu_alpha.atoms().len())),
        check("perturb", "mass-conservation", mass_defect, tol, format!("mass {}", mu_alpha.total_mass())),
    ])
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftArgs {
    /// Base spectral measure (JSON)
    #[arg(long)]
    pub measure: PathBuf,
    /// Coupling constant
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Sampling grid as lo:hi:cells [default: covers the support and all eigenvalues]
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub grid: Option<String>,
    /// Bound for the consistency residual
    #[arg(long, default_value_t = default_shift_tol())]
    #[serde(default = "default_shift_tol")]
    pub tol: f64,
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || krein_lab::Error::Argument(format!("grid {spec:?} is not lo:hi:cells"));
    if parts.len() != 3 {
        bail!(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo < hi) || n == 0 || !lo.is_finite() || !hi.is_finite() {
        bail!(bad());
    }
    Ok(linspace(lo, hi, n))
}

fn shift_plot(u: &ShiftFunction, title: &str) -> Result<String> {
    let s = Series::Points { label: "u".into(), xs: u.grid().to_vec(), ys: u.values().to_vec() };
    let opts = PlotOptions {
        title: title.into(),
        x_label: "x".into(),
        y_label: "u(x)".into(),
        y_range: Some((0.0, std::f64::consts::PI)),
        bins: 0,
    };
    plot::render(&[s], Style::Line, &opts)
}

pub fn shift(a: &ShiftArgs) -> Result<Vec<CheckResult>> {
    let base: Measure = read_json(&a.measure)?;
    let fam = RankOneFamily::new(base.clone(), a.alpha)?;
    let grid = match &a.grid {
        Some(spec) => parse_grid(spec)?,
        None => {
            let (lo, hi) = family_window(&base, a.alpha);
            linspace(lo, hi, 600)
        }
    };
    let fwd = spectral_shift::shift_from_measure(&fam, &grid, &ShiftOptions::default())?;
    let mut out = Outputs::default();
    out.add_json(a.out.join("shift.json"), &fwd.shift)?;
    out.add(a.out.join("shift.csv"), fwd.shift.to_csv());
    out.add(a.out.join("shift.svg"), shift_plot(&fwd.shift, &format!("spectral shift, alpha = {}", a.alpha))?);
    out.add_json(a.out.join("report.json"), &fwd)?;
    out.commit()?;
    Ok(vec![check(
        "shift",
        "consistency-residual",
        fwd.consistency_residual,
        a.tol,
        format!("{} up and {} down jumps, c = {}", fwd.up_jumps.len(), fwd.down_jumps.len(), fwd.shift.c()),
    )])
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructArgs {
    /// Shift function (JSON)
    #[arg(long)]
    pub shift: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fix c by an atom of mu with the given mass, as point:mass
    /// [default: the finite-measure normalization]
    #[arg(long, allow_hyphen_values = true)]
    #[serde(default)]
    pub reference: Option<String>,
    /// Bound for the relative mismatch of 1 + pi K mu and exp(K1 u + c)
    #[arg(long, default_value_t = default_identity_tol())]
    #[serde(default = "default_identity_tol")]
    pub tol: f64,
}

fn parse_reference(spec: &str) -> Result<Normalization> {
    let bad = || krein_lab::Error::Argument(format!("reference {spec:?} is not point:mass"));
    let (p, m) = spec.split_once(':').ok_or_else(bad)?;
    Ok(Normalization::ReferenceMass { point: p.trim().parse().map_err(|_| bad())?, mass: m.trim().parse().map_err(|_| bad())? })
}

#[derive(Serialize)]
struct ReconstructReport<'a> {
    c: f64,
    normalization: &'a Normalization,
    mu_mass: f64,
    nu_mass: f64,
    mu_atoms: usize,
    nu_atoms: usize,
    identity_error: f64,
}

/// `max |1 + pi K mu - exp(K1 u + c)| / |exp(K1 u + c)|` at height 1 over
/// the window of `u`.
fn identity_error(u: &ShiftFunction, mu: &Measure, c: f64) -> Result<f64> {
    let (lo, hi) = u.window();
    let mut worst = 0.0f64;
    for x in linspace(lo, hi, 40) {
        let z = Complex64::new(x, 1.0);
        let lhs = 1.0 + std::f64::consts::PI * cauchy::cauchy_transform(mu, z, Variant::K)?.value;
        let rhs = (u.k1(z) + c).exp();
        worst = worst.max((lhs - rhs).norm() / rhs.norm());
    }
    Ok(worst)
}

pub fn reconstruct(a: &ReconstructArgs) -> Result<Vec<CheckResult>> {
    let u: ShiftFunction = read_json(&a.shift)?;
    let norm = match &a.reference {
        Some(spec) => parse_reference(spec)?,
        None => Normalization::Fitted,
    };
    let pair = spectral_shift::measures_from_shift(&u, &norm, &InverseOptions::default())?;
    let err = identity_error(&u, &pair.mu, pair.c)?;
    let report = ReconstructReport {
        c: pair.c,
        normalization: &norm,
        mu_mass: pair.mu.total_mass(),
        nu_mass: pair.nu.total_mass(),
        mu_atoms: pair.mu.atoms().len(),
        nu_atoms: pair.nu.atoms().len(),
        identity_error: err,
    };
    let mut out = Outputs::default();
    out.add_json(a.out.join("mu.json"), &pair.mu)?;
    out.add_json(a.out.join("nu.json"), &pair.nu)?;
    out.add_json(a.out.join("report.json"), &report)?;
    out.commit()?;
    Ok(vec![check("reconstruct", "exponential-representation", err, a.tol, format!("c = {}", pair.c))])
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurgeryArgs {
    /// Shift function (JSON)
    #[arg(long)]
    pub shift: PathBuf,
    /// Open set O as a:b[,c:d...]
    #[arg(long, allow_hyphen_values = true)]
    pub region: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Atom pairing tolerance of the measure comparison
    #[arg(long, default_value_t = 1e-9)]
    #[serde(default = "default_pairing_tol")]
    pub tol: f64,
}

fn default_pairing_tol() -> f64 {
    1e-9
}

fn parse_region(spec: &str) -> Result<RegionSet> {
    let bad = || krein_lab::Error::Argument(format!("region {spec:?} is not a:b[,c:d...]"));
    let intervals = spec
        .split(',')
        .map(|part| {
            let (a, b) = part.split_once(':').ok_or_else(bad)?;
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(krein_lab::Error::Argument(format!("region interval {a}:{b} must have finite endpoints with a < b")));
            }
            Ok((a, b))
        })
        .collect::<std::result::Result<Vec<(f64, f64)>, krein_lab::Error>>()?;
    Ok(RegionSet::new(intervals)?)
}

/// `n` points spread evenly over the part of `[lo, hi]` outside `region`.
fn points_off(region: &RegionSet, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let free = region.complement_within(lo, hi);
    let total = free.length();
    (0..n)
        .map(|k| {
            let mut s = (k as f64 + 0.5) / n as f64 * total;
            for &(a, b) in free.intervals() {
                if s <= b - a {
                    return a + s;
                }
                s -= b - a;
            }
            hi
        })
        .collect()
}

#[derive(Serialize)]
struct SurgeryReport<'a> {
    region: &'a RegionSet,
    k1_bound: K1Bound,
    mu_classification: Classification,
    nu_classification: Classification,
}

#[derive(Serialize)]
struct K1Bound {
    points: usize,
    max_abs_difference: f64,
    bound: f64,
}

pub fn surgery(a: &SurgeryArgs) -> Result<Vec<CheckResult>> {
    let u: ShiftFunction = read_json(&a.shift)?;
    let region = parse_region(&a.region)?;
    let v = spectral_shift::dm_surgery(&u, &region)?;

    let (ulo, uhi) = u.window();
    let (rlo, rhi) = (region.intervals()[0].0, region.intervals()[region.intervals().len() - 1].1);
    let (lo, hi) = (ulo.min(rlo) - 1.0, uhi.max(rhi) + 1.0);
    let points = points_off(&region, lo, hi, 200);
    let mut worst = 0.0f64;
    for &x in &points {
        worst = worst.max(spectral_shift::k1_difference(&u, &v, x)?.abs());
    }
    let bound = region.length();

    let before = spectral_shift::measures_from_shift(&u, &Normalization::Fitted, &InverseOptions::default())?;
    let after = spectral_shift::measures_from_shift(&v, &Normalization::Fitted, &InverseOptions::default())?;
    let off = region.complement();
    let mu_class = measures::compare_measures(&before.mu, &after.mu, &off, a.tol)?;
    let nu_class = measures::compare_measures(&before.nu, &after.nu, &off, a.tol)?;
    let vanish = |p: &Measure, q: &Measure| measures::restrict(p, &off).is_zero() && measures::restrict(q, &off).is_zero();
    let (mu_vacuous, nu_vacuous) = (vanish(&before.mu, &after.mu), vanish(&before.nu, &after.nu));
    let equivalent = |c: &Classification, vacuous: bool| {
        if vacuous || matches!(c, Classification::Equivalent { .. }) {
            0.0
        } else {
            1.0
        }
    };
    let describe = |c: &Classification, vacuous: bool| if vacuous { "both restrictions vanish".to_string() } else { format!("{c:?}") };

    let overlay = [
        Series::Points { label: "u".into(), xs: u.grid().to_vec(), ys: u.values().to_vec() },
        Series::Points { label: "u after surgery".into(), xs: v.grid().to_vec(), ys: v.values().to_vec() },
    ];
    let plot_opts = PlotOptions {
        title: format!("surgery on {}", a.region),
        x_label: "x".into(),
        y_label: "u(x)".into(),
        y_range: Some((0.0, std::f64::consts::PI)),
        bins: 0,
    };
    let mut out = Outputs::default();
    out.add_json(a.out.join("shift_tilde.json"), &v)?;
    out.add(a.out.join("shift_tilde.csv"), v.to_csv());
    out.add(a.out.join("surgery.svg"), plot::render(&overlay, Style::Overlay, &plot_opts)?);
    out.add_json(
        a.out.join("report.json"),
        &SurgeryReport {
            region: &region,
            k1_bound: K1Bound { points: points.len(), max_abs_difference: worst, bound },
            mu_classification: mu_class.clone(),
            nu_classification: nu_class.clone(),
        },
    )?;
    out.commit()?;
    Ok(vec![
        check("surgery", "k1-difference-bound", worst, bound, format!("{} points off O", points.len())),
        check("surgery", "mu-equivalent-off-region", equivalent(&mu_class, mu_vacuous), 0.0, describe(&mu_class, mu_vacuous)),
        check("surgery", "nu-equivalent-off-region", equivalent(&nu_class, nu_vacuous), 0.0, describe(&nu_class, nu_vacuous)),
    ])
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AndersonArgs {
    /// Model description (JSON)
    #[arg(long)]
    pub model: PathBuf,
    /// Number of disorder realizations
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Cell width of the set estimates
    #[arg(long, default_value_t = default_resolution())]
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Poisson smoothing width [default: 4 (spectral width) / L^dim]
    #[arg(long)]
    #[serde(default)]
    pub eps: Option<f64>,
    /// Density threshold of the ac estimate
    #[arg(long, default_value_t = default_theta())]
    #[serde(default = "default_theta")]
    pub theta: f64,
}

#[derive(Serialize)]
struct AndersonReport<'a> {
    model: &'a AndersonModel,
    #[serde(flatten)]
    sets: &'a anderson::DeterministicSets,
}

fn regions_csv(r: &RegionSet) -> String {
    let mut s = String::from("a,b\n");
    for &(a, b) in r.intervals() {
        s.push_str(&format!("{a},{b}\n"));
    }
    s
}

pub fn anderson(a: &AndersonArgs) -> Result<Vec<CheckResult>> {
    let model: AndersonModel = read_json(&a.model)?;
    let opts = EstimateOptions { n_samples: a.samples, resolution: a.resolution, eps_smooth: a.eps, theta: a.theta, edits: vec![] };
    let (sets, samples) = anderson::estimate_with_samples(&model, &opts)?;

    let mut csv = String::from(anderson::SAMPLE_CSV_HEADER);
    let mut values = Vec::new();
    for s in &samples {
        csv.push_str(&s.csv_rows());
        values.extend_from_slice(&s.eigenvalues);
    }
    let (lo, hi) = sets.eigenvalue_range;
    let bins = (((hi - lo) / a.resolution).ceil() as usize).clamp(1, 400);
    let dos = plot::render(
        &[Series::Points { label: "eigenvalues".into(), xs: values, ys: vec![] }],
        Style::Histogram,
        &PlotOptions {
            title: format!("density of states, {} samples", a.samples),
            x_label: "energy".into(),
            y_label: "density".into(),
            y_range: None,
            bins,
        },
    )?;
    let count_defect = samples.iter().filter(|s| s.eigenvalues.len() != model.volume()).count();

    let mut out = Outputs::default();
    out.add_json(a.out.join("report.json"), &AndersonReport { model: &model, sets: &sets })?;
    out.add(a.out.join("dos.svg"), dos);
    out.add(a.out.join("samples.csv"), csv);
    out.add(a.out.join("sigma_ess_first.csv"), regions_csv(&sets.sigma_ess_halves[0]));
    out.add(a.out.join("sigma_ess_second.csv"), regions_csv(&sets.sigma_ess_halves[1]));
    out.commit()?;
    let variation = sets.batch_variation.sigma_ess.max(sets.batch_variation.ac_support);
    Ok(vec![
        check("anderson", "weight-normalization", sets.max_weight_defect, 1e-10, "max |sum of weights - 1|"),
        check("anderson", "eigenvalue-count", count_defect as f64, 0.0, format!("{} eigenvalues per sample", model.volume())),
        check("anderson", "batch-variation", variation, 2.0 * a.resolution, "Hausdorff distance between sample halves"),
    ])
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// measures, cauchy, rank_one, spectral_shift, anderson or all
    #[arg(long, default_value_t = default_suite())]
    #[serde(default = "default_suite")]
    pub suite: String,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
    /// Write the JSON result here instead of standard output
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

pub fn verify(a: &VerifyArgs) -> Result<Vec<CheckResult>> {
    let report = verify::run(&a.suite, a.seed)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    match &a.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(report.checks)
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotArgs {
    /// CSV series; repeat for overlays
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Style::Line)]
    #[serde(default = "default_style")]
    pub style: Style,
    /// Output SVG file
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "")]
    #[serde(default)]
    pub title: String,
    /// Column used for x (or the histogram values) [default: first]
    #[arg(long)]
    #[serde(default)]
    pub x_col: Option<String>,
    /// Column used for y [default: second]
    #[arg(long)]
    #[serde(default)]
    pub y_col: Option<String>,
    #[arg(long, default_value_t = default_bins())]
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_style() -> Style {
    Style::Line
}

pub fn plot(a: &PlotArgs) -> Result<Vec<CheckResult>> {
    let need_y = a.style != Style::Histogram;
    let series = a
        .inputs
        .iter()
        .map(|p| plot::read_series(p, a.x_col.as_deref(), a.y_col.as_deref(), need_y))
        .collect::<Result<Vec<_>>>()?;
    if series.iter().any(|s| match s {
        Series::Points { xs, .. } => xs.is_empty(),
        Series::Intervals { intervals, .. } => intervals.is_empty(),
    }) {
        bail!(krein_lab::Error::Argument("empty series".into()));
    }
    let shift_axis = a.style != Style::Histogram && a.inputs.iter().all(|p| plot::is_shift_csv(p));
    let opts = PlotOptions {
        title: a.title.clone(),
        x_label: a.x_col.clone().unwrap_or_else(|| "x".into()),
        y_label: if a.style == Style::Histogram { "density".into() } else { a.y_col.clone().unwrap_or_else(|| "y".into()) },
        y_range: shift_axis.then_some((0.0, std::f64::consts::PI)),
        bins: a.bins,
    };
    let svg = plot::render(&series, a.style, &opts).map_err(|e| krein_lab::Error::Argument(e.to_string()))?;
    write_atomic(&a.out, svg.as_bytes())?;
    Ok(vec![])
}

/// A command described by a JSON file, `{"kind": ..., <flags>}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Scenario {
    Perturb(PerturbArgs),
    Shift(ShiftArgs),
    Reconstruct(ReconstructArgs),
    Surgery(SurgeryArgs),
    Anderson(AndersonArgs),
    Verify(VerifyArgs),
    Plot(PlotArgs),
}

pub fn run_scenario(path: &Path) -> Result<Vec<CheckResult>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| krein_lab::Error::Argument(format!("malformed scenario {}: {e}", path.display())))?;
    let inputs: Vec<&Path> = match &scenario {
        Scenario::Perturb(a) => vec![&a.measure],
        Scenario::Shift(a) => vec![&a.measure],
        Scenario::Reconstruct(a) => vec![&a.shift],
        Scenario::Surgery(a) => vec![&a.shift],
        Scenario::Anderson(a) => vec![&a.model],
        Scenario::Verify(_) => vec![],
        Scenario::Plot(a) => a.inputs.iter().map(PathBuf::as_path).collect(),
    };
    if let Some(missing) = inputs.iter().find(|p| !p.exists()) {
        bail!(krein_lab::Error::Argument(format!("scenario input {} does not exist", missing.display())));
    }
    match &scenario {
        Scenario::Perturb(a) => perturb(a),
        Scenario::Shift(a) => shift(a),
        Scenario::Reconstruct(a) => reconstruct(a),
        Scenario::Surgery(a) => surgery(a),
        Scenario::Anderson(a) => anderson(a),
        Scenario::Verify(a) => verify(a),
        Scenario::Plot(a) => plot(a),
    }
}
