//! Seeded property suites.
//!
//! Every suite draws its inputs from a ChaCha8 stream seeded by
//! `mix(seed, suite index, 0)` and reports one [`CheckResult`] per property.
//! Results carry no timings, so the JSON of a run is a pure function of the
//! seed.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::anderson::{self, AndersonModel, Boundary, Distribution, EstimateOptions, SiteEdit};
use crate::cauchy::{self, EpsSchedule};
use crate::error::{Error, Result};
use crate::measures::{self, build_measure, AcPiece, Classification, Measure};
use crate::rank_one::{self, RankOneFamily};
use crate::region::RegionSet;
use crate::rng;
use crate::spectral_shift::{self, InverseOptions, Normalization, ShiftFunction, ShiftOptions};

pub const SUITES: [&str; 5] = ["measures", "cauchy", "rank_one", "spectral_shift", "anderson"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The check could not be evaluated because a solver did not converge.
    NonConvergence,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub status: CheckStatus,
    /// Worst observed value of the checked quantity; passes when `<= bound`.
    pub value: Option<f64>,
    pub bound: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    /// `suite/name: PASS (value <= bound)` style summary.
    pub fn summary_line(&self) -> String {
        let verdict = match self.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NonConvergence => "NON-CONVERGENCE",
            CheckStatus::Error => "ERROR",
        };
        match self.value {
            Some(v) => format!("{}/{}: {verdict} ({v:.3e} <= {:.3e}) {}", self.suite, self.name, self.bound, self.detail),
            None => format!("{}/{}: {verdict} {}", self.suite, self.name, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

/// Runs `suite` (one of [`SUITES`] or `"all"`) with the given seed.
pub fn run(suite: &str, seed: u64) -> Result<VerifyReport> {
    let selected: Vec<usize> = if suite == "all" {
        (0..SUITES.len()).collect()
    } else {
        match SUITES.iter().position(|s| *s == suite) {
            Some(i) => vec![i],
            None => return Err(Error::Argument(format!("unknown suite {suite:?}; expected one of {SUITES:?} or \"all\""))),
        }
    };
    let per_suite: Vec<Vec<CheckResult>> = selected
        .par_iter()
        .map(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(rng::mix(seed, i as u64, 0));
            let mut ctx = Ctx { suite: SUITES[i], rng: &mut rng, out: Vec::new() };
            match i {
                0 => measures_suite(&mut ctx),
                1 => cauchy_suite(&mut ctx),
                2 => rank_one_suite(&mut ctx),
                3 => spectral_shift_suite(&mut ctx),
                _ => anderson_suite(&mut ctx),
            }
            ctx.out
        })
        .collect();
    let checks: Vec<CheckResult> = per_suite.into_iter().flatten().collect();
    Ok(VerifyReport { suite: suite.to_string(), seed, passed: checks.iter().all(CheckResult::passed), checks })
}

struct Ctx<'a> {
    suite: &'static str,
    rng: &'a mut ChaCha8Rng,
    out: Vec<CheckResult>,
}

impl Ctx<'_> {
    /// Records `value <= bound` from a fallible measurement `(value, detail)`.
    fn check<F>(&mut self, name: &str, bound: f64, f: F)
    where
        F: FnOnce(&mut ChaCha8Rng) -> Result<(f64, String)>,
    {
        let (status, value, detail) = match f(self.rng) {
            Ok((v, d)) if v <= bound => (CheckStatus::Pass, Some(v), d),
            Ok((v, d)) => (CheckStatus::Fail, Some(v).filter(|v| v.is_finite()), d),
            Err(e @ (Error::Numeric(_) | Error::Accuracy(_))) => (CheckStatus::NonConvergence, None, e.to_string()),
            Err(e) => (CheckStatus::Error, None, e.to_string()),
        };
        self.out.push(CheckResult { suite: self.suite.into(), name: name.into(), status, value, bound, detail });
    }
}

fn random_atomic(rng: &mut ChaCha8Rng, max_atoms: usize, min_gap: f64) -> Measure {
    loop {
        let n = rng.gen_range(1..=max_atoms);
        let mut atoms: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(0.05..1.0))).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[1].0 - w[0].0 < min_gap) {
            continue;
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in &mut atoms {
            a.1 /= total;
        }
        return build_measure(atoms, vec![]).expect("valid atoms");
    }
}

fn random_mixed(rng: &mut ChaCha8Rng) -> Measure {
    let atomic = random_atomic(rng, 6, 1e-3);
    let pieces = (0..rng.gen_range(1..3))
        .map(|_| {
            let a = rng.gen_range(-4.0..3.0);
            let n = rng.gen_range(1..6);
            let grid: Vec<f64> = (0..=n).map(|k| a + k as f64 * 0.25).collect();
            let values = grid.iter().map(|_| rng.gen_range(0.0..2.0)).collect();
            AcPiece::new(grid, values).expect("valid piece")
        })
        .collect();
    build_measure(atomic.atoms().to_vec(), pieces).expect("valid measure")
}

fn upper_point(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-6.0..6.0), 10f64.powf(rng.gen_range(-1.5..0.5)))
}

fn measures_suite(ctx: &mut Ctx) {
    ctx.check("mass-splits-over-region", 1e-12, |rng| {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let m = random_mixed(rng);
            let a = rng.gen_range(-5.0..0.0);
            let region = RegionSet::interval(a, a + rng.gen_range(0.5..5.0))?;
            let inside = measures::restrict(&m, &region).total_mass();
            let outside = measures::restrict(&m, &region.complement()).total_mass();
            worst = worst.max((inside + outside - m.total_mass()).abs() / m.total_mass());
        }
        Ok((worst, "relative defect of mass(R) + mass(R^c) - mass over 20 measures".into()))
    });
    ctx.check("scaled-measure-is-equivalent", 1e-12, |rng| {
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let m = random_mixed(rng);
            let factor = rng.gen_range(0.5..3.0);
            match measures::compare_measures(&m, &m.scale(factor)?, &RegionSet::whole_line(), 1e-12)? {
                Classification::Equivalent { lower, upper } => {
                    worst = worst.max((lower - factor).abs().max((upper - factor).abs()) / factor)
                }
                other => return Ok((f64::INFINITY, format!("classified as {other:?}"))),
            }
        }
        Ok((worst, "relative error of the derivative bounds for nu = s mu".into()))
    });
    ctx.check("shifted-atoms-are-singular", 0.0, |rng| {
        let mut bad = 0;
        for _ in 0..10 {
            let m = random_atomic(rng, 8, 1e-2);
            let shifted: Vec<(f64, f64)> = m.atoms().iter().map(|&(t, w)| (t + 1e-3, w)).collect();
            let class = measures::compare_measures(&m, &build_measure(shifted, vec![])?, &RegionSet::whole_line(), 1e-9)?;
            bad += (class != Classification::MutuallySingular) as usize;
        }
        Ok((bad as f64, "pairs not classified mutually singular".into()))
    });
    ctx.check("cantor-mass", 1e-12, |_| {
        let m = measures::cantor_measure(12)?;
        Ok(((m.total_mass() - 1.0).abs(), format!("{} approximant atoms", m.atoms().len())))
    });
    ctx.check("rational-intervals-esupp", 0.0, |_| {
        let m = measures::rational_intervals_measure(20)?;
        let (lo, hi) = m.support_hull().expect("non-empty");
        let window = RegionSet::interval(lo - 1.0, hi + 1.0)?;
        let e = measures::essential_support_ac(&m, &window, 1e-3, measures::DEFAULT_ESUPP_THETA, measures::DEFAULT_ESUPP_CEILING)?;
        let margin = (hi - lo) - e.length();
        Ok(((0.5 - margin).max(0.0), format!("|esupp| = {:.4}, hull length = {:.4}", e.length(), hi - lo)))
    });
}

fn cauchy_suite(ctx: &mut Ctx) {
    ctx.check("herglotz-positivity", 0.0, |rng| {
        let mut violations = 0;
        let mut min_im = f64::INFINITY;
        for _ in 0..20 {
            let m = random_mixed(rng);
            for _ in 0..50 {
                let im = cauchy::transform_k(&m, upper_point(rng)).im;
                min_im = min_im.min(im);
                violations += (im <= 0.0) as usize;
            }
        }
        Ok((violations as f64, format!("min Im K = {min_im:.3e} over 1000 points")))
    });
    ctx.check("k-minus-k1-constant", 1e-12, |rng| {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let m = random_mixed(rng);
            let offset = cauchy::k1_offset(&m);
            for _ in 0..20 {
                let z = upper_point(rng);
                let k = cauchy::cauchy_transform(&m, z, cauchy::Variant::K)?.value;
                let k1 = cauchy::cauchy_transform(&m, z, cauchy::Variant::K1)?.value;
                worst = worst.max((k - k1 - offset).norm() / (1.0 + k.norm()));
            }
        }
        Ok((worst, "relative deviation of K - K1 from a real constant".into()))
    });
    ctx.check("uniform-boundary-value", 1e-8, |rng| {
        let m = Measure::uniform(0.0, 1.0, 1.0)?;
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x = rng.gen_range(0.05..0.95);
            let bv = cauchy::boundary_value(&m, x, &EpsSchedule::default(), 1e-12);
            if !bv.evaluation.converged {
                return Err(Error::Numeric(format!("boundary value at {x} did not converge")));
            }
            let exact = Complex64::new(((1.0 - x) / x).ln() / PI, 1.0);
            worst = worst.max((bv.evaluation.value - exact).norm());
        }
        Ok((worst, "K(x + i0) of the uniform density against the closed form".into()))
    });
    ctx.check("atom-detection", 1e-8, |rng| {
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let m = random_atomic(rng, 5, 0.1);
            for &(t, w) in m.atoms() {
                let bv = cauchy::boundary_value(&m, t, &EpsSchedule::default(), 1e-12);
                let mass = bv.atom.map_or(0.0, |a| a.mass);
                worst = worst.max((mass - w).abs());
            }
        }
        Ok((worst, "detected atom mass error".into()))
    });
}

fn rank_one_suite(ctx: &mut Ctx) {
    ctx.check("oracle-equivalence", 1e-9, |rng| {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let base = random_atomic(rng, 50, 1e-6);
            let fam = RankOneFamily::new(base, rng.gen_range(-3.0..3.0))?;
            let oracle = rank_one::perturb_discrete(&fam)?;
            for _ in 0..20 {
                let z = upper_point(rng);
                let ak = rank_one::perturbed_transform(&fam, z)?;
                let direct = cauchy::transform_k(&oracle, z);
                worst = worst.max((ak - direct).norm() / direct.norm());
            }
        }
        Ok((worst, "relative error, Aronszajn-Krein formula vs matrix oracle".into()))
    });
    ctx.check("golden-ratio", 1e-10, |_| {
        let base = build_measure(vec![(-1.0, 0.5), (1.0, 0.5)], vec![])?;
        let fam = RankOneFamily::new(base, 1.0)?;
        let s5 = 5f64.sqrt();
        let exact = [(1.0 - s5) / 2.0, (1.0 + s5) / 2.0];
        let oracle = rank_one::perturb_discrete(&fam)?;
        let roots = rank_one::secular_roots(&fam)?;
        let mut worst = 0.0f64;
        for k in 0..2 {
            worst = worst.max((oracle.atoms()[k].0 - exact[k]).abs()).max((roots[k] - exact[k]).abs());
        }
        Ok((worst, "atoms of mu_1 against (1 +- sqrt 5)/2".into()))
    });
    ctx.check("interlacing-mass-trace", 1e-9, |rng| {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let base = random_atomic(rng, 12, 1e-3);
            let alpha = rng.gen_range(0.01..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let out = rank_one::perturb_discrete(&RankOneFamily::new(base.clone(), alpha)?)?;
            worst = worst.max((out.total_mass() - 1.0).abs());
            worst = worst.max((out.first_moment() - base.first_moment() - alpha).abs());
            let t: Vec<f64> = base.atoms().iter().map(|a| a.0).collect();
            let l: Vec<f64> = out.atoms().iter().map(|a| a.0).collect();
            let interlaced = l.len() == t.len()
                && (0..t.len()).all(|k| {
                    if alpha > 0.0 {
                        l[k] > t[k] && (k + 1 == t.len() || l[k] < t[k + 1])
                    } else {
                        l[k] < t[k] && (k == 0 || l[k] > t[k - 1])
                    }
                });
            if !interlaced {
                return Ok((f64::INFINITY, format!("eigenvalues do not interlace for alpha = {alpha}")));
            }
        }
        Ok((worst, "mass and first-moment defects; interlacing holds".into()))
    });
    ctx.check("aronszajn-donoghue", 0.0, |rng| {
        let mut failures = 0;
        for _ in 0..10 {
            let base = random_atomic(rng, 20, 1e-3);
            let alpha = rng.gen_range(0.1..3.0);
            let beta = -rng.gen_range(0.1..3.0);
            failures += !rank_one::verify_aronszajn_donoghue(&base, alpha, beta, 1e-8)?.passed() as usize;
        }
        Ok((failures as f64, "bases failing disjointness or the atom condition".into()))
    });
}

fn unit_step() -> Result<ShiftFunction> {
    ShiftFunction::step(-1.0, 0.0, 1.0, 2.0, PI)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

fn spectral_shift_suite(ctx: &mut Ctx) {
    ctx.check("forward-unit-atom", 1e-6, |_| {
        let fam = RankOneFamily::new(Measure::dirac(0.0, 1.0)?, 1.0)?;
        let out = spectral_shift::shift_from_measure(&fam, &linspace(-1.0, 2.0, 300), &ShiftOptions::default())?;
        let mut worst = out.consistency_residual.max((out.shift.c() - 0.5 * 2f64.ln()).abs());
        for (&x, &v) in out.shift.grid().iter().zip(out.shift.values()) {
            if x != 0.0 && x != 1.0 {
                let exact = if x > 0.0 && x < 1.0 { PI } else { 0.0 };
                worst = worst.max((v - exact).abs());
            }
        }
        Ok((worst, format!("u = pi 1_(0,1), c = {:.12}", out.shift.c())))
    });
    ctx.check("inverse-unit-step", 1e-9, |_| {
        let pair = spectral_shift::measures_from_shift(&unit_step()?, &Normalization::Fitted, &InverseOptions::default())?;
        if pair.mu.atoms().len() != 1 || pair.nu.atoms().len() != 1 || !pair.mu.ac_pieces().is_empty() {
            return Ok((f64::INFINITY, "expected single atoms".into()));
        }
        let (x, m) = pair.mu.atoms()[0];
        let (y, n) = pair.nu.atoms()[0];
        let worst = x.abs().max((y - 1.0).abs()).max((m - 1.0).abs()).max((n - 1.0).abs()).max((pair.c - 0.5 * 2f64.ln()).abs());
        Ok((worst, "recovers delta_0, delta_1 and c = ln 2 / 2".into()))
    });
    ctx.check("round-trip-and-interlacing", 1e-6, |rng| {
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let base = random_atomic(rng, 5, 0.2);
            let fam = RankOneFamily::new(base.clone(), 1.0)?;
            let roots = rank_one::secular_roots(&fam)?;
            let (lo, hi) = (base.atoms()[0].0 - 1.0, roots[roots.len() - 1] + 1.0);
            let fwd = spectral_shift::shift_from_measure(&fam, &linspace(lo, hi, 400), &ShiftOptions::default())?;
            let alternate = fwd.up_jumps.len() == fwd.down_jumps.len()
                && fwd.up_jumps.iter().zip(&fwd.down_jumps).all(|(u, d)| u < d)
                && fwd.down_jumps.iter().zip(fwd.up_jumps.iter().skip(1)).all(|(d, u)| d < u);
            if !alternate {
                return Ok((f64::INFINITY, "up and down jumps do not alternate".into()));
            }
            let pair = spectral_shift::measures_from_shift(&fwd.shift, &Normalization::Fitted, &InverseOptions::default())?;
            if pair.mu.atoms().len() != base.atoms().len() || pair.nu.atoms().len() != roots.len() {
                return Ok((f64::INFINITY, "atom counts differ after the round trip".into()));
            }
            for (a, b) in pair.mu.atoms().iter().zip(base.atoms()) {
                worst = worst.max((a.0 - b.0).abs()).max((a.1 - b.1).abs());
            }
            for (a, r) in pair.nu.atoms().iter().zip(&roots) {
                worst = worst.max((a.0 - r).abs());
            }
            worst = worst.max((pair.c - fwd.shift.c()).abs());
        }
        Ok((worst, "mu -> u -> mu on random atomic bases, alpha = 1".into()))
    });
    ctx.check("surgery-bound", 1.0, |_| {
        let u = unit_step()?;
        let region = RegionSet::interval(2.0, 3.0)?;
        let v = spectral_shift::dm_surgery(&u, &region)?;
        let mut worst = 0.0f64;
        for x in linspace(-3.0, 6.0, 220) {
            if !region.contains(x) && x != 0.0 && x != 1.0 && x != 2.0 && x != 3.0 {
                worst = worst.max(spectral_shift::k1_difference(&u, &v, x)?.abs());
            }
        }
        let before = spectral_shift::measures_from_shift(&u, &Normalization::Fitted, &InverseOptions::default())?;
        let after = spectral_shift::measures_from_shift(&v, &Normalization::Fitted, &InverseOptions::default())?;
        let off = region.complement();
        for (p, q) in [(&before.mu, &after.mu), (&before.nu, &after.nu)] {
            if !matches!(measures::compare_measures(p, q, &off, 1e-9)?, Classification::Equivalent { .. }) {
                return Ok((f64::INFINITY, "restricted measures are not equivalent".into()));
            }
        }
        Ok((worst, "sup |K1(u - u~)| off O = (2, 3)".into()))
    });
}

fn anderson_suite(ctx: &mut Ctx) {
    let seed: u64 = ctx.rng.gen();
    let uniform = Distribution::Uniform { a: 0.0, b: 1.0 };
    ctx.check("free-chain-of-three", 1e-13, |_| {
        let model = AndersonModel::new(1, 3, Boundary::Dirichlet, Distribution::Constant { c: 0.0 }, seed, vec![])?;
        let s = anderson::spectral_measure_at_site(&model, &anderson::sample_omega(&model, 0), &[1])?;
        let s2 = 2f64.sqrt();
        let mut worst = s.weights[1].abs();
        for (v, e) in s.eigenvalues.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            worst = worst.max((v - e).abs());
        }
        Ok((worst, "eigenvalues 2 - 2 cos(k pi / 4), zero middle weight".into()))
    });
    ctx.check("weights-count-moment", 1e-10, |rng| {
        let mut worst = 0.0f64;
        for dim in [1, 2] {
            let side = if dim == 1 { 60 } else { 8 };
            let model = AndersonModel::new(dim, side, Boundary::Periodic, uniform, seed, vec![])?;
            for index in 0..3 {
                let omega = anderson::sample_omega(&model, index);
                let site: Vec<usize> = (0..dim).map(|_| rng.gen_range(0..side)).collect();
                let s = anderson::spectral_measure_at_site(&model, &omega, &site)?;
                if s.eigenvalues.len() != model.volume() {
                    return Ok((f64::INFINITY, "eigenvalue count differs from L^dim".into()));
                }
                let moment: f64 = s.eigenvalues.iter().zip(&s.weights).map(|(l, w)| l * w).sum();
                let diag = 2.0 * dim as f64 + omega.values[model.site_index(&site)?];
                worst = worst.max((s.weights.iter().sum::<f64>() - 1.0).abs()).max((moment - diag).abs());
            }
        }
        Ok((worst, "weight sum and first moment against the diagonal entry".into()))
    });
    ctx.check("free-laplacian-spectrum", 0.01, |_| {
        let model = AndersonModel::new(1, 400, Boundary::Dirichlet, Distribution::Constant { c: 0.0 }, seed, vec![])?;
        let est = anderson::estimate_deterministic_sets(&model, &EstimateOptions::new(2, 0.01))?;
        Ok((est.sigma_ess_estimate.hausdorff(&RegionSet::interval(0.0, 4.0)?), "Hausdorff distance to [0, 4]".into()))
    });
    ctx.check("determinism-halves-and-edits", 0.2, |rng| {
        let model = AndersonModel::new(1, 200, Boundary::Dirichlet, uniform, seed, vec![vec![100]])?;
        let opts = EstimateOptions::new(30, 0.1);
        let base = anderson::estimate_deterministic_sets(&model, &opts)?;
        let mut worst = base.batch_variation.sigma_ess.max(base.batch_variation.ac_support);
        let edits = (0..3).map(|_| SiteEdit { site: vec![rng.gen_range(0..200)], value: rng.gen_range(-1.0..3.0) }).collect();
        let edited = anderson::estimate_deterministic_sets(&model, &EstimateOptions { edits, ..opts })?;
        worst = worst
            .max(base.sigma_ess_estimate.hausdorff(&edited.sigma_ess_estimate))
            .max(base.ac_support_estimate.hausdorff(&edited.ac_support_estimate));
        Ok((worst, "Hausdorff distances between halves and under 3-site edits".into()))
    });
    ctx.check("no-shared-eigenvalues", 0.0, |_| {
        let model = AndersonModel::new(1, 200, Boundary::Dirichlet, uniform, seed, vec![])?;
        let far = RegionSet::interval(10.0, 11.0)?;
        let mut shared = 0;
        for k in 0..20 {
            let r = anderson::pairwise_checks(&model, 2 * k, 2 * k + 1, &far, 1e-9, 0.1)?;
            if let anderson::SingularityCheck::Checked { shared: s, .. } = r.singularity {
                shared += s;
            }
        }
        Ok((shared as f64, "eigenvalues shared within 1e-9 over 20 pairs".into()))
    });
    ctx.check("disorder-mean", 0.0, |_| {
        let model = AndersonModel::new(1, 1, Boundary::Dirichlet, uniform, seed, vec![])?;
        let n = 10_000;
        let mean = (0..n).map(|i| anderson::sample_omega(&model, i).values[0]).sum::<f64>() / n as f64;
        let band = 3.0 * uniform.variance().sqrt() / 100.0;
        Ok((((mean - 0.5).abs() - band).max(0.0), format!("empirical mean {mean:.5} within 3 sigma / 100")))
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(run("nope", 1), Err(Error::Argument(_))));
    }

    #[test]
    fn every_suite_passes_and_is_deterministic() {
        for suite in SUITES {
            let a = run(suite, 3).unwrap();
            for c in &a.checks {
                assert!(c.passed(), "{}", c.summary_line());
            }
            let b = run(suite, 3).unwrap();
            assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        }
    }
}
