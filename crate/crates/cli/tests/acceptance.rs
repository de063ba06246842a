//! Acceptance criteria, one PASS/FAIL line each, with wall-clock limits.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use krein_lab::anderson::{self, AndersonModel, Boundary, Distribution, EstimateOptions, SingularityCheck, SiteEdit};
use krein_lab::cauchy::{self, Variant};
use krein_lab::measures::{self, build_measure, Classification, Measure};
use krein_lab::rank_one::{self, AronszajnDonoghueReport, RankOneFamily};
use krein_lab::spectral_shift::{self, InverseOptions, Normalization, ShiftFunction, ShiftOptions};
use krein_lab::RegionSet;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_atomic(rng: &mut ChaCha8Rng, max_atoms: usize) -> Measure {
    random_separated(rng, max_atoms, 1e-6)
}

fn random_separated(rng: &mut ChaCha8Rng, max_atoms: usize, min_gap: f64) -> Measure {
    loop {
        let n = rng.gen_range(1..=max_atoms);
        let mut atoms: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(0.05..1.0))).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        if atoms.windows(2).any(|w| w[1].0 - w[0].0 < min_gap) {
            continue;
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        atoms.iter_mut().for_each(|a| a.1 /= total);
        return build_measure(atoms, vec![]).unwrap();
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let base = random_atomic(&mut rng, 50);
        let fam = RankOneFamily::new(base, rng.gen_range(-3.0..3.0)).map_err(|e| e.to_string())?;
        let oracle = rank_one::perturb_discrete(&fam).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let z = Complex64::new(rng.gen_range(-6.0..6.0), 10f64.powf(rng.gen_range(-2.0..1.0)));
            let formula = rank_one::perturbed_transform(&fam, z).map_err(|e| e.to_string())?;
            let direct = cauchy::cauchy_transform(&oracle, z, Variant::K).map_err(|e| e.to_string())?.value;
            worst = worst.max((formula - direct).norm() / direct.norm());
        }
    }
    ensure(worst <= 1e-9, || format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.2e} over 100 measures x 100 points"))
}

fn golden_ratio() -> Outcome {
    let base = build_measure(vec![(-1.0, 0.5), (1.0, 0.5)], vec![]).unwrap();
    let fam = RankOneFamily::new(base, 1.0).unwrap();
    let s5 = 5f64.sqrt();
    let exact = [(1.0 - s5) / 2.0, (1.0 + s5) / 2.0];
    // diag(-1, 1) + w w^T with w = (1/sqrt 2, 1/sqrt 2), solved as a quadratic
    let (a, b, d): (f64, f64, f64) = (-0.5, 0.5, 1.5);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let quadratic = [mean - radius, mean + radius];
    let oracle = rank_one::perturb_discrete(&fam).map_err(|e| e.to_string())?;
    let roots = rank_one::secular_roots(&fam).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for k in 0..2 {
        worst = worst
            .max((quadratic[k] - exact[k]).abs())
            .max((oracle.atoms()[k].0 - exact[k]).abs())
            .max((roots[k] - exact[k]).abs());
    }
    ensure(worst <= 1e-10, || format!("deviation {worst:e}"))?;
    Ok(format!("atoms {:.12}, {:.12}; max deviation {worst:.1e}", roots[0], roots[1]))
}

fn aronszajn_donoghue() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut min_distance = f64::INFINITY;
    let mut worst_condition = 0.0f64;
    for k in 0..50 {
        let base = random_separated(&mut rng, 50, 1e-2);
        let alpha = rng.gen_range(-3.0..3.0);
        let beta = rng.gen_range(-3.0..3.0);
        let report = rank_one::verify_aronszajn_donoghue(&base, alpha, beta, 1e-8).map_err(|e| e.to_string())?;
        match report {
            AronszajnDonoghueReport::Checked { min_atom_distance, disjoint, max_condition_error, condition_holds, .. } => {
                ensure(disjoint, || format!("base {k}: atoms {min_atom_distance:e} apart"))?;
                ensure(condition_holds, || format!("base {k}: |K mu(x) + 1/(pi alpha)| = {max_condition_error:e}"))?;
                min_distance = min_distance.min(min_atom_distance);
                worst_condition = worst_condition.max(max_condition_error);
            }
            other => return Err(format!("base {k}: {other:?}")),
        }
    }
    Ok(format!("atom gaps >= 1e-2; min atom distance {min_distance:.2e}, max condition error {worst_condition:.2e}"))
}

fn shift_closed_form() -> Outcome {
    let fam = RankOneFamily::new(Measure::dirac(0.0, 1.0).unwrap(), 1.0).unwrap();
    let cells = 300;
    let (lo, hi) = (-1.0, 2.0);
    let cell = (hi - lo) / cells as f64;
    let fwd = spectral_shift::shift_from_measure(&fam, &linspace(lo, hi, cells), &ShiftOptions::default()).map_err(|e| e.to_string())?;
    let mut sup = 0.0f64;
    for (&x, &v) in fwd.shift.grid().iter().zip(fwd.shift.values()) {
        if x.abs() < 2.0 * cell || (x - 1.0).abs() < 2.0 * cell {
            continue;
        }
        let exact = if x > 0.0 && x < 1.0 { PI } else { 0.0 };
        sup = sup.max((v - exact).abs());
    }
    ensure(sup <= 1e-6, || format!("sup error {sup:e}"))?;
    ensure(fwd.consistency_residual <= 1e-6, || format!("consistency residual {:e}", fwd.consistency_residual))?;
    let pair = spectral_shift::measures_from_shift(&fwd.shift, &Normalization::Fitted, &InverseOptions::default())
        .map_err(|e| e.to_string())?;
    let half_ln2 = 0.5 * 2f64.ln();
    ensure((pair.c - half_ln2).abs() <= 1e-6, || format!("c = {}", pair.c))?;
    ensure(pair.mu.ac_pieces().is_empty() && pair.nu.ac_pieces().is_empty(), || "unexpected density".into())?;
    let (mu, nu) = (pair.mu.atoms(), pair.nu.atoms());
    ensure(mu.len() == 1 && nu.len() == 1, || format!("atoms {mu:?} / {nu:?}"))?;
    ensure(mu[0].0.abs() <= 1e-12 && (mu[0].1 - 1.0).abs() <= 1e-6, || format!("mu = {mu:?}"))?;
    ensure((nu[0].0 - 1.0).abs() <= 1e-12 && (nu[0].1 - 1.0).abs() <= 1e-6, || format!("nu = {nu:?}"))?;
    Ok(format!("sup error {sup:.1e}, residual {:.1e}, c = {:.9}", fwd.consistency_residual, pair.c))
}

fn surgery() -> Outcome {
    let u = ShiftFunction::step(-1.0, 0.0, 1.0, 2.0, PI).unwrap();
    let region = RegionSet::interval(2.0, 3.0).unwrap();
    let v = spectral_shift::dm_surgery(&u, &region).map_err(|e| e.to_string())?;
    let free = region.complement_within(-5.0, 8.0);
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in 0..200 {
        let mut s = (k as f64 + 0.5) / 200.0 * free.length();
        let mut x = 8.0;
        for &(a, b) in free.intervals() {
            if s <= b - a {
                x = a + s;
                break;
            }
            s -= b - a;
        }
        ensure(!region.contains(x), || format!("{x} lies in O"))?;
        worst = worst.max(spectral_shift::k1_difference(&u, &v, x).map_err(|e| e.to_string())?.abs());
        count += 1;
    }
    ensure(worst <= region.length(), || format!("sup |K1(u - u~)| = {worst}"))?;
    let before = spectral_shift::measures_from_shift(&u, &Normalization::Fitted, &InverseOptions::default()).map_err(|e| e.to_string())?;
    let after = spectral_shift::measures_from_shift(&v, &Normalization::Fitted, &InverseOptions::default()).map_err(|e| e.to_string())?;
    let off = region.complement();
    let mut recorded = Vec::new();
    for (name, p, q) in [("mu", &before.mu, &after.mu), ("nu", &before.nu, &after.nu)] {
        match measures::compare_measures(p, q, &off, 1e-9).map_err(|e| e.to_string())? {
            Classification::Equivalent { lower, upper } => recorded.push(format!("{name}: (c, C) = ({lower:.6}, {upper:.6})")),
            other => return Err(format!("{name} restricted pair classified {other:?}")),
        }
    }
    Ok(format!("{count} points, sup |K1(u - u~)| = {worst:.4} <= 1; {}", recorded.join(", ")))
}

fn free_laplacian() -> Outcome {
    let model = AndersonModel::new(1, 1000, Boundary::Dirichlet, Distribution::Constant { c: 0.0 }, 6, vec![]).unwrap();
    let est = anderson::estimate_deterministic_sets(&model, &EstimateOptions::new(2, 0.01)).map_err(|e| e.to_string())?;
    let d = est.sigma_ess_estimate.hausdorff(&RegionSet::interval(0.0, 4.0).unwrap());
    ensure(d <= 0.01, || format!("Hausdorff distance {d}"))?;
    Ok(format!("Hausdorff distance to [0, 4] = {d:.2e}"))
}

fn determinism_shadow() -> Outcome {
    let resolution = 0.05;
    let bound = 2.0 * resolution;
    let uniform = Distribution::Uniform { a: 0.0, b: 1.0 };
    let model = AndersonModel::new(1, 200, Boundary::Dirichlet, uniform, 7, vec![vec![50], vec![150]]).unwrap();
    let opts = EstimateOptions::new(50, resolution);
    let base = anderson::estimate_deterministic_sets(&model, &opts).map_err(|e| e.to_string())?;
    let v = &base.batch_variation;
    ensure(v.sigma_ess <= bound && v.ac_support <= bound, || format!("halves differ: {v:?}"))?;
    let edits = vec![
        SiteEdit { site: vec![10], value: 3.0 },
        SiteEdit { site: vec![100], value: 0.0 },
        SiteEdit { site: vec![190], value: -1.0 },
    ];
    let edited = anderson::estimate_deterministic_sets(&model, &EstimateOptions { edits, ..opts }).map_err(|e| e.to_string())?;
    let ds = base.sigma_ess_estimate.hausdorff(&edited.sigma_ess_estimate);
    let da = base.ac_support_estimate.hausdorff(&edited.ac_support_estimate);
    ensure(ds <= bound && da <= bound, || format!("edits moved the estimates by {ds}, {da}"))?;
    Ok(format!(
        "halves: sigma_ess {:.3}, ac {:.3}; 3-site edits: sigma_ess {ds:.3}, ac {da:.3} (bound {bound})",
        v.sigma_ess, v.ac_support
    ))
}

fn mutual_singularity() -> Outcome {
    let model = AndersonModel::new(1, 200, Boundary::Dirichlet, Distribution::Uniform { a: 0.0, b: 1.0 }, 8, vec![]).unwrap();
    let far = RegionSet::interval(10.0, 11.0).unwrap();
    let mut shared = 0;
    let mut min_distance = f64::INFINITY;
    for k in 0..100 {
        let r = anderson::pairwise_checks(&model, 2 * k, 2 * k + 1, &far, 1e-9, 0.1).map_err(|e| e.to_string())?;
        match r.singularity {
            SingularityCheck::Checked { shared: s, min_distance: d, .. } => {
                shared += s;
                min_distance = min_distance.min(d);
            }
            other => return Err(format!("pair {k}: {other:?}")),
        }
    }
    ensure(shared == 0, || format!("{shared} shared eigenvalues"))?;
    Ok(format!("0 shared eigenvalues over 100 pairs, min distance {min_distance:.2e}"))
}

fn essential_support_example() -> Outcome {
    let m = measures::rational_intervals_measure(20).map_err(|e| e.to_string())?;
    let (lo, hi) = m.support_hull().ok_or("empty measure")?;
    let window = RegionSet::interval(lo - 1.0, hi + 1.0).unwrap();
    let e = measures::essential_support_ac(&m, &window, 1e-3, measures::DEFAULT_ESUPP_THETA, measures::DEFAULT_ESUPP_CEILING)
        .map_err(|e| e.to_string())?;
    let margin = (hi - lo) - e.length();
    ensure(margin >= 0.5, || format!("|esupp| = {}, hull = {}", e.length(), hi - lo))?;
    Ok(format!("|esupp| = {:.4} < hull length {:.4} (margin {margin:.4})", e.length(), hi - lo))
}

fn reproducibility() -> Outcome {
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_krein-lab"))
            .args(["verify", "--suite", "all", "--seed", "1"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("exit status {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)))?;
        Ok(out.stdout)
    };
    let first = run()?;
    let second = run()?;
    ensure(first == second, || "outputs differ".into())?;
    Ok(format!("{} bytes, identical", first.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("Aronszajn-Krein oracle equivalence", Duration::from_secs(30), oracle_equivalence),
        ("golden-ratio family", Duration::from_secs(1), golden_ratio),
        ("Aronszajn-Donoghue", Duration::from_secs(30), aronszajn_donoghue),
        ("spectral shift closed form", Duration::from_secs(5), shift_closed_form),
        ("surgery bound", Duration::from_secs(10), surgery),
        ("free Laplacian spectrum", Duration::from_secs(20), free_laplacian),
        ("determinism shadow", Duration::from_secs(60), determinism_shadow),
        ("mutual singularity shadow", Duration::from_secs(60), mutual_singularity),
        ("essential-support example", Duration::from_secs(10), essential_support_example),
        ("reproducibility", Duration::from_secs(300), reproducibility),
    ];
    let mut failures = 0;
    for (k, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            ensure(elapsed <= *limit, || format!("took {:.2} s, limit {} s", elapsed.as_secs_f64(), limit.as_secs()))?;
            Ok(detail)
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{:.2} s / {} s]", k + 1, elapsed.as_secs_f64(), limit.as_secs()),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{:.2} s / {} s]", k + 1, elapsed.as_secs_f64(), limit.as_secs());
            }
        }
    }
    if failures > 0 {
        println!("{failures} of {} acceptance criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} acceptance criteria passed", criteria.len());
}
