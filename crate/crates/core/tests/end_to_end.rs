use num_complex::Complex64;

use krein_lab::anderson::{self, AndersonModel, Boundary, Distribution, EstimateOptions};
use krein_lab::cauchy::{self, Variant};
use krein_lab::measures::{self, Measure};
use krein_lab::rank_one::{self, RankOneFamily};
use krein_lab::spectral_shift::{self, InverseOptions, Normalization, ShiftOptions};
use krein_lab::{verify, RegionSet};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn grid(lo: f64, hi: f64, cells: usize) -> Vec<f64> {
    (0..=cells).map(|k| lo + (hi - lo) * k as f64 / cells as f64).collect()
}

#[test]
fn json_measure_survives_perturb_shift_reconstruct() {
    let text = r#"{"atoms": [[-1.0, 0.25], [0.5, 0.5], [2.0, 0.25]], "ac": []}"#;
    let base: Measure = serde_json::from_str(text).unwrap();
    let again: Measure = serde_json::from_str(&serde_json::to_string(&base).unwrap()).unwrap();
    assert_eq!(base, again);

    let fam = RankOneFamily::new(base.clone(), 1.0).unwrap();
    let perturbed = rank_one::perturb_discrete(&fam).unwrap();
    let roots = rank_one::secular_roots(&fam).unwrap();
    assert_eq!(perturbed.atoms().len(), 3);
    for (&(x, _), r) in perturbed.atoms().iter().zip(&roots) {
        assert!((x - r).abs() < 1e-10);
    }
    // trace of the rank-one term is alpha
    let shift_sum: f64 = roots.iter().sum::<f64>() - base.atoms().iter().map(|a| a.0).sum::<f64>();
    assert!((shift_sum - 1.0).abs() < 1e-10);

    let fwd = spectral_shift::shift_from_measure(&fam, &grid(-3.0, 5.0, 800), &ShiftOptions::default()).unwrap();
    assert!(fwd.consistency_residual < 1e-6);
    assert!((fwd.shift.integral() / std::f64::consts::PI - 1.0).abs() < 1e-9);

    let pair = spectral_shift::measures_from_shift(&fwd.shift, &Normalization::Fitted, &InverseOptions::default()).unwrap();
    assert_eq!(pair.mu.atoms().len(), 3);
    assert_eq!(pair.nu.atoms().len(), 3);
    for (&(x, m), &(y, n)) in pair.mu.atoms().iter().zip(base.atoms()) {
        assert!((x - y).abs() < 1e-9 && (m - n).abs() < 1e-6, "mu atom ({x}, {m}) vs ({y}, {n})");
    }
    for (&(x, m), &(y, n)) in pair.nu.atoms().iter().zip(perturbed.atoms()) {
        assert!((x - y).abs() < 1e-9 && (m - n).abs() < 1e-6, "nu atom ({x}, {m}) vs ({y}, {n})");
    }
}

#[test]
fn aronszajn_krein_matches_direct_transform_off_axis() {
    let base = measures::build_measure(vec![(0.0, 0.4)], vec![measures::AcPiece::constant(1.0, 3.0, 0.3).unwrap()]).unwrap();
    let fam = RankOneFamily::new(base.clone(), -0.7).unwrap();
    for &z in &[Complex64::new(0.3, 0.5), Complex64::new(2.0, 1.0), Complex64::new(-4.0, 0.1)] {
        let k = cauchy::cauchy_transform(&base, z, Variant::K).unwrap().value;
        let expected = k / (1.0 + std::f64::consts::PI * -0.7 * k);
        let got = rank_one::perturbed_transform(&fam, z).unwrap();
        assert!((got - expected).norm() < 1e-12 * expected.norm().max(1.0));
    }
}

#[test]
fn anderson_estimates_do_not_depend_on_thread_count() {
    let model = AndersonModel::new(
        1,
        120,
        Boundary::Periodic,
        Distribution::Bernoulli { a: 0.0, b: 2.0, p: 0.3 },
        17,
        vec![vec![10], vec![60]],
    )
    .unwrap();
    let opts = EstimateOptions::new(12, 0.1);
    let one = in_pool(1, || anderson::estimate_with_samples(&model, &opts).unwrap());
    let four = in_pool(4, || anderson::estimate_with_samples(&model, &opts).unwrap());
    assert_eq!(serde_json::to_string(&one.0).unwrap(), serde_json::to_string(&four.0).unwrap());
    let rows = |s: &[anderson::SpectralSample]| s.iter().map(|x| x.csv_rows()).collect::<String>();
    assert_eq!(rows(&one.1), rows(&four.1));
    assert!(one.0.max_weight_defect < 1e-10);
}

#[test]
fn verify_report_does_not_depend_on_thread_count() {
    let one = in_pool(1, || serde_json::to_string(&verify::run("all", 5).unwrap()).unwrap());
    let four = in_pool(4, || serde_json::to_string(&verify::run("all", 5).unwrap()).unwrap());
    assert_eq!(one, four);
}

#[test]
fn two_dimensional_free_laplacian_fills_zero_to_eight() {
    let model = AndersonModel::new(2, 30, Boundary::Periodic, Distribution::Constant { c: 0.0 }, 0, vec![]).unwrap();
    let est = anderson::estimate_deterministic_sets(&model, &EstimateOptions::new(2, 0.25)).unwrap();
    let (lo, hi) = est.eigenvalue_range;
    assert!(lo.abs() < 1e-9 && (hi - 8.0).abs() < 1e-9);
    assert!(est.sigma_ess_estimate.hausdorff(&RegionSet::interval(0.0, 8.0).unwrap()) <= 0.5);
}
