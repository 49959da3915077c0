//! Monte-Carlo and level checks against closed forms and simulation.

use kmax_core::asymptotic::{spectrum_from_lambdas, weighted_chisq_survival_mc, zolotarev_tail_approx};
use kmax_core::concentration::{ksample_tail_bound, variance_proxy};
use kmax_core::permutation::{
    critical_value_from, permutation_pvalue_exact, permutation_pvalue_mc, permuted_statistics,
};
use kmax_core::rng::derive_seed;
use kmax_core::simulation::{binomial_se, make_scenario};
use kmax_core::{
    gram_matrix, max_mmd, run_test, Calibration, GroupedDataset, KernelSpec, Scenario, ScenarioSpec, SigmaKMode,
    StatisticKind, TestConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn single_eigenvalue_survival_matches_chi_square() {
    for (lambda, x) in [(1.0, 0.5), (1.0, 2.7), (2.0, 3.0), (0.5, 1.0)] {
        let est = weighted_chisq_survival_mc(&[lambda], x, 200_000, 11).unwrap();
        let exact = ChiSquared::new(1.0).unwrap().sf(x / lambda);
        assert!((est.estimate - exact).abs() <= 3.0 * est.std_error, "lambda {lambda}, x {x}: {est:?} vs {exact}");
    }
    // two equal eigenvalues give an exponential tail
    let est = weighted_chisq_survival_mc(&[2.0, 2.0], 5.0, 200_000, 12).unwrap();
    let exact = (-5.0f64 / 4.0).exp();
    assert!((est.estimate - exact).abs() <= 3.0 * est.std_error);
}

#[test]
fn zolotarev_ratio_band() {
    let spec = spectrum_from_lambdas(&[1.0]).unwrap();
    for x in [8.0, 10.0, 12.0, 14.0, 16.0] {
        let exact = ChiSquared::new(1.0).unwrap().sf(x);
        let ratio = exact / zolotarev_tail_approx(x, &spec).unwrap();
        assert!((0.8..=1.3).contains(&ratio), "x {x}: ratio {ratio}");
    }
    let mc = weighted_chisq_survival_mc(&[1.0], 8.0, 2_000_000, 5).unwrap();
    let ratio = mc.estimate / zolotarev_tail_approx(8.0, &spec).unwrap();
    assert!((0.8..=1.3).contains(&ratio), "mc ratio {ratio}");
}

#[test]
fn monte_carlo_pvalue_converges_to_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..3 {
        let groups: Vec<Vec<f64>> =
            (0..2).map(|k| (0..5).map(|_| rng.random::<f64>() + 0.3 * k as f64).collect()).collect();
        let ds = GroupedDataset::from_groups(groups, 1).unwrap();
        let g = gram_matrix(&KernelSpec::energy(), &ds).unwrap();
        let exact = permutation_pvalue_exact(&g, ds.index(), StatisticKind::MaxMmd).unwrap();
        let mc = permutation_pvalue_mc(&g, ds.index(), 100_000, case, StatisticKind::MaxMmd).unwrap();
        assert!((mc - exact).abs() <= 0.01, "case {case}: {mc} vs {exact}");
    }
}

#[test]
fn ksample_bound_dominates_permutation_tail() {
    let spec = ScenarioSpec::new(Scenario::NullUniformity, 3, 8, 2, 31);
    let ds = make_scenario(&spec).unwrap();
    let g = gram_matrix(&KernelSpec::gaussian(1.0).unwrap(), &ds).unwrap();
    let proxy = variance_proxy(&g, ds.index(), SigmaKMode::SortedTopMean).unwrap();
    let stats = permuted_statistics(&g, ds.index(), 10_000, 32, StatisticKind::MaxMmd).unwrap();
    for t in [0.0, 0.05, 0.1, 0.2, 0.3, 0.5] {
        let freq = stats.iter().filter(|&&v| v >= proxy.drift() + t).count() as f64 / stats.len() as f64;
        let bound = ksample_tail_bound(t, &ds.sizes(), proxy.value).unwrap();
        assert!(freq <= bound + 3.0 * binomial_se(freq.max(1e-4), stats.len()), "t {t}: {freq} > {bound}");
    }
}

fn null_rejection_rate(k: usize, n: usize, reps: usize, cfg: &TestConfig, seed: u64) -> f64 {
    let hits = (0..reps as u64)
        .filter(|&r| {
            let data =
                make_scenario(&ScenarioSpec::new(Scenario::NullUniformity, k, n, 5, derive_seed(seed, &[r]))).unwrap();
            run_test(&data, &cfg.clone().with_seed(derive_seed(seed, &[r, 1]))).unwrap().rejects(cfg.alpha)
        })
        .count();
    hits as f64 / reps as f64
}

#[test]
fn permutation_level_across_statistics() {
    let reps = 500;
    for statistic in [StatisticKind::MaxMmd, StatisticKind::WeightedMaxMmd, StatisticKind::Disco, StatisticKind::Ecf] {
        let cfg = TestConfig::new(statistic, KernelSpec::energy(), Calibration::PermMc { permutations: 100 });
        let rate = null_rejection_rate(4, 8, reps, &cfg, 41);
        assert!(rate <= 0.05 + 2.0 * binomial_se(0.05, reps), "{}: {rate}", statistic.name());
    }
}

#[test]
fn threshold_tests_are_conservative() {
    let reps = 500;
    let phi2 = TestConfig::new(StatisticKind::MaxMmd, KernelSpec::gaussian_median(), Calibration::Phi2);
    let rate = null_rejection_rate(2, 20, reps, &phi2, 51);
    assert!(rate <= 0.05 + 2.0 * binomial_se(0.05, reps), "phi2: {rate}");
    let phik = TestConfig::new(
        StatisticKind::MaxMmd,
        KernelSpec::gaussian_median(),
        Calibration::PhiK { mode: SigmaKMode::SortedTopMean },
    );
    let rate = null_rejection_rate(5, 10, reps, &phik, 52);
    assert!(rate <= 0.05 + 2.0 * binomial_se(0.05, reps), "phiK: {rate}");
}

#[test]
fn critical_value_agrees_with_pvalue() {
    let reps = 300;
    let mut agree = 0;
    for r in 0..reps {
        let data = make_scenario(&ScenarioSpec::new(Scenario::NormalLocation, 3, 6, 2, 60 + r)).unwrap();
        let g = gram_matrix(&KernelSpec::energy(), &data).unwrap();
        let observed = max_mmd(&g, data.index()).unwrap().value;
        let mut values = permuted_statistics(&g, data.index(), 99, r, StatisticKind::MaxMmd).unwrap();
        let p = (1 + values.iter().filter(|&&v| v >= observed).count()) as f64 / 100.0;
        values.push(observed);
        let c = critical_value_from(&values, 0.05).unwrap();
        if (observed > c) == (p <= 0.05) {
            agree += 1;
        }
    }
    assert_eq!(agree, reps);
}
