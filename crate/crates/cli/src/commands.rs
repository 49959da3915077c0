//! Subcommand implementations. Each returns the report text.

use kmax_core::asymptotic::{
    gumbel_asymptotic_pvalue, gumbel_weighted_pvalue, spectrum_chisquare, spectrum_from_lambdas,
};
use kmax_core::simulation::{
    chisq_quantiles, gumbel_level_experiment, power_experiment, pvalue_comparison_experiment, tail_ratio_experiment,
    BoundsConfig, BoundsKernel, MethodSpec, PowerGrid, TailRatioConfig,
};
use kmax_core::{
    run_test, Bandwidth, Calibration, KernelFamily, KernelSpec, ScenarioSpec, SigmaKMode, StatisticKind, TestConfig,
};
use serde_json::json;

use crate::args::{
    BoundsArgs, BoundsKernelArg, GumbelArgs, KernelArg, MethodArg, PowerArgs, StatisticArg, TailRatioArgs, TestArgs,
};
use crate::config::{scenario_seed, RunConfig};
use crate::error::{CliError, Result};
use crate::input::parse_spectrum_file;
use crate::report::{json_string, table_string, test_report, to_canonical, Format};

const DEFAULT_PERMUTATIONS: u64 = 200;

/// Merges flags over the optional TOML config.
pub fn build_run_config(a: &TestArgs) -> Result<RunConfig> {
    let base = a.config.as_deref().map(RunConfig::from_toml_file).transpose()?;
    let mut test = base.as_ref().map(|b| b.test.clone()).unwrap_or_else(|| {
        TestConfig::new(
            StatisticKind::MaxMmd,
            KernelSpec::gaussian_median(),
            Calibration::PermMc { permutations: DEFAULT_PERMUTATIONS },
        )
    });
    if let Some(s) = a.statistic {
        test.statistic = match s {
            StatisticArg::Max => StatisticKind::MaxMmd,
            StatisticArg::Weighted => StatisticKind::WeightedMaxMmd,
            StatisticArg::Disco => StatisticKind::Disco,
            StatisticArg::Ecf => StatisticKind::Ecf,
        };
    }
    if a.kernel.is_some() || a.bandwidth.is_some() || a.probs.is_some() {
        let family = match a.kernel.unwrap_or(match test.kernel.family {
            KernelFamily::Gaussian { .. } => KernelArg::Gaussian,
            KernelFamily::Energy => KernelArg::Energy,
            KernelFamily::Linear => KernelArg::Linear,
            KernelFamily::ChiSquare { .. } => KernelArg::Chisquare,
        }) {
            KernelArg::Gaussian => KernelFamily::Gaussian { bandwidth: parse_bandwidth(a.bandwidth.as_deref())? },
            KernelArg::Energy => KernelFamily::Energy,
            KernelArg::Linear => KernelFamily::Linear,
            KernelArg::Chisquare => KernelFamily::ChiSquare { probs: a.probs.clone().unwrap_or_default() },
        };
        test.kernel = KernelSpec { family, bound: test.kernel.bound };
    }
    if let Some(b) = a.bound_b {
        test.kernel.bound = Some(b);
    }
    let permutations = a.m.or(match test.calibration {
        Calibration::PermMc { permutations } => Some(permutations),
        _ => None,
    });
    if let Some(m) = a.method {
        test.calibration = match m {
            MethodArg::Perm => Calibration::PermExact,
            MethodArg::Mc => Calibration::PermMc { permutations: permutations.unwrap_or(DEFAULT_PERMUTATIONS) },
            MethodArg::Bobkov => Calibration::Bobkov,
            MethodArg::Mcdiarmid => Calibration::Mcdiarmid,
            MethodArg::Gumbel => Calibration::Gumbel { spectrum: None },
            MethodArg::Phi2 => Calibration::Phi2,
            MethodArg::PhiK => Calibration::PhiK { mode: SigmaKMode::SortedTopMean },
        };
    } else if let (Some(m), Calibration::PermMc { permutations }) = (a.m, &mut test.calibration) {
        *permutations = m;
    }
    match &mut test.calibration {
        Calibration::Gumbel { spectrum } => {
            if let Some(path) = &a.spectrum {
                *spectrum = Some(parse_spectrum_file(path)?);
            }
        }
        Calibration::PhiK { mode } if a.max_tilde => *mode = SigmaKMode::MaxTilde,
        _ => {}
    }
    if let Some(alpha) = a.alpha {
        test.alpha = alpha;
    }
    if let Some(seed) = a.seed {
        test.seed = seed;
    }

    let (mut input, mut scenario) = base.map(|b| (b.input, b.scenario)).unwrap_or((None, None));
    if let Some(path) = &a.input {
        input = Some(path.clone());
        scenario = None;
    }
    if let Some(sc) = a.scenario {
        input = None;
        let prev = scenario.take();
        scenario = Some(ScenarioSpec::new(
            sc,
            a.k.or(prev.as_ref().map(|p| p.k)).unwrap_or(2),
            a.n.or(prev.as_ref().map(|p| p.n)).unwrap_or(10),
            a.d.or(prev.as_ref().map(|p| p.d)).unwrap_or(5),
            scenario_seed(test.seed),
        ));
    } else if let Some(spec) = &mut scenario {
        spec.k = a.k.unwrap_or(spec.k);
        spec.n = a.n.unwrap_or(spec.n);
        spec.d = a.d.unwrap_or(spec.d);
        if a.seed.is_some() {
            spec.seed = scenario_seed(test.seed);
        }
    }
    let cfg = RunConfig { input, scenario, test };
    cfg.validate()?;
    Ok(cfg)
}

fn parse_bandwidth(raw: Option<&str>) -> Result<Bandwidth> {
    match raw {
        None | Some("median") => Ok(Bandwidth::MedianHeuristic),
        Some(v) => v
            .parse::<f64>()
            .ok()
            .filter(|s| *s > 0.0 && s.is_finite())
            .map(Bandwidth::Fixed)
            .ok_or_else(|| CliError::Config(format!("bandwidth must be 'median' or a positive number, got '{v}'"))),
    }
}

pub fn cmd_test(a: &TestArgs) -> Result<String> {
    let mut cfg = build_run_config(a)?;
    let data = cfg.load_data()?;
    if let KernelFamily::ChiSquare { probs } = &mut cfg.test.kernel.family {
        if probs.is_empty() {
            let m = data.levels().ok_or_else(|| CliError::Config("chisquare kernel needs a `level` column".into()))?;
            *probs = vec![1.0 / m as f64; m];
        }
    }
    log::info!("running {} on {} observations in {} groups", cfg.test.label(), data.len(), data.num_groups());
    let result = run_test(&data, &cfg.test)?;
    if a.format == Format::Csv {
        return Err(CliError::Config("test reports are JSON only".into()));
    }
    json_string(&test_report(&result, &cfg)?)
}

pub fn cmd_power(a: &PowerArgs) -> Result<String> {
    let mut grid = if a.full { PowerGrid::full_scale(a.seed) } else { PowerGrid::desk_scale(a.seed) };
    if !a.scenario.is_empty() {
        grid.scenarios = a.scenario.clone();
    }
    if !a.k.is_empty() {
        grid.ks = a.k.clone();
    }
    grid.n = a.n.unwrap_or(grid.n);
    grid.d = a.d.unwrap_or(grid.d);
    grid.reps = a.reps.unwrap_or(grid.reps);
    grid.permutations = a.m.unwrap_or(grid.permutations);
    grid.alpha = a.alpha.unwrap_or(grid.alpha);
    let methods = if a.methods.is_empty() {
        MethodSpec::standard_set(grid.permutations)
    } else {
        a.methods.iter().map(|m| MethodSpec::by_name(m, grid.permutations)).collect::<kmax_core::Result<_>>()?
    };
    log::info!(
        "power grid: {} scenarios x {} K values x {} methods, {} replicates",
        grid.scenarios.len(),
        grid.ks.len(),
        methods.len(),
        grid.reps
    );
    table_string(&power_experiment(&grid, &methods)?, a.format)
}

pub fn cmd_bounds(a: &BoundsArgs) -> Result<String> {
    let kernel = match a.kernel {
        BoundsKernelArg::Energy => BoundsKernel::Energy,
        BoundsKernelArg::Linear => BoundsKernel::Linear,
    };
    let mut cfg = BoundsConfig::standard(kernel, a.seed);
    if !a.n_total.is_empty() {
        cfg.n_grid = a.n_total.clone();
    }
    cfg.bound = a.bound_b.unwrap_or(cfg.bound);
    cfg.d = a.d.unwrap_or(cfg.d);
    cfg.reps = a.reps.unwrap_or(cfg.reps);
    table_string(&pvalue_comparison_experiment(&cfg)?, a.format)
}

pub fn cmd_tailratio(a: &TailRatioArgs) -> Result<String> {
    if a.levels < 2 {
        return Err(CliError::Config("tail ratio needs at least 2 levels".into()));
    }
    let cfg = TailRatioConfig {
        m: a.levels,
        n: a.n,
        x_grid: chisq_quantiles(a.levels - 1, &a.probs)?,
        reps: a.reps,
        nsim: a.nsim,
        seed: a.seed,
    };
    table_string(&tail_ratio_experiment(&cfg)?, a.format)
}

pub fn cmd_gumbel(a: &GumbelArgs) -> Result<String> {
    if let Some(m) = a.simulate {
        let est = gumbel_level_experiment(m, a.n, a.k, a.reps, a.alpha, a.seed)?;
        return table_string(&[est], a.format);
    }
    let spec = match (&a.spectrum, &a.probs) {
        (Some(path), _) => spectrum_from_lambdas(&parse_spectrum_file(path)?)?,
        (None, Some(probs)) => spectrum_chisquare(probs)?,
        (None, None) => return Err(CliError::Config("give --spectrum or --probs".into())),
    };
    let value = a.value.ok_or_else(|| CliError::Config("--value is required".into()))?;
    let p_value = if a.weighted {
        gumbel_weighted_pvalue(value, a.k, &spec)?
    } else {
        gumbel_asymptotic_pvalue(value * value, &vec![a.n; a.k], &spec)?
    };
    if a.format == Format::Csv {
        return Err(CliError::Config("gumbel p-values are JSON only".into()));
    }
    let report = json!({
        "statistic": value,
        "weighted": a.weighted,
        "p_value": p_value,
        "K": a.k,
        "n": a.n,
        "lambda1": spec.lambda1(),
        "mu1": spec.mu1(),
        "kappa": spec.kappa(),
    });
    json_string(&to_canonical(&report)?)
}
