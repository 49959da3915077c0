//! Replicated experiments. Replicate `r` of every harness draws its data from
//! seeds derived from `(seed, r)`, so tables depend on the seed alone.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::generators::{gen_truncnorm, LaplaceKind};
use super::scenario::{make_scenario, Scenario, ScenarioSpec};
use crate::asymptotic::weighted_chisq_survival_mc;
use crate::concentration::{log_p_bobkov, log_p_mcdiarmid, sigma_hat2};
use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, KernelSpec};
use crate::pipeline::{run_test, Calibration, TestConfig};
use crate::rng::{self, derive_seed};
use crate::statistics::{max_mmd, weighted_max_from_sums, BlockSums, StatisticKind};

const DATA_TAG: u64 = 0;
const TEST_TAG: u64 = 1;

/// A test procedure under a display label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub label: String,
    pub config: TestConfig,
}

impl MethodSpec {
    pub fn new(label: impl Into<String>, config: TestConfig) -> Self {
        MethodSpec { label: label.into(), config }
    }

    /// Max statistic, Gaussian kernel with median-heuristic bandwidth.
    pub fn max_gau(permutations: u64) -> Self {
        Self::permutation("max_gau", StatisticKind::MaxMmd, KernelSpec::gaussian_median(), permutations)
    }

    /// Max statistic, energy-distance kernel.
    pub fn max_eng(permutations: u64) -> Self {
        Self::permutation("max_eng", StatisticKind::MaxMmd, KernelSpec::energy(), permutations)
    }

    pub fn disco(permutations: u64) -> Self {
        Self::permutation("disco", StatisticKind::Disco, KernelSpec::energy(), permutations)
    }

    pub fn ecf(permutations: u64) -> Self {
        Self::permutation("ecf", StatisticKind::Ecf, KernelSpec::energy(), permutations)
    }

    /// The four procedures compared on the sparse alternatives.
    pub fn standard_set(permutations: u64) -> Vec<Self> {
        vec![
            Self::max_gau(permutations),
            Self::max_eng(permutations),
            Self::disco(permutations),
            Self::ecf(permutations),
        ]
    }

    pub fn by_name(name: &str, permutations: u64) -> Result<Self> {
        match name {
            "max_gau" => Ok(Self::max_gau(permutations)),
            "max_eng" => Ok(Self::max_eng(permutations)),
            "disco" => Ok(Self::disco(permutations)),
            "ecf" => Ok(Self::ecf(permutations)),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }

    fn permutation(label: &str, statistic: StatisticKind, kernel: KernelSpec, permutations: u64) -> Self {
        Self::new(label, TestConfig::new(statistic, kernel, Calibration::PermMc { permutations }))
    }
}

/// Rejection frequency of one method on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub method: String,
    pub scenario: Scenario,
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub power: f64,
    pub mc_se: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Binomial standard error `sqrt(p (1 - p) / reps)`.
pub fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// Fraction of `reps` fresh datasets on which `method` rejects at its alpha.
/// Replicate `r` draws data from `derive_seed(spec.seed, [r, 0])` whatever the
/// method, so methods evaluated with the same spec see the same data.
pub fn estimate_power(spec: &ScenarioSpec, method: &MethodSpec, reps: usize) -> Result<PowerEstimate> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    spec.validate()?;
    let rejections = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let data_spec = ScenarioSpec { seed: derive_seed(spec.seed, &[r, DATA_TAG]), ..spec.clone() };
            let data = make_scenario(&data_spec)?;
            let cfg = method.config.clone().with_seed(derive_seed(spec.seed, &[r, TEST_TAG]));
            Ok(run_test(&data, &cfg)?.rejects(cfg.alpha))
        })
        .collect::<Result<Vec<bool>>>()?;
    let power = rejections.iter().filter(|&&b| b).count() as f64 / reps as f64;
    Ok(PowerEstimate {
        method: method.label.clone(),
        scenario: spec.scenario,
        k: spec.k,
        n: spec.n,
        d: spec.d,
        power,
        mc_se: binomial_se(power, reps),
        reps,
        seed: spec.seed,
    })
}

/// Grid for [`power_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerGrid {
    pub scenarios: Vec<Scenario>,
    pub ks: Vec<usize>,
    pub n: usize,
    pub d: usize,
    pub reps: usize,
    pub permutations: u64,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default)]
    pub laplace: LaplaceKind,
}

impl PowerGrid {
    /// Reduced grid: `K` in {2, 20, 40}, 200 replicates, 200 permutations.
    pub fn desk_scale(seed: u64) -> Self {
        PowerGrid {
            scenarios: Scenario::ALTERNATIVES.to_vec(),
            ks: vec![2, 20, 40],
            n: 10,
            d: 5,
            reps: 200,
            permutations: 200,
            alpha: 0.05,
            seed,
            laplace: LaplaceKind::Marginal,
        }
    }

    /// Full grid: `K` up to 100 and 800 replicates.
    pub fn full_scale(seed: u64) -> Self {
        PowerGrid { ks: vec![2, 20, 40, 60, 80, 100], reps: 800, ..Self::desk_scale(seed) }
    }

    /// Seed of the cell `(scenario, K)`, shared by all methods.
    pub fn cell_seed(&self, scenario: Scenario, k: usize) -> u64 {
        derive_seed(self.seed, &[scenario as u64, k as u64])
    }
}

/// Power of every method at every `(scenario, K)` cell, in grid order.
pub fn power_experiment(grid: &PowerGrid, methods: &[MethodSpec]) -> Result<Vec<PowerEstimate>> {
    let mut rows = Vec::new();
    for &scenario in &grid.scenarios {
        for &k in &grid.ks {
            let spec = ScenarioSpec {
                scenario,
                k,
                n: grid.n,
                d: grid.d,
                seed: grid.cell_seed(scenario, k),
                laplace: grid.laplace,
            };
            for m in methods {
                let mut m = m.clone();
                if let Calibration::PermMc { permutations } = &mut m.config.calibration {
                    *permutations = grid.permutations;
                }
                m.config.alpha = grid.alpha;
                rows.push(estimate_power(&spec, &m, grid.reps)?);
            }
        }
    }
    Ok(rows)
}

/// Kernels compared in the bound experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsKernel {
    Energy,
    Linear,
}

impl BoundsKernel {
    pub fn spec(&self) -> KernelSpec {
        match self {
            BoundsKernel::Energy => KernelSpec::energy(),
            BoundsKernel::Linear => KernelSpec::linear(),
        }
    }

    /// Kernel bound used for the McDiarmid p-value: 10 for energy, 100 for linear.
    pub fn default_bound(&self) -> f64 {
        match self {
            BoundsKernel::Energy => 10.0,
            BoundsKernel::Linear => 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsConfig {
    pub kernel: BoundsKernel,
    /// Total sample sizes; each must be even.
    pub n_grid: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Dimension of the truncated normal samples.
    pub d: usize,
    pub bound: f64,
}

impl BoundsConfig {
    /// `N` in {100, ..., 1000}, 200 replicates, `d = 1`, the kernel's default bound.
    pub fn standard(kernel: BoundsKernel, seed: u64) -> Self {
        BoundsConfig {
            kernel,
            n_grid: (1..=10).map(|i| 100 * i).collect(),
            reps: 200,
            seed,
            d: 1,
            bound: kernel.default_bound(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub kernel: BoundsKernel,
    #[serde(rename = "N")]
    pub n_total: usize,
    pub mean_p_bobkov: f64,
    pub mean_p_mcdiarmid: f64,
    pub mean_log_p_bobkov: f64,
    pub mean_log_p_mcdiarmid: f64,
    pub mean_sigma2: f64,
    pub bound: f64,
    pub reps: usize,
}

/// Means of both p-value bounds and of the variance proxy for two truncated
/// normals with locations +1 and -1, unit variance, support [-5, 5].
pub fn pvalue_comparison_experiment(cfg: &BoundsConfig) -> Result<Vec<BoundsRow>> {
    if cfg.reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let kernel = cfg.kernel.spec();
    cfg.n_grid
        .iter()
        .map(|&total| {
            if total % 2 != 0 || total < 2 {
                return Err(Error::InvalidArgument(format!("N must be even and positive, got {total}")));
            }
            let half = total / 2;
            let stats = (0..cfg.reps as u64)
                .into_par_iter()
                .map(|r| {
                    let base = derive_seed(cfg.seed, &[total as u64, r]);
                    let groups = [1.0, -1.0]
                        .iter()
                        .enumerate()
                        .map(|(k, &mu)| {
                            gen_truncnorm(half * cfg.d, mu, 1.0, (-5.0, 5.0), derive_seed(base, &[k as u64]))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let data = GroupedDataset::from_groups(groups, cfg.d)?;
                    let g = gram_matrix(&kernel, &data)?;
                    let v = max_mmd(&g, data.index())?.value;
                    let s2 = sigma_hat2(&g)?;
                    let sizes = [half, half];
                    Ok((log_p_bobkov(v, s2, &sizes)?, log_p_mcdiarmid(v, Some(cfg.bound), &sizes)?, s2))
                })
                .collect::<Result<Vec<_>>>()?;
            let m = cfg.reps as f64;
            let mean = |f: &dyn Fn(&(f64, f64, f64)) -> f64| stats.iter().map(f).sum::<f64>() / m;
            Ok(BoundsRow {
                kernel: cfg.kernel,
                n_total: total,
                mean_p_bobkov: mean(&|s| s.0.exp()),
                mean_p_mcdiarmid: mean(&|s| s.1.exp()),
                mean_log_p_bobkov: mean(&|s| s.0),
                mean_log_p_mcdiarmid: mean(&|s| s.1),
                mean_sigma2: mean(&|s| s.2),
                bound: cfg.bound,
                reps: cfg.reps,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRatioConfig {
    /// Number of levels.
    pub m: usize,
    /// Per-group sample size.
    pub n: usize,
    pub x_grid: Vec<f64>,
    pub reps: usize,
    /// Draws for the reference weighted chi-square tail.
    pub nsim: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRatioRow {
    pub x: f64,
    pub empirical: f64,
    pub reference: f64,
    pub reference_se: f64,
    pub ratio: f64,
}

/// Upper quantiles of the chi-square law with `df` degrees of freedom at the
/// lower-tail probabilities `probs`.
pub fn chisq_quantiles(df: usize, probs: &[f64]) -> Result<Vec<f64>> {
    let law = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(probs.iter().map(|&p| law.inverse_cdf(p)).collect())
}

fn uniform_level_counts(m: usize, n: usize, seed: u64) -> Vec<u64> {
    let mut rng = rng::stream(seed, 0);
    let mut counts = vec![0u64; m];
    for _ in 0..n {
        counts[rng.random_range(0..m)] += 1;
    }
    counts
}

/// Null tail of `n1 n2 / N V^2_12` under the chi-square kernel with uniform
/// probabilities, against the tail of a sum of `m - 1` unit-weight
/// chi-square(1) variables, at each `x` in the grid.
pub fn tail_ratio_experiment(cfg: &TailRatioConfig) -> Result<Vec<TailRatioRow>> {
    if cfg.m < 2 || cfg.n < 1 || cfg.reps == 0 {
        return Err(Error::InvalidArgument("tail ratio needs m >= 2, n >= 1 and reps >= 1".into()));
    }
    let probs = vec![1.0 / cfg.m as f64; cfg.m];
    let stats = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| {
            let counts: Vec<Vec<u64>> =
                (0..2).map(|k| uniform_level_counts(cfg.m, cfg.n, derive_seed(cfg.seed, &[r, k]))).collect();
            Ok(weighted_max_from_sums(&BlockSums::from_level_counts(&counts, &probs)?).0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lambdas = vec![1.0; cfg.m - 1];
    let reference_seed = derive_seed(cfg.seed, &[u64::MAX]);
    cfg.x_grid
        .iter()
        .map(|&x| {
            let empirical = stats.iter().filter(|&&s| s >= x).count() as f64 / cfg.reps as f64;
            let reference = weighted_chisq_survival_mc(&lambdas, x, cfg.nsim, reference_seed)?;
            Ok(TailRatioRow {
                x,
                empirical,
                reference: reference.estimate,
                reference_se: reference.std_error,
                ratio: empirical / reference.estimate,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEstimate {
    pub rate: f64,
    pub mc_se: f64,
    pub reps: usize,
}

/// Rejection rate of the asymptotic Gumbel test with the chi-square kernel on
/// null data: `K` groups of `n` uniform draws over `m` levels.
pub fn gumbel_level_experiment(
    m: usize,
    n: usize,
    k: usize,
    reps: usize,
    alpha: f64,
    seed: u64,
) -> Result<LevelEstimate> {
    if reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let cfg = TestConfig::new(
        StatisticKind::MaxMmd,
        KernelSpec::chi_square_uniform(m)?,
        Calibration::Gumbel { spectrum: None },
    )
    .with_alpha(alpha);
    let rejections = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(derive_seed(seed, &[r]), 0);
            let values: Vec<usize> = (0..n * k).map(|_| rng.random_range(1..=m)).collect();
            let data = GroupedDataset::from_levels(m, values, vec![n; k])?;
            Ok(run_test(&data, &cfg)?.rejects(alpha))
        })
        .collect::<Result<Vec<bool>>>()?;
    let rate = rejections.iter().filter(|&&b| b).count() as f64 / reps as f64;
    Ok(LevelEstimate { rate, mc_se: binomial_se(rate, reps), reps })
}
