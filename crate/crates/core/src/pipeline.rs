//! One test run: matrix, statistic and calibration on a grouped dataset.

use serde::{Deserialize, Serialize};

use crate::asymptotic::{
    gumbel_asymptotic_pvalue, gumbel_weighted_pvalue, spectrum_chisquare, spectrum_from_lambdas, EigenSpectrum,
};
use crate::baselines::{disco_matrix, ecf_matrix, DISCO_EXPONENT, ECF_ALPHA};
use crate::concentration::{
    concentration_pvalue, p_bobkov, p_mcdiarmid, phik_threshold, sigma_hat2, sigma_k2, SigmaKMode,
};
use crate::dataset::{GroupedDataset, Observations};
use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, GramMatrix, KernelFamily, KernelSpec};
use crate::permutation::{observed_statistic, permutation_pvalue_exact, permutation_pvalue_mc};
use crate::statistics::{block_sums, max_mmd_squared, weighted_max_from_sums, BlockSums, StatisticKind};

/// How a p-value is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Calibration {
    PermExact,
    PermMc {
        permutations: u64,
    },
    Bobkov,
    Mcdiarmid,
    /// Asymptotic Gumbel limit; `spectrum` may be omitted for the chi-square
    /// kernel, whose spectrum is known.
    Gumbel {
        spectrum: Option<Vec<f64>>,
    },
    Phi2,
    PhiK {
        mode: SigmaKMode,
    },
}

/// Method tag reported with a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodTag {
    PermExact,
    PermMc,
    Bobkov,
    Mcdiarmid,
    Gumbel,
    Phi2,
    PhiK,
}

impl MethodTag {
    pub fn name(&self) -> &'static str {
        match self {
            MethodTag::PermExact => "perm_exact",
            MethodTag::PermMc => "perm_mc",
            MethodTag::Bobkov => "bobkov",
            MethodTag::Mcdiarmid => "mcdiarmid",
            MethodTag::Gumbel => "gumbel",
            MethodTag::Phi2 => "phi2",
            MethodTag::PhiK => "phi_k",
        }
    }
}

impl Calibration {
    pub fn tag(&self) -> MethodTag {
        match self {
            Calibration::PermExact => MethodTag::PermExact,
            Calibration::PermMc { .. } => MethodTag::PermMc,
            Calibration::Bobkov => MethodTag::Bobkov,
            Calibration::Mcdiarmid => MethodTag::Mcdiarmid,
            Calibration::Gumbel { .. } => MethodTag::Gumbel,
            Calibration::Phi2 => MethodTag::Phi2,
            Calibration::PhiK { .. } => MethodTag::PhiK,
        }
    }
}

/// Everything needed to reproduce a single test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub statistic: StatisticKind,
    /// Kernel for the MMD statistics; ignored by DISCO and ECF.
    pub kernel: KernelSpec,
    pub calibration: Calibration,
    pub alpha: f64,
    pub seed: u64,
    pub disco_exponent: f64,
    pub ecf_alpha: f64,
}

impl TestConfig {
    pub fn new(statistic: StatisticKind, kernel: KernelSpec, calibration: Calibration) -> Self {
        TestConfig {
            statistic,
            kernel,
            calibration,
            alpha: 0.05,
            seed: 0,
            disco_exponent: DISCO_EXPONENT,
            ecf_alpha: ECF_ALPHA,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Short identifier such as `max_mmd[gaussian]/perm_mc`.
    pub fn label(&self) -> String {
        let stat = match self.statistic {
            StatisticKind::MaxMmd | StatisticKind::WeightedMaxMmd => {
                format!("{}[{}]", self.statistic.name(), self.kernel.name())
            }
            _ => self.statistic.name().to_string(),
        };
        format!("{stat}/{}", self.calibration.tag().name())
    }
}

/// Outcome of one test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub statistic_kind: StatisticKind,
    pub p_value: f64,
    pub method: MethodTag,
    pub argmax_pair: Option<(usize, usize)>,
    pub num_permutations: Option<u64>,
    pub seed: Option<u64>,
    /// Gaussian bandwidth actually used.
    pub bandwidth: Option<f64>,
    /// Rejection threshold at `alpha` for the threshold tests.
    pub threshold: Option<f64>,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

fn needs_kernel(kind: StatisticKind) -> bool {
    matches!(kind, StatisticKind::MaxMmd | StatisticKind::WeightedMaxMmd)
}

fn build_matrix(data: &GroupedDataset, cfg: &TestConfig) -> Result<GramMatrix> {
    match cfg.statistic {
        StatisticKind::MaxMmd | StatisticKind::WeightedMaxMmd => gram_matrix(&cfg.kernel, data),
        StatisticKind::Disco => disco_matrix(data, cfg.disco_exponent),
        StatisticKind::Ecf => ecf_matrix(data, cfg.ecf_alpha),
    }
}

fn argmax_of(kind: StatisticKind, s: &BlockSums) -> Option<(usize, usize)> {
    match kind {
        StatisticKind::MaxMmd => Some(max_mmd_squared(s).1),
        StatisticKind::WeightedMaxMmd => Some(weighted_max_from_sums(s).1),
        _ => None,
    }
}

fn require_max(cfg: &TestConfig) -> Result<()> {
    if cfg.statistic != StatisticKind::MaxMmd {
        return Err(Error::Unsupported(format!(
            "{} calibration applies to the max_mmd statistic, not {}",
            cfg.calibration.tag().name(),
            cfg.statistic.name()
        )));
    }
    Ok(())
}

fn gumbel_spectrum(cfg: &TestConfig) -> Result<EigenSpectrum> {
    match (&cfg.calibration, &cfg.kernel.family) {
        (Calibration::Gumbel { spectrum: Some(l) }, _) => spectrum_from_lambdas(l),
        (Calibration::Gumbel { spectrum: None }, KernelFamily::ChiSquare { probs }) => spectrum_chisquare(probs),
        _ => Err(Error::InvalidArgument("gumbel calibration needs an eigenvalue spectrum".into())),
    }
}

fn gumbel_pvalue(cfg: &TestConfig, s: &BlockSums) -> Result<(f64, f64)> {
    let spec = gumbel_spectrum(cfg)?;
    match cfg.statistic {
        StatisticKind::MaxMmd => {
            let v2 = max_mmd_squared(s).0;
            Ok((v2.sqrt(), gumbel_asymptotic_pvalue(v2, s.sizes(), &spec)?))
        }
        StatisticKind::WeightedMaxMmd => {
            let w = weighted_max_from_sums(s).0;
            Ok((w, gumbel_weighted_pvalue(w, s.num_groups(), &spec)?))
        }
        _ => Err(Error::Unsupported(format!("gumbel calibration for {}", cfg.statistic.name()))),
    }
}

/// Runs the configured test on `data`.
pub fn run_test(data: &GroupedDataset, cfg: &TestConfig) -> Result<TestResult> {
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    let kernel = if needs_kernel(cfg.statistic) { Some(cfg.kernel.resolve(data)?) } else { None };
    let bandwidth = kernel.as_ref().and_then(KernelSpec::bandwidth);
    let mut result = TestResult {
        statistic: 0.0,
        statistic_kind: cfg.statistic,
        p_value: 1.0,
        method: cfg.calibration.tag(),
        argmax_pair: None,
        num_permutations: None,
        seed: None,
        bandwidth,
        threshold: None,
    };

    // chi-square block sums come straight from level counts, so the Gumbel
    // path never forms the N x N matrix
    if let (
        Calibration::Gumbel { .. },
        Some(KernelSpec { family: KernelFamily::ChiSquare { probs }, .. }),
        Observations::Discrete { .. },
    ) = (&cfg.calibration, &kernel, data.observations())
    {
        let s = BlockSums::from_level_counts(&data.level_counts().expect("discrete data"), probs)?;
        let (stat, p) = gumbel_pvalue(cfg, &s)?;
        result.statistic = stat;
        result.p_value = p;
        result.argmax_pair = argmax_of(cfg.statistic, &s);
        return Ok(result);
    }

    let resolved = TestConfig { kernel: kernel.clone().unwrap_or_else(|| cfg.kernel.clone()), ..cfg.clone() };
    let g = build_matrix(data, &resolved)?;
    let idx = data.index();
    cfg.statistic.check(&g, idx)?;
    let s = block_sums(&g, idx)?;
    result.statistic = observed_statistic(&g, idx, cfg.statistic)?;
    result.argmax_pair = argmax_of(cfg.statistic, &s);
    let sizes = idx.sizes();

    result.p_value = match &cfg.calibration {
        Calibration::PermExact => permutation_pvalue_exact(&g, idx, cfg.statistic)?,
        Calibration::PermMc { permutations } => {
            result.num_permutations = Some(*permutations);
            result.seed = Some(cfg.seed);
            permutation_pvalue_mc(&g, idx, *permutations, cfg.seed, cfg.statistic)?
        }
        Calibration::Bobkov => {
            require_max(cfg)?;
            p_bobkov(result.statistic, sigma_hat2(&g)?, &sizes)?
        }
        Calibration::Mcdiarmid => {
            require_max(cfg)?;
            p_mcdiarmid(result.statistic, cfg.kernel.bound, &sizes)?
        }
        Calibration::Gumbel { .. } => {
            let (stat, p) = gumbel_pvalue(cfg, &s)?;
            result.statistic = stat;
            p
        }
        Calibration::Phi2 | Calibration::PhiK { .. } => {
            require_max(cfg)?;
            let sigma = match cfg.calibration {
                Calibration::Phi2 if sizes.len() != 2 => {
                    return Err(Error::Unsupported(format!("phi2 needs two groups, got {}", sizes.len())));
                }
                Calibration::Phi2 => sigma_hat2(&g)?,
                Calibration::PhiK { mode } => sigma_k2(&g, idx, mode)?,
                _ => unreachable!(),
            };
            result.threshold = Some(phik_threshold(sigma, &sizes, cfg.alpha)?);
            concentration_pvalue(result.statistic, sigma, &sizes)?
        }
    };
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs_data() -> GroupedDataset {
        GroupedDataset::from_scalars(&[&[0.0, 0.0], &[1.0, 1.0]]).unwrap()
    }

    #[test]
    fn exact_and_mc() {
        let cfg = TestConfig::new(StatisticKind::MaxMmd, KernelSpec::linear(), Calibration::PermExact);
        let r = run_test(&pairs_data(), &cfg).unwrap();
        assert_eq!((r.statistic, r.p_value, r.argmax_pair), (1.0, 1.0 / 3.0, Some((0, 1))));
        let cfg =
            TestConfig::new(StatisticKind::MaxMmd, KernelSpec::linear(), Calibration::PermMc { permutations: 50 })
                .with_seed(3);
        let r = run_test(&pairs_data(), &cfg).unwrap();
        assert_eq!((r.num_permutations, r.seed), (Some(50), Some(3)));
        assert_eq!(r, run_test(&pairs_data(), &cfg).unwrap());
    }

    #[test]
    fn bobkov_guarded() {
        let ds = GroupedDataset::from_scalars(&[&[0.0, 0.3], &[1.0, 1.1], &[2.0]]).unwrap();
        let cfg = TestConfig::new(StatisticKind::MaxMmd, KernelSpec::linear(), Calibration::Bobkov);
        assert!(matches!(run_test(&ds, &cfg), Err(Error::UnbalancedGroups(_))));
        let cfg = TestConfig::new(StatisticKind::Disco, KernelSpec::linear(), Calibration::Bobkov);
        assert!(matches!(run_test(&ds, &cfg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn phi_methods_report_threshold() {
        let ds = GroupedDataset::from_scalars(&[&[0.0, 0.3, 0.1], &[1.0, 1.1, 0.9]]).unwrap();
        let cfg = TestConfig::new(StatisticKind::MaxMmd, KernelSpec::energy(), Calibration::Phi2);
        let r = run_test(&ds, &cfg).unwrap();
        let t = r.threshold.unwrap();
        assert_eq!(r.statistic >= t, r.p_value <= cfg.alpha + 1e-12);
        let cfg = TestConfig::new(
            StatisticKind::MaxMmd,
            KernelSpec::energy(),
            Calibration::PhiK { mode: SigmaKMode::SortedTopMean },
        );
        let rk = run_test(&ds, &cfg).unwrap();
        assert_eq!(rk.threshold, r.threshold);
        assert_eq!(rk.p_value, r.p_value);
    }

    #[test]
    fn median_bandwidth_echoed() {
        let ds = GroupedDataset::from_scalars(&[&[0.0, 1.0], &[2.0]]).unwrap();
        let cfg = TestConfig::new(StatisticKind::MaxMmd, KernelSpec::gaussian_median(), Calibration::PermExact);
        assert_eq!(run_test(&ds, &cfg).unwrap().bandwidth, Some(1.0));
    }

    #[test]
    fn gumbel_count_path_matches_gram_path() {
        let levels: Vec<usize> = (0..24).map(|i| 1 + (i * 7 + i / 3) % 2).collect();
        let ds = GroupedDataset::from_levels(2, levels, vec![8, 8, 8]).unwrap();
        let kernel = KernelSpec::chi_square_uniform(2).unwrap();
        let cfg = TestConfig::new(StatisticKind::MaxMmd, kernel.clone(), Calibration::Gumbel { spectrum: None });
        let a = run_test(&ds, &cfg).unwrap();
        let cfg = TestConfig::new(StatisticKind::MaxMmd, kernel, Calibration::Gumbel { spectrum: Some(vec![1.0]) });
        let g = gram_matrix(&cfg.kernel, &ds).unwrap();
        let s = block_sums(&g, ds.index()).unwrap();
        let (stat, p) = gumbel_pvalue(&cfg, &s).unwrap();
        assert!((a.statistic - stat).abs() < 1e-12 && (a.p_value - p).abs() < 1e-12);
    }
}
