//! Permutation-free p-value bounds and test thresholds built from
//! concentration inequalities for the permuted max statistic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::GroupIndex;
use crate::error::{Error, Result};
use crate::fixed::FixedGrid;
use crate::kernels::GramMatrix;

/// `gamma_{k,l} = n_k n_l / (n_k + n_l)^2`, in `(0, 1/4]`.
pub fn gamma(nk: usize, nl: usize) -> f64 {
    let (a, b) = (nk as f64, nl as f64);
    a * b / ((a + b) * (a + b))
}

fn num_pairs(k: usize) -> f64 {
    (k * (k - 1) / 2) as f64
}

fn pairs(sizes: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..sizes.len()).flat_map(move |a| ((a + 1)..sizes.len()).map(move |b| (sizes[a], sizes[b])))
}

/// Variance proxy together with the group sizes it was computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceProxy {
    pub value: f64,
    pub sizes: Vec<usize>,
}

impl VarianceProxy {
    /// Pairwise weight `gamma_{k,l}`.
    pub fn gamma(&self, k: usize, l: usize) -> f64 {
        gamma(self.sizes[k], self.sizes[l])
    }

    /// `max_{k<l} sqrt(sigma^2 / (2 (n_k + n_l) gamma_{k,l}))`.
    pub fn drift(&self) -> f64 {
        max_drift(self.value, &self.sizes)
    }
}

/// How the K-sample variance proxy is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaKMode {
    /// Largest mean over the top `(n_k + n_l)(n_k + n_l - 1)` ordered-pair values.
    #[default]
    SortedTopMean,
    /// The largest `h~` over all pairs: cheaper and looser.
    MaxTilde,
}

/// `h~` over unordered pairs `i < j` and the grid shared by every sum formed
/// from them.
fn tilde_values(g: &GramMatrix) -> (Vec<f64>, FixedGrid) {
    let n = g.len();
    let values: Vec<f64> =
        (0..n).into_par_iter().flat_map_iter(|i| ((i + 1)..n).map(move |j| g.tilde_h_unchecked(i, j))).collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    let ordered = (n as u64).saturating_mul(n.saturating_sub(1) as u64);
    (values, FixedGrid::new(max, ordered))
}

/// `(1 / (N (N - 1))) sum_{i != j} h~(Z_i, Z_j)`.
pub fn sigma_hat2(g: &GramMatrix) -> Result<f64> {
    if g.len() < 2 {
        return Err(Error::SingletonDataset);
    }
    let (values, grid) = tilde_values(g);
    // every unordered pair stands for its two ordered copies
    Ok(grid.sum(values.iter().copied()) / values.len() as f64)
}

/// K-sample variance proxy. Each unordered `h~` value stands for its two
/// ordered copies and every top count `m (m - 1)` is even, so the mean of the
/// top `m (m - 1)` ordered values is the mean of the top `m (m - 1) / 2`
/// unordered ones. Sums are exact, so a partial selection gives the same
/// value as a full sort, and `K = 2` reproduces [`sigma_hat2`] bit for bit.
pub fn sigma_k2(g: &GramMatrix, idx: &GroupIndex, mode: SigmaKMode) -> Result<f64> {
    let sizes = idx.sizes();
    if sizes.len() < 2 {
        return Err(Error::TooFewGroups(sizes.len()));
    }
    if idx.total() != g.len() {
        return Err(Error::DimensionMismatch(format!(
            "group index covers {} observations, matrix has {}",
            idx.total(),
            g.len()
        )));
    }
    let (mut values, grid) = tilde_values(g);
    match mode {
        SigmaKMode::MaxTilde => Ok(values.iter().copied().fold(0.0, f64::max)),
        SigmaKMode::SortedTopMean => {
            // the top-mean is nonincreasing in its count, so the smallest pair attains the max
            let top = pairs(&sizes).map(|(a, b)| (a + b) * (a + b - 1) / 2).min().unwrap();
            if top < values.len() {
                values.select_nth_unstable_by(top, |a, b| b.total_cmp(a));
            }
            Ok(grid.sum(values[..top].iter().copied()) / top as f64)
        }
    }
}

/// Variance proxy for `idx`: `sigma_hat2` when `K = 2`, otherwise `sigma_k2`.
pub fn variance_proxy(g: &GramMatrix, idx: &GroupIndex, mode: SigmaKMode) -> Result<VarianceProxy> {
    Ok(VarianceProxy { value: sigma_k2(g, idx, mode)?, sizes: idx.sizes() })
}

fn balanced_pair(sizes: &[usize]) -> Result<f64> {
    if sizes.len() != 2 || sizes[0] != sizes[1] {
        return Err(Error::UnbalancedGroups(sizes.to_vec()));
    }
    Ok((sizes[0] + sizes[1]) as f64)
}

/// Natural log of [`p_bobkov`]; finite even where the bound underflows.
pub fn log_p_bobkov(statistic: f64, sigma2: f64, sizes: &[usize]) -> Result<f64> {
    let n = balanced_pair(sizes)?;
    if !(sigma2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let threshold = (2.0 * sigma2 / n).sqrt();
    if statistic < threshold {
        return Ok(0.0);
    }
    let d = statistic - threshold;
    Ok(-(n / (32.0 * sigma2)) * d * d)
}

/// Bobkov-type p-value bound for a balanced two-sample statistic `V`.
pub fn p_bobkov(statistic: f64, sigma2: f64, sizes: &[usize]) -> Result<f64> {
    Ok(log_p_bobkov(statistic, sigma2, sizes)?.exp())
}

/// Natural log of [`p_mcdiarmid`].
pub fn log_p_mcdiarmid(statistic: f64, bound: Option<f64>, sizes: &[usize]) -> Result<f64> {
    let b = bound.ok_or(Error::MissingBound)?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("bound B must be positive, got {b}")));
    }
    let n = balanced_pair(sizes)?;
    let threshold = (32.0 * b / n).sqrt();
    if statistic < threshold {
        return Ok(0.0);
    }
    let d = statistic - threshold;
    Ok(-(n / (8.0 * b)) * d * d)
}

/// McDiarmid-type p-value for a balanced two-sample statistic `V` under a
/// kernel bounded by `B`.
pub fn p_mcdiarmid(statistic: f64, bound: Option<f64>, sizes: &[usize]) -> Result<f64> {
    Ok(log_p_mcdiarmid(statistic, bound, sizes)?.exp())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn max_drift(sigma2: f64, sizes: &[usize]) -> f64 {
    pairs(sizes).map(|(a, b)| (sigma2 / (2.0 * (a + b) as f64 * gamma(a, b))).sqrt()).fold(0.0, f64::max)
}

/// Two-sample rejection threshold for the max statistic at level `alpha`.
pub fn phi2_threshold(sigma2: f64, n1: usize, n2: usize, alpha: f64) -> Result<f64> {
    phik_threshold(sigma2, &[n1, n2], alpha)
}

/// K-sample rejection threshold: a union bound over all pairs.
pub fn phik_threshold(sigma_k2: f64, sizes: &[usize], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_sizes(sizes)?;
    if !(sigma_k2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("variance proxy must be nonnegative, got {sigma_k2}")));
    }
    let log_term = (num_pairs(sizes.len()) / alpha).ln();
    let spread = pairs(sizes)
        .map(|(a, b)| {
            let g = gamma(a, b);
            (2.0 * sigma_k2 / ((a + b) as f64 * g * g) * log_term).sqrt()
        })
        .fold(0.0, f64::max);
    Ok(spread + max_drift(sigma_k2, sizes))
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::TooFewGroups(sizes.len()));
    }
    if let Some(group) = sizes.iter().position(|&n| n == 0) {
        return Err(Error::EmptyGroup { group });
    }
    Ok(())
}

/// `C(K,2) exp(-min_{k<l} (n_k + n_l) gamma_{k,l}^2 t^2 / (2 sigma_K^2))`:
/// bounds the probability that the permuted statistic exceeds the drift
/// term by `t`. Not capped at one.
pub fn ksample_tail_bound(t: f64, sizes: &[usize], sigma_k2: f64) -> Result<f64> {
    check_sizes(sizes)?;
    if !(sigma_k2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be nonnegative, got {t}")));
    }
    let rate = pairs(sizes)
        .map(|(a, b)| {
            let g = gamma(a, b);
            (a + b) as f64 * g * g / (2.0 * sigma_k2)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(num_pairs(sizes.len()) * (-rate * t * t).exp())
}

/// Smallest level at which the threshold test rejects `statistic`: the tail
/// bound at `statistic - drift`, capped at one. For a balanced two-sample
/// design this equals [`p_bobkov`].
pub fn concentration_pvalue(statistic: f64, sigma_k2: f64, sizes: &[usize]) -> Result<f64> {
    check_sizes(sizes)?;
    if !(sigma_k2 > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let t = statistic - max_drift(sigma_k2, sizes);
    if t <= 0.0 {
        return Ok(1.0);
    }
    Ok(ksample_tail_bound(t, sizes, sigma_k2)?.min(1.0))
}
