//! Exact and Monte-Carlo permutation calibration.
//!
//! A permutation only changes which group each pooled observation belongs to,
//! so the engine works on a label vector and recomputes block sums from the
//! stored Gram matrix; the kernel is never re-evaluated. Ties count toward
//! the rejection region.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::GroupIndex;
use crate::error::{Error, Result};
use crate::kernels::GramMatrix;
use crate::rng;
use crate::statistics::{labeled_block_sums, BlockSums, StatisticKind};

/// Largest number of distinct group assignments exact mode will enumerate.
pub const EXACT_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationMode {
    ExactEnumeration,
    MonteCarlo { permutations: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub mode: PermutationMode,
    pub statistic: StatisticKind,
}

impl PermutationPlan {
    pub fn exact(statistic: StatisticKind) -> Self {
        PermutationPlan { mode: PermutationMode::ExactEnumeration, statistic }
    }

    pub fn monte_carlo(statistic: StatisticKind, permutations: u64, seed: u64) -> Self {
        PermutationPlan { mode: PermutationMode::MonteCarlo { permutations, seed }, statistic }
    }

    pub fn pvalue(&self, g: &GramMatrix, idx: &GroupIndex) -> Result<f64> {
        match self.mode {
            PermutationMode::ExactEnumeration => permutation_pvalue_exact(g, idx, self.statistic),
            PermutationMode::MonteCarlo { permutations, seed } => {
                permutation_pvalue_mc(g, idx, permutations, seed, self.statistic)
            }
        }
    }
}

/// Number of distinct assignments `N! / prod n_k!`, or `None` on overflow.
pub fn assignment_count(sizes: &[usize]) -> Option<u128> {
    let mut remaining: u128 = sizes.iter().map(|&n| n as u128).sum();
    let mut total: u128 = 1;
    for &n in sizes {
        total = total.checked_mul(binomial(remaining, n as u128)?)?;
        remaining -= n as u128;
    }
    Some(total)
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1)
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Reusable buffers for one worker.
struct Scratch {
    labels: Vec<usize>,
    row: Vec<i128>,
    raw: Vec<i128>,
}

impl Scratch {
    fn new(n: usize, k: usize) -> Self {
        Scratch { labels: vec![0; n], row: vec![0; k], raw: vec![0; k * k] }
    }
}

fn statistic_for_labels(g: &GramMatrix, sizes: &[usize], kind: StatisticKind, scratch: &mut Scratch) -> f64 {
    let k = sizes.len();
    labeled_block_sums(g, &scratch.labels, k, &mut scratch.row, &mut scratch.raw);
    kind.evaluate(&BlockSums::from_fixed(&scratch.raw, sizes.to_vec(), g))
}

/// Statistic on the observed grouping.
pub fn observed_statistic(g: &GramMatrix, idx: &GroupIndex, kind: StatisticKind) -> Result<f64> {
    kind.check(g, idx)?;
    let mut scratch = Scratch::new(g.len(), idx.num_groups());
    scratch.labels = idx.labels();
    Ok(statistic_for_labels(g, &idx.sizes(), kind, &mut scratch))
}

/// Exact permutation p-value over all distinct group assignments.
pub fn permutation_pvalue_exact(g: &GramMatrix, idx: &GroupIndex, kind: StatisticKind) -> Result<f64> {
    kind.check(g, idx)?;
    let sizes = idx.sizes();
    let total = match assignment_count(&sizes) {
        Some(c) if c <= EXACT_LIMIT as u128 => c as u64,
        Some(c) => return Err(Error::EnumerationTooLarge { count: c.to_string(), limit: EXACT_LIMIT }),
        None => return Err(Error::EnumerationTooLarge { count: "> 2^128".into(), limit: EXACT_LIMIT }),
    };
    let observed = observed_statistic(g, idx, kind)?;
    let n = g.len();
    let mut scratch = Scratch::new(n, sizes.len());
    let mut remaining = sizes.clone();
    let mut hits = 0u64;
    let mut visited = 0u64;
    enumerate(
        0,
        n,
        &mut remaining,
        &mut |labels| {
            scratch.labels.copy_from_slice(labels);
            visited += 1;
            if statistic_for_labels(g, &sizes, kind, &mut scratch) >= observed {
                hits += 1;
            }
        },
        &mut vec![0; n],
    );
    debug_assert_eq!(visited, total);
    Ok(hits as f64 / total as f64)
}

/// Depth-first enumeration of label sequences with the given group counts.
fn enumerate<F: FnMut(&[usize])>(
    pos: usize,
    n: usize,
    remaining: &mut [usize],
    visit: &mut F,
    labels: &mut Vec<usize>,
) {
    if pos == n {
        visit(labels);
        return;
    }
    for k in 0..remaining.len() {
        if remaining[k] > 0 {
            remaining[k] -= 1;
            labels[pos] = k;
            enumerate(pos + 1, n, remaining, visit, labels);
            remaining[k] += 1;
        }
    }
}

/// Fills `labels` for a uniformly random permutation `b`: the observation
/// moved to pooled position `p` takes the group of `p`.
fn random_labels(idx: &GroupIndex, seed: u64, replicate: u64, perm: &mut [usize], labels: &mut [usize]) {
    let mut rng = rng::stream(seed, replicate);
    perm.iter_mut().enumerate().for_each(|(i, p)| *p = i);
    perm.shuffle(&mut rng);
    for k in 0..idx.num_groups() {
        for p in idx.range(k) {
            labels[perm[p]] = k;
        }
    }
}

/// Statistics of `m` random permutations, in replicate order. Replicate `r`
/// uses the generator stream `(seed, r)`, so the output does not depend on
/// the thread count.
pub fn permuted_statistics(
    g: &GramMatrix,
    idx: &GroupIndex,
    m: u64,
    seed: u64,
    kind: StatisticKind,
) -> Result<Vec<f64>> {
    kind.check(g, idx)?;
    let sizes = idx.sizes();
    let n = g.len();
    let stats = (0..m)
        .into_par_iter()
        .map_init(
            || (Scratch::new(n, sizes.len()), vec![0usize; n]),
            |(scratch, perm), r| {
                random_labels(idx, seed, r, perm, &mut scratch.labels);
                statistic_for_labels(g, &sizes, kind, scratch)
            },
        )
        .collect();
    Ok(stats)
}

/// `(1 + #{permuted >= observed}) / (M + 1)`.
pub fn monte_carlo_pvalue(observed: f64, permuted: &[f64]) -> f64 {
    let hits = permuted.iter().filter(|&&s| s >= observed).count();
    (1 + hits) as f64 / (permuted.len() + 1) as f64
}

/// Monte-Carlo permutation p-value from `m` permutations drawn with replacement.
pub fn permutation_pvalue_mc(g: &GramMatrix, idx: &GroupIndex, m: u64, seed: u64, kind: StatisticKind) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("at least one permutation is required".into()));
    }
    let observed = observed_statistic(g, idx, kind)?;
    Ok(monte_carlo_pvalue(observed, &permuted_statistics(g, idx, m, seed, kind)?))
}

/// Smallest `t` with `#{values >= t} <= alpha * len`; for `alpha >= 1` the
/// minimum value.
pub fn critical_value_from(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("no statistics to take a quantile of".into()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let allowed = (alpha * sorted.len() as f64 + 1e-9).floor() as usize;
    Ok(sorted[allowed.min(sorted.len() - 1)])
}

/// Empirical critical value over the observed statistic and `m` permuted
/// ones. Rejecting when the observed statistic exceeds it is the same
/// decision as `p_MC <= alpha`.
pub fn permutation_critical_value(
    g: &GramMatrix,
    idx: &GroupIndex,
    alpha: f64,
    m: u64,
    seed: u64,
    kind: StatisticKind,
) -> Result<f64> {
    if (m as f64) < 1.0 / alpha {
        log::warn!("{m} permutations cannot resolve alpha={alpha}; the test will never reject");
    }
    let mut values = permuted_statistics(g, idx, m, seed, kind)?;
    values.push(observed_statistic(g, idx, kind)?);
    critical_value_from(&values, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::GroupedDataset;
    use crate::kernels::{gram_matrix, KernelSpec};

    fn linear(groups: &[&[f64]]) -> (GramMatrix, GroupIndex) {
        let ds = GroupedDataset::from_scalars(groups).unwrap();
        (gram_matrix(&KernelSpec::linear(), &ds).unwrap(), ds.index().clone())
    }

    #[test]
    fn counts() {
        assert_eq!(assignment_count(&[2, 2]), Some(6));
        assert_eq!(assignment_count(&[1, 1, 1]), Some(6));
        assert_eq!(assignment_count(&[10, 10]), Some(184_756));
        assert_eq!(assignment_count(&[200, 200]), None);
    }

    #[test]
    fn exact_two_singletons() {
        let (g, idx) = linear(&[&[0.0], &[1.0]]);
        assert_eq!(permutation_pvalue_exact(&g, &idx, StatisticKind::MaxMmd).unwrap(), 1.0);
    }

    #[test]
    fn exact_two_pairs() {
        let (g, idx) = linear(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert_eq!(permutation_pvalue_exact(&g, &idx, StatisticKind::MaxMmd).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn exact_constant_statistic() {
        let (g, idx) = linear(&[&[1.0, 1.0], &[1.0], &[1.0, 1.0]]);
        assert_eq!(permutation_pvalue_exact(&g, &idx, StatisticKind::MaxMmd).unwrap(), 1.0);
    }

    #[test]
    fn exact_too_large() {
        let xs: Vec<f64> = (0..60).map(f64::from).collect();
        let (g, idx) = linear(&[&xs[..30], &xs[30..]]);
        assert!(matches!(
            permutation_pvalue_exact(&g, &idx, StatisticKind::MaxMmd),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn mc_pvalue_extremes() {
        assert_eq!(monte_carlo_pvalue(5.0, &[1.0, 2.0, 3.0]), 0.25);
        assert_eq!(monte_carlo_pvalue(1.0, &[1.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn mc_pvalue_lattice() {
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 * 1.7).cos()).collect();
        let (g, idx) = linear(&[&xs[..10], &xs[10..]]);
        let p = permutation_pvalue_mc(&g, &idx, 200, 11, StatisticKind::MaxMmd).unwrap();
        let scaled = p * 201.0;
        assert!((scaled - scaled.round()).abs() < 1e-9 && scaled >= 1.0 && p <= 1.0);
        assert_eq!(p, permutation_pvalue_mc(&g, &idx, 200, 11, StatisticKind::MaxMmd).unwrap());
    }

    #[test]
    fn critical_value_edges() {
        assert_eq!(critical_value_from(&[3.0, 1.0, 2.0], 1.0).unwrap(), 1.0);
        assert_eq!(critical_value_from(&[4.0; 5], 0.2).unwrap(), 4.0);
        // 10 values, alpha 0.2 allows two strictly above
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(critical_value_from(&v, 0.2).unwrap(), 8.0);
        assert_eq!(critical_value_from(&v, 0.01).unwrap(), 10.0);
    }

    #[test]
    fn critical_value_matches_pvalue_decision() {
        let xs: Vec<f64> = (0..24).map(|i| ((i * i) as f64 * 0.31).sin() + if i < 8 { 0.6 } else { 0.0 }).collect();
        let (g, idx) = linear(&[&xs[..8], &xs[8..16], &xs[16..]]);
        for (alpha, seed) in [(0.05, 1u64), (0.1, 2), (0.3, 3), (0.5, 4)] {
            let m = 99;
            let c = permutation_critical_value(&g, &idx, alpha, m, seed, StatisticKind::MaxMmd).unwrap();
            let obs = observed_statistic(&g, &idx, StatisticKind::MaxMmd).unwrap();
            let p = permutation_pvalue_mc(&g, &idx, m, seed, StatisticKind::MaxMmd).unwrap();
            assert_eq!(obs > c, p <= alpha + 1e-12, "alpha={alpha}");
        }
    }

    #[test]
    fn constant_statistic_never_rejects() {
        let (g, idx) = linear(&[&[2.0, 2.0], &[2.0, 2.0]]);
        let c = permutation_critical_value(&g, &idx, 0.05, 50, 0, StatisticKind::MaxMmd).unwrap();
        assert_eq!(c, 0.0);
        assert!(observed_statistic(&g, &idx, StatisticKind::MaxMmd).unwrap() <= c);
    }
}
