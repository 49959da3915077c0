//! Pairwise MMD V-statistics and the max-type K-sample statistic.
//!
//! Every statistic here is a function of the `K x K` block sums of a Gram
//! matrix, so recomputing it under a relabeling costs one pass over the
//! matrix plus `O(K^2)` work.

use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::dataset::{GroupIndex, Point};
use crate::error::{Error, Result};
use crate::kernels::{kernel_eval, GramMatrix, KernelSpec, MatrixSource};

/// `S[k][l] = sum_{i in k} sum_{j in l} G[i][j]` together with the group sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSums {
    k: usize,
    sums: Vec<f64>,
    sizes: Vec<usize>,
}

impl BlockSums {
    /// Wraps a row-major `K x K` table.
    pub fn from_parts(sums: Vec<f64>, sizes: Vec<usize>) -> Result<Self> {
        let k = sizes.len();
        if sums.len() != k * k {
            return Err(Error::DimensionMismatch(format!("{} sums for {k} groups", sums.len())));
        }
        if sizes.contains(&0) {
            return Err(Error::EmptyGroup { group: sizes.iter().position(|&n| n == 0).unwrap() });
        }
        Ok(BlockSums { k, sums, sizes })
    }

    /// Block sums of the chi-square kernel computed from level counts
    /// `counts[k][v]`: `S[k][l] = sum_v c_kv c_lv / p_v`. Avoids materialising
    /// the `N x N` Gram matrix for large discrete samples.
    pub fn from_level_counts(counts: &[Vec<u64>], probs: &[f64]) -> Result<Self> {
        let k = counts.len();
        let mut sizes = Vec::with_capacity(k);
        for c in counts {
            if c.len() != probs.len() {
                return Err(Error::DimensionMismatch(format!("{} counts for {} levels", c.len(), probs.len())));
            }
            sizes.push(c.iter().sum::<u64>() as usize);
        }
        let mut sums = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let s: f64 = (0..probs.len()).map(|v| (counts[a][v] as f64) * (counts[b][v] as f64) / probs[v]).sum();
                sums[a * k + b] = s;
                sums[b * k + a] = s;
            }
        }
        Self::from_parts(sums, sizes)
    }

    pub(crate) fn from_fixed(raw: &[i128], sizes: Vec<usize>, g: &GramMatrix) -> Self {
        let grid = g.fixed().grid;
        let k = sizes.len();
        BlockSums { k, sums: raw.iter().map(|&q| grid.to_f64(q)).collect(), sizes }
    }

    pub fn num_groups(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.sums[a * self.k + b]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> f64 {
        self.sums.iter().sum()
    }

    /// `V^2_{kl}` before clamping.
    #[inline]
    pub fn mmd_squared_raw(&self, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.sizes[a] as f64, self.sizes[b] as f64);
        self.get(a, a) / (na * na) + self.get(b, b) / (nb * nb) - 2.0 * self.get(a, b) / (na * nb)
    }
}

/// Labeled block sums on the fixed-point grid. `labels[i]` is the group of
/// observation `i`; `row` is scratch space of length `k`.
pub(crate) fn labeled_block_sums(g: &GramMatrix, labels: &[usize], k: usize, row: &mut [i128], out: &mut [i128]) {
    let fixed = g.fixed();
    let n = g.len();
    out.iter_mut().for_each(|v| *v = 0);
    for i in 0..n {
        row.iter_mut().for_each(|v| *v = 0);
        let li = labels[i];
        let gi = &fixed.values[i * n..(i + 1) * n];
        for j in (i + 1)..n {
            row[labels[j]] += gi[j];
        }
        out[li * k + li] += gi[i];
        for (b, &r) in row.iter().enumerate() {
            out[li * k + b] += r;
            out[b * k + li] += r;
        }
    }
}

/// Block sums of `g` over the contiguous groups of `idx`. Sums are exact on a
/// fixed-point grid, so they do not depend on the order of observations
/// inside a group, and `S` is exactly symmetric.
pub fn block_sums(g: &GramMatrix, idx: &GroupIndex) -> Result<BlockSums> {
    if idx.total() != g.len() {
        return Err(Error::DimensionMismatch(format!(
            "group index covers {} observations, matrix has {}",
            idx.total(),
            g.len()
        )));
    }
    let k = idx.num_groups();
    let mut row = vec![0i128; k];
    let mut raw = vec![0i128; k * k];
    labeled_block_sums(g, &idx.labels(), k, &mut row, &mut raw);
    Ok(BlockSums::from_fixed(&raw, idx.sizes(), g))
}

/// `V^2_{kl} = S_kk/n_k^2 + S_ll/n_l^2 - 2 S_kl/(n_k n_l)`, clamped at zero.
pub fn mmd_squared_pair(s: &BlockSums, k: usize, l: usize) -> Result<f64> {
    if k == l {
        return Err(Error::SameGroup(k));
    }
    if k >= s.k || l >= s.k {
        return Err(Error::IndexOutOfRange { i: k, j: l, n: s.k });
    }
    Ok(s.mmd_squared_raw(k, l).max(0.0))
}

/// Value of the max statistic and its maximizing pair (0-based, `k < l`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxMmd {
    pub value: f64,
    pub argmax: (usize, usize),
}

/// Largest clamped `V^2_{kl}` and the lexicographically smallest pair
/// attaining it.
pub(crate) fn max_mmd_squared(s: &BlockSums) -> (f64, (usize, usize)) {
    let mut best = (f64::NEG_INFINITY, (0, 1));
    for a in 0..s.k {
        for b in (a + 1)..s.k {
            let v = s.mmd_squared_raw(a, b).max(0.0);
            if v > best.0 {
                best = (v, (a, b));
            }
        }
    }
    best
}

pub fn max_mmd_from_sums(s: &BlockSums) -> Result<MaxMmd> {
    if s.k < 2 {
        return Err(Error::TooFewGroups(s.k));
    }
    let (v2, argmax) = max_mmd_squared(s);
    Ok(MaxMmd { value: v2.sqrt(), argmax })
}

/// `max_{k<l} V_{kl}`.
pub fn max_mmd(g: &GramMatrix, idx: &GroupIndex) -> Result<MaxMmd> {
    max_mmd_from_sums(&block_sums(g, idx)?)
}

pub(crate) fn weighted_max_from_sums(s: &BlockSums) -> (f64, (usize, usize)) {
    let mut best = (f64::NEG_INFINITY, (0, 1));
    for a in 0..s.k {
        for b in (a + 1)..s.k {
            let (na, nb) = (s.sizes[a] as f64, s.sizes[b] as f64);
            let v = na * nb / (na + nb) * s.mmd_squared_raw(a, b).max(0.0);
            if v > best.0 {
                best = (v, (a, b));
            }
        }
    }
    best
}

/// `max_{k<l} n_k n_l / (n_k + n_l) * V^2_{kl}`.
pub fn weighted_max_mmd(g: &GramMatrix, idx: &GroupIndex) -> Result<f64> {
    let s = block_sums(g, idx)?;
    if s.k < 2 {
        return Err(Error::TooFewGroups(s.k));
    }
    Ok(weighted_max_from_sums(&s).0)
}

/// Two-sample MMD evaluated term by term from the kernel, without a Gram
/// matrix. Used as an independent check of the block-sum route.
pub fn mmd_bruteforce_oracle(spec: &KernelSpec, x: &[Point<'_>], y: &[Point<'_>]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::TooFewPoints("both samples must be nonempty".into()));
    }
    let mut xx = 0.0;
    for &a in x {
        for &b in x {
            xx += kernel_eval(spec, a, b)?;
        }
    }
    let mut yy = 0.0;
    for &a in y {
        for &b in y {
            yy += kernel_eval(spec, a, b)?;
        }
    }
    let mut xy = 0.0;
    for &a in x {
        for &b in y {
            xy += kernel_eval(spec, a, b)?;
        }
    }
    let (n, m) = (x.len() as f64, y.len() as f64);
    Ok((xx / (n * n) + yy / (m * m) - 2.0 * xy / (n * m)).max(0.0).sqrt())
}

/// Statistic recomputed under relabeling by the permutation engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    MaxMmd,
    WeightedMaxMmd,
    Disco,
    Ecf,
}

impl StatisticKind {
    pub fn name(&self) -> &'static str {
        match self {
            StatisticKind::MaxMmd => "max_mmd",
            StatisticKind::WeightedMaxMmd => "weighted_max_mmd",
            StatisticKind::Disco => "disco",
            StatisticKind::Ecf => "ecf",
        }
    }

    /// Checks that `g` holds the pairwise values this statistic is built from
    /// and that the grouping is admissible.
    pub fn check(&self, g: &GramMatrix, idx: &GroupIndex) -> Result<()> {
        let ok = matches!(
            (self, g.source()),
            (StatisticKind::MaxMmd | StatisticKind::WeightedMaxMmd, MatrixSource::Kernel(_))
                | (StatisticKind::Disco, MatrixSource::DistancePower { .. })
                | (StatisticKind::Ecf, MatrixSource::EcfWeight { .. })
        );
        if !ok {
            return Err(Error::IncompatibleMatrix { matrix: g.source().describe(), statistic: self.name().into() });
        }
        if idx.num_groups() < 2 {
            return Err(Error::TooFewGroups(idx.num_groups()));
        }
        if idx.total() != g.len() {
            return Err(Error::DimensionMismatch(format!(
                "group index covers {} observations, matrix has {}",
                idx.total(),
                g.len()
            )));
        }
        if *self == StatisticKind::Disco && idx.total() <= idx.num_groups() {
            return Err(Error::TooFewPoints("DISCO needs N > K".into()));
        }
        Ok(())
    }

    /// Statistic value from block sums. Larger values are more extreme.
    pub fn evaluate(&self, s: &BlockSums) -> f64 {
        match self {
            StatisticKind::MaxMmd => max_mmd_squared(s).0.sqrt(),
            StatisticKind::WeightedMaxMmd => weighted_max_from_sums(s).0,
            StatisticKind::Disco => baselines::disco_from_sums(s).unwrap_or(f64::INFINITY),
            StatisticKind::Ecf => baselines::ecf_from_sums(s),
        }
    }
}
