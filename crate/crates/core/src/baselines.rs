//! Average-type competitors: the DISCO dispersion ratio and the weighted L2
//! distance between empirical characteristic functions (ECF).
//!
//! Both are written as functions of block sums over a pairwise matrix, so the
//! permutation engine calibrates them exactly like the max-MMD statistic.
//! Double sums include the diagonal terms.

use crate::dataset::GroupedDataset;
use crate::error::{Error, Result};
use crate::kernels::{squared_distance_matrix, GramMatrix, MatrixSource};
use crate::statistics::{block_sums, BlockSums};

/// Default distance exponent for DISCO.
pub const DISCO_EXPONENT: f64 = 1.0;
/// Default ECF weight parameter.
pub const ECF_ALPHA: f64 = 1.5;

/// Matrix of `|Z_i - Z_j|^exponent`.
pub fn disco_matrix(data: &GroupedDataset, exponent: f64) -> Result<GramMatrix> {
    if !(exponent > 0.0 && exponent <= 2.0) {
        return Err(Error::InvalidArgument(format!("DISCO exponent must lie in (0, 2], got {exponent}")));
    }
    squared_distance_matrix(data, MatrixSource::DistancePower { exponent }, |d2| {
        if exponent == 2.0 {
            d2
        } else {
            d2.powf(exponent / 2.0)
        }
    })
}

/// Matrix of `exp(-|Z_i - Z_j|^2 / (4 alpha))`.
pub fn ecf_matrix(data: &GroupedDataset, alpha: f64) -> Result<GramMatrix> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("ECF parameter must be positive, got {alpha}")));
    }
    squared_distance_matrix(data, MatrixSource::EcfWeight { alpha }, |d2| (-d2 / (4.0 * alpha)).exp())
}

/// `E_{kl} = 2/(n_k n_l) S_kl - S_kk/n_k^2 - S_ll/n_l^2` on a distance matrix.
pub fn energy_from_sums(s: &BlockSums, k: usize, l: usize) -> f64 {
    -s.mmd_squared_raw(k, l)
}

/// DISCO ratio from block sums of the distance matrix; `None` when the
/// within-group dispersion vanishes.
pub fn disco_from_sums(s: &BlockSums) -> Option<f64> {
    let k = s.num_groups();
    let sizes = s.sizes();
    let n: usize = sizes.iter().sum();
    let mut between = 0.0;
    for a in 0..k {
        for b in (a + 1)..k {
            between += energy_from_sums(s, a, b);
        }
    }
    between /= k as f64;
    let within = 0.5 * (0..k).map(|a| s.get(a, a) / sizes[a] as f64).sum::<f64>();
    if within <= 0.0 {
        return None;
    }
    Some((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// ECF statistic from block sums of the ECF weight matrix.
pub fn ecf_from_sums(s: &BlockSums) -> f64 {
    let k = s.num_groups();
    let sizes = s.sizes();
    let n = sizes.iter().sum::<usize>() as f64;
    let mut within = 0.0;
    let mut cross = 0.0;
    for (a, &na) in sizes.iter().enumerate() {
        let na = na as f64;
        within += (n - na) / (n * na) * s.get(a, a);
        for b in 0..k {
            if a != b {
                cross += s.get(a, b);
            }
        }
    }
    within - cross / n
}

/// DISCO statistic `D = (S / (K - 1)) / (W / (N - K))` with distances raised
/// to `exponent` in (0, 2].
pub fn disco_statistic(data: &GroupedDataset, exponent: f64) -> Result<f64> {
    if data.len() <= data.num_groups() {
        return Err(Error::TooFewPoints(format!("DISCO needs N > K, got N={} K={}", data.len(), data.num_groups())));
    }
    let g = disco_matrix(data, exponent)?;
    let s = block_sums(&g, data.index())?;
    disco_from_sums(&s).ok_or(Error::ZeroWithinDispersion)
}

/// ECF statistic `H` with weight parameter `alpha`.
pub fn ecf_statistic(data: &GroupedDataset, alpha: f64) -> Result<f64> {
    let g = ecf_matrix(data, alpha)?;
    Ok(ecf_from_sums(&block_sums(&g, data.index())?))
}

/// Pairwise energy statistic `E_{kl}` with distance exponent `exponent`.
pub fn energy_statistic(data: &GroupedDataset, k: usize, l: usize, exponent: f64) -> Result<f64> {
    if k == l {
        return Err(Error::SameGroup(k));
    }
    let g = disco_matrix(data, exponent)?;
    Ok(energy_from_sums(&block_sums(&g, data.index())?, k, l))
}
