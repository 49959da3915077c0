//! Seeded samplers. Samples are row-major `n x d` buffers.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Construction of the multivariate Laplace law.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceKind {
    /// Independent Laplace coordinates, each with variance `cov_scale`.
    #[default]
    Marginal,
    /// `mean + sqrt(W) Z` with `W ~ Exp(1)` and `Z ~ N(0, cov_scale I)`.
    Elliptical,
}

fn check_scale(cov_scale: f64) -> Result<()> {
    if cov_scale > 0.0 && cov_scale.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("covariance scale must be positive, got {cov_scale}")))
    }
}

/// `n` draws from `N(mean, cov_scale I_d)` with `d = mean.len()`.
pub fn gen_mvn(n: usize, mean: &[f64], cov_scale: f64, seed: u64) -> Result<Vec<f64>> {
    check_scale(cov_scale)?;
    let mut rng = rng::stream(seed, 0);
    let sd = cov_scale.sqrt();
    let mut out = Vec::with_capacity(n * mean.len());
    for _ in 0..n {
        for &m in mean {
            let z: f64 = rng.sample(StandardNormal);
            out.push(m + sd * z);
        }
    }
    Ok(out)
}

/// `n` draws from a Laplace law with location `mean` and covariance
/// `cov_scale I_d`.
pub fn gen_mv_laplace(n: usize, mean: &[f64], cov_scale: f64, kind: LaplaceKind, seed: u64) -> Result<Vec<f64>> {
    check_scale(cov_scale)?;
    let mut rng = rng::stream(seed, 0);
    let mut out = Vec::with_capacity(n * mean.len());
    match kind {
        LaplaceKind::Marginal => {
            let b = (cov_scale / 2.0).sqrt();
            for _ in 0..n {
                for &m in mean {
                    let e: f64 = rng.sample(Exp1);
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    out.push(m + sign * b * e);
                }
            }
        }
        LaplaceKind::Elliptical => {
            let sd = cov_scale.sqrt();
            for _ in 0..n {
                let w: f64 = rng.sample(Exp1);
                let s = w.sqrt() * sd;
                for &m in mean {
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(m + s * z);
                }
            }
        }
    }
    Ok(out)
}

/// Smallest acceptance probability tolerated by the rejection sampler.
pub const MIN_TRUNCATION_MASS: f64 = 1e-9;

/// `n` draws from `N(mu, sigma2)` conditioned on `[a, b]`, by rejection.
pub fn gen_truncnorm(n: usize, mu: f64, sigma2: f64, support: (f64, f64), seed: u64) -> Result<Vec<f64>> {
    let (a, b) = support;
    if !(a < b) {
        return Err(Error::DegenerateSupport(format!("empty interval [{a}, {b}]")));
    }
    check_scale(sigma2)?;
    let sd = sigma2.sqrt();
    let std = statrs::distribution::Normal::new(mu, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mass = statrs::distribution::ContinuousCDF::cdf(&std, b) - statrs::distribution::ContinuousCDF::cdf(&std, a);
    if mass < MIN_TRUNCATION_MASS {
        return Err(Error::DegenerateSupport(format!("mass {mass:e} on [{a}, {b}]")));
    }
    let normal = Normal::new(mu, sd).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng::stream(seed, 0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = normal.sample(&mut rng);
        if (a..=b).contains(&x) {
            out.push(x);
        }
    }
    Ok(out)
}
