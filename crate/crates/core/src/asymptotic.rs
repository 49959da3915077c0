//! Gumbel limit of the centered max statistic and weighted chi-square tails.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kernels::check_simplex;
use crate::rng;

/// Relative tolerance for counting eigenvalues equal to the largest one.
pub const MULTIPLICITY_TOL: f64 = 1e-12;

/// Truncated eigenvalue sequence with its top multiplicity `mu1` and
/// `kappa = prod_{v > mu1} (1 - lambda_v / lambda_1)^{-1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    lambdas: Vec<f64>,
    mu1: usize,
    kappa: f64,
}

impl EigenSpectrum {
    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda1(&self) -> f64 {
        self.lambdas[0]
    }

    pub fn mu1(&self) -> usize {
        self.mu1
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `2^{mu1/2 - 2} kappa / Gamma(mu1/2)`.
    fn gumbel_scale(&self) -> f64 {
        let half = self.mu1 as f64 / 2.0;
        2f64.powf(half - 2.0) * self.kappa / gamma(half)
    }
}

pub fn spectrum_from_lambdas(lambdas: &[f64]) -> Result<EigenSpectrum> {
    if lambdas.is_empty() {
        return Err(Error::InvalidSpectrum("no eigenvalues".into()));
    }
    if let Some(v) = lambdas.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidSpectrum(format!("eigenvalue {v} is negative or not finite")));
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted[0];
    if top <= 0.0 {
        return Err(Error::AllZero);
    }
    let mu1 = sorted.iter().take_while(|&&v| (top - v) <= MULTIPLICITY_TOL * top).count();
    let log_kappa: f64 = sorted[mu1..].iter().map(|&v| (-v / top).ln_1p()).sum::<f64>() * -0.5;
    Ok(EigenSpectrum { lambdas: sorted, mu1, kappa: log_kappa.exp() })
}

/// Linear kernel under `N(0, diag)`: the eigenvalues are the diagonal entries.
pub fn spectrum_linear_gaussian(diag: &[f64]) -> Result<EigenSpectrum> {
    if diag.is_empty() {
        return Err(Error::InvalidSpectrum("empty diagonal".into()));
    }
    if let Some(v) = diag.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::NonpositiveVariance(format!("diagonal entry {v}")));
    }
    spectrum_from_lambdas(diag)
}

/// Chi-square kernel on `m` levels: `m - 1` unit eigenvalues whatever the
/// probabilities.
pub fn spectrum_chisquare(probs: &[f64]) -> Result<EigenSpectrum> {
    check_simplex(probs)?;
    if probs.len() < 2 {
        return Err(Error::InvalidSimplex("at least two levels are required".into()));
    }
    spectrum_from_lambdas(&vec![1.0; probs.len() - 1])
}

/// Limiting CDF `exp{-(2^{mu1/2-2} kappa / Gamma(mu1/2)) e^{-y/2}}`.
pub fn gumbel_limit_cdf(y: f64, spec: &EigenSpectrum) -> f64 {
    (-spec.gumbel_scale() * (-y / 2.0).exp()).exp()
}

/// `1 - gumbel_limit_cdf(y)` without cancellation.
pub fn gumbel_limit_sf(y: f64, spec: &EigenSpectrum) -> f64 {
    -(-spec.gumbel_scale() * (-y / 2.0).exp()).exp_m1()
}

fn check_k(k: usize) -> Result<f64> {
    if k < 3 {
        return Err(Error::KTooSmall(k));
    }
    let lk = (k as f64).ln();
    Ok(4.0 * lk)
}

fn loglog_term(k: usize, spec: &EigenSpectrum) -> f64 {
    (spec.mu1 as f64 - 2.0) * (k as f64).ln().ln()
}

/// `y = (n / (2 lambda_1)) V^2_max - 4 log K - (mu1 - 2) log log K`.
pub fn gumbel_centering(stat_max2: f64, n: usize, k: usize, spec: &EigenSpectrum) -> Result<f64> {
    let four_log_k = check_k(k)?;
    Ok(n as f64 / (2.0 * spec.lambda1()) * stat_max2 - four_log_k - loglog_term(k, spec))
}

/// Value of `V^2_max` whose centering equals `y`.
pub fn gumbel_uncentering(y: f64, n: usize, k: usize, spec: &EigenSpectrum) -> Result<f64> {
    let four_log_k = check_k(k)?;
    Ok((y + four_log_k + loglog_term(k, spec)) * 2.0 * spec.lambda1() / n as f64)
}

/// Asymptotic p-value of the squared max statistic for a balanced design.
pub fn gumbel_asymptotic_pvalue(stat_max2: f64, sizes: &[usize], spec: &EigenSpectrum) -> Result<f64> {
    if sizes.iter().any(|&s| s != sizes[0]) {
        return Err(Error::UnbalancedDesign(sizes.to_vec()));
    }
    let y = gumbel_centering(stat_max2, sizes[0], sizes.len(), spec)?;
    Ok(gumbel_limit_sf(y, spec))
}

/// Asymptotic p-value of the weighted statistic
/// `max n_k n_l / (n_k + n_l) V^2_{kl}`, valid for any group sizes; for a
/// balanced design it equals [`gumbel_asymptotic_pvalue`] of `V^2_max`.
pub fn gumbel_weighted_pvalue(weighted: f64, k: usize, spec: &EigenSpectrum) -> Result<f64> {
    let four_log_k = check_k(k)?;
    let y = weighted / spec.lambda1() - four_log_k - loglog_term(k, spec);
    Ok(gumbel_limit_sf(y, spec))
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

const MC_CHUNK: u64 = 1 << 14;

/// `P(sum_v lambda_v xi_v^2 >= x)` from `nsim` draws. Chunk `c` draws from
/// stream `(seed, c)`; counts are reduced in chunk order.
pub fn weighted_chisq_survival_mc(lambdas: &[f64], x: f64, nsim: u64, seed: u64) -> Result<McEstimate> {
    if nsim == 0 {
        return Err(Error::InvalidArgument("nsim must be positive".into()));
    }
    if x <= 0.0 {
        return Ok(McEstimate { estimate: 1.0, std_error: 0.0 });
    }
    let chunks = nsim.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c);
            let len = MC_CHUNK.min(nsim - c * MC_CHUNK);
            (0..len)
                .filter(|_| {
                    let s: f64 = lambdas
                        .iter()
                        .map(|&l| {
                            let z: f64 = rng.sample(StandardNormal);
                            l * z * z
                        })
                        .sum();
                    s >= x
                })
                .count() as u64
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let p = hits as f64 / nsim as f64;
    Ok(McEstimate { estimate: p, std_error: (p * (1.0 - p) / nsim as f64).sqrt() })
}

/// Leading-order tail `(kappa / Gamma(mu1/2)) (x / (2 lambda_1))^{mu1/2 - 1} e^{-x / (2 lambda_1)}`.
pub fn zolotarev_tail_approx(x: f64, spec: &EigenSpectrum) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("x must be positive, got {x}")));
    }
    let half = spec.mu1 as f64 / 2.0;
    let u = x / (2.0 * spec.lambda1());
    Ok(spec.kappa / gamma(half) * u.powf(half - 1.0) * (-u).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectrum_examples() {
        let s = spectrum_from_lambdas(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((s.mu1(), s.kappa()), (3, 1.0));
        let s = spectrum_from_lambdas(&[1.0, 2.0]).unwrap();
        assert_eq!(s.mu1(), 1);
        assert_relative_eq!(s.kappa(), 2f64.sqrt(), max_relative = 1e-15);
        let s = spectrum_from_lambdas(&[1.0]).unwrap();
        assert_eq!((s.mu1(), s.kappa()), (1, 1.0));
        assert_eq!(spectrum_from_lambdas(&[0.0, 0.0]), Err(Error::AllZero));
        assert!(spectrum_from_lambdas(&[1.0, -0.5]).is_err());
        let s = spectrum_from_lambdas(&[1.0, 1.0 - 1e-14, 0.5]).unwrap();
        assert_eq!(s.mu1(), 2);
    }

    #[test]
    fn spectrum_constructors() {
        let s = spectrum_linear_gaussian(&[1.0; 5]).unwrap();
        assert_eq!((s.mu1(), s.kappa()), (5, 1.0));
        let s = spectrum_linear_gaussian(&[3.0, 1.0]).unwrap();
        assert_relative_eq!(s.kappa(), 1.5f64.sqrt(), max_relative = 1e-15);
        assert!(matches!(spectrum_linear_gaussian(&[1.0, 0.0]), Err(Error::NonpositiveVariance(_))));
        let s = spectrum_chisquare(&[0.5, 0.5]).unwrap();
        assert_eq!((s.lambdas(), s.mu1()), (&[1.0][..], 1));
        let a = spectrum_chisquare(&[0.2; 5]).unwrap();
        let b = spectrum_chisquare(&[0.1, 0.4, 0.2, 0.2, 0.1]).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.mu1(), a.kappa()), (4, 1.0));
        assert!(matches!(spectrum_chisquare(&[0.5, 0.6]), Err(Error::InvalidSimplex(_))));
    }

    #[test]
    fn gumbel_spot_values() {
        let s1 = spectrum_from_lambdas(&[1.0]).unwrap();
        let s2 = spectrum_from_lambdas(&[1.0, 1.0]).unwrap();
        assert!((gumbel_limit_cdf(0.0, &s1) - 0.81916).abs() < 5e-6);
        assert!((gumbel_limit_cdf(0.0, &s2) - 0.60653).abs() < 5e-6);
        assert_eq!(gumbel_limit_cdf(1e4, &s1), 1.0);
        assert!(gumbel_limit_cdf(-1e3, &s1) < 1e-300);
        let mut last = 0.0;
        for i in -200..=200 {
            let c = gumbel_limit_cdf(i as f64 * 0.25, &s1);
            assert!(c >= last);
            assert_relative_eq!(c + gumbel_limit_sf(i as f64 * 0.25, &s1), 1.0, max_relative = 1e-12);
            last = c;
        }
    }

    #[test]
    fn centering_round_trip() {
        let s = spectrum_from_lambdas(&[2.0, 1.0, 0.5]).unwrap();
        for &y in &[-3.0, 0.0, 1.5, 8.0] {
            let v2 = gumbel_uncentering(y, 40, 7, &s).unwrap();
            let p = gumbel_asymptotic_pvalue(v2, &[40; 7], &s).unwrap();
            assert_relative_eq!(p, 1.0 - gumbel_limit_cdf(y, &s), max_relative = 1e-9);
        }
        assert!(gumbel_asymptotic_pvalue(0.0, &[40; 7], &s).unwrap() > 0.999);
        assert_eq!(gumbel_asymptotic_pvalue(0.1, &[40, 40], &s), Err(Error::KTooSmall(2)));
        assert!(matches!(gumbel_asymptotic_pvalue(0.1, &[40, 41, 40], &s), Err(Error::UnbalancedDesign(_))));
    }

    #[test]
    fn weighted_matches_balanced() {
        let s = spectrum_from_lambdas(&[1.0]).unwrap();
        let (n, v2) = (30usize, 0.9f64);
        let w = n as f64 / 2.0 * v2;
        assert_relative_eq!(
            gumbel_weighted_pvalue(w, 10, &s).unwrap(),
            gumbel_asymptotic_pvalue(v2, &[n; 10], &s).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn zolotarev_spot_value() {
        let s = spectrum_from_lambdas(&[1.0]).unwrap();
        // e^{-2} / sqrt(2 pi) is the standard normal density at 2
        let phi2 = (-2f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let z = zolotarev_tail_approx(4.0, &s).unwrap();
        assert_relative_eq!(z, phi2, max_relative = 1e-14);
        assert!((z - 0.0540).abs() < 5e-5);
        let mut last = f64::INFINITY;
        for i in 1..100 {
            let v = zolotarev_tail_approx(i as f64 * 0.3, &s).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn survival_mc_basics() {
        assert_eq!(weighted_chisq_survival_mc(&[1.0], -1.0, 10, 0).unwrap().estimate, 1.0);
        let a = weighted_chisq_survival_mc(&[1.0, 0.5], 2.0, 40_000, 9).unwrap();
        let b = weighted_chisq_survival_mc(&[1.0, 0.5], 2.0, 40_000, 9).unwrap();
        assert_eq!(a, b);
    }
}
