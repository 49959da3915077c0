//! K-sample testing with the maximum of pairwise maximum mean discrepancies.
//!
//! Data are pooled with contiguous groups ([`GroupedDataset`]). A kernel turns
//! them into a [`GramMatrix`], every statistic is a function of its block sums,
//! and p-values come from permutations, concentration bounds or the Gumbel
//! limit. Group indices are 0-based throughout.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod baselines;
pub mod concentration;
pub mod dataset;
pub mod error;
pub mod fixed;
pub mod kernels;
pub mod permutation;
pub mod pipeline;
pub mod rng;
pub mod simulation;
pub mod statistics;

pub use asymptotic::EigenSpectrum;
pub use concentration::{SigmaKMode, VarianceProxy};
pub use dataset::{validate_dataset, GroupIndex, GroupedDataset, Observations, Point};
pub use error::{Error, Result};
pub use kernels::{gram_matrix, Bandwidth, GramMatrix, KernelFamily, KernelSpec, MatrixSource};
pub use permutation::{PermutationMode, PermutationPlan};
pub use pipeline::{run_test, Calibration, MethodTag, TestConfig, TestResult};
pub use simulation::{PowerEstimate, Scenario, ScenarioSpec};
pub use statistics::{block_sums, max_mmd, BlockSums, MaxMmd, StatisticKind};
