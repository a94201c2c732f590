//! The statistical battery: fixed-effects OLS with cluster-robust standard
//! errors, pairwise interaction contrasts, a random-intercept mixed model,
//! Benjamini-Hochberg FDR, paired t-tests, and kernel density estimation.

pub mod design;
pub mod fdr;
pub mod kde;
pub mod mixed;
pub mod ols;
pub mod ttest;

pub use design::{Observation, ObservationTable};
pub use fdr::bh_fdr;
pub use kde::{kde, BandwidthRule, KdeEstimate};
pub use mixed::{fit_mixed_random_intercept, MixedModelResult};
pub use ols::{
    cluster_robust_covariance, fit_fixed_effects, fit_interactions, pairwise_contrasts,
    FixedEffectsFit, InteractionContrast, RegressionResult,
};
pub use ttest::{paired_ttest, PairedTTest};
