//! # steerlab
//!
//! A toolkit for extracting, selecting, and applying linear refusal
//! directions in transformer residual streams, measuring the behavioral and
//! representational consequences of ablating them, and running the
//! accompanying statistical analyses end to end.
//!
//! Modules map onto the experiment pipeline:
//!
//! - [`intervene`] — pure vector math: directional ablation and activation
//!   addition.
//! - [`runtime`] — the hooked-model interface (residual capture, generation
//!   under interventions) plus a deterministic toy transformer backend.
//! - [`directions`] — difference-in-means candidate directions and the
//!   three-criterion selection of the refusal vector.
//! - [`geometry`] — concept directions, layer-wise cosine profiles, and
//!   instruction-tuning shift analysis.
//! - [`instruments`] — survey and benchmark administration, answer parsing,
//!   accuracy and attack-success-rate scoring.
//! - [`stats`] — fixed-effects OLS with cluster-robust standard errors,
//!   interaction contrasts, a random-intercept mixed model, BH-FDR, paired
//!   t-tests, and kernel density estimation.
//! - [`pipeline`] — experiment configuration, staged orchestration with
//!   resume, and figure/table emission.

pub mod consts;
pub mod container;
pub mod directions;
pub mod error;
pub mod geometry;
pub mod instruments;
pub mod intervene;
pub mod pipeline;
pub mod runtime;
pub mod seeds;
pub mod stats;

pub use error::{Error, Result};
