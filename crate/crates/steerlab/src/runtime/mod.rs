//! Uniform interface over a causal transformer exposing residual-stream
//! capture and inference-time intervention.
//!
//! The [`HookedModel`] trait is the integration point for concrete backends.
//! This crate ships a deterministic toy transformer ([`toy::ToyTransformer`])
//! that implements the full contract at desk scale; production backends for
//! hub-hosted weights plug in behind the same trait.

pub mod toy;

use ndarray::Array4;

use crate::error::{Error, Result};
use crate::intervene::{self, ProjectionOp};

/// Decoding parameters. `temperature == 0` means greedy decoding, which is
/// deterministic regardless of the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub max_new_tokens: usize,
    pub seed: u64,
}

impl SamplingConfig {
    pub fn greedy(max_new_tokens: usize) -> Self {
        Self {
            temperature: 0.0,
            max_new_tokens,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temperature < 0.0 {
            return Err(Error::Config(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::Config("max_new_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// An inference-time intervention on the residual stream.
///
/// Both kinds act stream-wide: at every layer and every token position.
/// Ablation re-projects the stream after every residual write so no state
/// ever carries a component along the direction; addition offsets the stream
/// once per layer.
#[derive(Debug, Clone)]
pub enum InterventionSpec {
    /// Project the residual stream onto the orthogonal complement of a unit
    /// direction.
    Ablate(ProjectionOp),
    /// Add `coefficient * direction` to the residual stream.
    Add {
        direction: ProjectionOp,
        coefficient: f32,
    },
}

impl InterventionSpec {
    /// Build an ablation spec from a unit direction.
    pub fn ablate(direction: Vec<f32>) -> Result<Self> {
        Ok(Self::Ablate(ProjectionOp::new(direction)?))
    }

    /// Build an addition spec from a unit direction and coefficient.
    pub fn add(direction: Vec<f32>, coefficient: f32) -> Result<Self> {
        Ok(Self::Add {
            direction: ProjectionOp::new(direction)?,
            coefficient,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Ablate(p) => p.dim(),
            Self::Add { direction, .. } => direction.dim(),
        }
    }

    pub fn check_dim(&self, hidden_dim: usize) -> Result<()> {
        if self.dim() != hidden_dim {
            return Err(Error::InterventionDimMismatch {
                expected: hidden_dim,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

/// Residual-stream activations for a batch of prompts.
///
/// `values` is indexed `[sample, layer, position, hidden_dim]` in fp32;
/// `positions` are the requested post-instruction offsets (negative = from
/// the final prompt token, so -1 is the last token).
#[derive(Debug, Clone)]
pub struct ResidualTensor {
    pub values: Array4<f32>,
    pub positions: Vec<i64>,
    pub model_id: String,
}

impl ResidualTensor {
    pub fn num_samples(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn num_layers(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn num_positions(&self) -> usize {
        self.values.shape()[2]
    }

    pub fn hidden_dim(&self) -> usize {
        self.values.shape()[3]
    }

    /// Reject NaN/Inf entries and malformed position lists.
    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != self.num_positions() {
            return Err(Error::DimMismatch(format!(
                "positions list has {} entries, tensor has {} position slots",
                self.positions.len(),
                self.num_positions()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for &p in &self.positions {
            if !seen.insert(p) {
                return Err(Error::DimMismatch(format!("duplicate position offset {p}")));
            }
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DimMismatch(
                "activation tensor contains NaN or Inf".into(),
            ));
        }
        Ok(())
    }
}

/// A causal language model with residual-stream hooks.
///
/// Implementations must be deterministic: identical inputs (and, for
/// `temperature > 0`, identical seeds) produce identical outputs. Prompts are
/// wrapped in the model's chat template before tokenization, so callers pass
/// raw instructions everywhere. A handle is not required to be shareable
/// across threads; hold one handle per worker.
pub trait HookedModel {
    fn model_id(&self) -> &str;
    fn num_layers(&self) -> usize;
    fn hidden_dim(&self) -> usize;
    fn vocab_size(&self) -> usize;

    /// Chat template with a `{prompt}` placeholder; part of the handle so
    /// experiments are replayable.
    fn chat_template(&self) -> &str;

    /// Tokenize text (without templating). Deterministic across calls.
    fn tokenize(&self, text: &str) -> Vec<u32>;

    /// Capture residual-stream activations at every layer for the requested
    /// offsets. Layer `l` is the stream state after block `l` completes.
    fn capture_residuals(&self, prompts: &[String], positions: &[i64]) -> Result<ResidualTensor>;

    /// Generate one completion per prompt under the given interventions.
    fn generate(
        &self,
        prompts: &[String],
        sampling: &SamplingConfig,
        interventions: &[InterventionSpec],
    ) -> Result<Vec<String>>;

    /// Probability distribution over the vocabulary for the next token after
    /// the templated prompt. Sums to 1 within 1e-6; all entries >= 0.
    fn next_token_distribution(
        &self,
        prompt: &str,
        interventions: &[InterventionSpec],
    ) -> Result<Vec<f64>>;
}

/// KL divergence `KL(p || q)` between two probability vectors.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimMismatch(format!(
            "distributions have lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let floor = crate::consts::KL_FLOOR;
    Ok(p.iter()
        .zip(q.iter())
        .filter(|&(&pi, _)| pi > floor)
        .map(|(&pi, &qi)| pi * (pi / qi.max(floor)).ln())
        .sum())
}

/// Resolve a refusal-token set: the first token of each configured word
/// under the model's tokenizer, deduplicated.
pub fn refusal_token_ids(model: &dyn HookedModel, words: &[String]) -> Vec<u32> {
    let mut ids = Vec::new();
    for w in words {
        if let Some(&first) = model.tokenize(w).first() {
            if !ids.contains(&first) {
                ids.push(first);
            }
        }
    }
    ids
}

/// Summed probability mass on a token set, averaged across prompts.
pub fn mean_refusal_probability(
    model: &dyn HookedModel,
    prompts: &[String],
    token_ids: &[u32],
    interventions: &[InterventionSpec],
) -> Result<f64> {
    if prompts.is_empty() {
        return Err(Error::DimMismatch("empty prompt list".into()));
    }
    let mut total = 0.0;
    for prompt in prompts {
        let dist = model.next_token_distribution(prompt, interventions)?;
        total += token_ids
            .iter()
            .filter_map(|&t| dist.get(t as usize))
            .sum::<f64>();
    }
    Ok(total / prompts.len() as f64)
}

/// Apply every intervention to a single residual vector, ablations last so
/// the projection invariant holds after any additions.
pub(crate) fn apply_interventions_to_vec(
    x: &mut [f32],
    interventions: &[InterventionSpec],
    adds_enabled: bool,
) -> Result<()> {
    for spec in interventions {
        if let InterventionSpec::Add {
            direction,
            coefficient,
        } = spec
        {
            if adds_enabled {
                intervene::add_direction_in_place(x, direction.direction(), *coefficient)?;
            }
        }
    }
    for spec in interventions {
        if let InterventionSpec::Ablate(proj) = spec {
            proj.ablate_in_place(x)?;
        }
    }
    Ok(())
}
