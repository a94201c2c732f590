//! Deterministic toy transformer used as the desk-scale oracle backend.
//!
//! Weights are derived entirely from a seed, so a [`ToyConfig`] file *is* the
//! model: loading the same config reproduces the same forward pass bitwise.
//! Features can be planted into the residual stream (a fixed vector added
//! whenever a trigger token is present) with optional couplings into the
//! unembedding, which makes contrast directions, refusal behavior, and
//! representational shifts recoverable by construction.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::runtime::{
    apply_interventions_to_vec, HookedModel, InterventionSpec, ResidualTensor, SamplingConfig,
};
use crate::seeds;

pub const BOS: u32 = 0;
pub const EOS: u32 = 1;
pub const UNK: u32 = 2;
const SPECIALS: [&str; 3] = ["<bos>", "<eos>", "<unk>"];

const RMS_EPS: f32 = 1e-6;
const BLOCK_GAIN: f32 = 0.1;
const POS_SCALE: f32 = 0.1;
const MAX_POSITIONS: usize = 512;

/// A feature planted into the residual stream.
///
/// Whenever the trigger token appears anywhere in the sequence, `vector` is
/// added to the stream at every position — at the embedding when `layer` is
/// `None`, otherwise right after block `layer`. `logit_coupling` additionally
/// tilts unembedding columns along the (normalized) vector, so the feature
/// carries probability mass to specific output tokens.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedFeature {
    pub trigger_word: String,
    pub layer: Option<usize>,
    pub vector: Vec<f32>,
    #[serde(default)]
    pub logit_coupling: Vec<(String, f32)>,
}

/// Full specification of a toy model. Serializable; weights regenerate from
/// `seed`, so this struct is also the on-disk model format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToyConfig {
    pub model_id: String,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub vocab_size: usize,
    pub seed: u64,
    /// Blocks write nothing to the stream; the residual stays at the
    /// embedding output. Used by capture oracles.
    #[serde(default)]
    pub identity_blocks: bool,
    /// Restrict all residual writes to the first `k` coordinates, leaving
    /// the rest identically zero. Used by orthogonal-complement oracles.
    #[serde(default)]
    pub write_dims: Option<usize>,
    /// Words inserted into the vocabulary right after the specials.
    #[serde(default)]
    pub extra_words: Vec<String>,
    #[serde(default)]
    pub planted: Vec<PlantedFeature>,
    /// Constant offsets on output logits, per word.
    #[serde(default)]
    pub logit_bias: Vec<(String, f32)>,
    #[serde(default = "default_chat_template")]
    pub chat_template: String,
}

fn default_chat_template() -> String {
    "user: {prompt} assistant:".to_string()
}

impl ToyConfig {
    pub fn new(model_id: &str, num_layers: usize, hidden_dim: usize, vocab_size: usize, seed: u64) -> Self {
        Self {
            model_id: model_id.to_string(),
            num_layers,
            hidden_dim,
            vocab_size,
            seed,
            identity_blocks: false,
            write_dims: None,
            extra_words: Vec::new(),
            planted: Vec::new(),
            logit_bias: Vec::new(),
            chat_template: default_chat_template(),
        }
    }
}

/// Closed-vocabulary whitespace tokenizer. Unknown words map to `<unk>`.
#[derive(Debug, Clone)]
pub struct ToyTokenizer {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl ToyTokenizer {
    fn build(vocab_size: usize, seed: u64, extra_words: &[String]) -> Result<Self> {
        let mut words: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        for w in extra_words {
            if !words.contains(w) {
                words.push(w.clone());
            }
        }
        if words.len() > vocab_size {
            return Err(Error::Config(format!(
                "vocab_size {} too small for {} reserved words",
                vocab_size,
                words.len()
            )));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x746f_6b65_6e73);
        let consonants = b"bdfgklmnprstvz";
        let vowels = b"aeiou";
        while words.len() < vocab_size {
            let syllables = rng.gen_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push(consonants[rng.gen_range(0..consonants.len())] as char);
                w.push(vowels[rng.gen_range(0..vowels.len())] as char);
            }
            if !words.contains(&w) {
                words.push(w);
            }
        }
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Ok(Self { words, index })
    }

    /// Content tokens only; the forward pass prepends `<bos>` itself.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        text.split_whitespace()
            .map(|w| *self.index.get(w).unwrap_or(&UNK))
            .collect()
    }

    pub fn decode(&self, ids: &[u32]) -> String {
        ids.iter()
            .filter(|&&id| id != BOS && id != EOS)
            .map(|&id| self.words.get(id as usize).map_or("<unk>", |w| w.as_str()))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

struct Block {
    wq: Array2<f32>,
    wk: Array2<f32>,
    wv: Array2<f32>,
    wo: Array2<f32>,
    w1: Array2<f32>,
    w2: Array2<f32>,
}

struct PlantedRuntime {
    trigger: u32,
    layer: Option<usize>,
    vector: Array1<f32>,
}

/// The toy causal transformer.
pub struct ToyTransformer {
    cfg: ToyConfig,
    tokenizer: ToyTokenizer,
    embed: Array2<f32>,
    pos: Array2<f32>,
    blocks: Vec<Block>,
    unembed: Array2<f32>,
    logit_bias: Array1<f32>,
    planted: Vec<PlantedRuntime>,
}

fn random_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize, sd: f64) -> Array2<f32> {
    let normal = Normal::new(0.0, sd).expect("valid sd");
    Array2::from_shape_fn((rows, cols), |_| normal.sample(rng) as f32)
}

fn sinusoidal_positions(max_pos: usize, dim: usize) -> Array2<f32> {
    Array2::from_shape_fn((max_pos, dim), |(p, i)| {
        let exponent = (2 * (i / 2)) as f64 / dim as f64;
        let angle = p as f64 / 10_000f64.powf(exponent);
        let v = if i % 2 == 0 { angle.sin() } else { angle.cos() };
        (v as f32) * POS_SCALE
    })
}

fn zero_high_dims(m: &mut Array2<f32>, keep: usize) {
    for mut row in m.rows_mut() {
        for i in keep..row.len() {
            row[i] = 0.0;
        }
    }
}

/// Build a toy model from its config. Deterministic: the same config yields
/// bitwise-identical weights and forward passes.
pub fn build_toy_transformer(cfg: &ToyConfig) -> Result<ToyTransformer> {
    if cfg.num_layers < 2 || cfg.hidden_dim < 2 || cfg.vocab_size < 2 {
        return Err(Error::Config(
            "toy model needs num_layers, hidden_dim, vocab_size >= 2".into(),
        ));
    }
    let d = cfg.hidden_dim;

    // Any word referenced by a planted feature or bias must exist in-vocab.
    let mut extra = cfg.extra_words.clone();
    let mut reserve = |w: &String| {
        if !extra.contains(w) && !SPECIALS.contains(&w.as_str()) {
            extra.push(w.clone());
        }
    };
    for f in &cfg.planted {
        reserve(&f.trigger_word);
        for (w, _) in &f.logit_coupling {
            reserve(w);
        }
    }
    for (w, _) in &cfg.logit_bias {
        reserve(w);
    }
    let tokenizer = ToyTokenizer::build(cfg.vocab_size, cfg.seed, &extra)?;

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut embed = random_matrix(&mut rng, cfg.vocab_size, d, 1.0 / (d as f64).sqrt());
    let mut pos = sinusoidal_positions(MAX_POSITIONS, d);
    let w_sd = 1.0 / (d as f64).sqrt();
    let mut blocks = Vec::with_capacity(cfg.num_layers);
    for _ in 0..cfg.num_layers {
        blocks.push(Block {
            wq: random_matrix(&mut rng, d, d, w_sd),
            wk: random_matrix(&mut rng, d, d, w_sd),
            wv: random_matrix(&mut rng, d, d, w_sd),
            wo: random_matrix(&mut rng, d, d, w_sd),
            w1: random_matrix(&mut rng, d, d, w_sd),
            w2: random_matrix(&mut rng, d, d, w_sd),
        });
    }
    let mut unembed = random_matrix(&mut rng, d, cfg.vocab_size, w_sd);

    if let Some(keep) = cfg.write_dims {
        if keep == 0 || keep > d {
            return Err(Error::Config(format!(
                "write_dims must be in 1..={d}, got {keep}"
            )));
        }
        zero_high_dims(&mut embed, keep);
        zero_high_dims(&mut pos, keep);
        for b in &mut blocks {
            zero_high_dims(&mut b.wo, keep);
            zero_high_dims(&mut b.w2, keep);
        }
    }

    let mut planted = Vec::new();
    for f in &cfg.planted {
        if f.vector.len() != d {
            return Err(Error::Config(format!(
                "planted vector for trigger `{}` has dim {}, model dim is {d}",
                f.trigger_word,
                f.vector.len()
            )));
        }
        if let Some(l) = f.layer {
            if l >= cfg.num_layers {
                return Err(Error::Config(format!(
                    "planted layer {l} out of range (model has {} layers)",
                    cfg.num_layers
                )));
            }
        }
        let trigger = tokenizer
            .word_id(&f.trigger_word)
            .ok_or_else(|| Error::Config(format!("trigger word `{}` not in vocab", f.trigger_word)))?;
        let vnorm = crate::intervene::norm(&f.vector);
        for (word, alpha) in &f.logit_coupling {
            let tok = tokenizer
                .word_id(word)
                .ok_or_else(|| Error::Config(format!("coupling word `{word}` not in vocab")))? as usize;
            if vnorm > 0.0 {
                for i in 0..d {
                    unembed[(i, tok)] += alpha * f.vector[i] / vnorm as f32;
                }
            }
        }
        planted.push(PlantedRuntime {
            trigger,
            layer: f.layer,
            vector: Array1::from_vec(f.vector.clone()),
        });
    }

    let mut logit_bias = Array1::zeros(cfg.vocab_size);
    for (word, b) in &cfg.logit_bias {
        let tok = tokenizer
            .word_id(word)
            .ok_or_else(|| Error::Config(format!("bias word `{word}` not in vocab")))?;
        logit_bias[tok as usize] += *b;
    }

    Ok(ToyTransformer {
        cfg: cfg.clone(),
        tokenizer,
        embed,
        pos,
        blocks,
        unembed,
        logit_bias,
        planted,
    })
}

struct ForwardTrace {
    /// Residual snapshot after each block, `[seq, d]` per layer.
    layers: Vec<Array2<f32>>,
    final_state: Array2<f32>,
}

impl ToyTransformer {
    pub fn config(&self) -> &ToyConfig {
        &self.cfg
    }

    pub fn tokenizer(&self) -> &ToyTokenizer {
        &self.tokenizer
    }

    fn template(&self, prompt: &str) -> String {
        self.cfg.chat_template.replace("{prompt}", prompt)
    }

    fn with_bos(&self, content: &[u32]) -> Vec<u32> {
        let mut full = Vec::with_capacity(content.len() + 1);
        full.push(BOS);
        full.extend_from_slice(content);
        full
    }

    fn rmsnorm(row: &[f32]) -> Vec<f32> {
        let ms = row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>() / row.len() as f64;
        let inv = 1.0 / (ms + f64::from(RMS_EPS)).sqrt();
        row.iter().map(|&v| (f64::from(v) * inv) as f32).collect()
    }

    fn attention(&self, block: &Block, h: &Array2<f32>) -> Array2<f32> {
        let seq = h.nrows();
        let d = h.ncols();
        let q = h.dot(&block.wq);
        let k = h.dot(&block.wk);
        let v = h.dot(&block.wv);
        let scale = 1.0 / (d as f32).sqrt();
        let mut ctx = Array2::<f32>::zeros((seq, d));
        for i in 0..seq {
            // causal: position i attends to 0..=i
            let mut scores = Vec::with_capacity(i + 1);
            let qi = q.row(i);
            for j in 0..=i {
                scores.push(qi.dot(&k.row(j)) * scale);
            }
            let m = scores.iter().cloned().fold(f32::NEG_INFINITY, f32::max);
            let mut z = 0.0f32;
            for s in scores.iter_mut() {
                *s = (*s - m).exp();
                z += *s;
            }
            for (j, s) in scores.iter().enumerate() {
                let w = s / z;
                for c in 0..d {
                    ctx[(i, c)] += w * v[(j, c)];
                }
            }
        }
        ctx.dot(&block.wo)
    }

    fn mlp(&self, block: &Block, h: &Array2<f32>) -> Array2<f32> {
        let mut hidden = h.dot(&block.w1);
        hidden.mapv_inplace(f32::tanh);
        hidden.dot(&block.w2)
    }

    fn plant_writes(&self, x: &mut Array2<f32>, tokens: &[u32], layer: Option<usize>) {
        for f in &self.planted {
            if f.layer == layer && tokens.contains(&f.trigger) {
                for mut row in x.rows_mut() {
                    for (r, &p) in row.iter_mut().zip(f.vector.iter()) {
                        *r += p;
                    }
                }
            }
        }
    }

    fn hook(x: &mut Array2<f32>, interventions: &[InterventionSpec], adds: bool) -> Result<()> {
        if interventions.is_empty() {
            return Ok(());
        }
        for mut row in x.rows_mut() {
            let slice = row.as_slice_mut().expect("contiguous row");
            apply_interventions_to_vec(slice, interventions, adds)?;
        }
        Ok(())
    }

    fn forward(&self, tokens: &[u32], interventions: &[InterventionSpec]) -> Result<ForwardTrace> {
        for spec in interventions {
            spec.check_dim(self.cfg.hidden_dim)?;
        }
        let seq = tokens.len();
        let d = self.cfg.hidden_dim;
        let mut x = Array2::<f32>::zeros((seq, d));
        for (s, &tok) in tokens.iter().enumerate() {
            let p = s.min(MAX_POSITIONS - 1);
            for c in 0..d {
                x[(s, c)] = self.embed[(tok as usize, c)] + self.pos[(p, c)];
            }
        }
        self.plant_writes(&mut x, tokens, None);
        Self::hook(&mut x, interventions, false)?;

        let mut layers = Vec::with_capacity(self.cfg.num_layers);
        for (l, block) in self.blocks.iter().enumerate() {
            if !self.cfg.identity_blocks {
                let h: Array2<f32> = {
                    let mut h = x.clone();
                    for mut row in h.rows_mut() {
                        let normed = Self::rmsnorm(row.as_slice().expect("contiguous"));
                        row.as_slice_mut().expect("contiguous").copy_from_slice(&normed);
                    }
                    h
                };
                let attn = self.attention(block, &h);
                x.scaled_add(BLOCK_GAIN, &attn);
                Self::hook(&mut x, interventions, false)?;

                let mut h2 = x.clone();
                for mut row in h2.rows_mut() {
                    let normed = Self::rmsnorm(row.as_slice().expect("contiguous"));
                    row.as_slice_mut().expect("contiguous").copy_from_slice(&normed);
                }
                let mlp = self.mlp(block, &h2);
                x.scaled_add(BLOCK_GAIN, &mlp);
            }
            self.plant_writes(&mut x, tokens, Some(l));
            Self::hook(&mut x, interventions, true)?;
            layers.push(x.clone());
        }
        Ok(ForwardTrace {
            layers,
            final_state: x,
        })
    }

    fn logits_last(&self, trace: &ForwardTrace) -> Vec<f64> {
        let last = trace.final_state.row(trace.final_state.nrows() - 1);
        let mut logits = vec![0.0f64; self.cfg.vocab_size];
        for (j, logit) in logits.iter_mut().enumerate() {
            let mut acc = f64::from(self.logit_bias[j]);
            for (c, &v) in last.iter().enumerate() {
                acc += f64::from(v) * f64::from(self.unembed[(c, j)]);
            }
            *logit = acc;
        }
        logits
    }

    fn softmax(logits: &[f64]) -> Vec<f64> {
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.iter().map(|&e| e / z).collect()
    }

    fn sample_token(dist: &[f64], temperature: f64, rng: &mut ChaCha20Rng) -> u32 {
        if temperature == 0.0 {
            let mut best = 0usize;
            for (i, &p) in dist.iter().enumerate() {
                if p > dist[best] {
                    best = i;
                }
            }
            return best as u32;
        }
        // Re-temper the distribution: p_i^(1/T) renormalized.
        let inv_t = 1.0 / temperature;
        let logp: Vec<f64> = dist.iter().map(|&p| p.max(1e-300).ln() * inv_t).collect();
        let tempered = Self::softmax(&logp);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &p) in tempered.iter().enumerate() {
            acc += p;
            if u <= acc {
                return i as u32;
            }
        }
        (tempered.len() - 1) as u32
    }
}

impl HookedModel for ToyTransformer {
    fn model_id(&self) -> &str {
        &self.cfg.model_id
    }

    fn num_layers(&self) -> usize {
        self.cfg.num_layers
    }

    fn hidden_dim(&self) -> usize {
        self.cfg.hidden_dim
    }

    fn vocab_size(&self) -> usize {
        self.cfg.vocab_size
    }

    fn chat_template(&self) -> &str {
        &self.cfg.chat_template
    }

    fn tokenize(&self, text: &str) -> Vec<u32> {
        self.tokenizer.encode(text)
    }

    fn capture_residuals(&self, prompts: &[String], positions: &[i64]) -> Result<ResidualTensor> {
        if prompts.is_empty() {
            return Err(Error::DimMismatch("empty prompt list".into()));
        }
        if positions.is_empty() {
            return Err(Error::Config("empty position list".into()));
        }
        for &p in positions {
            if p >= 0 {
                return Err(Error::Config(format!(
                    "position offsets must be negative (from sequence end), got {p}"
                )));
            }
        }
        let (n, l, k, d) = (
            prompts.len(),
            self.cfg.num_layers,
            positions.len(),
            self.cfg.hidden_dim,
        );
        let mut values = ndarray::Array4::<f32>::zeros((n, l, k, d));
        for (pi, prompt) in prompts.iter().enumerate() {
            let content = self.tokenize(&self.template(prompt));
            for &off in positions {
                let needed = off.unsigned_abs() as usize;
                if needed > content.len() {
                    return Err(Error::PromptTooShort {
                        index: pi,
                        offset: off,
                        needed,
                        got: content.len(),
                    });
                }
            }
            let tokens = self.with_bos(&content);
            let trace = self.forward(&tokens, &[])?;
            for (li, layer) in trace.layers.iter().enumerate() {
                for (ki, &off) in positions.iter().enumerate() {
                    let idx = (tokens.len() as i64 + off) as usize;
                    for c in 0..d {
                        values[(pi, li, ki, c)] = layer[(idx, c)];
                    }
                }
            }
        }
        let tensor = ResidualTensor {
            values,
            positions: positions.to_vec(),
            model_id: self.cfg.model_id.clone(),
        };
        tensor.validate()?;
        Ok(tensor)
    }

    fn generate(
        &self,
        prompts: &[String],
        sampling: &SamplingConfig,
        interventions: &[InterventionSpec],
    ) -> Result<Vec<String>> {
        sampling.validate()?;
        let mut out = Vec::with_capacity(prompts.len());
        for (pi, prompt) in prompts.iter().enumerate() {
            let mut tokens = self.with_bos(&self.tokenize(&self.template(prompt)));
            let prompt_len = tokens.len();
            let mut rng = ChaCha20Rng::seed_from_u64(seeds::derive(
                sampling.seed,
                &["generate", &pi.to_string()],
            ));
            for _ in 0..sampling.max_new_tokens {
                let trace = self.forward(&tokens, interventions)?;
                let dist = Self::softmax(&self.logits_last(&trace));
                let tok = Self::sample_token(&dist, sampling.temperature, &mut rng);
                if tok == EOS {
                    break;
                }
                tokens.push(tok);
            }
            out.push(self.tokenizer.decode(&tokens[prompt_len..]));
        }
        Ok(out)
    }

    fn next_token_distribution(
        &self,
        prompt: &str,
        interventions: &[InterventionSpec],
    ) -> Result<Vec<f64>> {
        let tokens = self.with_bos(&self.tokenize(&self.template(prompt)));
        let trace = self.forward(&tokens, interventions)?;
        Ok(Self::softmax(&self.logits_last(&trace)))
    }
}

// ---------------------------------------------------------------------------
// Convenience builders and dataset helpers
// ---------------------------------------------------------------------------

/// Trigger word for the built-in refusal feature.
pub const SAFETY_TRIGGER: &str = "hazmat";
/// Output token the refusal feature promotes.
pub const REFUSAL_WORD: &str = "sorry";

/// Magnitude of planted feature vectors relative to the activation scale.
pub const PLANT_STRENGTH: f32 = 3.0;
const REFUSAL_COUPLING: f32 = 2.5;
const REFUSAL_BIAS: f32 = -2.0;
const ANSWER_BIAS: f32 = 1.5;

/// Single-token answer words so sampled toy completions are parseable by the
/// survey/benchmark harness.
pub fn answer_words() -> Vec<String> {
    let mut words: Vec<String> = (0..=10).map(|v| format!("<answer>{v}</answer>")).collect();
    for w in [
        "true",
        "false",
        "a",
        "b",
        "c",
        "d",
        "blue_pantry",
        "red_crate",
        "green_bucket",
    ] {
        words.push(format!("<answer>{w}</answer>"));
    }
    words
}

fn unit_from_rng(rng: &mut ChaCha20Rng, d: usize) -> Vec<f32> {
    let normal = Normal::new(0.0, 1.0).expect("valid sd");
    let v: Vec<f64> = (0..d).map(|_| normal.sample(rng)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|&x| (x / n) as f32).collect()
}

/// Deterministic unit direction derived from a seed.
pub fn planted_unit_direction(seed: u64, d: usize) -> Vec<f32> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x706c_616e_74);
    unit_from_rng(&mut rng, d)
}

fn scale(v: &[f32], c: f32) -> Vec<f32> {
    v.iter().map(|&x| x * c).collect()
}

/// Orthonormal concept directions shared between a base/instruct toy pair.
pub struct ConceptVectors {
    pub safety: Vec<f32>,
    pub mind: Vec<f32>,
    pub tom: Vec<f32>,
    pub subject_control: Vec<f32>,
    pub general_control: Vec<f32>,
}

/// Gram-Schmidt over five seeded draws, so all concept vectors are exactly
/// orthonormal.
pub fn concept_vectors(planted_seed: u64, d: usize) -> ConceptVectors {
    let mut rng = ChaCha20Rng::seed_from_u64(planted_seed ^ 0x636f_6e63_6570);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let normal = Normal::new(0.0, 1.0).expect("valid sd");
    while basis.len() < 5 {
        let mut v: Vec<f64> = (0..d).map(|_| normal.sample(&mut rng)).collect();
        for b in &basis {
            let c: f64 = v.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b.iter()) {
                *vi -= c * bi;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    let to_f32 = |v: &Vec<f64>| v.iter().map(|&x| x as f32).collect::<Vec<f32>>();
    ConceptVectors {
        safety: to_f32(&basis[0]),
        mind: to_f32(&basis[1]),
        tom: to_f32(&basis[2]),
        subject_control: to_f32(&basis[3]),
        general_control: to_f32(&basis[4]),
    }
}

/// Trigger words for the planted concept features.
pub const CONCEPT_TRIGGERS: [(&str, &str); 5] = [
    ("safety", SAFETY_TRIGGER),
    ("mind", "mindful"),
    ("tom", "beliefs"),
    ("subject_control", "gadget"),
    ("general_control", "granite"),
];

/// A toy model with one planted refusal feature at layer `L/2`, coupled into
/// the refusal output token, plus parseable answer tokens.
pub fn safety_toy(model_id: &str, num_layers: usize, hidden_dim: usize, vocab_size: usize, seed: u64) -> Result<ToyTransformer> {
    let mut cfg = ToyConfig::new(model_id, num_layers, hidden_dim, vocab_size, seed);
    let v = planted_unit_direction(seed, hidden_dim);
    cfg.extra_words = answer_words();
    cfg.planted.push(PlantedFeature {
        trigger_word: SAFETY_TRIGGER.to_string(),
        layer: Some(num_layers / 2),
        vector: scale(&v, PLANT_STRENGTH),
        logit_coupling: vec![(REFUSAL_WORD.to_string(), REFUSAL_COUPLING)],
    });
    cfg.logit_bias.push((REFUSAL_WORD.to_string(), REFUSAL_BIAS));
    for w in answer_words() {
        cfg.logit_bias.push((w, ANSWER_BIAS));
    }
    build_toy_transformer(&cfg)
}

/// The planted refusal direction of [`safety_toy`] (unit norm).
pub fn safety_toy_direction(seed: u64, hidden_dim: usize) -> Vec<f32> {
    planted_unit_direction(seed, hidden_dim)
}

/// A base/instruct toy pair sharing weights and concept features. The
/// instruct member differs from the base only in its mind-attribution
/// feature, which is rotated to oppose the safety direction (cosine -0.5);
/// every other concept is identical.
pub fn concept_toy_pair(
    num_layers: usize,
    hidden_dim: usize,
    vocab_size: usize,
    seed: u64,
    planted_seed: u64,
) -> Result<(ToyTransformer, ToyTransformer)> {
    let base = concept_toy(num_layers, hidden_dim, vocab_size, seed, planted_seed, false)?;
    let instruct = concept_toy(num_layers, hidden_dim, vocab_size, seed, planted_seed, true)?;
    Ok((base, instruct))
}

/// One member of the concept pair; `shifted` selects the instruct variant.
pub fn concept_toy(
    num_layers: usize,
    hidden_dim: usize,
    vocab_size: usize,
    seed: u64,
    planted_seed: u64,
    shifted: bool,
) -> Result<ToyTransformer> {
    let id = if shifted { "toy-instruct" } else { "toy-base" };
    let mut cfg = ToyConfig::new(id, num_layers, hidden_dim, vocab_size, seed);
    cfg.extra_words = answer_words();
    let vs = concept_vectors(planted_seed, hidden_dim);
    let mind = if shifted {
        // Rotate within the (mind, safety) plane to cosine -0.5 with safety.
        let c = 3.0f32.sqrt() / 2.0;
        vs.mind
            .iter()
            .zip(vs.safety.iter())
            .map(|(&m, &s)| c * m - 0.5 * s)
            .collect::<Vec<f32>>()
    } else {
        vs.mind.clone()
    };
    let features: [(&str, &Vec<f32>); 5] = [
        (SAFETY_TRIGGER, &vs.safety),
        ("mindful", &mind),
        ("beliefs", &vs.tom),
        ("gadget", &vs.subject_control),
        ("granite", &vs.general_control),
    ];
    for (trigger, v) in features {
        cfg.planted.push(PlantedFeature {
            trigger_word: trigger.to_string(),
            layer: None,
            vector: scale(v, PLANT_STRENGTH),
            logit_coupling: if trigger == SAFETY_TRIGGER {
                vec![(REFUSAL_WORD.to_string(), REFUSAL_COUPLING)]
            } else {
                Vec::new()
            },
        });
    }
    cfg.logit_bias.push((REFUSAL_WORD.to_string(), REFUSAL_BIAS));
    for w in answer_words() {
        cfg.logit_bias.push((w, ANSWER_BIAS));
    }
    build_toy_transformer(&cfg)
}

/// Sample filler prompts from the model's generated (non-reserved) vocab.
///
/// `include` forces a word into a random position; `avoid` words never
/// appear as filler.
pub fn sample_prompts(
    model: &ToyTransformer,
    n: usize,
    len: usize,
    seed: u64,
    include: Option<&str>,
    avoid: &[&str],
) -> Vec<String> {
    // Planted trigger and coupled words never appear as filler; otherwise a
    // random prompt could fire a feature and contaminate the contrast.
    let reserved: Vec<&str> = SPECIALS
        .iter()
        .copied()
        .chain(model.cfg.extra_words.iter().map(|s| s.as_str()))
        .chain(model.cfg.planted.iter().map(|f| f.trigger_word.as_str()))
        .chain(
            model
                .cfg
                .planted
                .iter()
                .flat_map(|f| f.logit_coupling.iter().map(|(w, _)| w.as_str())),
        )
        .chain(model.cfg.logit_bias.iter().map(|(w, _)| w.as_str()))
        .chain(avoid.iter().copied())
        .chain(std::iter::once(include.unwrap_or("")))
        .collect();
    let pool: Vec<&String> = model
        .tokenizer
        .words()
        .iter()
        .filter(|w| !reserved.contains(&w.as_str()))
        .collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut words: Vec<String> = (0..len)
                .map(|_| pool[rng.gen_range(0..pool.len())].clone())
                .collect();
            if let Some(inc) = include {
                let pos = rng.gen_range(0..=words.len().saturating_sub(1));
                words[pos] = inc.to_string();
            }
            words.join(" ")
        })
        .collect()
}

/// Contrastive (positive, negative) text pairs for one concept trigger:
/// identical filler, with the trigger word present only on the positive side.
pub fn contrast_pairs(
    model: &ToyTransformer,
    trigger: &str,
    n_pairs: usize,
    len: usize,
    seed: u64,
) -> Vec<(String, String)> {
    let negatives = sample_prompts(model, n_pairs, len, seed, None, &[trigger]);
    negatives
        .into_iter()
        .map(|neg| (format!("{trigger} {neg}"), format!("calm {neg}")))
        .collect()
}
