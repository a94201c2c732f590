//! Experiment orchestration: configuration, staged execution with resume,
//! and artifact emission.

pub mod figures;
pub mod manifest;
pub mod stages;
pub mod toydata;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::consts;
use crate::error::{Error, Result};
use crate::runtime::toy::{build_toy_transformer, concept_toy, safety_toy, ToyConfig};
use crate::runtime::HookedModel;

/// Model references and dataset paths plus every tunable the stages read.
/// Paths are resolved relative to the config file's directory at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    pub models: ModelsSection,
    pub datasets: DatasetsSection,
    #[serde(default)]
    pub items: ItemsSection,
    #[serde(default)]
    pub contrast: ContrastSection,
    #[serde(default)]
    pub selection: SelectionSection,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub conditions: ConditionsSection,
    #[serde(default)]
    pub validation: ValidationSection,
    #[serde(default)]
    pub analyze: AnalyzeSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelsSection {
    /// The instruction-tuned model: extraction, administration, geometry.
    pub instruct: String,
    /// Pre-instruction-tuning counterpart; geometry runs only when present.
    #[serde(default)]
    pub base: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetsSection {
    pub harmful: PathBuf,
    pub harmless: PathBuf,
    pub val_harmful: PathBuf,
    pub val_harmless: PathBuf,
    /// Attack prompts for the ASR check; defaults to `val_harmful`.
    #[serde(default)]
    pub attack: Option<PathBuf>,
    /// Human mind-attribution scores, one per line, pre-weighted.
    #[serde(default)]
    pub human_baseline: Option<PathBuf>,
}

/// Item sources: the literal string `builtin` or a path to a line-delimited
/// item file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ItemsSection {
    #[serde(default = "default_builtin_vec")]
    pub surveys: Vec<String>,
    #[serde(default = "default_builtin_vec")]
    pub benchmarks: Vec<String>,
}

fn default_builtin_vec() -> Vec<String> {
    vec!["builtin".to_string()]
}

impl Default for ItemsSection {
    fn default() -> Self {
        Self {
            surveys: default_builtin_vec(),
            benchmarks: default_builtin_vec(),
        }
    }
}

/// Contrastive pair source: `builtin` or a path to a pair file covering all
/// concepts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContrastSection {
    #[serde(default = "default_builtin")]
    pub source: String,
}

fn default_builtin() -> String {
    "builtin".to_string()
}

impl Default for ContrastSection {
    fn default() -> Self {
        Self {
            source: default_builtin(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionSection {
    #[serde(default = "default_positions")]
    pub positions: Vec<i64>,
    #[serde(default)]
    pub steering_min: f64,
    #[serde(default = "default_kl_max")]
    pub kl_max: f64,
    #[serde(default = "default_layer_fraction")]
    pub layer_fraction: f64,
    #[serde(default = "default_refusal_tokens")]
    pub refusal_tokens: Vec<String>,
}

fn default_positions() -> Vec<i64> {
    consts::DEFAULT_POSITIONS.to_vec()
}

fn default_kl_max() -> f64 {
    consts::DEFAULT_KL_MAX
}

fn default_layer_fraction() -> f64 {
    consts::DEFAULT_LAYER_FRACTION
}

fn default_refusal_tokens() -> Vec<String> {
    consts::DEFAULT_REFUSAL_TOKEN_WORDS
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl Default for SelectionSection {
    fn default() -> Self {
        Self {
            positions: default_positions(),
            steering_min: consts::DEFAULT_STEERING_MIN,
            kl_max: default_kl_max(),
            layer_fraction: default_layer_fraction(),
            refusal_tokens: default_refusal_tokens(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingSection {
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: usize,
}

fn default_temperature() -> f64 {
    1.0
}

fn default_reps() -> usize {
    100
}

fn default_max_new_tokens() -> usize {
    256
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            temperature: default_temperature(),
            reps: default_reps(),
            max_new_tokens: default_max_new_tokens(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionsSection {
    #[serde(default = "default_true")]
    pub baseline: bool,
    #[serde(default = "default_true")]
    pub jailbroken: bool,
    #[serde(default = "default_cot")]
    pub cot: Vec<bool>,
}

fn default_true() -> bool {
    true
}

fn default_cot() -> Vec<bool> {
    vec![true, false]
}

impl Default for ConditionsSection {
    fn default() -> Self {
        Self {
            baseline: true,
            jailbroken: true,
            cot: default_cot(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationSection {
    #[serde(default = "default_refusal_phrases")]
    pub refusal_phrases: Vec<String>,
    /// `none` (substring matching only) or `phrase` (the built-in
    /// phrase-heuristic judge). Content-classifier judges plug in through
    /// the `SafetyJudge` trait.
    #[serde(default = "default_judge")]
    pub judge: String,
}

fn default_refusal_phrases() -> Vec<String> {
    consts::DEFAULT_REFUSAL_PHRASES
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn default_judge() -> String {
    "none".to_string()
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self {
            refusal_phrases: default_refusal_phrases(),
            judge: default_judge(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AnalyzeSection {
    /// Extra response logs (e.g. from runs on other models) merged into the
    /// pooled regressions.
    #[serde(default)]
    pub extra_response_files: Vec<PathBuf>,
}

impl ExperimentConfig {
    /// Parse a TOML config file, compute its content hash, and resolve
    /// relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        // Hash the parsed (still-relative) config: stable under key
        // reordering and formatting, independent of the machine's paths.
        let hash = manifest::config_hash(&cfg)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(dir);
        Ok((cfg, hash))
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.datasets.harmful);
        fix(&mut self.datasets.harmless);
        fix(&mut self.datasets.val_harmful);
        fix(&mut self.datasets.val_harmless);
        if let Some(p) = &mut self.datasets.attack {
            fix(p);
        }
        if let Some(p) = &mut self.datasets.human_baseline {
            fix(p);
        }
        let fix_str = |s: &mut String| {
            if s != "builtin" {
                let p = Path::new(s);
                if p.is_relative() {
                    *s = dir.join(p).to_string_lossy().into_owned();
                }
            }
        };
        for s in self
            .items
            .surveys
            .iter_mut()
            .chain(self.items.benchmarks.iter_mut())
        {
            fix_str(s);
        }
        fix_str(&mut self.contrast.source);
        for p in &mut self.analyze.extra_response_files {
            fix(p);
        }
    }

    /// Reject invalid thresholds and missing inputs before any stage runs.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != 1 {
            return Err(Error::Config(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        if self.selection.kl_max <= 0.0 {
            return Err(Error::Config(format!(
                "selection.kl_max must be positive, got {}",
                self.selection.kl_max
            )));
        }
        if !(0.0 < self.selection.layer_fraction && self.selection.layer_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "selection.layer_fraction must be in (0, 1], got {}",
                self.selection.layer_fraction
            )));
        }
        if self.selection.positions.is_empty() {
            return Err(Error::Config("selection.positions is empty".into()));
        }
        for &p in &self.selection.positions {
            if p >= 0 {
                return Err(Error::Config(format!(
                    "positions are negative offsets from the prompt end, got {p}"
                )));
            }
        }
        if self.selection.refusal_tokens.is_empty() {
            return Err(Error::Config("selection.refusal_tokens is empty".into()));
        }
        if self.sampling.reps == 0 {
            return Err(Error::Config("sampling.reps must be >= 1".into()));
        }
        if self.sampling.temperature < 0.0 {
            return Err(Error::Config("sampling.temperature must be >= 0".into()));
        }
        if self.conditions.cot.is_empty() {
            return Err(Error::Config("conditions.cot must list at least one mode".into()));
        }
        if !self.conditions.baseline && !self.conditions.jailbroken {
            return Err(Error::Config("enable at least one condition".into()));
        }
        if !["none", "phrase"].contains(&self.validation.judge.as_str()) {
            return Err(Error::Config(format!(
                "unknown judge `{}` (expected `none` or `phrase`)",
                self.validation.judge
            )));
        }
        let mut required: Vec<&Path> = vec![
            &self.datasets.harmful,
            &self.datasets.harmless,
            &self.datasets.val_harmful,
            &self.datasets.val_harmless,
        ];
        if let Some(p) = &self.datasets.attack {
            required.push(p);
        }
        if let Some(p) = &self.datasets.human_baseline {
            required.push(p);
        }
        for path in required {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "dataset path does not exist: {}",
                    path.display()
                )));
            }
        }
        for source in self
            .items
            .surveys
            .iter()
            .chain(self.items.benchmarks.iter())
            .chain(std::iter::once(&self.contrast.source))
        {
            if source != "builtin" && !Path::new(source).exists() {
                return Err(Error::Config(format!("item source does not exist: {source}")));
            }
        }
        Ok(())
    }
}

/// Resolve a model reference into a live backend.
///
/// Supported forms:
/// - `toy:key=value&...` with keys `seed`, `layers`, `dim`, `vocab`,
///   `variant` (`plain` | `safety` | `concepts`), `shifted` (bool), `pseed`
/// - `file:<path>` pointing at a serialized toy model config (JSON)
///
/// Anything else (e.g. a hub identifier) is rejected: weight-backed chat
/// models integrate by implementing [`HookedModel`] and registering their
/// own loader.
pub fn load_model(reference: &str) -> Result<Box<dyn HookedModel>> {
    if let Some(spec) = reference.strip_prefix("toy:") {
        return Ok(Box::new(toy_from_spec(spec, reference)?));
    }
    if let Some(path) = reference.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelLoad(reference.to_string(), e.to_string()))?;
        let cfg: ToyConfig = serde_json::from_str(&text)
            .map_err(|e| Error::ModelLoad(reference.to_string(), e.to_string()))?;
        return Ok(Box::new(build_toy_transformer(&cfg)?));
    }
    Err(Error::ModelLoad(
        reference.to_string(),
        "unknown scheme: expected `toy:...` or `file:<path>` (hub-hosted \
         backends implement the HookedModel trait out of tree)"
            .to_string(),
    ))
}

pub(crate) fn toy_from_spec(spec: &str, reference: &str) -> Result<crate::runtime::toy::ToyTransformer> {
    let mut seed = 0u64;
    let mut layers = 8usize;
    let mut dim = 64usize;
    let mut vocab = 96usize;
    let mut variant = "plain".to_string();
    let mut shifted = false;
    let mut pseed: Option<u64> = None;
    for kv in spec.split('&').filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::ModelLoad(reference.into(), format!("bad key=value `{kv}`")))?;
        let parse_err = |e: String| Error::ModelLoad(reference.into(), format!("{k}: {e}"));
        match k {
            "seed" => seed = v.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
            "layers" => layers = v.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
            "dim" => dim = v.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
            "vocab" => vocab = v.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?,
            "variant" => variant = v.to_string(),
            "shifted" => shifted = v.parse().map_err(|e: std::str::ParseBoolError| parse_err(e.to_string()))?,
            "pseed" => pseed = Some(v.parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?),
            other => {
                return Err(Error::ModelLoad(
                    reference.into(),
                    format!("unknown parameter `{other}`"),
                ))
            }
        }
    }
    match variant.as_str() {
        "plain" => build_toy_transformer(&ToyConfig::new(
            &format!("toy-plain-{seed}"),
            layers,
            dim,
            vocab,
            seed,
        )),
        "safety" => safety_toy(&format!("toy-safety-{seed}"), layers, dim, vocab, seed),
        "concepts" => concept_toy(layers, dim, vocab, seed, pseed.unwrap_or(seed), shifted),
        other => Err(Error::ModelLoad(
            reference.into(),
            format!("unknown variant `{other}`"),
        )),
    }
}

/// Read a newline-delimited instruction list.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_spec_parses() {
        let m = load_model("toy:seed=3&layers=4&dim=16&vocab=48&variant=safety").unwrap();
        assert_eq!(m.num_layers(), 4);
        assert_eq!(m.hidden_dim(), 16);
        assert_eq!(m.vocab_size(), 48);
    }

    #[test]
    fn unknown_scheme_is_rejected() {
        assert!(matches!(
            load_model("meta-llama/Meta-Llama-3-8B-Instruct"),
            Err(Error::ModelLoad(_, _))
        ));
    }

    #[test]
    fn file_scheme_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let m = safety_toy("toy-x", 4, 16, 48, 7).unwrap();
        std::fs::write(&path, serde_json::to_string(m.config()).unwrap()).unwrap();
        let loaded = load_model(&format!("file:{}", path.display())).unwrap();
        assert_eq!(loaded.model_id(), "toy-x");
        assert_eq!(loaded.num_layers(), 4);
    }

    #[test]
    fn config_validation_rejects_bad_thresholds() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["h.txt", "s.txt", "vh.txt", "vs.txt"] {
            std::fs::write(dir.path().join(f), "one instruction\n").unwrap();
        }
        let toml_text = format!(
            r#"
schema_version = 1
output_dir = "out"
master_seed = 7

[models]
instruct = "toy:seed=1"

[datasets]
harmful = "{0}/h.txt"
harmless = "{0}/s.txt"
val_harmful = "{0}/vh.txt"
val_harmless = "{0}/vs.txt"

[selection]
kl_max = -0.5
"#,
            dir.path().display()
        );
        let path = dir.path().join("config.toml");
        std::fs::write(&path, toml_text).unwrap();
        let (cfg, _) = ExperimentConfig::load(&path).unwrap();
        let err = cfg.validate().unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains("kl_max"));
    }

    #[test]
    fn hash_is_stable_under_key_reordering() {
        let dir = tempfile::tempdir().unwrap();
        let a = r#"
schema_version = 1
output_dir = "out"
master_seed = 7

[models]
instruct = "toy:seed=1"

[datasets]
harmful = "h.txt"
harmless = "s.txt"
val_harmful = "vh.txt"
val_harmless = "vs.txt"
"#;
        // same fields, different order and spacing
        let b = r#"
master_seed = 7
output_dir = "out"
schema_version = 1

[datasets]
val_harmless = "vs.txt"
val_harmful = "vh.txt"
harmless = "s.txt"
harmful = "h.txt"

[models]
instruct = "toy:seed=1"
"#;
        let pa = dir.path().join("a.toml");
        let pb = dir.path().join("b.toml");
        std::fs::write(&pa, a).unwrap();
        std::fs::write(&pb, b).unwrap();
        let (_, ha) = ExperimentConfig::load(&pa).unwrap();
        let (_, hb) = ExperimentConfig::load(&pb).unwrap();
        assert_eq!(ha, hb);

        // changing a semantic field changes the hash
        let c = a.replace("master_seed = 7", "master_seed = 8");
        let pc = dir.path().join("c.toml");
        std::fs::write(&pc, c).unwrap();
        let (_, hc) = ExperimentConfig::load(&pc).unwrap();
        assert_ne!(ha, hc);
    }
}
