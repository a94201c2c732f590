//! Generator for a self-contained desk-scale dataset bundle: contrastive
//! instruction splits, toy-vocabulary contrast pairs, toy benchmark items,
//! a synthetic human-baseline sample, and a ready-to-run config file.

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geometry::Concept;
use crate::runtime::toy::{sample_prompts, ToyTransformer, CONCEPT_TRIGGERS, SAFETY_TRIGGER};
use crate::seeds;

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for line in lines {
        writeln!(f, "{line}")?;
    }
    Ok(())
}

fn toy_benchmark_items(model: &ToyTransformer, seed: u64) -> Vec<String> {
    // Questions and stories drawn from the toy vocabulary; answer tokens are
    // single vocabulary words, so sampled completions are parseable.
    let stories = sample_prompts(model, 12, 8, seed, None, &[SAFETY_TRIGGER]);
    let questions = sample_prompts(model, 12, 4, seed ^ 1, None, &[SAFETY_TRIGGER]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    let mut items = Vec::new();
    for (i, (story, question)) in stories.iter().zip(questions.iter()).enumerate() {
        let record = match i % 5 {
            0 => serde_json::json!({
                "kind": "benchmark", "id": format!("toy_motomqa_tom_{i}"),
                "suite": "motomqa_tom", "story": story, "question": question,
                "format": "true_false",
                "gold": if rng.gen_bool(0.5) { "True" } else { "False" },
                "order": 2 + (i % 5) as u8,
            }),
            1 => serde_json::json!({
                "kind": "benchmark", "id": format!("toy_motomqa_factual_{i}"),
                "suite": "motomqa_factual", "story": story, "question": question,
                "format": "true_false",
                "gold": if rng.gen_bool(0.5) { "True" } else { "False" },
            }),
            2 => serde_json::json!({
                "kind": "benchmark", "id": format!("toy_hitom_{i}"),
                "suite": "hitom", "story": story, "question": question,
                "format": "location_token",
                "options": ["blue_pantry", "red_crate", "green_bucket"],
                "gold": (["blue_pantry", "red_crate", "green_bucket"][rng.gen_range(0..3usize)]),
            }),
            3 => serde_json::json!({
                "kind": "benchmark", "id": format!("toy_simpletom_{i}"),
                "suite": "simpletom", "story": story, "question": question,
                "format": "ab_choice",
                "options": ["first option", "second option"],
                "gold": if rng.gen_bool(0.5) { "A" } else { "B" },
            }),
            _ => serde_json::json!({
                "kind": "benchmark", "id": format!("toy_mmlu_{i}"),
                "suite": "mmlu", "story": "toy_subject", "question": question,
                "format": "abcd_choice",
                "options": ["option a", "option b", "option c", "option d"],
                "gold": (["A", "B", "C", "D"][rng.gen_range(0..4usize)]),
            }),
        };
        items.push(record.to_string());
    }
    items
}

/// Write the full bundle under `out_dir` and return the config path.
pub fn generate(out_dir: &Path, seed: u64) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    let instruct_ref = format!(
        "toy:variant=concepts&shifted=true&seed={seed}&pseed={}&layers=8&dim=64&vocab=160",
        seed + 1
    );
    let base_ref = format!(
        "toy:variant=concepts&shifted=false&seed={seed}&pseed={}&layers=8&dim=64&vocab=160",
        seed + 1
    );
    let toy = toy_from_ref(&instruct_ref)?;

    // Instruction splits: the trigger word marks the harmful class.
    let s = |label: &str| seeds::derive(seed, &["toydata", label]);
    write_lines(
        &out_dir.join("harmful.txt"),
        &sample_prompts(&toy, 96, 7, s("harmful"), Some(SAFETY_TRIGGER), &[]),
    )?;
    write_lines(
        &out_dir.join("harmless.txt"),
        &sample_prompts(&toy, 96, 7, s("harmless"), None, &[SAFETY_TRIGGER]),
    )?;
    write_lines(
        &out_dir.join("val_harmful.txt"),
        &sample_prompts(&toy, 24, 7, s("val_harmful"), Some(SAFETY_TRIGGER), &[]),
    )?;
    write_lines(
        &out_dir.join("val_harmless.txt"),
        &sample_prompts(&toy, 24, 7, s("val_harmless"), None, &[SAFETY_TRIGGER]),
    )?;

    // Contrast pairs over the toy vocabulary, one file covering all
    // concepts.
    let mut pair_lines = Vec::new();
    for concept in Concept::ALL {
        let trigger = CONCEPT_TRIGGERS
            .iter()
            .find(|(name, _)| {
                matches!(
                    (name, concept),
                    (&"safety", Concept::Safety)
                        | (&"mind", Concept::Idaq)
                        | (&"tom", Concept::Tom)
                        | (&"subject_control", Concept::SubjectMatchedControl)
                        | (&"general_control", Concept::GeneralTopicControl)
                )
            })
            .map(|(_, t)| *t)
            .expect("every concept has a trigger");
        for (positive, negative) in crate::runtime::toy::contrast_pairs(
            &toy,
            trigger,
            16,
            6,
            seeds::derive(seed, &["toydata", "contrast", concept.as_str()]),
        ) {
            pair_lines.push(
                serde_json::json!({
                    "concept": concept.as_str(),
                    "positive": positive,
                    "negative": negative,
                })
                .to_string(),
            );
        }
    }
    write_lines(&out_dir.join("contrast.jsonl"), &pair_lines)?;

    write_lines(
        &out_dir.join("benchmarks.jsonl"),
        &toy_benchmark_items(&toy, seeds::derive(seed, &["toydata", "bench"])),
    )?;

    // Synthetic pre-weighted human sample, bell-shaped on the 0-10 scale.
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, &["toydata", "human"]));
    let human: Vec<String> = (0..500)
        .map(|_| {
            let v: f64 = (0..4).map(|_| rng.gen_range(0.0..10.0)).sum::<f64>() / 4.0;
            format!("{v:.2}")
        })
        .collect();
    write_lines(&out_dir.join("human_baseline.txt"), &human)?;

    let config = format!(
        r#"schema_version = 1
output_dir = "run"
master_seed = {seed}

[models]
instruct = "{instruct_ref}"
base = "{base_ref}"

[datasets]
harmful = "harmful.txt"
harmless = "harmless.txt"
val_harmful = "val_harmful.txt"
val_harmless = "val_harmless.txt"
human_baseline = "human_baseline.txt"

[items]
surveys = ["builtin"]
benchmarks = ["benchmarks.jsonl"]

[contrast]
source = "contrast.jsonl"

[selection]
positions = [-1, -2, -3]
refusal_tokens = ["sorry"]

[sampling]
temperature = 1.0
reps = 6
max_new_tokens = 12

[validation]
judge = "phrase"
"#
    );
    let config_path = out_dir.join("config.toml");
    std::fs::write(&config_path, config)?;
    Ok(config_path)
}

/// Concrete toy handle (the generator needs vocabulary access, which the
/// trait object does not expose).
fn toy_from_ref(reference: &str) -> Result<ToyTransformer> {
    let spec = reference
        .strip_prefix("toy:")
        .expect("generator always uses toy references");
    crate::pipeline::toy_from_spec(spec, reference)
}
