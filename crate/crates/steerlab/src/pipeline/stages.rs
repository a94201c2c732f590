//! Pipeline stages: extract -> validate -> administer -> geometry ->
//! analyze -> report.
//!
//! Stages run in order; completed stages (per the manifest, with artifacts
//! still on disk) are skipped on resume, so re-running a finished manifest
//! performs no model calls. Failures are wrapped in
//! [`Error::StageFailure`] and leave earlier artifacts intact.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::container;
use crate::directions::{
    diff_in_means, score_candidates, select_direction, write_candidate_table,
    write_selection_summary, ContrastiveDataset, SelectionThresholds,
};
use crate::error::{Error, Result};
use crate::geometry::{
    compare_shifts, cosine_profile, extract_concept_direction, shift_analysis, write_shift_table,
    Concept, ConceptDirection, ContrastivePairSet, ModelRole, ShiftReport,
};
use crate::instruments::{
    administer, asr_judged, asr_substring, banks, judge_all, score_accuracy, survey_outcome,
    AdministerSetup, Category, Condition, Item, JudgeVerdict, ResponseLog, ResponseRecord,
    SafetyJudge, Suite,
};
use crate::pipeline::figures;
use crate::pipeline::manifest::{RunManifest, STAGES};
use crate::pipeline::{load_model, read_lines, ExperimentConfig};
use crate::runtime::{InterventionSpec, SamplingConfig};
use crate::seeds;
use crate::stats::{
    bh_fdr, fit_fixed_effects, fit_mixed_random_intercept, pairwise_contrasts, Observation,
    ObservationTable,
};

/// Run every stage in order, skipping completed ones.
pub fn run_pipeline(cfg: &ExperimentConfig, config_hash: &str) -> Result<RunManifest> {
    let mut manifest = RunManifest::load_or_new(&cfg.output_dir, config_hash)?;
    for stage in STAGES {
        run_one(cfg, &mut manifest, stage)?;
    }
    Ok(manifest)
}

/// Run a single stage (plus nothing else); its prerequisites must already
/// have artifacts on disk.
pub fn run_stage(cfg: &ExperimentConfig, config_hash: &str, stage: &str) -> Result<RunManifest> {
    let mut manifest = RunManifest::load_or_new(&cfg.output_dir, config_hash)?;
    run_one(cfg, &mut manifest, stage)?;
    Ok(manifest)
}

fn run_one(cfg: &ExperimentConfig, manifest: &mut RunManifest, stage: &str) -> Result<()> {
    if manifest.stage_done(&cfg.output_dir, stage) {
        return Ok(());
    }
    let wrap = |source: Error| -> Error {
        let stage_name = STAGES
            .iter()
            .find(|s| **s == stage)
            .copied()
            .unwrap_or("unknown");
        Error::StageFailure {
            stage: stage_name,
            source: Box::new(source),
        }
    };
    let artifacts = match stage {
        "extract" => stage_extract(cfg).map_err(wrap)?,
        "validate" => stage_validate(cfg).map_err(wrap)?,
        "administer" => stage_administer(cfg).map_err(wrap)?,
        "geometry" => stage_geometry(cfg).map_err(wrap)?,
        "analyze" => stage_analyze(cfg).map_err(wrap)?,
        "report" => figures::stage_report(cfg).map_err(wrap)?,
        other => return Err(Error::Config(format!("unknown stage `{other}`"))),
    };
    manifest.record(stage, artifacts);
    manifest.save(&cfg.output_dir)?;
    Ok(())
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

pub(crate) fn steering_vector_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("extract/steering_vector.safetensors")
}

pub(crate) fn responses_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("administer/responses.jsonl")
}

fn load_steering_spec(cfg: &ExperimentConfig) -> Result<InterventionSpec> {
    let path = steering_vector_path(cfg);
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    let record = container::load_steering_vector(&path)?;
    InterventionSpec::ablate(record.direction)
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

fn stage_extract(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.join("extract");
    ensure_dir(&dir)?;
    let model = load_model(&cfg.models.instruct)?;

    let data = ContrastiveDataset {
        harmful: read_lines(&cfg.datasets.harmful)?,
        harmless: read_lines(&cfg.datasets.harmless)?,
        val_harmful: read_lines(&cfg.datasets.val_harmful)?,
        val_harmless: read_lines(&cfg.datasets.val_harmless)?,
    };
    data.validate()?;

    let positions = &cfg.selection.positions;
    let harmful_acts = model.capture_residuals(&data.harmful, positions)?;
    let harmless_acts = model.capture_residuals(&data.harmless, positions)?;
    container::save_residuals(&dir.join("activations_harmful.safetensors"), &harmful_acts)?;
    container::save_residuals(&dir.join("activations_harmless.safetensors"), &harmless_acts)?;

    let candidates = diff_in_means(&harmful_acts, &harmless_acts)?;
    let thresholds = SelectionThresholds {
        steering_min: cfg.selection.steering_min,
        kl_max: cfg.selection.kl_max,
        layer_fraction: cfg.selection.layer_fraction,
    };
    let refusal_tokens =
        crate::runtime::refusal_token_ids(model.as_ref(), &cfg.selection.refusal_tokens);
    if refusal_tokens.is_empty() {
        return Err(Error::Config(
            "no configured refusal token resolves under this model's tokenizer".into(),
        ));
    }
    let report = score_candidates(model.as_ref(), &candidates, &data, &refusal_tokens, thresholds)?;
    write_candidate_table(&dir.join("selection_candidates.tsv"), &report)?;
    let vector = select_direction(&report, model.num_layers())?;
    write_selection_summary(&dir.join("selection_summary.tsv"), &report)?;

    container::save_steering_vector(
        &steering_vector_path(cfg),
        &container::SteeringVectorRecord {
            direction: vector.direction.to_vec(),
            model_id: model.model_id().to_string(),
            source_layer: vector.source_layer,
            source_position: vector.source_position,
            selection_report: "extract/selection_candidates.tsv".to_string(),
        },
    )?;

    Ok(vec![
        "extract/activations_harmful.safetensors".into(),
        "extract/activations_harmless.safetensors".into(),
        "extract/selection_candidates.tsv".into(),
        "extract/selection_summary.tsv".into(),
        "extract/steering_vector.safetensors".into(),
    ])
}

// ---------------------------------------------------------------------------
// validate (attack-success-rate check)
// ---------------------------------------------------------------------------

fn stage_validate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.join("validate");
    ensure_dir(&dir)?;
    let model = load_model(&cfg.models.instruct)?;
    let ablate = load_steering_spec(cfg)?;

    let attack_path = cfg
        .datasets
        .attack
        .clone()
        .unwrap_or_else(|| cfg.datasets.val_harmful.clone());
    let prompts = read_lines(&attack_path)?;
    if prompts.is_empty() {
        return Err(Error::Config("attack prompt list is empty".into()));
    }

    // Greedy decoding keeps the ASR check deterministic.
    let sampling = SamplingConfig::greedy(cfg.sampling.max_new_tokens);
    let baseline = model.generate(&prompts, &sampling, &[])?;
    let ablated = model.generate(&prompts, &sampling, std::slice::from_ref(&ablate))?;

    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("completions.jsonl"))?);
    for (condition, completions) in [("baseline", &baseline), ("ablated", &ablated)] {
        for (prompt, completion) in prompts.iter().zip(completions.iter()) {
            writeln!(
                f,
                "{}",
                serde_json::to_string(&serde_json::json!({
                    "condition": condition,
                    "prompt": prompt,
                    "completion": completion,
                }))?
            )?;
        }
    }
    drop(f);

    let phrases = &cfg.validation.refusal_phrases;
    let mut rows = vec![format!(
        "substring\t{:.1}\t{:.1}\t{}",
        asr_substring(&baseline, phrases)?,
        asr_substring(&ablated, phrases)?,
        prompts.len()
    )];
    if cfg.validation.judge == "phrase" {
        let judge = PhraseJudge { phrases };
        let base_labels = judge_all(&judge, &baseline);
        let abl_labels = judge_all(&judge, &ablated);
        if let (Some(b), Some(a)) = (asr_judged(&base_labels), asr_judged(&abl_labels)) {
            rows.push(format!("judge:{}\t{b:.1}\t{a:.1}\t{}", judge.name(), prompts.len()));
        }
    }
    write_table(
        &dir.join("asr.tsv"),
        "metric\tbaseline_asr\tablated_asr\tn",
        &rows,
    )?;

    Ok(vec!["validate/completions.jsonl".into(), "validate/asr.tsv".into()])
}

/// Substring-heuristic judge: a completion with no refusal phrase counts as
/// unsafe (the attack went through).
struct PhraseJudge<'a> {
    phrases: &'a [String],
}

impl SafetyJudge for PhraseJudge<'_> {
    fn name(&self) -> &str {
        "phrase"
    }

    fn judge(&self, completion: &str) -> Result<JudgeVerdict> {
        let lower = completion.to_lowercase();
        let refused = self.phrases.iter().any(|p| lower.contains(&p.to_lowercase()));
        Ok(if refused {
            JudgeVerdict::Safe
        } else {
            JudgeVerdict::Unsafe
        })
    }
}

// ---------------------------------------------------------------------------
// administer
// ---------------------------------------------------------------------------

pub(crate) fn load_items(cfg: &ExperimentConfig) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    for source in &cfg.items.surveys {
        if source == "builtin" {
            items.extend(banks::builtin_survey_items());
        } else {
            items.extend(banks::load_items(Path::new(source))?);
        }
    }
    for source in &cfg.items.benchmarks {
        if source == "builtin" {
            items.extend(
                banks::builtin_items()
                    .into_iter()
                    .filter(|i| matches!(i, Item::Benchmark(_))),
            );
        } else {
            items.extend(banks::load_items(Path::new(source))?);
        }
    }
    Ok(items)
}

fn stage_administer(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.join("administer");
    ensure_dir(&dir)?;
    let model = load_model(&cfg.models.instruct)?;
    let items = load_items(cfg)?;
    if items.is_empty() {
        return Err(Error::Config("no items configured".into()));
    }

    let mut conditions = Vec::new();
    if cfg.conditions.baseline {
        conditions.push(Condition::Baseline);
    }
    if cfg.conditions.jailbroken {
        conditions.push(Condition::Jailbroken);
    }
    let ablate = if conditions.contains(&Condition::Jailbroken) {
        Some(load_steering_spec(cfg)?)
    } else {
        None
    };

    let mut log = ResponseLog::open(&responses_path(cfg))?;
    for condition in conditions {
        let interventions: &[InterventionSpec] = match condition {
            Condition::Baseline => &[],
            Condition::Jailbroken => std::slice::from_ref(ablate.as_ref().expect("loaded above")),
        };
        for &cot in &cfg.conditions.cot {
            let setup = AdministerSetup {
                condition,
                cot,
                sampling: SamplingConfig {
                    temperature: cfg.sampling.temperature,
                    max_new_tokens: cfg.sampling.max_new_tokens,
                    seed: seeds::derive(cfg.master_seed, &["administer"]),
                },
                interventions,
            };
            administer(model.as_ref(), &items, cfg.sampling.reps, &setup, &mut log)?;
        }
    }
    Ok(vec!["administer/responses.jsonl".into()])
}

// ---------------------------------------------------------------------------
// geometry
// ---------------------------------------------------------------------------

fn contrast_set(cfg: &ExperimentConfig, concept: Concept) -> Result<ContrastivePairSet> {
    if cfg.contrast.source == "builtin" {
        Ok(banks::builtin_contrast_pairs(concept))
    } else {
        banks::load_contrast_pairs(Path::new(&cfg.contrast.source), concept)
    }
}

fn stage_geometry(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let Some(base_ref) = &cfg.models.base else {
        // No base model: geometry is a no-op run with an explanatory note.
        let dir = cfg.output_dir.join("geometry");
        ensure_dir(&dir)?;
        write_table(
            &dir.join("shift_contrasts.tsv"),
            "concept_a\tconcept_b\tt\tp\tdf\tnote",
            &["NA\tNA\tNA\tNA\tNA\tno base model configured; geometry skipped".to_string()],
        )?;
        return Ok(vec!["geometry/shift_contrasts.tsv".into()]);
    };
    let dir = cfg.output_dir.join("geometry");
    ensure_dir(&dir)?;
    let base = load_model(base_ref)?;
    let instruct = load_model(&cfg.models.instruct)?;

    let mut artifacts = Vec::new();
    let mut directions: BTreeMap<(&'static str, &'static str), ConceptDirection> = BTreeMap::new();
    for concept in Concept::ALL {
        let pairs = contrast_set(cfg, concept)?;
        for (model, role) in [
            (base.as_ref(), ModelRole::Base),
            (instruct.as_ref(), ModelRole::Instruct),
        ] {
            let direction = extract_concept_direction(model, &pairs, role)?;
            let rel = format!("geometry/direction_{}_{}.safetensors", role.as_str(), concept);
            container::save_concept_direction(&cfg.output_dir.join(&rel), &direction.to_record())?;
            artifacts.push(PathBuf::from(rel));
            directions.insert((concept.as_str(), role.as_str()), direction);
        }
    }

    // Layer-wise cosine of every non-safety concept against safety.
    let mut profile_rows = Vec::new();
    let mut shifts: BTreeMap<&'static str, ShiftReport> = BTreeMap::new();
    for concept in Concept::ALL {
        if concept == Concept::Safety {
            continue;
        }
        let mut per_role = BTreeMap::new();
        for role in ["base", "instruct"] {
            let safety = &directions[&("safety", role)];
            let task = &directions[&(concept.as_str(), role)];
            let profile = cosine_profile(safety, task)?;
            for (layer, s) in profile.iter().enumerate() {
                profile_rows.push(match s {
                    Some(s) => format!("{concept}\t{role}\t{layer}\t{s:.6}"),
                    None => format!("{concept}\t{role}\t{layer}\tNA"),
                });
            }
            per_role.insert(role, profile);
        }
        let report = shift_analysis(&per_role["base"], &per_role["instruct"])?;
        let rel = format!("geometry/shift_{concept}.tsv");
        write_shift_table(&cfg.output_dir.join(&rel), concept.as_str(), &report)?;
        artifacts.push(PathBuf::from(rel));
        shifts.insert(concept.as_str(), report);
    }
    write_table(
        &cfg.output_dir.join("geometry/cosine_profiles.tsv"),
        "concept\tmodel_role\tlayer\ts",
        &profile_rows,
    )?;
    artifacts.push("geometry/cosine_profiles.tsv".into());

    // Paired contrasts mirroring the placebo comparisons.
    let mut contrast_rows = Vec::new();
    for (a, b) in [
        ("idaq", "tom"),
        ("idaq", "subject_matched_control"),
        ("idaq", "general_topic_control"),
        ("general_topic_control", "subject_matched_control"),
    ] {
        let test = compare_shifts(&shifts[a], &shifts[b])?;
        contrast_rows.push(format!(
            "{a}\t{b}\t{:.4}\t{:.3e}\t{}\t",
            test.t, test.p, test.df
        ));
    }
    write_table(
        &cfg.output_dir.join("geometry/shift_contrasts.tsv"),
        "concept_a\tconcept_b\tt\tp\tdf\tnote",
        &contrast_rows,
    )?;
    artifacts.push("geometry/shift_contrasts.tsv".into());
    Ok(artifacts)
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

/// Row-category groupings for the mind-attribution table, in emission order.
fn mind_groups() -> Vec<(&'static str, Vec<Category>)> {
    vec![
        (
            "self",
            vec![
                Category::SelfAgent,
                Category::SelfConscious,
                Category::SelfSentient,
                Category::SelfPerson,
                Category::SelfSoul,
            ],
        ),
        ("self_agent", vec![Category::SelfAgent]),
        ("self_conscious", vec![Category::SelfConscious]),
        ("self_sentient", vec![Category::SelfSentient]),
        ("self_person", vec![Category::SelfPerson]),
        ("self_soul", vec![Category::SelfSoul]),
        ("chatbot", vec![Category::Chatbot]),
        ("tech", vec![Category::Tech]),
        ("non_animal", vec![Category::NonAnimal]),
        ("animal", vec![Category::Animal]),
        ("human", vec![Category::Human]),
        ("god", vec![Category::God]),
    ]
}

/// Multi-item categories eligible for the mixed-model robustness check.
const MIXED_GROUPS: [&str; 7] = [
    "self",
    "chatbot",
    "tech",
    "non_animal",
    "animal",
    "human",
    "idaq_all",
];

struct AnalysisInputs {
    records: Vec<ResponseRecord>,
    items: Vec<Item>,
}

fn load_analysis_inputs(cfg: &ExperimentConfig) -> Result<AnalysisInputs> {
    let path = responses_path(cfg);
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    let mut records = ResponseLog::read_all(&path)?;
    for extra in &cfg.analyze.extra_response_files {
        records.extend(ResponseLog::read_all(extra)?);
    }
    Ok(AnalysisInputs {
        records,
        items: load_items(cfg)?,
    })
}

fn survey_table(
    records: &[ResponseRecord],
    items: &[Item],
    categories: &[Category],
    cot: bool,
) -> ObservationTable {
    let by_id: BTreeMap<&str, &crate::instruments::SurveyItem> = items
        .iter()
        .filter_map(|i| match i {
            Item::Survey(s) => Some((s.id.as_str(), s)),
            Item::Benchmark(_) => None,
        })
        .collect();
    let rows = records
        .iter()
        .filter(|r| r.cot == cot && r.valid)
        .filter_map(|r| {
            let item = by_id.get(r.item_id.as_str())?;
            if !categories.contains(&item.category) {
                return None;
            }
            let outcome = survey_outcome(r, item)?;
            Some(Observation {
                outcome,
                condition: r.condition == Condition::Jailbroken,
                model_id: r.model_id.clone(),
                question_id: r.item_id.clone(),
            })
        })
        .collect();
    ObservationTable::new(rows)
}

fn benchmark_table(
    records: &[ResponseRecord],
    items: &[Item],
    suite: Suite,
    cot: bool,
) -> ObservationTable {
    let by_id: BTreeMap<&str, &crate::instruments::BenchmarkItem> = items
        .iter()
        .filter_map(|i| match i {
            Item::Benchmark(b) => Some((b.id.as_str(), b)),
            Item::Survey(_) => None,
        })
        .collect();
    let rows = records
        .iter()
        .filter(|r| r.cot == cot && r.valid)
        .filter_map(|r| {
            let item = by_id.get(r.item_id.as_str())?;
            if item.suite != suite {
                return None;
            }
            // Binary accuracy coded 0/100 so effects read as percentage points.
            let outcome = if item.is_correct(&r.parsed) { 100.0 } else { 0.0 };
            Some(Observation {
                outcome,
                condition: r.condition == Condition::Jailbroken,
                model_id: r.model_id.clone(),
                question_id: r.item_id.clone(),
            })
        })
        .collect();
    ObservationTable::new(rows)
}

struct EffectRow {
    label: String,
    scope: String,
    beta: Option<f64>,
    se: Option<f64>,
    p: Option<f64>,
    q: Option<f64>,
    n: usize,
    n_clusters: usize,
    note: String,
}

fn fit_row(label: &str, scope: &str, table: &ObservationTable) -> EffectRow {
    let mut row = EffectRow {
        label: label.to_string(),
        scope: scope.to_string(),
        beta: None,
        se: None,
        p: None,
        q: None,
        n: table.len(),
        n_clusters: table.num_clusters(),
        note: String::new(),
    };
    if table.is_empty() {
        row.note = "no valid records".into();
        return row;
    }
    match fit_fixed_effects(table) {
        Ok(fit) => {
            row.beta = Some(fit.effect.beta);
            row.se = Some(fit.effect.se);
            row.p = Some(fit.effect.p);
        }
        Err(e) => row.note = e.to_string(),
    }
    row
}

fn assign_q(rows: &mut [EffectRow]) -> Result<()> {
    let ps: Vec<f64> = rows.iter().filter_map(|r| r.p).collect();
    if ps.is_empty() {
        return Ok(());
    }
    let qs = bh_fdr(&ps)?;
    let mut qi = 0;
    for row in rows.iter_mut() {
        if row.p.is_some() {
            row.q = Some(qs[qi]);
            qi += 1;
        }
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("NA".to_string(), |v| format!("{v:.6}"))
}

fn write_effect_table(path: &Path, rows: &[EffectRow]) -> Result<()> {
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.label,
                r.scope,
                fmt_opt(r.beta),
                fmt_opt(r.se),
                fmt_opt(r.p),
                fmt_opt(r.q),
                r.n,
                r.n_clusters,
                r.note
            )
        })
        .collect();
    write_table(
        path,
        "category\tscope\tbeta\tse\tp\tq\tn\tn_clusters\tnote",
        &lines,
    )
}

fn cot_label(cot: bool) -> &'static str {
    if cot {
        "cot"
    } else {
        "no_cot"
    }
}

fn stage_analyze(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.join("analyze");
    ensure_dir(&dir)?;
    let inputs = load_analysis_inputs(cfg)?;
    let mut artifacts: Vec<PathBuf> = Vec::new();

    // Validity rates per condition x cot (both tag presence and bounds).
    {
        let mut rows = Vec::new();
        for condition in [Condition::Baseline, Condition::Jailbroken] {
            for cot in [true, false] {
                let subset: Vec<&ResponseRecord> = inputs
                    .records
                    .iter()
                    .filter(|r| r.condition == condition && r.cot == cot)
                    .collect();
                if subset.is_empty() {
                    continue;
                }
                let valid = subset.iter().filter(|r| r.valid).count();
                rows.push(format!(
                    "{}\t{}\t{}\t{}\t{:.1}",
                    condition.as_str(),
                    cot_label(cot),
                    subset.len(),
                    valid,
                    100.0 * valid as f64 / subset.len() as f64
                ));
            }
        }
        write_table(
            &dir.join("validity.tsv"),
            "condition\tcot\tn_total\tn_valid\tvalid_rate",
            &rows,
        )?;
        artifacts.push("analyze/validity.tsv".into());
    }

    let models: Vec<String> = {
        let mut m: Vec<String> = inputs
            .records
            .iter()
            .map(|r| r.model_id.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        m.sort();
        m
    };

    for &cot in &cfg.conditions.cot {
        let label = cot_label(cot);

        // --- mind-attribution regressions ---
        let mut mind_rows = Vec::new();
        let mut mixed_lines = Vec::new();
        let mut interaction_lines = Vec::new();
        for (group_label, categories) in mind_groups() {
            let table = survey_table(&inputs.records, &inputs.items, &categories, cot);
            if table.is_empty() {
                continue;
            }
            let rel = format!("analyze/observations_{group_label}_{label}.tsv");
            table.write_tsv(&cfg.output_dir.join(&rel))?;
            artifacts.push(rel.into());

            mind_rows.push(fit_row(group_label, "main", &table));
            for model in &models {
                let subset = ObservationTable::new(
                    table
                        .rows
                        .iter()
                        .filter(|r| &r.model_id == model)
                        .cloned()
                        .collect(),
                );
                if !subset.is_empty() {
                    mind_rows.push(fit_row(group_label, model, &subset));
                }
            }

            if MIXED_GROUPS.contains(&group_label) {
                let line = match fit_mixed_random_intercept(&table) {
                    Ok(fit) => format!(
                        "{group_label}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\tNA\t{:.6}\t{:.6}\t{}\t{}\t",
                        fit.beta,
                        fit.se,
                        fit.ci95.0,
                        fit.ci95.1,
                        fit.p,
                        fit.sigma_u2,
                        fit.sigma_e2,
                        fit.n,
                        fit.n_groups
                    ),
                    Err(e) => format!("{group_label}\tNA\tNA\tNA\tNA\tNA\tNA\tNA\tNA\t0\t0\t{e}"),
                };
                mixed_lines.push(line);
            }

            if models.len() >= 2 {
                match pairwise_contrasts(&table) {
                    Ok(contrasts) => {
                        for c in contrasts {
                            interaction_lines.push(format!(
                                "{group_label}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t",
                                c.model, c.reference, c.delta_beta, c.se, c.p
                            ));
                        }
                    }
                    Err(e) => interaction_lines
                        .push(format!("{group_label}\tNA\tNA\tNA\tNA\tNA\t{e}")),
                }
            }
        }
        assign_q(&mut mind_rows)?;
        let rel = format!("analyze/regression_mind_{label}.tsv");
        write_effect_table(&cfg.output_dir.join(&rel), &mind_rows)?;
        artifacts.push(rel.into());
        if !mixed_lines.is_empty() {
            let rel = format!("analyze/mixed_mind_{label}.tsv");
            write_table(
                &cfg.output_dir.join(&rel),
                "category\tbeta\tse\tci_lo\tci_hi\tp\tq\tsigma_u2\tsigma_e2\tn\tn_groups\tnote",
                &mixed_lines,
            )?;
            artifacts.push(rel.into());
        }
        {
            let rel = format!("analyze/regression_interactions_mind_{label}.tsv");
            let lines = if interaction_lines.is_empty() {
                vec![format!(
                    "NA\tNA\tNA\tNA\tNA\tNA\tinteractions need >= 2 models; run has {}",
                    models.len()
                )]
            } else {
                interaction_lines
            };
            write_table(
                &cfg.output_dir.join(&rel),
                "category\tmodel\treference\tdelta_beta\tse\tp\tnote",
                &lines,
            )?;
            artifacts.push(rel.into());
        }

        // --- category marginal means (dot-plot source) ---
        {
            let mut rows = Vec::new();
            for (group_label, categories) in mind_groups() {
                let table = survey_table(&inputs.records, &inputs.items, &categories, cot);
                for condition in ["baseline", "jailbroken"] {
                    let vals: Vec<f64> = table
                        .rows
                        .iter()
                        .filter(|r| (condition == "jailbroken") == r.condition)
                        .map(|r| r.outcome)
                        .collect();
                    if vals.is_empty() {
                        continue;
                    }
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let sd = if vals.len() > 1 {
                        (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
                    } else {
                        0.0
                    };
                    let half = 1.96 * sd / n.sqrt();
                    rows.push(format!(
                        "{group_label}\t{condition}\t{mean:.4}\t{sd:.4}\t{}\t{:.4}\t{:.4}",
                        vals.len(),
                        mean - half,
                        mean + half
                    ));
                }
            }
            let rel = format!("analyze/category_means_{label}.tsv");
            write_table(
                &cfg.output_dir.join(&rel),
                "category\tcondition\tmean\tsd\tn\tci_lo\tci_hi",
                &rows,
            )?;
            artifacts.push(rel.into());
        }

        // --- benchmark regressions ---
        let mut bench_rows = Vec::new();
        for suite in [
            Suite::MotomqaTom,
            Suite::MotomqaFactual,
            Suite::HiTom,
            Suite::SimpleTom,
            Suite::Mmlu,
        ] {
            let table = benchmark_table(&inputs.records, &inputs.items, suite, cot);
            if table.is_empty() {
                continue;
            }
            let rel = format!("analyze/observations_{}_{label}.tsv", suite.as_str());
            table.write_tsv(&cfg.output_dir.join(&rel))?;
            artifacts.push(rel.into());
            bench_rows.push(fit_row(suite.as_str(), "main", &table));
            for model in &models {
                let subset = ObservationTable::new(
                    table
                        .rows
                        .iter()
                        .filter(|r| &r.model_id == model)
                        .cloned()
                        .collect(),
                );
                if !subset.is_empty() {
                    bench_rows.push(fit_row(suite.as_str(), model, &subset));
                }
            }
        }
        if !bench_rows.is_empty() {
            assign_q(&mut bench_rows)?;
            let rel = format!("analyze/regression_benchmarks_{label}.tsv");
            write_effect_table(&cfg.output_dir.join(&rel), &bench_rows)?;
            artifacts.push(rel.into());
        }
    }

    // --- accuracy tables (all conditions pooled per group key) ---
    if inputs
        .items
        .iter()
        .any(|i| matches!(i, Item::Benchmark(_)))
    {
        let rows = score_accuracy(&inputs.records, &inputs.items)?;
        let lines: Vec<String> = rows
            .iter()
            .map(|r| {
                format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.suite.as_str(),
                    r.model_id,
                    r.condition.as_str(),
                    cot_label(r.cot),
                    r.accuracy.map_or("NA".into(), |a| format!("{a:.1}")),
                    r.n_correct,
                    r.n_valid,
                    r.n_invalid
                )
            })
            .collect();
        write_table(
            &cfg.output_dir.join("analyze/accuracy.tsv"),
            "suite\tmodel\tcondition\tcot\taccuracy\tn_correct\tn_valid\tn_invalid",
            &lines,
        )?;
        artifacts.push("analyze/accuracy.tsv".into());

        // MoToMQA accuracy by inference order.
        let orders: BTreeMap<&str, u8> = inputs
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Benchmark(b) if b.suite == Suite::MotomqaTom => {
                    b.order.map(|o| (b.id.as_str(), o))
                }
                _ => None,
            })
            .collect();
        if !orders.is_empty() {
            let golds: BTreeMap<&str, &crate::instruments::BenchmarkItem> = inputs
                .items
                .iter()
                .filter_map(|i| match i {
                    Item::Benchmark(b) => Some((b.id.as_str(), b)),
                    _ => None,
                })
                .collect();
            let mut grouped: BTreeMap<(u8, Condition, bool), (usize, usize)> = BTreeMap::new();
            for r in inputs.records.iter().filter(|r| r.valid) {
                let Some(&order) = orders.get(r.item_id.as_str()) else {
                    continue;
                };
                let item = golds[r.item_id.as_str()];
                let entry = grouped.entry((order, r.condition, r.cot)).or_insert((0, 0));
                entry.1 += 1;
                if item.is_correct(&r.parsed) {
                    entry.0 += 1;
                }
            }
            let lines: Vec<String> = grouped
                .into_iter()
                .map(|((order, condition, cot), (correct, valid))| {
                    format!(
                        "{order}\t{}\t{}\t{:.1}\t{valid}",
                        condition.as_str(),
                        cot_label(cot),
                        100.0 * correct as f64 / valid as f64
                    )
                })
                .collect();
            write_table(
                &cfg.output_dir.join("analyze/accuracy_by_order.tsv"),
                "order\tcondition\tcot\taccuracy\tn_valid",
                &lines,
            )?;
            artifacts.push("analyze/accuracy_by_order.tsv".into());
        }
    }

    Ok(artifacts)
}

/// Write a delimited table with a header; rows are pre-formatted lines.
pub(crate) fn write_table(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}
