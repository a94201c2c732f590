//! Difference-in-means candidate directions over contrastive prompt sets and
//! selection of the refusal vector.
//!
//! One candidate is computed per (layer, position) pair as the difference of
//! class-conditional mean activations. Each candidate is then scored on a
//! held-out validation set by three criteria:
//!
//! 1. refusal score after ablating it on harmful prompts (lower = stronger
//!    ablation effect),
//! 2. steering score — the refusal score after *adding* it on harmless
//!    prompts (must be positive: the direction can induce refusal),
//! 3. mean KL divergence between baseline and ablated next-token
//!    distributions on harmless prompts (must be small: surgical removal).
//!
//! Candidates in the last fraction of layers are pruned; among the
//! survivors, the one with the lowest refusal score wins and is normalized
//! to unit norm.

use std::io::Write;
use std::path::Path;

use ndarray::Array1;

use crate::consts::{
    DEFAULT_KL_MAX, DEFAULT_LAYER_FRACTION, DEFAULT_STEERING_MIN, PROB_CLAMP_EPS,
};
use crate::error::{Error, Result};
use crate::intervene;
use crate::runtime::{
    kl_divergence, mean_refusal_probability, HookedModel, InterventionSpec, ResidualTensor,
};

/// Contrastive instruction sets with disjoint train/validation splits.
#[derive(Debug, Clone)]
pub struct ContrastiveDataset {
    pub harmful: Vec<String>,
    pub harmless: Vec<String>,
    pub val_harmful: Vec<String>,
    pub val_harmless: Vec<String>,
}

impl ContrastiveDataset {
    pub fn validate(&self) -> Result<()> {
        for (name, set) in [
            ("harmful", &self.harmful),
            ("harmless", &self.harmless),
            ("val_harmful", &self.val_harmful),
            ("val_harmless", &self.val_harmless),
        ] {
            if set.is_empty() {
                return Err(Error::Config(format!("dataset split `{name}` is empty")));
            }
            if set.iter().any(|s| s.trim().is_empty()) {
                return Err(Error::Config(format!(
                    "dataset split `{name}` contains an empty instruction"
                )));
            }
        }
        for v in &self.val_harmful {
            if self.harmful.contains(v) {
                return Err(Error::Config(
                    "val_harmful overlaps the harmful training split".into(),
                ));
            }
        }
        for v in &self.val_harmless {
            if self.harmless.contains(v) {
                return Err(Error::Config(
                    "val_harmless overlaps the harmless training split".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A candidate direction: the raw (unnormalized) difference-in-means vector
/// at one (layer, position) pair.
#[derive(Debug, Clone)]
pub struct DirectionCandidate {
    pub layer: usize,
    pub position: i64,
    pub vector: Array1<f32>,
}

/// Selection thresholds. Defaults follow the published procedure:
/// steering > 0, KL < 0.1, layer < 0.8 L.
#[derive(Debug, Clone, Copy)]
pub struct SelectionThresholds {
    pub steering_min: f64,
    pub kl_max: f64,
    pub layer_fraction: f64,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        Self {
            steering_min: DEFAULT_STEERING_MIN,
            kl_max: DEFAULT_KL_MAX,
            layer_fraction: DEFAULT_LAYER_FRACTION,
        }
    }
}

/// A scored candidate row in the selection report.
#[derive(Debug, Clone)]
pub struct ScoredCandidate {
    pub candidate: DirectionCandidate,
    pub refusal_score: f64,
    pub steering_score: f64,
    pub kl_score: f64,
    pub passed_filters: bool,
}

/// Candidates that could not be scored, with the reason they were excluded.
#[derive(Debug, Clone)]
pub struct ExcludedCandidate {
    pub layer: usize,
    pub position: i64,
    pub reason: String,
}

/// Full scoring table plus the chosen row index.
#[derive(Debug)]
pub struct SelectionReport {
    pub rows: Vec<ScoredCandidate>,
    pub excluded: Vec<ExcludedCandidate>,
    pub num_layers: usize,
    pub thresholds: SelectionThresholds,
    pub chosen: Option<usize>,
    pub model_id: String,
}

/// The selected refusal direction, unit norm, with provenance.
#[derive(Debug, Clone)]
pub struct SteeringVector {
    pub direction: Array1<f32>,
    pub source_layer: usize,
    pub source_position: i64,
    pub refusal_score: f64,
    pub steering_score: f64,
    pub kl_score: f64,
}

impl SteeringVector {
    /// Check unit norm and the layer-pruning invariant.
    pub fn validate(&self, num_layers: usize, layer_fraction: f64) -> Result<()> {
        let n = intervene::norm(self.direction.as_slice().expect("contiguous"));
        if (n - 1.0).abs() > crate::consts::UNIT_NORM_TOL {
            return Err(Error::NotUnitNorm((n - 1.0).abs()));
        }
        if (self.source_layer as f64) >= layer_fraction * num_layers as f64 {
            return Err(Error::Config(format!(
                "steering vector source layer {} violates layer < {layer_fraction} * {num_layers}",
                self.source_layer
            )));
        }
        Ok(())
    }

    pub fn ablation_spec(&self) -> Result<InterventionSpec> {
        InterventionSpec::ablate(self.direction.to_vec())
    }
}

/// Difference-in-means directions: one candidate per (layer, position).
///
/// Both tensors must share (layers, positions, hidden dim) and contain at
/// least two samples each.
pub fn diff_in_means(
    harmful: &ResidualTensor,
    harmless: &ResidualTensor,
) -> Result<Vec<DirectionCandidate>> {
    let (hl, hp, hd) = (
        harmful.num_layers(),
        harmful.num_positions(),
        harmful.hidden_dim(),
    );
    if (hl, hp, hd)
        != (
            harmless.num_layers(),
            harmless.num_positions(),
            harmless.hidden_dim(),
        )
        || harmful.positions != harmless.positions
    {
        return Err(Error::DimMismatch(format!(
            "activation tensors disagree: [{},{},{}] positions {:?} vs [{},{},{}] positions {:?}",
            hl,
            hp,
            hd,
            harmful.positions,
            harmless.num_layers(),
            harmless.num_positions(),
            harmless.hidden_dim(),
            harmless.positions,
        )));
    }
    if harmful.num_samples() < 2 || harmless.num_samples() < 2 {
        return Err(Error::DimMismatch(
            "need at least two samples per class for a mean difference".into(),
        ));
    }

    let nh = harmful.num_samples() as f64;
    let ns = harmless.num_samples() as f64;
    let mut out = Vec::with_capacity(hl * hp);
    for layer in 0..hl {
        for (pi, &position) in harmful.positions.iter().enumerate() {
            let mut vector = Array1::<f32>::zeros(hd);
            for c in 0..hd {
                let mut mh = 0.0f64;
                for s in 0..harmful.num_samples() {
                    mh += f64::from(harmful.values[(s, layer, pi, c)]);
                }
                let mut ms = 0.0f64;
                for s in 0..harmless.num_samples() {
                    ms += f64::from(harmless.values[(s, layer, pi, c)]);
                }
                vector[c] = (mh / nh - ms / ns) as f32;
            }
            out.push(DirectionCandidate {
                layer,
                position,
                vector,
            });
        }
    }
    Ok(out)
}

/// Logit transform of the refusal probability: `log p - log(1 - p)`,
/// clamped to [eps, 1 - eps] first. Strictly increasing and antisymmetric
/// around p = 0.5.
pub fn refusal_score(p_refusal: f64) -> f64 {
    let p = p_refusal.clamp(PROB_CLAMP_EPS, 1.0 - PROB_CLAMP_EPS);
    p.ln() - (1.0 - p).ln()
}

fn unit_direction(candidate: &DirectionCandidate) -> Result<(Vec<f32>, f64)> {
    let slice = candidate.vector.as_slice().expect("contiguous");
    let n = intervene::norm(slice);
    if n == 0.0 {
        return Err(Error::ZeroNormDirection);
    }
    Ok((
        slice.iter().map(|&x| (f64::from(x) / n) as f32).collect(),
        n,
    ))
}

/// Score every candidate on the validation splits.
///
/// Per-candidate failures exclude that candidate (with the reason recorded)
/// rather than aborting the sweep. Results are independent of evaluation
/// order.
pub fn score_candidates(
    model: &dyn HookedModel,
    candidates: &[DirectionCandidate],
    val: &ContrastiveDataset,
    refusal_tokens: &[u32],
    thresholds: SelectionThresholds,
) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidates to score".into()));
    }
    if refusal_tokens.is_empty() {
        return Err(Error::Config("empty refusal token set".into()));
    }

    // Baseline next-token distributions on harmless prompts, shared by every
    // candidate's KL computation.
    let baselines: Vec<Vec<f64>> = val
        .val_harmless
        .iter()
        .map(|p| model.next_token_distribution(p, &[]))
        .collect::<Result<_>>()?;

    let layer_cut = thresholds.layer_fraction * model.num_layers() as f64;
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for candidate in candidates {
        match score_one(model, candidate, val, refusal_tokens, &baselines) {
            Ok((refusal, steering, kl)) => {
                let passed = steering > thresholds.steering_min
                    && kl < thresholds.kl_max
                    && (candidate.layer as f64) < layer_cut;
                rows.push(ScoredCandidate {
                    candidate: candidate.clone(),
                    refusal_score: refusal,
                    steering_score: steering,
                    kl_score: kl,
                    passed_filters: passed,
                });
            }
            Err(e) => excluded.push(ExcludedCandidate {
                layer: candidate.layer,
                position: candidate.position,
                reason: e.to_string(),
            }),
        }
    }

    let mut report = SelectionReport {
        rows,
        excluded,
        num_layers: model.num_layers(),
        thresholds,
        chosen: None,
        model_id: model.model_id().to_string(),
    };
    report.chosen = choose(&report);
    Ok(report)
}

fn score_one(
    model: &dyn HookedModel,
    candidate: &DirectionCandidate,
    val: &ContrastiveDataset,
    refusal_tokens: &[u32],
    baselines: &[Vec<f64>],
) -> Result<(f64, f64, f64)> {
    let (unit, raw_norm) = unit_direction(candidate)?;

    let ablate = InterventionSpec::ablate(unit.clone())?;
    let p_ablated =
        mean_refusal_probability(model, &val.val_harmful, refusal_tokens, &[ablate.clone()])?;
    let refusal = refusal_score(p_ablated);

    // Addition preserves the raw difference-in-means magnitude.
    let add = InterventionSpec::add(unit, raw_norm as f32)?;
    let p_steered = mean_refusal_probability(model, &val.val_harmless, refusal_tokens, &[add])?;
    let steering = refusal_score(p_steered);

    let mut kl_total = 0.0;
    for (prompt, base) in val.val_harmless.iter().zip(baselines.iter()) {
        let ablated = model.next_token_distribution(prompt, std::slice::from_ref(&ablate))?;
        kl_total += kl_divergence(base, &ablated)?;
    }
    let kl = kl_total / baselines.len() as f64;

    Ok((refusal, steering, kl))
}

/// Index of the winning row: all filters passed, minimal refusal score, ties
/// broken by lower layer, then by position closest to -1.
fn choose(report: &SelectionReport) -> Option<usize> {
    report
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.passed_filters)
        .min_by(|(_, a), (_, b)| {
            let key = |r: &ScoredCandidate| {
                (
                    r.refusal_score,
                    r.candidate.layer as f64,
                    (r.candidate.position + 1).abs() as f64,
                )
            };
            key(a)
                .partial_cmp(&key(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(i, _)| i)
}

/// Extract the chosen direction from a report, unit-normalized.
pub fn select_direction(report: &SelectionReport, num_layers: usize) -> Result<SteeringVector> {
    let idx = report.chosen.ok_or(Error::NoFeasibleCandidate)?;
    let row = &report.rows[idx];
    debug_assert!(row.passed_filters);
    let (unit, _) = unit_direction(&row.candidate)?;
    let vector = SteeringVector {
        direction: Array1::from_vec(unit),
        source_layer: row.candidate.layer,
        source_position: row.candidate.position,
        refusal_score: row.refusal_score,
        steering_score: row.steering_score,
        kl_score: row.kl_score,
    };
    vector.validate(num_layers, report.thresholds.layer_fraction)?;
    Ok(vector)
}

/// Write the per-candidate scoring table: one row per candidate with layer,
/// position, the three scores, filter status, and the chosen marker.
pub fn write_candidate_table(path: &Path, report: &SelectionReport) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "layer\tposition\trefusal\tsteering\tkl\tpassed_filters\tchosen"
    )?;
    for (i, row) in report.rows.iter().enumerate() {
        writeln!(
            f,
            "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
            row.candidate.layer,
            row.candidate.position,
            row.refusal_score,
            row.steering_score,
            row.kl_score,
            row.passed_filters,
            report.chosen == Some(i),
        )?;
    }
    for ex in &report.excluded {
        writeln!(
            f,
            "{}\t{}\tNA\tNA\tNA\texcluded: {}\tfalse",
            ex.layer, ex.position, ex.reason
        )?;
    }
    Ok(())
}

/// Header of the summary table, matching the published schema.
pub const SELECTION_TABLE_HEADER: &str = "Model\tPos.\tLayer\tRefusal\tSteering\tKL Div.";

/// Write the chosen-direction summary row in the published schema
/// (Model, Pos., Layer, Refusal, Steering, KL Div.).
pub fn write_selection_summary(path: &Path, report: &SelectionReport) -> Result<()> {
    let idx = report.chosen.ok_or(Error::NoFeasibleCandidate)?;
    let row = &report.rows[idx];
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{SELECTION_TABLE_HEADER}")?;
    writeln!(
        f,
        "{}\t{}\t{} / {}\t{:.2}\t{:.2}\t{:.3}",
        report.model_id,
        row.candidate.position,
        row.candidate.layer,
        report.num_layers,
        row.refusal_score,
        row.steering_score,
        row.kl_score,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::toy::{
        safety_toy, safety_toy_direction, sample_prompts, SAFETY_TRIGGER,
    };
    use crate::runtime::{refusal_token_ids, ResidualTensor};
    use ndarray::Array4;
    use proptest::prelude::*;

    fn tensor_from(values: Array4<f32>, positions: Vec<i64>) -> ResidualTensor {
        ResidualTensor {
            values,
            positions,
            model_id: "test".into(),
        }
    }

    #[test]
    fn identical_classes_give_zero_candidates() {
        let vals = Array4::from_shape_fn((3, 2, 1, 4), |(s, l, _, c)| (s + l + c) as f32);
        let a = tensor_from(vals.clone(), vec![-1]);
        let b = tensor_from(vals, vec![-1]);
        let cands = diff_in_means(&a, &b).unwrap();
        assert_eq!(cands.len(), 2);
        for c in &cands {
            assert!(intervene::norm(c.vector.as_slice().unwrap()) <= 1e-6);
        }
    }

    #[test]
    fn hand_computed_mean_difference() {
        // two samples per class, d = 3
        let mut h = Array4::zeros((2, 1, 1, 3));
        h.slice_mut(ndarray::s![0, 0, 0, ..])
            .assign(&ndarray::arr1(&[1.0, 2.0, 3.0]));
        h.slice_mut(ndarray::s![1, 0, 0, ..])
            .assign(&ndarray::arr1(&[3.0, 4.0, 5.0]));
        let mut s = Array4::zeros((2, 1, 1, 3));
        s.slice_mut(ndarray::s![0, 0, 0, ..])
            .assign(&ndarray::arr1(&[0.0, 1.0, -1.0]));
        s.slice_mut(ndarray::s![1, 0, 0, ..])
            .assign(&ndarray::arr1(&[2.0, 1.0, 1.0]));
        let cands = diff_in_means(&tensor_from(h, vec![-1]), &tensor_from(s, vec![-1])).unwrap();
        // means: harmful (2,3,4), harmless (1,1,0) -> diff (1,2,4)
        assert_eq!(cands[0].vector, ndarray::arr1(&[1.0, 2.0, 4.0]));
    }

    #[test]
    fn dim_mismatch_rejected() {
        let a = tensor_from(Array4::zeros((2, 2, 1, 4)), vec![-1]);
        let b = tensor_from(Array4::zeros((2, 3, 1, 4)), vec![-1]);
        assert!(matches!(diff_in_means(&a, &b), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn refusal_score_closed_form() {
        assert_eq!(refusal_score(0.5), 0.0);
        assert!((refusal_score(0.9) - 9.0f64.ln()).abs() < 1e-12);
        assert!((refusal_score(0.9) - 2.1972).abs() < 1e-4);
        // clamped at the boundaries, no infinities
        assert!(refusal_score(0.0).is_finite());
        assert!(refusal_score(1.0).is_finite());
    }

    proptest! {
        #[test]
        fn refusal_score_is_antisymmetric_and_increasing(p in 1e-6f64..0.999_999) {
            let s = refusal_score(p);
            prop_assert!((s + refusal_score(1.0 - p)).abs() < 1e-9);
            prop_assert!(refusal_score(p + 1e-7) >= s);
        }

        #[test]
        fn diff_in_means_is_translation_invariant(
            shift in proptest::collection::vec(-5.0f32..5.0, 4),
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let h = Array4::from_shape_fn((3, 2, 1, 4), |_| rng.gen_range(-2.0f32..2.0));
            let s = Array4::from_shape_fn((3, 2, 1, 4), |_| rng.gen_range(-2.0f32..2.0));
            let mut h2 = h.clone();
            let mut s2 = s.clone();
            for mut row in h2.rows_mut() { for (i, v) in row.iter_mut().enumerate() { *v += shift[i]; } }
            for mut row in s2.rows_mut() { for (i, v) in row.iter_mut().enumerate() { *v += shift[i]; } }
            let a = diff_in_means(&tensor_from(h, vec![-1]), &tensor_from(s, vec![-1])).unwrap();
            let b = diff_in_means(&tensor_from(h2, vec![-1]), &tensor_from(s2, vec![-1])).unwrap();
            for (ca, cb) in a.iter().zip(b.iter()) {
                for (x, y) in ca.vector.iter().zip(cb.vector.iter()) {
                    prop_assert!((x - y).abs() < 1e-5);
                }
            }
        }
    }

    fn toy_validation(model: &crate::runtime::toy::ToyTransformer) -> ContrastiveDataset {
        ContrastiveDataset {
            harmful: sample_prompts(model, 48, 6, 1, Some(SAFETY_TRIGGER), &[]),
            harmless: sample_prompts(model, 48, 6, 2, None, &[SAFETY_TRIGGER]),
            val_harmful: sample_prompts(model, 16, 6, 3, Some(SAFETY_TRIGGER), &[]),
            val_harmless: sample_prompts(model, 16, 6, 4, None, &[SAFETY_TRIGGER]),
        }
    }

    #[test]
    fn zero_vector_candidate_is_excluded() {
        let model = safety_toy("toy-safe", 4, 16, 64, 17).unwrap();
        let data = toy_validation(&model);
        let candidates = vec![DirectionCandidate {
            layer: 0,
            position: -1,
            vector: Array1::zeros(16),
        }];
        let tokens = refusal_token_ids(&model, &["sorry".to_string()]);
        let report =
            score_candidates(&model, &candidates, &data, &tokens, Default::default()).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.excluded.len(), 1);
        assert!(matches!(
            select_direction(&report, 4),
            Err(Error::NoFeasibleCandidate)
        ));
    }

    #[test]
    fn near_zero_candidate_behaves_like_noop() {
        // A tiny-norm candidate: ablating its direction is a genuine
        // projection, but adding it back changes almost nothing, so the KL
        // check against a same-direction large candidate distinguishes them.
        let model = safety_toy("toy-safe", 4, 16, 64, 17).unwrap();
        let data = toy_validation(&model);
        let dir = safety_toy_direction(17, 16);
        let planted = DirectionCandidate {
            layer: 2,
            position: -1,
            vector: Array1::from_vec(dir.iter().map(|&x| x * 3.0).collect()),
        };
        let tokens = refusal_token_ids(&model, &["sorry".to_string()]);
        let report = score_candidates(
            &model,
            std::slice::from_ref(&planted),
            &data,
            &tokens,
            Default::default(),
        )
        .unwrap();
        let row = &report.rows[0];
        assert!(row.steering_score > 0.0, "steering {}", row.steering_score);
        assert!(row.kl_score < 0.1, "kl {}", row.kl_score);
        assert!(row.refusal_score < 0.0, "refusal {}", row.refusal_score);
    }

    #[test]
    fn plant_and_recover_selects_planted_direction() {
        let model = safety_toy("toy-safe", 8, 32, 96, 23).unwrap();
        let data = toy_validation(&model);
        let positions = [-1i64, -2, -3];
        let ha = model.capture_residuals(&data.harmful, &positions).unwrap();
        let sa = model
            .capture_residuals(&data.harmless, &positions)
            .unwrap();
        let candidates = diff_in_means(&ha, &sa).unwrap();
        assert_eq!(candidates.len(), 8 * 3);
        let tokens = refusal_token_ids(&model, &["sorry".to_string()]);
        let report =
            score_candidates(&model, &candidates, &data, &tokens, Default::default()).unwrap();
        let vector = select_direction(&report, 8).unwrap();
        let planted = safety_toy_direction(23, 32);
        let cos = intervene::dot(vector.direction.as_slice().unwrap(), &planted);
        assert!(cos.abs() >= 0.95, "cos = {cos}");
        assert!(vector.steering_score > 0.0);
        assert!(vector.kl_score < 0.1);
        assert!((vector.source_layer as f64) < 0.8 * 8.0);
    }

    #[test]
    fn all_high_kl_yields_no_feasible_candidate() {
        let model = safety_toy("toy-safe", 4, 16, 64, 17).unwrap();
        let data = toy_validation(&model);
        let dir = safety_toy_direction(17, 16);
        let candidates = vec![DirectionCandidate {
            layer: 1,
            position: -1,
            vector: Array1::from_vec(dir),
        }];
        let tokens = refusal_token_ids(&model, &["sorry".to_string()]);
        let thresholds = SelectionThresholds {
            kl_max: 0.0, // nothing can pass
            ..Default::default()
        };
        let report =
            score_candidates(&model, &candidates, &data, &tokens, thresholds).unwrap();
        assert!(report.chosen.is_none());
        assert!(matches!(
            select_direction(&report, 4),
            Err(Error::NoFeasibleCandidate)
        ));
    }

    #[test]
    fn tie_breaks_prefer_lower_layer_then_position_near_minus_one() {
        let mk = |layer, position| ScoredCandidate {
            candidate: DirectionCandidate {
                layer,
                position,
                vector: Array1::from_vec(vec![1.0, 0.0]),
            },
            refusal_score: -1.0,
            steering_score: 1.0,
            kl_score: 0.01,
            passed_filters: true,
        };
        let report = SelectionReport {
            rows: vec![mk(3, -1), mk(1, -5), mk(1, -2)],
            excluded: vec![],
            num_layers: 8,
            thresholds: Default::default(),
            chosen: None,
            model_id: "t".into(),
        };
        // equal refusal scores: lower layer wins, then position closer to -1
        assert_eq!(choose(&report), Some(2));
    }

    #[test]
    fn selection_summary_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("selection.tsv");
        let report = SelectionReport {
            rows: vec![ScoredCandidate {
                candidate: DirectionCandidate {
                    layer: 12,
                    position: -5,
                    vector: Array1::from_vec(vec![1.0, 0.0]),
                },
                refusal_score: -9.86,
                steering_score: 7.68,
                kl_score: 0.059,
                passed_filters: true,
            }],
            excluded: vec![],
            num_layers: 32,
            thresholds: Default::default(),
            chosen: Some(0),
            model_id: "llama-3-8b-instruct".into(),
        };
        write_selection_summary(&path, &report).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SELECTION_TABLE_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "llama-3-8b-instruct\t-5\t12 / 32\t-9.86\t7.68\t0.059"
        );
    }
}
