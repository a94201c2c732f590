//! Concept directions and representational-shift analysis.
//!
//! A concept direction is a per-layer difference-in-means vector between
//! paired contrastive texts (activations at the last token position). The
//! layer-wise cosine profile between two concept directions, compared across
//! a base/instruct model pair, quantifies how instruction tuning rotates one
//! concept relative to another: `shift(l) = S_instruct(l) - S_base(l)`,
//! tested with a paired t-test across layers.

use std::fmt;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::container::ConceptDirectionRecord;
use crate::error::{Error, Result};
use crate::stats::ttest::{paired_ttest, PairedTTest};
use crate::runtime::HookedModel;

/// Concepts probed in the geometric analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Concept {
    Safety,
    Idaq,
    Tom,
    SubjectMatchedControl,
    GeneralTopicControl,
}

impl Concept {
    pub const ALL: [Concept; 5] = [
        Concept::Safety,
        Concept::Idaq,
        Concept::Tom,
        Concept::SubjectMatchedControl,
        Concept::GeneralTopicControl,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Concept::Safety => "safety",
            Concept::Idaq => "idaq",
            Concept::Tom => "tom",
            Concept::SubjectMatchedControl => "subject_matched_control",
            Concept::GeneralTopicControl => "general_topic_control",
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which member of the model pair a direction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    Base,
    Instruct,
}

impl ModelRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelRole::Base => "base",
            ModelRole::Instruct => "instruct",
        }
    }
}

/// Paired contrastive texts for one concept.
#[derive(Debug, Clone)]
pub struct ContrastivePairSet {
    pub concept: Concept,
    pub pairs: Vec<(String, String)>,
}

impl ContrastivePairSet {
    pub fn validate(&self) -> Result<()> {
        if self.pairs.len() < 8 {
            return Err(Error::Config(format!(
                "concept `{}` needs at least 8 contrastive pairs, got {}",
                self.concept,
                self.pairs.len()
            )));
        }
        if self
            .pairs
            .iter()
            .any(|(p, n)| p.trim().is_empty() || n.trim().is_empty())
        {
            return Err(Error::Config(format!(
                "concept `{}` contains an empty text",
                self.concept
            )));
        }
        Ok(())
    }
}

/// Per-layer concept direction `[L, d]`.
#[derive(Debug, Clone)]
pub struct ConceptDirection {
    pub concept: Concept,
    pub vectors: Array2<f32>,
    pub source_model: ModelRole,
    pub model_id: String,
}

impl ConceptDirection {
    pub fn num_layers(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn to_record(&self) -> ConceptDirectionRecord {
        ConceptDirectionRecord {
            vectors: self.vectors.clone(),
            concept: self.concept.as_str().to_string(),
            source_model: self.source_model.as_str().to_string(),
        }
    }
}

/// Mean activation difference (positive - negative) at the last token
/// position, per layer.
pub fn extract_concept_direction(
    model: &dyn HookedModel,
    pairs: &ContrastivePairSet,
    role: ModelRole,
) -> Result<ConceptDirection> {
    pairs.validate()?;
    let positives: Vec<String> = pairs.pairs.iter().map(|(p, _)| p.clone()).collect();
    let negatives: Vec<String> = pairs.pairs.iter().map(|(_, n)| n.clone()).collect();
    let pos_acts = model.capture_residuals(&positives, &[-1])?;
    let neg_acts = model.capture_residuals(&negatives, &[-1])?;

    let (layers, dim) = (pos_acts.num_layers(), pos_acts.hidden_dim());
    let n = positives.len() as f64;
    let mut vectors = Array2::<f32>::zeros((layers, dim));
    for l in 0..layers {
        for c in 0..dim {
            let mut mp = 0.0f64;
            let mut mn = 0.0f64;
            for s in 0..positives.len() {
                mp += f64::from(pos_acts.values[(s, l, 0, c)]);
                mn += f64::from(neg_acts.values[(s, l, 0, c)]);
            }
            vectors[(l, c)] = ((mp - mn) / n) as f32;
        }
    }
    Ok(ConceptDirection {
        concept: pairs.concept,
        vectors,
        source_model: role,
        model_id: model.model_id().to_string(),
    })
}

/// Layer-wise cosine similarity between two concept directions. A layer
/// where either vector has zero norm yields `None` and is excluded from
/// downstream tests.
pub fn cosine_profile(a: &ConceptDirection, b: &ConceptDirection) -> Result<Vec<Option<f64>>> {
    if a.vectors.dim() != b.vectors.dim() {
        return Err(Error::DimMismatch(format!(
            "concept directions have shapes {:?} and {:?}",
            a.vectors.dim(),
            b.vectors.dim()
        )));
    }
    let mut out = Vec::with_capacity(a.num_layers());
    for l in 0..a.num_layers() {
        let va = a.vectors.row(l);
        let vb = b.vectors.row(l);
        let mut dot = 0.0f64;
        let mut na = 0.0f64;
        let mut nb = 0.0f64;
        for (x, y) in va.iter().zip(vb.iter()) {
            dot += f64::from(*x) * f64::from(*y);
            na += f64::from(*x) * f64::from(*x);
            nb += f64::from(*y) * f64::from(*y);
        }
        if na == 0.0 || nb == 0.0 {
            out.push(None);
        } else {
            out.push(Some(dot / (na.sqrt() * nb.sqrt())));
        }
    }
    Ok(out)
}

/// Instruction-tuning shift of a cosine profile, with its paired t-test
/// across layers.
#[derive(Debug, Clone)]
pub struct ShiftReport {
    /// `S_instruct(l) - S_base(l)`; `None` where either profile is
    /// undefined.
    pub per_layer: Vec<Option<f64>>,
    pub mean: f64,
    pub sd: f64,
    pub t: f64,
    pub p: f64,
    /// Layers entering the test.
    pub n_layers: usize,
    /// Layers dropped because a profile was undefined there.
    pub n_excluded: usize,
}

const MIN_VALID_LAYERS: usize = 3;

fn paired_valid(
    base: &[Option<f64>],
    instruct: &[Option<f64>],
) -> Result<(Vec<f64>, Vec<f64>, Vec<Option<f64>>, usize)> {
    if base.len() != instruct.len() {
        return Err(Error::DimMismatch(format!(
            "profiles have {} and {} layers",
            base.len(),
            instruct.len()
        )));
    }
    let mut b = Vec::new();
    let mut i = Vec::new();
    let mut per_layer = Vec::with_capacity(base.len());
    let mut excluded = 0;
    for (x, y) in base.iter().zip(instruct.iter()) {
        match (x, y) {
            (Some(xb), Some(yi)) => {
                b.push(*xb);
                i.push(*yi);
                per_layer.push(Some(yi - xb));
            }
            _ => {
                excluded += 1;
                per_layer.push(None);
            }
        }
    }
    Ok((b, i, per_layer, excluded))
}

/// `shift(l) = S_instruct(l) - S_base(l)` with a paired t-test over layers.
pub fn shift_analysis(
    base_profile: &[Option<f64>],
    instruct_profile: &[Option<f64>],
) -> Result<ShiftReport> {
    let (b, i, per_layer, excluded) = paired_valid(base_profile, instruct_profile)?;
    if b.len() < MIN_VALID_LAYERS {
        return Err(Error::InsufficientLayers {
            needed: MIN_VALID_LAYERS,
            got: b.len(),
        });
    }
    let test = paired_ttest(&i, &b)?;
    Ok(ShiftReport {
        per_layer,
        mean: test.mean_diff,
        sd: test.sd_diff,
        t: test.t,
        p: test.p,
        n_layers: b.len(),
        n_excluded: excluded,
    })
}

/// Paired contrast between two shift reports (e.g. one concept against a
/// placebo control) across the common layer set.
pub fn compare_shifts(a: &ShiftReport, b: &ShiftReport) -> Result<PairedTTest> {
    if a.per_layer.len() != b.per_layer.len() {
        return Err(Error::DimMismatch(format!(
            "shift reports cover {} and {} layers",
            a.per_layer.len(),
            b.per_layer.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (x, y) in a.per_layer.iter().zip(b.per_layer.iter()) {
        if let (Some(x), Some(y)) = (x, y) {
            xs.push(*x);
            ys.push(*y);
        }
    }
    if xs.len() < MIN_VALID_LAYERS {
        return Err(Error::InsufficientLayers {
            needed: MIN_VALID_LAYERS,
            got: xs.len(),
        });
    }
    paired_ttest(&xs, &ys)
}

/// `arccos(S)` in degrees.
pub fn angle_degrees(cosine: f64) -> f64 {
    cosine.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Write a shift report as a delimited table (one row per layer plus a
/// summary row).
pub fn write_shift_table(path: &Path, label: &str, report: &ShiftReport) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "layer\tdelta_s")?;
    for (l, v) in report.per_layer.iter().enumerate() {
        match v {
            Some(v) => writeln!(f, "{l}\t{v:.6}")?,
            None => writeln!(f, "{l}\tNA")?,
        }
    }
    writeln!(
        f,
        "# {label}: mean={:.4} sd={:.4} t={:.3} p={:.3e} n_layers={} excluded={}",
        report.mean, report.sd, report.t, report.p, report.n_layers, report.n_excluded
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::toy::{concept_toy_pair, contrast_pairs};

    fn constant_direction(concept: Concept, role: ModelRole, rows: Vec<Vec<f32>>) -> ConceptDirection {
        let l = rows.len();
        let d = rows[0].len();
        ConceptDirection {
            concept,
            vectors: Array2::from_shape_fn((l, d), |(i, j)| rows[i][j]),
            source_model: role,
            model_id: "test".into(),
        }
    }

    #[test]
    fn identical_directions_have_unit_cosine() {
        let a = constant_direction(
            Concept::Safety,
            ModelRole::Base,
            vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 3.0]],
        );
        let s = cosine_profile(&a, &a).unwrap();
        for v in s {
            assert!((v.unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn orthogonal_directions_have_zero_cosine() {
        let a = constant_direction(Concept::Safety, ModelRole::Base, vec![vec![1.0, 0.0]; 3]);
        let b = constant_direction(Concept::Idaq, ModelRole::Base, vec![vec![0.0, 1.0]; 3]);
        let s = cosine_profile(&a, &b).unwrap();
        for v in s {
            assert!(v.unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn zero_norm_layer_is_undefined() {
        let a = constant_direction(
            Concept::Safety,
            ModelRole::Base,
            vec![vec![1.0, 0.0], vec![0.0, 0.0]],
        );
        let b = constant_direction(Concept::Idaq, ModelRole::Base, vec![vec![1.0, 0.0]; 2]);
        let s = cosine_profile(&a, &b).unwrap();
        assert!(s[0].is_some());
        assert!(s[1].is_none());
    }

    #[test]
    fn cosine_profile_is_scale_invariant() {
        let a = constant_direction(Concept::Safety, ModelRole::Base, vec![vec![1.0, 2.0, -0.5]; 4]);
        let mut scaled = a.clone();
        scaled.vectors.mapv_inplace(|v| v * 7.25);
        let b = constant_direction(Concept::Idaq, ModelRole::Base, vec![vec![0.3, -1.0, 2.0]; 4]);
        let s1 = cosine_profile(&a, &b).unwrap();
        let s2 = cosine_profile(&scaled, &b).unwrap();
        for (x, y) in s1.iter().zip(s2.iter()) {
            assert!((x.unwrap() - y.unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn identical_profiles_have_zero_shift() {
        let profile = vec![Some(0.3), Some(-0.2), Some(0.1), Some(0.0)];
        let r = shift_analysis(&profile, &profile).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(r.per_layer.iter().all(|v| v == &Some(0.0)));
    }

    #[test]
    fn constant_shift_with_noise_is_recovered() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let base: Vec<Option<f64>> = (0..32).map(|_| Some(rng.gen_range(-0.5..0.5))).collect();
        let instruct: Vec<Option<f64>> = base
            .iter()
            .map(|v| Some(v.unwrap() - 0.2 + rng.gen_range(-0.01..0.01)))
            .collect();
        let r = shift_analysis(&base, &instruct).unwrap();
        assert!(r.mean > -0.21 && r.mean < -0.19, "mean {}", r.mean);
        assert!(r.p < 1e-6);
        assert_eq!(r.n_layers, 32);
    }

    #[test]
    fn undefined_layers_are_excluded_pairwise() {
        let base = vec![Some(0.1), None, Some(0.2), Some(0.3), Some(0.15)];
        let instruct = vec![Some(0.2), Some(0.9), Some(0.3), Some(0.4), Some(0.05)];
        let r = shift_analysis(&base, &instruct).unwrap();
        assert_eq!(r.n_layers, 4);
        assert_eq!(r.n_excluded, 1);
        assert!(r.per_layer[1].is_none());
    }

    #[test]
    fn too_few_layers_rejected() {
        let base = vec![Some(0.1), None, None];
        let instruct = vec![Some(0.2), Some(0.9), Some(0.3)];
        assert!(matches!(
            shift_analysis(&base, &instruct),
            Err(Error::InsufficientLayers { .. })
        ));
    }

    #[test]
    fn compare_shifts_is_antisymmetric() {
        let base = vec![Some(0.0); 6];
        let a = shift_analysis(&base, &[Some(-0.3), Some(-0.25), Some(-0.4), Some(-0.2), Some(-0.35), Some(-0.28)]).unwrap();
        let b = shift_analysis(&base, &[Some(0.05), Some(-0.02), Some(0.01), Some(0.03), Some(-0.01), Some(0.02)]).unwrap();
        let ab = compare_shifts(&a, &b).unwrap();
        let ba = compare_shifts(&b, &a).unwrap();
        assert!((ab.t + ba.t).abs() < 1e-12);
        assert!(ab.t < 0.0);
    }

    #[test]
    fn compare_shifts_equal_reports_give_t_zero() {
        let base = vec![Some(0.0); 5];
        let inst = vec![Some(0.1), Some(0.2), Some(0.15), Some(0.12), Some(0.18)];
        let a = shift_analysis(&base, &inst).unwrap();
        let r = compare_shifts(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn constant_offset_zero_noise_handled_without_nan() {
        // exactly representable offset: a degenerate-variance contrast
        let base: Vec<Option<f64>> = (0..8).map(|i| Some(i as f64 * 0.25)).collect();
        let instruct: Vec<Option<f64>> = (0..8).map(|i| Some(i as f64 * 0.25 + 0.5)).collect();
        let a = shift_analysis(&base, &instruct).unwrap();
        let b = shift_analysis(&base, &base).unwrap();
        let r = compare_shifts(&a, &b).unwrap();
        assert!(r.zero_variance);
        assert_eq!(r.p, 0.0);
        assert!(!r.t.is_nan());
    }

    #[test]
    fn angle_conversion() {
        assert!((angle_degrees(0.0) - 90.0).abs() < 1e-9);
        assert!((angle_degrees(1.0) - 0.0).abs() < 1e-9);
        assert!((angle_degrees(-0.530) - 122.0).abs() < 0.1);
        // quoted angle round-trips through cos/arccos
        let s = 122.0f64.to_radians().cos();
        assert!((angle_degrees(s) - 122.0).abs() < 0.1);
    }

    #[test]
    fn identical_pair_sets_give_near_zero_direction() {
        let (base, _) = concept_toy_pair(4, 16, 64, 31, 7).unwrap();
        let texts = contrast_pairs(&base, "gadget", 8, 5, 99);
        let same: Vec<(String, String)> = texts.iter().map(|(p, _)| (p.clone(), p.clone())).collect();
        let set = ContrastivePairSet {
            concept: Concept::SubjectMatchedControl,
            pairs: same,
        };
        let dir = extract_concept_direction(&base, &set, ModelRole::Base).unwrap();
        let max = dir.vectors.iter().fold(0.0f32, |m, v| m.max(v.abs()));
        assert!(max < 1e-6);
    }

    #[test]
    fn planted_concept_recovered_from_toy_pair() {
        let (base, instruct) = concept_toy_pair(6, 32, 96, 41, 9).unwrap();
        let vs = crate::runtime::toy::concept_vectors(9, 32);
        let set = ContrastivePairSet {
            concept: Concept::Idaq,
            pairs: contrast_pairs(&base, "mindful", 16, 6, 123),
        };
        let dir = extract_concept_direction(&base, &set, ModelRole::Base).unwrap();
        // recovered cosine at the embedding-planted concept: check layer 0
        let row = dir.vectors.row(0);
        let cos = crate::intervene::dot(row.as_slice().unwrap(), &vs.mind)
            / crate::intervene::norm(row.as_slice().unwrap());
        assert!(cos >= 0.95, "cos = {cos}");

        // instruct pair: mind direction anti-rotated against safety
        let safety_set = ContrastivePairSet {
            concept: Concept::Safety,
            pairs: contrast_pairs(&instruct, crate::runtime::toy::SAFETY_TRIGGER, 16, 6, 321),
        };
        let idaq_set = ContrastivePairSet {
            concept: Concept::Idaq,
            pairs: contrast_pairs(&instruct, "mindful", 16, 6, 123),
        };
        let s_i = extract_concept_direction(&instruct, &safety_set, ModelRole::Instruct).unwrap();
        let m_i = extract_concept_direction(&instruct, &idaq_set, ModelRole::Instruct).unwrap();
        let profile = cosine_profile(&s_i, &m_i).unwrap();
        let mean: f64 =
            profile.iter().flatten().sum::<f64>() / profile.iter().flatten().count() as f64;
        assert!(mean < -0.3, "mean instruct cosine = {mean}");
    }
}
