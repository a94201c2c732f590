//! Tensor-container persistence.
//!
//! All tensor artifacts (activation dumps, steering vectors, concept
//! directions) are stored as safetensors files: a JSON header naming each
//! entry plus raw little-endian data. Bytes are packed explicitly via
//! `to_le_bytes`, so files are identical across host endianness.
//!
//! Entries:
//! - activation dump: `values` f32 `[n, L, |I|, d]`, `positions` i64 `[|I|]`,
//!   metadata `model_id`
//! - steering vector: `direction` f32 `[d]`, metadata `model_id`,
//!   `source_layer`, `source_position`, `selection_report`
//! - concept direction: `vectors` f32 `[L, d]`, metadata `concept`,
//!   `source_model`

use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, Array4};
use safetensors::tensor::{Dtype, SafeTensors, TensorView};

use crate::error::{Error, Result};
use crate::runtime::ResidualTensor;

fn f32_bytes(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn i64_bytes(values: &[i64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn f32_from_bytes(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect()
}

fn i64_from_bytes(bytes: &[u8]) -> Vec<i64> {
    bytes
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect()
}

fn write_entries(
    path: &Path,
    entries: Vec<(&str, Dtype, Vec<usize>, Vec<u8>)>,
    metadata: HashMap<String, String>,
) -> Result<()> {
    let views: Vec<(&str, TensorView)> = entries
        .iter()
        .map(|(name, dtype, shape, bytes)| {
            TensorView::new(*dtype, shape.clone(), bytes)
                .map(|v| (*name, v))
                .map_err(|e| Error::Container(format!("{e:?}")))
        })
        .collect::<Result<_>>()?;
    safetensors::serialize_to_file(views, &Some(metadata), path)
        .map_err(|e| Error::Container(format!("{e:?}")))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Container(format!("{}: {e}", path.display())))
}

fn get_tensor<'a>(st: &'a SafeTensors, name: &str) -> Result<TensorView<'a>> {
    st.tensor(name)
        .map_err(|e| Error::Container(format!("missing entry `{name}`: {e:?}")))
}

fn get_meta(bytes: &[u8], key: &str) -> Result<String> {
    let (_, header) =
        SafeTensors::read_metadata(bytes).map_err(|e| Error::Container(format!("{e:?}")))?;
    header
        .metadata()
        .as_ref()
        .and_then(|m| m.get(key).cloned())
        .ok_or_else(|| Error::Container(format!("missing metadata `{key}`")))
}

/// Write an activation dump.
pub fn save_residuals(path: &Path, tensor: &ResidualTensor) -> Result<()> {
    tensor.validate()?;
    let shape = tensor.values.shape().to_vec();
    let values = tensor
        .values
        .as_slice()
        .map(f32_bytes)
        .ok_or_else(|| Error::Container("non-contiguous activation tensor".into()))?;
    let positions = i64_bytes(&tensor.positions);
    let mut meta = HashMap::new();
    meta.insert("model_id".to_string(), tensor.model_id.clone());
    meta.insert("byte_order".to_string(), "little-endian".to_string());
    write_entries(
        path,
        vec![
            ("values", Dtype::F32, shape, values),
            (
                "positions",
                Dtype::I64,
                vec![tensor.positions.len()],
                positions,
            ),
        ],
        meta,
    )
}

/// Read an activation dump.
pub fn load_residuals(path: &Path) -> Result<ResidualTensor> {
    let bytes = read_file(path)?;
    let st = SafeTensors::deserialize(&bytes).map_err(|e| Error::Container(format!("{e:?}")))?;
    let values = get_tensor(&st, "values")?;
    if values.dtype() != Dtype::F32 || values.shape().len() != 4 {
        return Err(Error::Container(
            "`values` must be a 4-d f32 tensor".into(),
        ));
    }
    let shape: [usize; 4] = values.shape().try_into().expect("checked 4-d");
    let data = f32_from_bytes(values.data());
    let positions_view = get_tensor(&st, "positions")?;
    if positions_view.dtype() != Dtype::I64 {
        return Err(Error::Container("`positions` must be i64".into()));
    }
    let positions = i64_from_bytes(positions_view.data());
    let tensor = ResidualTensor {
        values: Array4::from_shape_vec(shape, data)
            .map_err(|e| Error::Container(e.to_string()))?,
        positions,
        model_id: get_meta(&bytes, "model_id")?,
    };
    tensor.validate()?;
    Ok(tensor)
}

/// Metadata persisted alongside a steering vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVectorRecord {
    pub direction: Vec<f32>,
    pub model_id: String,
    pub source_layer: usize,
    pub source_position: i64,
    pub selection_report: String,
}

pub fn save_steering_vector(path: &Path, record: &SteeringVectorRecord) -> Result<()> {
    let mut meta = HashMap::new();
    meta.insert("model_id".to_string(), record.model_id.clone());
    meta.insert("source_layer".to_string(), record.source_layer.to_string());
    meta.insert(
        "source_position".to_string(),
        record.source_position.to_string(),
    );
    meta.insert(
        "selection_report".to_string(),
        record.selection_report.clone(),
    );
    meta.insert("byte_order".to_string(), "little-endian".to_string());
    write_entries(
        path,
        vec![(
            "direction",
            Dtype::F32,
            vec![record.direction.len()],
            f32_bytes(&record.direction),
        )],
        meta,
    )
}

pub fn load_steering_vector(path: &Path) -> Result<SteeringVectorRecord> {
    let bytes = read_file(path)?;
    let st = SafeTensors::deserialize(&bytes).map_err(|e| Error::Container(format!("{e:?}")))?;
    let view = get_tensor(&st, "direction")?;
    if view.dtype() != Dtype::F32 {
        return Err(Error::Container("`direction` must be f32".into()));
    }
    let parse_usize = |s: String| {
        s.parse::<usize>()
            .map_err(|e| Error::Container(format!("bad layer metadata: {e}")))
    };
    let parse_i64 = |s: String| {
        s.parse::<i64>()
            .map_err(|e| Error::Container(format!("bad position metadata: {e}")))
    };
    Ok(SteeringVectorRecord {
        direction: f32_from_bytes(view.data()),
        model_id: get_meta(&bytes, "model_id")?,
        source_layer: parse_usize(get_meta(&bytes, "source_layer")?)?,
        source_position: parse_i64(get_meta(&bytes, "source_position")?)?,
        selection_report: get_meta(&bytes, "selection_report")?,
    })
}

/// Per-layer concept direction matrix with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDirectionRecord {
    pub vectors: Array2<f32>,
    pub concept: String,
    pub source_model: String,
}

pub fn save_concept_direction(path: &Path, record: &ConceptDirectionRecord) -> Result<()> {
    let shape = record.vectors.shape().to_vec();
    let values = record
        .vectors
        .as_slice()
        .map(f32_bytes)
        .ok_or_else(|| Error::Container("non-contiguous direction matrix".into()))?;
    let mut meta = HashMap::new();
    meta.insert("concept".to_string(), record.concept.clone());
    meta.insert("source_model".to_string(), record.source_model.clone());
    meta.insert("byte_order".to_string(), "little-endian".to_string());
    write_entries(path, vec![("vectors", Dtype::F32, shape, values)], meta)
}

pub fn load_concept_direction(path: &Path) -> Result<ConceptDirectionRecord> {
    let bytes = read_file(path)?;
    let st = SafeTensors::deserialize(&bytes).map_err(|e| Error::Container(format!("{e:?}")))?;
    let view = get_tensor(&st, "vectors")?;
    if view.dtype() != Dtype::F32 || view.shape().len() != 2 {
        return Err(Error::Container("`vectors` must be a 2-d f32 tensor".into()));
    }
    let shape: [usize; 2] = view.shape().try_into().expect("checked 2-d");
    Ok(ConceptDirectionRecord {
        vectors: Array2::from_shape_vec(shape, f32_from_bytes(view.data()))
            .map_err(|e| Error::Container(e.to_string()))?,
        concept: get_meta(&bytes, "concept")?,
        source_model: get_meta(&bytes, "source_model")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array4;

    #[test]
    fn residuals_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("acts.safetensors");
        let tensor = ResidualTensor {
            values: Array4::from_shape_fn((2, 3, 2, 4), |(a, b, c, d)| {
                (a * 100 + b * 10 + c * 5 + d) as f32 * 0.25
            }),
            positions: vec![-1, -2],
            model_id: "toy-x".into(),
        };
        save_residuals(&path, &tensor).unwrap();
        let back = load_residuals(&path).unwrap();
        assert_eq!(back.values, tensor.values);
        assert_eq!(back.positions, tensor.positions);
        assert_eq!(back.model_id, "toy-x");
    }

    #[test]
    fn steering_vector_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vector.safetensors");
        let rec = SteeringVectorRecord {
            direction: vec![0.6, 0.8, 0.0],
            model_id: "toy-x".into(),
            source_layer: 4,
            source_position: -5,
            selection_report: "selection.tsv".into(),
        };
        save_steering_vector(&path, &rec).unwrap();
        assert_eq!(load_steering_vector(&path).unwrap(), rec);
    }

    #[test]
    fn concept_direction_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("concept.safetensors");
        let rec = ConceptDirectionRecord {
            vectors: Array2::from_shape_fn((3, 4), |(l, c)| (l * 4 + c) as f32),
            concept: "mind".into(),
            source_model: "base".into(),
        };
        save_concept_direction(&path, &rec).unwrap();
        assert_eq!(load_concept_direction(&path).unwrap(), rec);
    }

    #[test]
    fn nan_rejected_on_save() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.safetensors");
        let tensor = ResidualTensor {
            values: Array4::from_elem((1, 1, 1, 2), f32::NAN),
            positions: vec![-1],
            model_id: "toy".into(),
        };
        assert!(save_residuals(&path, &tensor).is_err());
    }
}
