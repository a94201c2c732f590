//! Observation tables and dummy-encoded design matrices.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One scored response: outcome, jailbreak indicator, and the model/question
/// identifiers whose interaction defines the inference cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub outcome: f64,
    pub condition: bool,
    pub model_id: String,
    pub question_id: String,
}

/// A flat table of observations for one outcome category.
#[derive(Debug, Clone, Default)]
pub struct ObservationTable {
    pub rows: Vec<Observation>,
}

impl ObservationTable {
    pub fn new(rows: Vec<Observation>) -> Self {
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct model ids in deterministic (sorted) order.
    pub fn models(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| r.model_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Distinct question ids in deterministic (sorted) order.
    pub fn questions(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| r.question_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Dense cluster index per row, clustering on model x question.
    pub fn cluster_ids(&self) -> Vec<usize> {
        let keys: BTreeSet<(String, String)> = self
            .rows
            .iter()
            .map(|r| (r.model_id.clone(), r.question_id.clone()))
            .collect();
        let index: std::collections::HashMap<(String, String), usize> = keys
            .into_iter()
            .enumerate()
            .map(|(i, k)| (k, i))
            .collect();
        self.rows
            .iter()
            .map(|r| index[&(r.model_id.clone(), r.question_id.clone())])
            .collect()
    }

    pub fn num_clusters(&self) -> usize {
        self.cluster_ids().iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.iter().any(|r| !r.outcome.is_finite()) {
            return Err(Error::Config("non-finite outcome in observations".into()));
        }
        if self.num_clusters() < 2 {
            return Err(Error::Config(
                "need at least 2 model x question clusters".into(),
            ));
        }
        Ok(())
    }

    pub fn outcomes(&self) -> DVector<f64> {
        DVector::from_iterator(self.rows.len(), self.rows.iter().map(|r| r.outcome))
    }

    /// Write as delimited text with a header.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "outcome\tcondition\tmodel_id\tquestion_id")?;
        for r in &self.rows {
            writeln!(
                f,
                "{}\t{}\t{}\t{}",
                r.outcome,
                u8::from(r.condition),
                r.model_id,
                r.question_id
            )?;
        }
        Ok(())
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut rows = Vec::new();
        for (i, line) in f.lines().enumerate() {
            let line = line?;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            if parts.len() != 4 {
                return Err(Error::Serde(format!(
                    "observation row {i} has {} fields, expected 4",
                    parts.len()
                )));
            }
            rows.push(Observation {
                outcome: parts[0]
                    .parse()
                    .map_err(|e| Error::Serde(format!("row {i} outcome: {e}")))?,
                condition: parts[1] == "1",
                model_id: parts[2].to_string(),
                question_id: parts[3].to_string(),
            });
        }
        Ok(Self { rows })
    }
}

/// A dummy-encoded design matrix with named columns.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub names: Vec<String>,
}

/// Name of the jailbreak-indicator column.
pub const CONDITION_COL: &str = "jailbreak";

/// Build `intercept + jailbreak + model FE + question FE` (drop-first
/// coding, deterministic order), optionally with model x condition
/// interaction columns relative to a reference model.
pub fn build_design(
    table: &ObservationTable,
    reference_model: Option<&str>,
    model_fixed_effects: bool,
) -> Result<Design> {
    let models = table.models();
    let questions = table.questions();
    let n = table.len();

    let mut names = vec!["intercept".to_string(), CONDITION_COL.to_string()];
    let mut columns: Vec<Box<dyn Fn(&Observation) -> f64>> = vec![
        Box::new(|_| 1.0),
        Box::new(|r| f64::from(u8::from(r.condition))),
    ];

    match reference_model {
        None => {
            if model_fixed_effects {
                for m in models.iter().skip(1) {
                    let id = m.clone();
                    names.push(format!("model:{id}"));
                    columns.push(Box::new(move |r| f64::from(u8::from(r.model_id == id))));
                }
            }
        }
        Some(reference) => {
            if !models.iter().any(|m| m == reference) {
                return Err(Error::Config(format!(
                    "reference model `{reference}` not present in the table"
                )));
            }
            for m in models.iter().filter(|m| m.as_str() != reference) {
                let id = m.clone();
                names.push(format!("model:{id}"));
                columns.push(Box::new(move |r| f64::from(u8::from(r.model_id == id))));
            }
            for m in models.iter().filter(|m| m.as_str() != reference) {
                let id = m.clone();
                names.push(format!("jailbreak_x_model:{id}"));
                columns.push(Box::new(move |r| {
                    f64::from(u8::from(r.condition && r.model_id == id))
                }));
            }
        }
    }

    for q in questions.iter().skip(1) {
        let id = q.clone();
        names.push(format!("question:{id}"));
        columns.push(Box::new(move |r| f64::from(u8::from(r.question_id == id))));
    }

    let k = names.len();
    let mut x = DMatrix::<f64>::zeros(n, k);
    for (i, row) in table.rows.iter().enumerate() {
        for (j, col) in columns.iter().enumerate() {
            x[(i, j)] = col(row);
        }
    }
    Ok(Design { x, names })
}

/// Greedy Gram-Schmidt rank check. Returns the names of columns that are
/// (numerically) linear combinations of earlier ones.
pub fn collinear_columns(design: &Design) -> Vec<String> {
    let n = design.x.nrows();
    let k = design.x.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut offenders = Vec::new();
    for j in 0..k {
        let mut v = DVector::from_iterator(n, design.x.column(j).iter().copied());
        let scale = v.norm().max(1.0);
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        if v.norm() <= 1e-8 * scale {
            offenders.push(design.names[j].clone());
        } else {
            let norm = v.norm();
            basis.push(v / norm);
        }
    }
    offenders
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_table() -> ObservationTable {
        let mut rows = Vec::new();
        for (m, q, cond, y) in [
            ("m1", "q1", false, 1.0),
            ("m1", "q1", true, 3.0),
            ("m1", "q2", false, 2.0),
            ("m1", "q2", true, 4.0),
            ("m2", "q1", false, 1.5),
            ("m2", "q1", true, 3.5),
            ("m2", "q2", false, 2.5),
            ("m2", "q2", true, 4.5),
        ] {
            rows.push(Observation {
                outcome: y,
                condition: cond,
                model_id: m.to_string(),
                question_id: q.to_string(),
            });
        }
        ObservationTable::new(rows)
    }

    #[test]
    fn design_columns_and_names() {
        let t = toy_table();
        let d = build_design(&t, None, true).unwrap();
        assert_eq!(
            d.names,
            vec!["intercept", "jailbreak", "model:m2", "question:q2"]
        );
        assert_eq!(d.x.nrows(), 8);
        assert_eq!(d.x.ncols(), 4);
        assert!(collinear_columns(&d).is_empty());
    }

    #[test]
    fn interaction_design_has_phi_and_lambda_columns() {
        let t = toy_table();
        let d = build_design(&t, Some("m1"), true).unwrap();
        assert_eq!(
            d.names,
            vec![
                "intercept",
                "jailbreak",
                "model:m2",
                "jailbreak_x_model:m2",
                "question:q2"
            ]
        );
    }

    #[test]
    fn constant_condition_is_collinear() {
        let mut t = toy_table();
        for r in &mut t.rows {
            r.condition = true;
        }
        let d = build_design(&t, None, true).unwrap();
        assert_eq!(collinear_columns(&d), vec![CONDITION_COL.to_string()]);
    }

    #[test]
    fn clusters_are_model_by_question() {
        let t = toy_table();
        assert_eq!(t.num_clusters(), 4);
        t.validate().unwrap();
    }

    #[test]
    fn tsv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.tsv");
        let t = toy_table();
        t.write_tsv(&path).unwrap();
        let back = ObservationTable::read_tsv(&path).unwrap();
        assert_eq!(back.rows, t.rows);
    }
}
