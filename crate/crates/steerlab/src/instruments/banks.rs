//! Item banks and contrastive pair sets.
//!
//! The built-in banks ship the 18 mind-attribution items, the 5
//! self-attribution items, the belief-in-God item, and one format sample per
//! benchmark suite. Full third-party benchmark suites are loaded from
//! user-supplied files in the same line-delimited schema (one JSON record
//! per line).

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{Concept, ContrastivePairSet};
use crate::instruments::Item;

const IDAQ_BANK: &str = include_str!("../../data/items/idaq.jsonl");
const SELF_BANK: &str = include_str!("../../data/items/self_attribution.jsonl");
const GOD_BANK: &str = include_str!("../../data/items/god.jsonl");
const BENCHMARK_SAMPLES: &str = include_str!("../../data/items/benchmark_samples.jsonl");

const SAFETY_PAIRS: &str = include_str!("../../data/contrast/safety.jsonl");
const IDAQ_PAIRS: &str = include_str!("../../data/contrast/idaq.jsonl");
const TOM_PAIRS: &str = include_str!("../../data/contrast/tom.jsonl");
const SUBJECT_CONTROL_PAIRS: &str = include_str!("../../data/contrast/subject_matched_control.jsonl");
const GENERAL_CONTROL_PAIRS: &str = include_str!("../../data/contrast/general_topic_control.jsonl");

/// Parse items from line-delimited JSON text.
pub fn parse_items(text: &str) -> Result<Vec<Item>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: Item = serde_json::from_str(line)
            .map_err(|e| Error::BadItemRecord(format!("line {}: {e}", i + 1)))?;
        item.validate()?;
        out.push(item);
    }
    Ok(out)
}

/// Load items from a line-delimited file.
pub fn load_items(path: &Path) -> Result<Vec<Item>> {
    let mut text = String::new();
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    for line in f.lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    parse_items(&text)
}

/// All built-in items: IDAQ, self-attribution, belief-in-God, and the
/// benchmark format samples.
pub fn builtin_items() -> Vec<Item> {
    let mut items = Vec::new();
    for bank in [IDAQ_BANK, SELF_BANK, GOD_BANK, BENCHMARK_SAMPLES] {
        items.extend(parse_items(bank).expect("built-in banks are valid"));
    }
    items
}

/// The built-in survey items only (no benchmarks).
pub fn builtin_survey_items() -> Vec<Item> {
    builtin_items()
        .into_iter()
        .filter(|i| matches!(i, Item::Survey(_)))
        .collect()
}

#[derive(Deserialize)]
struct PairRecord {
    concept: Concept,
    positive: String,
    negative: String,
}

/// Parse contrastive pairs from line-delimited JSON text, grouped by
/// concept.
pub fn parse_contrast_pairs(text: &str) -> Result<HashMap<Concept, ContrastivePairSet>> {
    let mut grouped: HashMap<Concept, Vec<(String, String)>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(line)
            .map_err(|e| Error::BadItemRecord(format!("line {}: {e}", i + 1)))?;
        grouped
            .entry(rec.concept)
            .or_default()
            .push((rec.positive, rec.negative));
    }
    Ok(grouped
        .into_iter()
        .map(|(concept, pairs)| (concept, ContrastivePairSet { concept, pairs }))
        .collect())
}

/// Load one concept's pair set from a file.
pub fn load_contrast_pairs(path: &Path, concept: Concept) -> Result<ContrastivePairSet> {
    let text = std::fs::read_to_string(path)?;
    let mut grouped = parse_contrast_pairs(&text)?;
    grouped
        .remove(&concept)
        .ok_or_else(|| Error::Config(format!("no `{concept}` pairs in {}", path.display())))
}

/// Built-in contrastive pair set for a concept, following the
/// affirm/deny response templates.
pub fn builtin_contrast_pairs(concept: Concept) -> ContrastivePairSet {
    let text = match concept {
        Concept::Safety => SAFETY_PAIRS,
        Concept::Idaq => IDAQ_PAIRS,
        Concept::Tom => TOM_PAIRS,
        Concept::SubjectMatchedControl => SUBJECT_CONTROL_PAIRS,
        Concept::GeneralTopicControl => GENERAL_CONTROL_PAIRS,
    };
    parse_contrast_pairs(text)
        .expect("built-in pairs are valid")
        .remove(&concept)
        .expect("built-in pairs cover every concept")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruments::{Category, Scale, Suite};

    #[test]
    fn builtin_banks_have_expected_sizes() {
        let items = builtin_items();
        let surveys: Vec<_> = items
            .iter()
            .filter_map(|i| match i {
                Item::Survey(s) => Some(s),
                _ => None,
            })
            .collect();
        assert_eq!(surveys.len(), 24); // 18 IDAQ + 5 self + 1 God
        assert_eq!(
            surveys.iter().filter(|s| s.category == Category::Tech).count(),
            5
        );
        assert_eq!(
            surveys.iter().filter(|s| s.category == Category::Animal).count(),
            5
        );
        assert_eq!(
            surveys
                .iter()
                .filter(|s| s.category == Category::NonAnimal)
                .count(),
            5
        );
        assert_eq!(
            surveys
                .iter()
                .filter(|s| s.category == Category::Chatbot)
                .count(),
            3
        );
        assert_eq!(surveys.iter().filter(|s| s.category.is_self()).count(), 5);
        let god: Vec<_> = surveys
            .iter()
            .filter(|s| s.category == Category::God)
            .collect();
        assert_eq!(god.len(), 1);
        assert_eq!(god[0].scale, Scale::Gss4);

        let suites: Vec<Suite> = items
            .iter()
            .filter_map(|i| match i {
                Item::Benchmark(b) => Some(b.suite),
                _ => None,
            })
            .collect();
        assert_eq!(suites.len(), 5);
        for s in [
            Suite::MotomqaTom,
            Suite::MotomqaFactual,
            Suite::HiTom,
            Suite::SimpleTom,
            Suite::Mmlu,
        ] {
            assert!(suites.contains(&s), "missing {s:?} sample");
        }
    }

    #[test]
    fn builtin_pairs_cover_all_concepts_with_enough_pairs() {
        for concept in Concept::ALL {
            let set = builtin_contrast_pairs(concept);
            set.validate().unwrap();
            assert!(set.pairs.len() >= 8, "{concept}: {}", set.pairs.len());
        }
    }

    #[test]
    fn bad_records_are_rejected_with_context() {
        assert!(parse_items("{\"kind\":\"survey\"}").is_err());
        // god item with wrong scale
        let bad = "{\"kind\":\"survey\",\"id\":\"g\",\"category\":\"god\",\"scale\":\"likert_0_10\",\"text\":\"x\"}";
        assert!(matches!(parse_items(bad), Err(Error::BadItemRecord(_))));
        // order on a non-motomqa suite
        let bad2 = "{\"kind\":\"benchmark\",\"id\":\"b\",\"suite\":\"mmlu\",\"question\":\"q\",\"format\":\"abcd_choice\",\"options\":[\"1\",\"2\",\"3\",\"4\"],\"gold\":\"A\",\"order\":3}";
        assert!(matches!(parse_items(bad2), Err(Error::BadItemRecord(_))));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.jsonl");
        std::fs::write(&path, IDAQ_BANK).unwrap();
        let items = load_items(&path).unwrap();
        assert_eq!(items.len(), 18);
    }
}
