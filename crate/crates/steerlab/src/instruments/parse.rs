//! Answer extraction from model completions.
//!
//! Answers live between `<answer>` and `</answer>` tags; when a completion
//! contains several blocks the last one wins (models sometimes restate the
//! answer after reasoning). Parsing never panics: anything malformed or out
//! of bounds becomes [`ParsedValue::Invalid`].

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parsed answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ParsedValue {
    /// Likert rating (0-10, decimals kept as-is) or a GSS option number.
    Number(f64),
    Bool(bool),
    /// Single-letter multiple choice.
    Choice(char),
    /// Exact location token.
    Token(String),
    Invalid,
}

impl ParsedValue {
    pub fn is_valid(&self) -> bool {
        !matches!(self, ParsedValue::Invalid)
    }
}

/// What shape of answer a prompt asked for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseSpec<'a> {
    /// Integer-or-decimal in [0, 10].
    Likert,
    /// Integer option 1..=4.
    GssOption,
    /// Case-insensitive True/False.
    TrueFalse,
    /// Must match one of the provided tokens exactly (after trimming).
    LocationToken(&'a [String]),
    /// Single letter A or B.
    ChoiceAb,
    /// Single letter A through D.
    ChoiceAbcd,
}

static ANSWER_BLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<answer>(.*?)</answer>").expect("valid regex"));

/// The last well-formed answer block, if any.
pub fn last_answer_block(raw: &str) -> Option<String> {
    ANSWER_BLOCK
        .captures_iter(raw)
        .last()
        .map(|c| c[1].trim().to_string())
}

fn parse_letter(text: &str, max: char) -> ParsedValue {
    let cleaned = text
        .trim()
        .trim_end_matches('.')
        .trim_start_matches('(')
        .trim_end_matches(')')
        .trim();
    if cleaned.chars().count() != 1 {
        return ParsedValue::Invalid;
    }
    let c = cleaned.chars().next().expect("one char").to_ascii_uppercase();
    if c >= 'A' && c <= max {
        ParsedValue::Choice(c)
    } else {
        ParsedValue::Invalid
    }
}

/// Parse a completion according to the expected answer shape.
pub fn parse_answer(raw_text: &str, spec: ParseSpec) -> ParsedValue {
    let Some(block) = last_answer_block(raw_text) else {
        return ParsedValue::Invalid;
    };
    match spec {
        ParseSpec::Likert => match block.parse::<f64>() {
            Ok(v) if v.is_finite() && (0.0..=10.0).contains(&v) => ParsedValue::Number(v),
            _ => ParsedValue::Invalid,
        },
        ParseSpec::GssOption => match block.parse::<i64>() {
            Ok(v) if (1..=4).contains(&v) => ParsedValue::Number(v as f64),
            _ => ParsedValue::Invalid,
        },
        ParseSpec::TrueFalse => {
            let t = block.trim_end_matches('.');
            if t.eq_ignore_ascii_case("true") {
                ParsedValue::Bool(true)
            } else if t.eq_ignore_ascii_case("false") {
                ParsedValue::Bool(false)
            } else {
                ParsedValue::Invalid
            }
        }
        ParseSpec::LocationToken(tokens) => {
            let t = block.trim();
            if tokens.iter().any(|tok| tok == t) {
                ParsedValue::Token(t.to_string())
            } else {
                ParsedValue::Invalid
            }
        }
        ParseSpec::ChoiceAb => parse_letter(&block, 'B'),
        ParseSpec::ChoiceAbcd => parse_letter(&block, 'D'),
    }
}

/// Map a GSS belief-in-God option to the 0-10 scale:
/// 1 -> 0, 2 -> 3.33, 3 -> 6.67, 4 -> 10.
pub fn map_gss(option: i64) -> Result<f64> {
    match option {
        1 => Ok(0.0),
        2 => Ok(3.33),
        3 => Ok(6.67),
        4 => Ok(10.0),
        other => Err(Error::InvalidOption(other)),
    }
}
