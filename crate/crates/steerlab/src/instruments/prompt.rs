//! Prompt rendering for survey items and benchmark questions.
//!
//! Chain-of-thought prompts instruct the model to reason between
//! `<think>`/`</think>` tags and answer between `<answer>`/`</answer>` tags;
//! no-CoT prompts request only the answer block. Format instructions match
//! each item's answer shape exactly, so rendering the same item twice yields
//! identical strings.

use crate::instruments::{AnswerFormat, BenchmarkItem, Item, Scale, SurveyItem};

const LIKERT_RATING: &str =
    "provide only the final numerical rating (from 0=\"Not at All\" to 10=\"Very Much\") between <answer> and </answer>.";
const GSS_RATING: &str =
    "provide only the number of your chosen option (1, 2, 3, or 4) between <answer> and </answer>.";

fn survey_prompt(item: &SurveyItem, cot: bool) -> String {
    let rating = match item.scale {
        Scale::Likert0To10 => LIKERT_RATING,
        Scale::Gss4 => GSS_RATING,
    };
    if cot {
        format!(
            "{}\nFirst, think step-by-step between <think> and </think> about your response.\nThen, {rating}",
            item.text
        )
    } else {
        let mut c = rating.chars();
        let capitalized = match c.next() {
            Some(first) => first.to_uppercase().collect::<String>() + c.as_str(),
            None => String::new(),
        };
        format!("{}\n{capitalized}", item.text)
    }
}

fn tail(cot: bool, answer_as: &str) -> String {
    if cot {
        format!(
            "Think step by step in <think></think> tags, then give only the final answer as {answer_as} in <answer></answer> tags."
        )
    } else {
        format!("Give only the final answer as {answer_as} in <answer></answer> tags.")
    }
}

fn benchmark_prompt(item: &BenchmarkItem, cot: bool) -> String {
    match item.format {
        AnswerFormat::TrueFalse => format!(
            "{}\n\nQuestion: Do you think the following statement is True or False?\n\"{}\"\n\n{}",
            item.story,
            item.question,
            tail(cot, "True or False"),
        ),
        AnswerFormat::LocationToken => {
            let options = item
                .options
                .iter()
                .enumerate()
                .map(|(i, o)| format!("{}. {}", (b'A' + i as u8) as char, o))
                .collect::<Vec<_>>()
                .join("  ");
            format!(
                "{}\n\n{}\n{}\n\n{}",
                item.story,
                item.question,
                options,
                tail(cot, "the EXACT location token (e.g., red_container)"),
            )
        }
        AnswerFormat::AbChoice => format!(
            "{}\n\nQuestion: {}\nA. {}\nB. {}\n\n{}",
            item.story,
            item.question,
            item.options[0],
            item.options[1],
            tail(cot, "A or B"),
        ),
        AnswerFormat::AbcdChoice => {
            let choices = item
                .options
                .iter()
                .enumerate()
                .map(|(i, o)| format!("({}) {}", (b'A' + i as u8) as char, o))
                .collect::<Vec<_>>()
                .join("\n");
            let instruction = if cot {
                "Think step by step in <think></think> tags, then provide your final answer as a single letter (A, B, C, or D) in <answer></answer> tags."
            } else {
                "Provide your final answer as a single letter (A, B, C, or D) in <answer></answer> tags."
            };
            let subject = if item.story.is_empty() {
                String::new()
            } else {
                format!("Subject: {}\n", item.story)
            };
            format!(
                "{subject}Question: {}\n\nChoices:\n{choices}\n\n{instruction}",
                item.question,
            )
        }
    }
}

/// Render the full prompt for one item.
pub fn render_prompt(item: &Item, cot: bool) -> String {
    match item {
        Item::Survey(s) => survey_prompt(s, cot),
        Item::Benchmark(b) => benchmark_prompt(b, cot),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruments::{banks, Category, Suite};

    fn find_survey(id: &str) -> Item {
        banks::builtin_items()
            .into_iter()
            .find(|i| i.id() == id)
            .expect("builtin item")
    }

    #[test]
    fn likert_cot_contains_both_tag_instructions_and_scale() {
        let item = find_survey("idaq_tech_robot");
        let p = render_prompt(&item, true);
        assert!(p.contains("To what extent does the average robot have consciousness?"));
        assert!(p.contains("think step-by-step between <think> and </think>"));
        assert!(p.contains("0=\"Not at All\" to 10=\"Very Much\""));
        assert!(p.contains("between <answer> and </answer>"));
    }

    #[test]
    fn no_cot_requests_only_answer_block() {
        let item = find_survey("idaq_tech_robot");
        let p = render_prompt(&item, false);
        assert!(!p.contains("<think>"));
        assert!(p.contains("between <answer> and </answer>"));
    }

    #[test]
    fn mmlu_instructs_single_letter() {
        let items = banks::builtin_items();
        let mmlu = items
            .iter()
            .find(|i| matches!(i, Item::Benchmark(b) if b.suite == Suite::Mmlu))
            .unwrap();
        let p = render_prompt(mmlu, true);
        assert!(p.contains("single letter (A, B, C, or D)"));
        assert!(p.contains("Subject: professional_psychology"));
        assert!(p.contains("(A) "));
        assert!(p.contains("(D) "));
    }

    #[test]
    fn hitom_mentions_exact_location_token() {
        let items = banks::builtin_items();
        let hitom = items
            .iter()
            .find(|i| matches!(i, Item::Benchmark(b) if b.suite == Suite::HiTom))
            .unwrap();
        let p = render_prompt(hitom, true);
        assert!(p.contains("EXACT location token"));
        assert!(p.contains("A. blue_pantry"));
    }

    #[test]
    fn god_item_uses_gss_instruction() {
        let items = banks::builtin_items();
        let god = items
            .iter()
            .find(|i| matches!(i, Item::Survey(s) if s.category == Category::God))
            .unwrap();
        let p = render_prompt(god, true);
        assert!(p.contains("(1, 2, 3, or 4)"));
        assert!(p.contains("I don't believe in God now, and I never have"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let item = find_survey("idaq_animal_cheetah");
        assert_eq!(render_prompt(&item, true), render_prompt(&item, true));
        assert_eq!(render_prompt(&item, false), render_prompt(&item, false));
    }
}
