//! Parsing simulator answers and scoring them against the answer key.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{PromptBundle, Simulator};
use crate::corpus::SettingKey;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub tag: String,
    pub expected: usize,
    /// `None` when no parseable answer was found for the tag.
    pub predicted: Option<usize>,
}

impl SampleOutcome {
    pub fn correct(&self) -> bool {
        self.predicted == Some(self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub setting: SettingKey,
    pub outcomes: Vec<SampleOutcome>,
    pub raw_response: String,
    pub accuracy: f64,
    /// No evaluation tag could be parsed at all.
    pub malformed: bool,
}

impl SimulationResult {
    pub fn parse_failures(&self) -> usize {
        self.outcomes.iter().filter(|o| o.predicted.is_none()).count()
    }
}

fn answer_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*sample_(\d+)\s*:\s*(.+?)\s*$").unwrap())
}

/// Class answers per evaluation tag. The first line mentioning a tag wins;
/// answers naming no known class count as parse failures.
pub fn parse_response(text: &str, prompt: &PromptBundle) -> BTreeMap<String, Option<usize>> {
    let mut found: BTreeMap<String, Option<usize>> = BTreeMap::new();
    for line in text.lines() {
        let Some(c) = answer_line().captures(line) else { continue };
        let Ok(index) = c[1].parse::<usize>() else { continue };
        let tag = format!("Sample_{index}");
        if found.contains_key(&tag) {
            continue;
        }
        let answer = c[2].trim_matches(|ch: char| matches!(ch, '\'' | '"' | '.' | '*' | '`') || ch.is_whitespace());
        found.insert(tag, prompt.class_index(answer));
    }
    prompt
        .ep_tags
        .iter()
        .map(|t| (t.clone(), found.get(t).copied().flatten()))
        .collect()
}

/// Accuracy of a response: the fraction of evaluation samples whose parsed
/// answer equals the original model's prediction.
pub fn score_response(prompt: &PromptBundle, text: &str) -> SimulationResult {
    let parsed = parse_response(text, prompt);
    let outcomes: Vec<SampleOutcome> = prompt
        .ep_tags
        .iter()
        .map(|t| SampleOutcome {
            tag: t.clone(),
            expected: prompt.answer_key[t],
            predicted: parsed[t],
        })
        .collect();
    let correct = outcomes.iter().filter(|o| o.correct()).count();
    let accuracy = if outcomes.is_empty() {
        0.0
    } else {
        correct as f64 / outcomes.len() as f64
    };
    let malformed = !outcomes.is_empty() && outcomes.iter().all(|o| o.predicted.is_none());
    if malformed {
        log::warn!("{}: no answer could be parsed from the response", prompt.setting);
    }
    SimulationResult {
        setting: prompt.setting.clone(),
        outcomes,
        raw_response: text.to_string(),
        accuracy,
        malformed,
    }
}

pub fn run_simulator(prompt: &PromptBundle, simulator: &dyn Simulator) -> Result<SimulationResult> {
    let text = simulator.complete(prompt)?;
    Ok(score_response(prompt, &text))
}
