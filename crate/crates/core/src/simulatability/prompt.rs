//! Prompt assembly.
//!
//! Sections, in order: 1.1 task description, 1.2 global explanations,
//! 2.1 learning-phase samples, 2.2 local explanations, 2.3 learning-phase
//! predictions, 3.1 evaluation-phase samples. Everything up to 2.3 forms the
//! system text; 3.1 is the user text. Explanation-specific wording lives in
//! 1.2 and 2.2 only, so an explained prompt and its unexplained baseline
//! differ in exactly those blocks.

use std::collections::BTreeMap;

use ndarray::Array2;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{PromptType, SampleSplit};
use crate::attribution::{bucket, shown_concepts, ImportanceReport, SHOW_THRESHOLD};
use crate::corpus::{ActivationBundle, SettingKey};
use crate::error::{Error, Result};
use crate::interpretation::ConceptDescription;

pub const EP_SECTION: &str = "3.1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSection {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub setting: SettingKey,
    pub sections: Vec<PromptSection>,
    pub system_text: String,
    pub user_text: String,
    /// evaluation tag → class index the original model predicted
    pub answer_key: BTreeMap<String, usize>,
    /// evaluation tags in prompt order
    pub ep_tags: Vec<String>,
    /// class strings as shown to the simulator
    pub class_display: Vec<String>,
}

impl PromptBundle {
    pub fn section(&self, id: &str) -> Option<&PromptSection> {
        self.sections.iter().find(|s| s.id == id)
    }

    /// Class index for a displayed class string, case-insensitively.
    pub fn class_index(&self, shown: &str) -> Option<usize> {
        let shown = shown.trim();
        self.class_display
            .iter()
            .position(|c| c.eq_ignore_ascii_case(shown))
    }
}

/// Explanations a prompt may draw on; which ones are needed depends on the
/// prompt type.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExplanationInputs<'a> {
    pub global: Option<&'a ImportanceReport>,
    pub descriptions: Option<&'a [ConceptDescription]>,
    /// n × k L1-normalized local importances over the whole bundle
    pub local: Option<&'a Array2<f64>>,
}

fn quote(s: &str) -> String {
    format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
}

fn quoted_list(items: &[String]) -> String {
    let inner: Vec<String> = items.iter().map(|s| quote(s)).collect();
    format!("[{}]", inner.join(", "))
}

fn concept_tag(j: usize) -> String {
    format!("concept_{j}")
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn bucket_map(entries: &[(usize, &'static str)]) -> String {
    let inner: Vec<String> = entries
        .iter()
        .map(|(j, b)| format!("{}: {}", quote(&concept_tag(*j)), quote(b)))
        .collect();
    format!("{{{}}}", inner.join(", "))
}

fn config_error(kind: PromptType, message: &str) -> Error {
    Error::PromptConfig {
        prompt_type: kind.to_string(),
        message: message.to_string(),
    }
}

fn task_description(kind: PromptType, classes: &[String]) -> String {
    let mut text = String::from("You are a classifier. For each sample, you have to predict the class.");
    if kind.has_learning_phase() {
        text.push_str(" You will have examples of samples and labels as references for the task.");
    }
    text.push_str(" Each sample class prediction should be in the format: 'Sample_{i}: {predicted_class}'.");
    text.push_str("\n\nThe classes are: [");
    text.push_str(&classes.join(", "));
    text.push(']');
    text
}

fn global_block(
    report: &ImportanceReport,
    descriptions: &[ConceptDescription],
    classes: &[String],
) -> Result<String> {
    let k = report.global.normalized.ncols();
    if descriptions.len() != k {
        return Err(Error::dimension("concept descriptions", k, descriptions.len()));
    }
    let mut shown = std::collections::BTreeSet::new();
    let mut class_lines = Vec::with_capacity(classes.len());
    for (c, name) in classes.iter().enumerate() {
        let row = report.global.normalized.row(c);
        let mut entries = Vec::new();
        for j in shown_concepts(row) {
            if let Some(b) = bucket(row[j])? {
                entries.push((j, b.symbol()));
                shown.insert(j);
            }
        }
        class_lines.push(format!("{name}: {}", bucket_map(&entries)));
    }

    let labels = descriptions
        .iter()
        .any(|d| matches!(d, ConceptDescription::Label { .. }));
    let mut text = String::from(
        "To complete the task, you will be given the concepts and their importance for each class.\n",
    );
    text.push_str(if labels {
        "For each concept, the label is:"
    } else {
        "For each concept, the most aligned and opposed words are:"
    });
    for &j in &shown {
        let line = match &descriptions[j] {
            ConceptDescription::Words { aligned, opposed } => match opposed {
                Some(op) => format!(
                    "{}: aligned: {}, opposed: {}",
                    concept_tag(j),
                    quoted_list(aligned),
                    quoted_list(op)
                ),
                None => format!("{}: aligned: {}", concept_tag(j), quoted_list(aligned)),
            },
            ConceptDescription::Label { label, .. } => {
                format!("{}: label: {}", concept_tag(j), quote(label))
            }
            ConceptDescription::None => format!("{}: no description", concept_tag(j)),
        };
        text.push('\n');
        text.push_str(&line);
    }
    text.push_str("\n\nThe most important concepts and their importance for each class are:");
    for line in class_lines {
        text.push('\n');
        text.push_str(&line);
    }
    Ok(text)
}

fn samples_block(lead: &str, tags: &[String], indices: &[usize], bundle: &ActivationBundle) -> String {
    let mut text = String::from(lead);
    for (tag, &i) in tags.iter().zip(indices) {
        text.push('\n');
        text.push_str(&format!("{tag}: {}", one_line(&bundle.samples[i])));
    }
    text
}

fn local_block(
    tags: &[String],
    indices: &[usize],
    report: &ImportanceReport,
    local: &Array2<f64>,
    bundle: &ActivationBundle,
) -> Result<String> {
    let k = report.global.normalized.ncols();
    if local.ncols() != k || local.nrows() != bundle.n() {
        return Err(Error::dimension("local importance rows", bundle.n(), local.nrows()));
    }
    let mut text = String::from("Concepts' contributions to labels for each example are:");
    for (tag, &i) in tags.iter().zip(indices) {
        let c = bundle.predictions[i];
        let shown = shown_concepts(report.global.normalized.row(c));
        let mut entries = Vec::new();
        for j in shown {
            let v = local[[i, j]];
            if v.abs() > SHOW_THRESHOLD {
                if let Some(b) = bucket(v)? {
                    entries.push((j, b.symbol()));
                }
            }
        }
        text.push('\n');
        text.push_str(&format!("Concepts contributions for {tag}: {}", bucket_map(&entries)));
    }
    Ok(text)
}

/// Assembles the prompt for `setting`. Explanation inputs required by the
/// prompt type must be present.
pub fn build_prompt(
    setting: &SettingKey,
    bundle: &ActivationBundle,
    split: &SampleSplit,
    inputs: ExplanationInputs<'_>,
) -> Result<PromptBundle> {
    let kind = setting.prompt.kind;
    let classes: Vec<String> = if setting.prompt.anonymous {
        (0..bundle.num_classes()).map(|j| format!("Class_{j}")).collect()
    } else {
        bundle.class_names.clone()
    };
    for &i in split.lp_indices.iter().chain(&split.ep_indices) {
        if i >= bundle.n() {
            return Err(Error::validation("sample split", format!("index {i} out of range")));
        }
    }

    let lp_tags: Vec<String> = (0..split.lp_indices.len()).map(|i| format!("Sample_{i}")).collect();
    let offset = split.lp_indices.len();
    let ep_tags: Vec<String> = (0..split.ep_indices.len())
        .map(|i| format!("Sample_{}", offset + i))
        .collect();

    let mut sections = vec![PromptSection {
        id: "1.1".into(),
        text: task_description(kind, &classes),
    }];
    if kind.has_global() {
        let report = inputs
            .global
            .ok_or_else(|| config_error(kind, "global importance report is required"))?;
        let descriptions = inputs
            .descriptions
            .ok_or_else(|| config_error(kind, "concept descriptions are required"))?;
        sections.push(PromptSection {
            id: "1.2".into(),
            text: global_block(report, descriptions, &classes)?,
        });
    }
    if kind.has_learning_phase() {
        sections.push(PromptSection {
            id: "2.1".into(),
            text: samples_block("Here are examples of samples:", &lp_tags, &split.lp_indices, bundle),
        });
        if kind.has_local() {
            let report = inputs
                .global
                .ok_or_else(|| config_error(kind, "global importance report is required"))?;
            let local = inputs
                .local
                .ok_or_else(|| config_error(kind, "local importances are required"))?;
            sections.push(PromptSection {
                id: "2.2".into(),
                text: local_block(&lp_tags, &split.lp_indices, report, local, bundle)?,
            });
        }
        let mut text = String::from("The predictions for these examples are:");
        for (tag, &i) in lp_tags.iter().zip(&split.lp_indices) {
            text.push('\n');
            text.push_str(&format!("{tag}: {}", classes[bundle.predictions[i]]));
        }
        sections.push(PromptSection { id: "2.3".into(), text });
    }
    sections.push(PromptSection {
        id: EP_SECTION.into(),
        text: samples_block(
            "Predict the class of each of the following samples:",
            &ep_tags,
            &split.ep_indices,
            bundle,
        ),
    });

    let system_text = sections
        .iter()
        .filter(|s| s.id != EP_SECTION)
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n");
    let user_text = sections.last().expect("EP section").text.clone();
    let answer_key = ep_tags
        .iter()
        .zip(&split.ep_indices)
        .map(|(t, &i)| (t.clone(), bundle.predictions[i]))
        .collect();

    let prompt = PromptBundle {
        setting: setting.clone(),
        sections,
        system_text,
        user_text,
        answer_key,
        ep_tags,
        class_display: classes,
    };
    check_leakage(&prompt)?;
    Ok(prompt)
}

/// Fails if any evaluation tag is mentioned in the system text or is paired
/// with a class string anywhere in the prompt.
pub fn check_leakage(prompt: &PromptBundle) -> Result<()> {
    let leak = |message: String| Error::PromptConfig {
        prompt_type: prompt.setting.prompt.to_string(),
        message,
    };
    if prompt.ep_tags.is_empty() {
        return Ok(());
    }
    let alternatives = |items: &[String]| {
        items
            .iter()
            .map(|s| regex::escape(s))
            .collect::<Vec<_>>()
            .join("|")
    };
    let tags = alternatives(&prompt.ep_tags);
    let mention = Regex::new(&format!(r"\b(?:{tags})\b")).expect("valid regex");
    if let Some(m) = mention.find(&prompt.system_text) {
        return Err(leak(format!("evaluation tag {} appears in the system text", m.as_str())));
    }
    if prompt.class_display.is_empty() {
        return Ok(());
    }
    let classes = alternatives(&prompt.class_display);
    let paired = Regex::new(&format!(r"(?mi)^\s*({tags})\s*:\s*(?:{classes})\s*$")).expect("valid regex");
    let full = format!("{}\n{}", prompt.system_text, prompt.user_text);
    if let Some(c) = paired.captures(&full) {
        return Err(leak(format!("evaluation tag {} is paired with a class", &c[1])));
    }
    Ok(())
}
