//! Turning concepts into text: the words that activate a concept most
//! (CMAW) or the best-matching label from a bank (o1CA).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::concepts::ConceptSpace;
use crate::corpus::{ActivationBundle, ConceptLabelBank};
use crate::error::{Error, Result};
use crate::linalg::argmax;

/// Number of aligned (and opposed) words listed per concept.
pub const CMAW_WORDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InterpretationMethod {
    #[serde(rename = "CMAW")]
    Cmaw,
    #[serde(rename = "o1CA")]
    O1ca,
}

impl InterpretationMethod {
    pub const ALL: [InterpretationMethod; 2] = [InterpretationMethod::Cmaw, InterpretationMethod::O1ca];

    pub fn as_str(self) -> &'static str {
        match self {
            InterpretationMethod::Cmaw => "CMAW",
            InterpretationMethod::O1ca => "o1CA",
        }
    }
}

impl fmt::Display for InterpretationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InterpretationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InterpretationMethod::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown interpretation method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConceptDescription {
    Words {
        aligned: Vec<String>,
        /// Present only when some word activates the concept negatively.
        opposed: Option<Vec<String>>,
    },
    Label {
        label: String,
        score: f64,
    },
    None,
}

/// Word indices ordered by activation, descending, ties by word.
fn ranked(words: &[String], values: &Array1<f64>, descending: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..words.len()).collect();
    idx.sort_by(|&a, &b| {
        let ord = values[a].total_cmp(&values[b]);
        let ord = if descending { ord.reverse() } else { ord };
        match ord {
            Ordering::Equal => words[a].cmp(&words[b]),
            o => o,
        }
    });
    idx
}

/// Concept Most Aligned Words: for every concept, the vocabulary words with
/// the highest activation and, if any activation is negative, the ones with
/// the lowest.
pub fn cmaw(space: &ConceptSpace, bundle: &ActivationBundle) -> Result<Vec<ConceptDescription>> {
    if bundle.vocab_words.is_empty() {
        return Err(Error::EmptyWordPool);
    }
    let acts = space.encode(bundle.vocab_activations.view())?;
    let words = &bundle.vocab_words;
    let mut out = Vec::with_capacity(space.k);
    for col in acts.axis_iter(Axis(1)) {
        let values = col.to_owned();
        let aligned = ranked(words, &values, true)
            .into_iter()
            .take(CMAW_WORDS)
            .map(|i| words[i].clone())
            .collect();
        let negatives: Vec<String> = ranked(words, &values, false)
            .into_iter()
            .filter(|&i| values[i] < 0.0)
            .take(CMAW_WORDS)
            .map(|i| words[i].clone())
            .collect();
        out.push(ConceptDescription::Words {
            aligned,
            opposed: (!negatives.is_empty()).then_some(negatives),
        });
    }
    Ok(out)
}

/// Mean code of every bank entry's sentences, entries × k.
pub fn label_scores(space: &ConceptSpace, bank: &ConceptLabelBank) -> Result<Array2<f64>> {
    if bank.entries.is_empty() {
        return Err(Error::EmptyLabelBank);
    }
    let mut scores = Array2::zeros((bank.entries.len(), space.k));
    for (mut row, entry) in scores.rows_mut().into_iter().zip(&bank.entries) {
        let codes = space.encode(entry.sentence_activations.view())?;
        let mean = codes.mean_axis(Axis(0)).ok_or_else(|| {
            Error::validation("label bank", format!("entry `{}` has no sentences", entry.label))
        })?;
        row.assign(&mean);
    }
    Ok(scores)
}

/// One-label Concept Annotation: every concept gets the bank label whose
/// sentences activate it most on average (ties to the earliest entry).
pub fn o1ca(space: &ConceptSpace, bank: &ConceptLabelBank) -> Result<Vec<ConceptDescription>> {
    let scores = label_scores(space, bank)?;
    Ok(scores
        .axis_iter(Axis(1))
        .map(|col| {
            let best = argmax(col);
            ConceptDescription::Label {
                label: bank.entries[best].label.clone(),
                score: col[best],
            }
        })
        .collect())
}

pub fn interpret(
    method: InterpretationMethod,
    space: &ConceptSpace,
    bundle: &ActivationBundle,
    bank: Option<&ConceptLabelBank>,
) -> Result<Vec<ConceptDescription>> {
    match method {
        InterpretationMethod::Cmaw => cmaw(space, bundle),
        InterpretationMethod::O1ca => o1ca(space, bank.ok_or(Error::EmptyLabelBank)?),
    }
}
