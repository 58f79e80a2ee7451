//! Copeland aggregation of per-setting accuracies, significance of mean
//! differences, and rank correlations.

mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::SettingKey;
use crate::error::{Error, Result};
use crate::simulatability::{PromptType, PromptVariant};

pub use stats::{
    fractional_ranks, ln_gamma, mean, paired_t_test, pearson, regularized_incomplete_beta,
    sample_std, spearman_rho, student_t_two_sided, TTest, SIGNIFICANCE_LEVEL,
};

/// Label used for unexplained baselines when comparing methods.
pub const NO_EXPLANATION: &str = "NoExplanation";

/// The SettingKey field whose values are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareOn {
    Extraction,
    Interpretation,
    Prompt,
}

impl fmt::Display for CompareOn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompareOn::Extraction => "extraction",
            CompareOn::Interpretation => "interpretation",
            CompareOn::Prompt => "prompt",
        })
    }
}

impl FromStr for CompareOn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "extraction" => Ok(CompareOn::Extraction),
            "interpretation" => Ok(CompareOn::Interpretation),
            "prompt" => Ok(CompareOn::Prompt),
            _ => Err(Error::Parameter(format!("cannot compare on `{s}`"))),
        }
    }
}

fn is_baseline(key: &SettingKey) -> bool {
    !key.prompt.kind.is_explained()
}

/// The key of an unexplained setting: no extraction, interpretation or k.
pub fn baseline_key(key: &SettingKey) -> SettingKey {
    SettingKey {
        extraction: None,
        interpretation: None,
        k: 0,
        prompt: key.prompt.baseline(),
        ..key.clone()
    }
}

/// Which method a setting represents along `on`, and the key shared by all
/// settings it competes against.
fn observation(key: &SettingKey, on: CompareOn) -> (String, SettingKey) {
    let mut shared = key.clone();
    let label = match on {
        CompareOn::Extraction => {
            shared.extraction = None;
            shared.k = 0;
            key.extraction_name()
        }
        CompareOn::Interpretation => {
            shared.interpretation = None;
            key.interpretation_name()
        }
        CompareOn::Prompt => {
            shared.prompt = PromptVariant::new(PromptType::Ne1, false);
            key.prompt.to_string()
        }
    };
    (label, shared)
}

/// Settings × methods accuracy table. Unexplained baselines are replicated
/// against every explained setting they are the baseline of, so they
/// compete as the `NoExplanation` method (or as their prompt type).
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub methods: Vec<String>,
    pub rows: Vec<SettingKey>,
    pub values: Vec<Vec<Option<f64>>>,
}

pub fn accuracy_table(results: &BTreeMap<SettingKey, f64>, on: CompareOn) -> AccuracyTable {
    let mut cells: BTreeMap<SettingKey, BTreeMap<String, f64>> = BTreeMap::new();
    for (key, &acc) in results {
        if is_baseline(key) {
            continue;
        }
        let (label, shared) = observation(key, on);
        cells.entry(shared.clone()).or_default().insert(label, acc);
        let base = baseline_key(key);
        if let Some(&base_acc) = results.get(&base) {
            let label = match on {
                CompareOn::Prompt => base.prompt.to_string(),
                _ => NO_EXPLANATION.to_string(),
            };
            cells.entry(shared).or_default().insert(label, base_acc);
        }
    }
    let methods: Vec<String> = cells
        .values()
        .flat_map(|m| m.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows: Vec<SettingKey> = cells.keys().cloned().collect();
    let values = cells
        .values()
        .map(|m| methods.iter().map(|name| m.get(name).copied()).collect())
        .collect();
    AccuracyTable {
        methods,
        rows,
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub methods: Vec<String>,
    /// 0/1/2 votes of row method against column method, summed over settings
    pub votes: Vec<Vec<u64>>,
    /// settings where both methods have a result
    pub matched: Vec<Vec<usize>>,
    /// `100 · votes / (2 · matched)`; 50 on the diagonal, `None` without
    /// matched settings
    pub percent: Vec<Vec<Option<f64>>>,
    /// mean of row-minus-column accuracy differences
    pub diff_mean: Vec<Vec<Option<f64>>>,
    pub diff_std: Vec<Vec<Option<f64>>>,
    pub p_value: Vec<Vec<Option<f64>>>,
    pub significant: Vec<Vec<bool>>,
    /// settings that had a result for only one method
    pub dropped: usize,
    pub notes: Vec<String>,
}

/// Pairwise Copeland votes and paired statistics over a settings × methods
/// table; missing cells drop the setting for the affected pairs only.
pub fn copeland_from_table(methods: &[String], values: &[Vec<Option<f64>>]) -> Result<PairwiseMatrix> {
    let m = methods.len();
    if m < 2 {
        return Err(Error::Statistics(format!(
            "Copeland comparison needs at least 2 methods, got {m}"
        )));
    }
    let mut votes = vec![vec![0u64; m]; m];
    let mut matched = vec![vec![0usize; m]; m];
    let mut percent = vec![vec![None; m]; m];
    let mut diff_mean = vec![vec![None; m]; m];
    let mut diff_std = vec![vec![None; m]; m];
    let mut p_value = vec![vec![None; m]; m];
    let mut significant = vec![vec![false; m]; m];
    let mut notes = Vec::new();

    for i in 0..m {
        percent[i][i] = Some(50.0);
        for j in 0..m {
            if i == j {
                continue;
            }
            let mut diffs = Vec::new();
            for row in values {
                if let (Some(a), Some(b)) = (row[i], row[j]) {
                    votes[i][j] += match a.partial_cmp(&b) {
                        Some(std::cmp::Ordering::Greater) => 2,
                        Some(std::cmp::Ordering::Equal) => 1,
                        _ => 0,
                    };
                    diffs.push(a - b);
                }
            }
            matched[i][j] = diffs.len();
            if diffs.is_empty() {
                continue;
            }
            percent[i][j] = Some(100.0 * votes[i][j] as f64 / (2.0 * diffs.len() as f64));
            diff_mean[i][j] = Some(mean(&diffs));
            if diffs.len() >= 2 {
                diff_std[i][j] = Some(sample_std(&diffs));
                let test = paired_t_test(&diffs)?;
                p_value[i][j] = Some(test.p_value);
                significant[i][j] = test.significant;
            } else if i < j {
                notes.push(format!(
                    "{} vs {}: a single matched setting, significance undefined",
                    methods[i], methods[j]
                ));
            }
        }
    }
    let dropped = values
        .iter()
        .filter(|row| row.iter().filter(|v| v.is_some()).count() < 2)
        .count();
    if dropped > 0 {
        notes.push(format!("{dropped} settings had no counterpart and were dropped"));
    }
    Ok(PairwiseMatrix {
        methods: methods.to_vec(),
        votes,
        matched,
        percent,
        diff_mean,
        diff_std,
        p_value,
        significant,
        dropped,
        notes,
    })
}

/// Copeland matrix over all results, comparing values of one SettingKey
/// field while every other field is held fixed.
pub fn copeland_matrix(results: &BTreeMap<SettingKey, f64>, on: CompareOn) -> Result<PairwiseMatrix> {
    let table = accuracy_table(results, on);
    copeland_from_table(&table.methods, &table.values)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankEntry {
    pub method: String,
    pub rank: usize,
    /// methods (itself included) it reaches at least 50% against
    pub wins: usize,
}

/// Rank = |M| + 1 − #{j : percent[i][j] ≥ 50}; the diagonal counts as a
/// tie, so a method beating everyone ranks first and ties share ranks.
pub fn copeland_rank(matrix: &PairwiseMatrix) -> Vec<RankEntry> {
    let m = matrix.methods.len();
    matrix
        .methods
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let wins = matrix.percent[i]
                .iter()
                .filter(|p| p.is_some_and(|v| v >= 50.0))
                .count();
            RankEntry {
                method: name.clone(),
                rank: m + 1 - wins,
                wins,
            }
        })
        .collect()
}
