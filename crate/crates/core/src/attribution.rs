//! Gradient×Input concept importance.
//!
//! With an affine decoder the gradient of the class-c logit with respect to
//! the codes is the constant vector `D · w_c`, so the local importance of
//! concept j for a sample is `u_j · (D w_c)_j` and the importances of a
//! sample sum to `ℓ_c(u) − ℓ_c(0)`.

use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::concepts::{concept_logits, ConceptSpace};
use crate::corpus::ActivationBundle;
use crate::error::{Error, Result};
use crate::linalg::argmax_rows;

/// Normalized importances at or below this magnitude are not shown.
pub const SHOW_THRESHOLD: f64 = 0.05;
/// Boundary between the weak and strong buckets.
pub const STRONG_THRESHOLD: f64 = 0.3;

/// k × |Y| matrix whose column c is the gradient of the class-c logit with
/// respect to the codes.
pub fn concept_gradients(space: &ConceptSpace, bundle: &ActivationBundle) -> Result<Array2<f64>> {
    if space.p != bundle.p() {
        return Err(Error::dimension("concept space latent width", bundle.p(), space.p));
    }
    Ok(space.decoder_matrix().dot(&bundle.head_weights))
}

/// Logits of the concept model at the all-zero code.
pub fn baseline_logits(space: &ConceptSpace, bundle: &ActivationBundle) -> Array1<f64> {
    space.decoder_offset().dot(&bundle.head_weights) + &bundle.head_bias
}

/// Divides every row by its L1 norm; all-zero rows stay zero.
pub fn l1_normalize_rows(m: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = m.to_owned();
    for mut row in out.rows_mut() {
        let norm: f64 = row.iter().map(|x| x.abs()).sum();
        if norm > 0.0 {
            row /= norm;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalImportance {
    /// n × k
    pub raw: Array2<f64>,
    /// n × k, rows L1-normalized
    pub normalized: Array2<f64>,
    /// class each row is explained for
    pub target_classes: Vec<usize>,
}

/// Per-sample importances toward the class the original model predicted.
pub fn local_importance(
    space: &ConceptSpace,
    bundle: &ActivationBundle,
    codes: ArrayView2<'_, f64>,
) -> Result<LocalImportance> {
    local_importance_for(space, bundle, codes, &bundle.predictions)
}

/// Per-sample importances toward explicitly chosen classes.
pub fn local_importance_for(
    space: &ConceptSpace,
    bundle: &ActivationBundle,
    codes: ArrayView2<'_, f64>,
    targets: &[usize],
) -> Result<LocalImportance> {
    if codes.ncols() != space.k {
        return Err(Error::dimension("codes width", space.k, codes.ncols()));
    }
    if targets.len() != codes.nrows() {
        return Err(Error::dimension("target classes", codes.nrows(), targets.len()));
    }
    let grads = concept_gradients(space, bundle)?;
    let mut raw = codes.to_owned();
    for ((mut row, &c), i) in raw.rows_mut().into_iter().zip(targets).zip(0..) {
        if c >= bundle.num_classes() {
            return Err(Error::validation(
                "target classes",
                format!("row {i}: class {c} out of range"),
            ));
        }
        row *= &grads.column(c);
    }
    let normalized = l1_normalize_rows(raw.view());
    Ok(LocalImportance {
        raw,
        normalized,
        target_classes: targets.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    /// |Y| × k
    #[serde(with = "crate::corpus::serde_rows")]
    pub raw: Array2<f64>,
    /// |Y| × k, rows L1-normalized
    #[serde(with = "crate::corpus::serde_rows")]
    pub normalized: Array2<f64>,
    /// samples the concept model assigns to each class
    pub class_counts: Vec<usize>,
    /// samples where the concept model and the original model disagree
    pub disagreements: usize,
}

/// Class-level importances: mean local importance toward class c over the
/// samples the concept model assigns to c.
pub fn global_importance(
    space: &ConceptSpace,
    bundle: &ActivationBundle,
    codes: ArrayView2<'_, f64>,
) -> Result<GlobalImportance> {
    if codes.nrows() != bundle.n() {
        return Err(Error::dimension("codes rows", bundle.n(), codes.nrows()));
    }
    let logits = concept_logits(space, bundle, codes)?;
    let assigned = argmax_rows(logits.view());
    let disagreements = assigned
        .iter()
        .zip(&bundle.predictions)
        .filter(|(a, b)| a != b)
        .count();
    if disagreements > 0 {
        log::info!(
            "{} (k={}): concept model disagrees with the original model on {disagreements} of {} samples",
            space.method,
            space.k,
            bundle.n()
        );
    }
    let local = local_importance_for(space, bundle, codes, &assigned)?;
    let classes = bundle.num_classes();
    let mut raw = Array2::zeros((classes, space.k));
    let mut counts = vec![0usize; classes];
    for (row, &c) in local.raw.rows().into_iter().zip(&assigned) {
        let mut acc = raw.row_mut(c);
        acc += &row;
        counts[c] += 1;
    }
    for (c, mut row) in raw.axis_iter_mut(Axis(0)).enumerate() {
        if counts[c] > 0 {
            row /= counts[c] as f64;
        } else {
            log::warn!("{} (k={}): no sample is assigned to class {c}", space.method, space.k);
        }
    }
    let normalized = l1_normalize_rows(raw.view());
    Ok(GlobalImportance {
        raw,
        normalized,
        class_counts: counts,
        disagreements,
    })
}

/// Concepts whose normalized importance magnitude exceeds the threshold.
pub fn shown_concepts(normalized: ArrayView1<'_, f64>) -> Vec<usize> {
    normalized
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > SHOW_THRESHOLD)
        .map(|(j, _)| j)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    StrongNegative,
    Negative,
    Positive,
    StrongPositive,
}

impl Bucket {
    pub fn symbol(self) -> &'static str {
        match self {
            Bucket::StrongNegative => "- -",
            Bucket::Negative => "-",
            Bucket::Positive => "+",
            Bucket::StrongPositive => "+ +",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Bucket> {
        match s {
            "- -" => Some(Bucket::StrongNegative),
            "-" => Some(Bucket::Negative),
            "+" => Some(Bucket::Positive),
            "+ +" => Some(Bucket::StrongPositive),
            _ => None,
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Maps a normalized importance in [-1, 1] to its symbol bucket; values
/// whose magnitude is below the show threshold have none.
pub fn bucket(v: f64) -> Result<Option<Bucket>> {
    if !(-1.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("normalized importance {v} outside [-1, 1]")));
    }
    Ok(if v <= -STRONG_THRESHOLD {
        Some(Bucket::StrongNegative)
    } else if v <= -SHOW_THRESHOLD {
        Some(Bucket::Negative)
    } else if v >= STRONG_THRESHOLD {
        Some(Bucket::StrongPositive)
    } else if v >= SHOW_THRESHOLD {
        Some(Bucket::Positive)
    } else {
        None
    })
}

/// Shown concepts of one normalized row with their buckets, by concept index.
pub fn bucketed_row(normalized: ArrayView1<'_, f64>) -> Result<Vec<(usize, Bucket)>> {
    let mut out = Vec::new();
    for j in shown_concepts(normalized) {
        if let Some(b) = bucket(normalized[j])? {
            out.push((j, b));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShownConcept {
    pub concept: usize,
    pub value: f64,
    pub bucket: Bucket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassImportance {
    pub class: usize,
    pub class_name: String,
    pub shown: Vec<ShownConcept>,
}

/// Global importances with the shown concepts and buckets of every class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub global: GlobalImportance,
    pub classes: Vec<ClassImportance>,
}

impl ImportanceReport {
    pub fn build(global: GlobalImportance, class_names: &[String]) -> Result<Self> {
        let mut classes = Vec::with_capacity(class_names.len());
        for (c, name) in class_names.iter().enumerate() {
            let row = global.normalized.row(c);
            let shown = bucketed_row(row)?
                .into_iter()
                .map(|(j, b)| ShownConcept {
                    concept: j,
                    value: row[j],
                    bucket: b,
                })
                .collect();
            classes.push(ClassImportance {
                class: c,
                class_name: name.clone(),
                shown,
            });
        }
        Ok(Self { global, classes })
    }

    /// Union over classes of concepts with a normalized importance above
    /// the threshold.
    pub fn important_concepts(&self) -> Vec<usize> {
        let mut set = std::collections::BTreeSet::new();
        for row in self.global.normalized.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v > SHOW_THRESHOLD {
                    set.insert(j);
                }
            }
        }
        set.into_iter().collect()
    }
}
