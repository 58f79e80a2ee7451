//! Complexity and faithfulness metrics of a concept space.

use ndarray::{ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::attribution::ImportanceReport;
use crate::concepts::{concept_logits, ConceptSpace};
use crate::corpus::ActivationBundle;
use crate::error::{Error, Result};
use crate::linalg::{argmax_rows, softmax};

/// Code entries with magnitude at or below this count as inactive.
pub const NONZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Complexity,
    Faithfulness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub nb_concepts: f64,
    pub nb_activated: f64,
    pub ratio_activated: f64,
    pub cosine_similarity: f64,
    pub covariance: f64,
    pub nb_important: f64,
    pub ratio_important: f64,
    pub latents_l2: f64,
    pub logits_l2: f64,
    pub logits_kl: f64,
    /// `None` when the original model is no better than chance
    pub completeness: Option<f64>,
}

impl MetricVector {
    pub const NAMES: [(&'static str, MetricKind); 11] = [
        ("nb_concepts", MetricKind::Complexity),
        ("nb_activated", MetricKind::Complexity),
        ("ratio_activated", MetricKind::Complexity),
        ("cosine_similarity", MetricKind::Complexity),
        ("covariance", MetricKind::Complexity),
        ("nb_important", MetricKind::Complexity),
        ("ratio_important", MetricKind::Complexity),
        ("latents_l2", MetricKind::Faithfulness),
        ("logits_l2", MetricKind::Faithfulness),
        ("logits_kl", MetricKind::Faithfulness),
        ("completeness", MetricKind::Faithfulness),
    ];

    /// Values in the order of `NAMES`.
    pub fn values(&self) -> [Option<f64>; 11] {
        [
            Some(self.nb_concepts),
            Some(self.nb_activated),
            Some(self.ratio_activated),
            Some(self.cosine_similarity),
            Some(self.covariance),
            Some(self.nb_important),
            Some(self.ratio_important),
            Some(self.latents_l2),
            Some(self.logits_l2),
            Some(self.logits_kl),
            self.completeness,
        ]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Self::NAMES
            .iter()
            .position(|(n, _)| *n == name)
            .and_then(|i| self.values()[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityMetrics {
    pub nb_concepts: f64,
    pub nb_activated: f64,
    pub ratio_activated: f64,
    pub cosine_similarity: f64,
    pub covariance: f64,
    pub nb_important: f64,
    pub ratio_important: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessMetrics {
    pub latents_l2: f64,
    pub logits_l2: f64,
    pub logits_kl: f64,
    pub completeness: Option<f64>,
}

/// Mean number of entries per row with magnitude above the threshold.
pub fn mean_l0(codes: ArrayView2<'_, f64>) -> f64 {
    if codes.nrows() == 0 {
        return 0.0;
    }
    let active = codes.iter().filter(|x| x.abs() > NONZERO_THRESHOLD).count();
    active as f64 / codes.nrows() as f64
}

/// Mean cosine similarity over all ordered pairs of rows, diagonal included.
pub fn mean_pairwise_cosine(rows: ArrayView2<'_, f64>) -> f64 {
    let k = rows.nrows();
    if k == 0 {
        return 0.0;
    }
    let norms: Vec<f64> = rows.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let gram = rows.dot(&rows.t());
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            let denom = norms[i] * norms[j];
            if denom > 0.0 {
                total += gram[[i, j]] / denom;
            }
        }
    }
    total / (k * k) as f64
}

/// Mean entry of the sample covariance matrix of the columns.
pub fn mean_covariance(codes: ArrayView2<'_, f64>) -> f64 {
    let n = codes.nrows();
    if n < 2 {
        return 0.0;
    }
    let mean = codes.mean_axis(Axis(0)).expect("n >= 2");
    let centred = &codes - &mean;
    let cov = centred.t().dot(&centred) / (n as f64 - 1.0);
    cov.mean().unwrap_or(0.0)
}

/// KL(softmax(p) ‖ softmax(q)) for two logit vectors.
pub fn kl_softmax(p_logits: ArrayView1<'_, f64>, q_logits: ArrayView1<'_, f64>) -> f64 {
    let p = softmax(p_logits);
    let q = softmax(q_logits);
    p.iter()
        .zip(q.iter())
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum::<f64>()
        .max(0.0)
}

pub fn complexity_metrics(
    space: &ConceptSpace,
    codes: ArrayView2<'_, f64>,
    report: &ImportanceReport,
) -> ComplexityMetrics {
    let k = space.k as f64;
    let l0 = mean_l0(codes);
    let important = report.important_concepts().len() as f64;
    ComplexityMetrics {
        nb_concepts: k,
        nb_activated: l0,
        ratio_activated: l0 / k,
        cosine_similarity: mean_pairwise_cosine(space.decoder_matrix().view()),
        covariance: mean_covariance(codes),
        nb_important: important,
        ratio_important: important / k,
    }
}

fn accuracy(pred: &[usize], labels: &[usize]) -> f64 {
    pred.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64
}

pub fn faithfulness_metrics(
    space: &ConceptSpace,
    bundle: &ActivationBundle,
    codes: ArrayView2<'_, f64>,
) -> Result<FaithfulnessMetrics> {
    let n = bundle.n();
    if codes.nrows() != n {
        return Err(Error::dimension("codes rows", n, codes.nrows()));
    }
    let rebuilt = space.decode(codes)?;
    let latents_l2 = (&bundle.activations - &rebuilt)
        .mapv(|x| x * x)
        .sum_axis(Axis(1))
        .mean()
        .unwrap_or(0.0);
    let original = bundle.model_logits();
    let concept = concept_logits(space, bundle, codes)?;
    let logits_l2 = (&original - &concept)
        .mapv(|x| x * x)
        .sum_axis(Axis(1))
        .mean()
        .unwrap_or(0.0);
    let logits_kl = original
        .rows()
        .into_iter()
        .zip(concept.rows())
        .map(|(p, q)| kl_softmax(p, q))
        .sum::<f64>()
        / n as f64;

    let chance = 1.0 / bundle.num_classes() as f64;
    let acc_model = accuracy(&bundle.predictions, &bundle.labels);
    let acc_concept = accuracy(&argmax_rows(concept.view()), &bundle.labels);
    let completeness = if (acc_model - chance).abs() < 1e-12 {
        log::warn!("completeness undefined: the model is at chance accuracy");
        None
    } else {
        Some((acc_concept - chance) / (acc_model - chance))
    };
    Ok(FaithfulnessMetrics {
        latents_l2,
        logits_l2,
        logits_kl,
        completeness,
    })
}

pub fn metric_vector(
    space: &ConceptSpace,
    bundle: &ActivationBundle,
    codes: ArrayView2<'_, f64>,
    report: &ImportanceReport,
) -> Result<MetricVector> {
    let c = complexity_metrics(space, codes, report);
    let f = faithfulness_metrics(space, bundle, codes)?;
    Ok(MetricVector {
        nb_concepts: c.nb_concepts,
        nb_activated: c.nb_activated,
        ratio_activated: c.ratio_activated,
        cosine_similarity: c.cosine_similarity,
        covariance: c.covariance,
        nb_important: c.nb_important,
        ratio_important: c.ratio_important,
        latents_l2: f.latents_l2,
        logits_l2: f.logits_l2,
        logits_kl: f.logits_kl,
        completeness: f.completeness,
    })
}
