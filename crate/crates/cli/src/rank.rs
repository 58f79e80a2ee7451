//! Choice of k on validation seeds, Copeland comparisons on evaluation
//! seeds, and the correlation of simulatability with the other metrics.

use std::collections::{BTreeMap, BTreeSet};

use conceptsim::analysis::{copeland_matrix, copeland_rank, mean, spearman_rho, CompareOn, PairwiseMatrix, RankEntry};
use conceptsim::concepts::ExtractionMethod;
use conceptsim::corpus::SettingKey;
use conceptsim::metrics::{MetricKind, MetricVector};
use serde::{Deserialize, Serialize};

use crate::pipeline::SpaceKey;

/// The k chosen for one (dataset, model, method).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestK {
    pub dataset_id: String,
    pub model_id: String,
    pub method: ExtractionMethod,
    pub k: usize,
    /// mean validation accuracy per candidate k
    pub candidates: BTreeMap<usize, f64>,
    pub settings: usize,
}

impl BestK {
    pub fn space(&self) -> SpaceKey {
        SpaceKey {
            dataset_id: self.dataset_id.clone(),
            model_id: self.model_id.clone(),
            method: self.method,
            k: self.k,
        }
    }
}

/// Picks, per (dataset, model, method), the k with the highest mean
/// accuracy over validation settings; ties go to the smaller k.
pub fn select_best_k(results: &BTreeMap<SettingKey, f64>, validation_seeds: &[u64]) -> Vec<BestK> {
    let mut groups: BTreeMap<(String, String, ExtractionMethod), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for (key, &acc) in results {
        let Some(method) = key.extraction else { continue };
        if !validation_seeds.contains(&key.seed) {
            continue;
        }
        groups
            .entry((key.dataset_id.clone(), key.model_id.clone(), method))
            .or_default()
            .entry(key.k)
            .or_default()
            .push(acc);
    }
    groups
        .into_iter()
        .map(|((dataset_id, model_id, method), by_k)| {
            let settings = by_k.values().map(Vec::len).sum();
            let candidates: BTreeMap<usize, f64> = by_k.iter().map(|(&k, v)| (k, mean(v))).collect();
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for (&k, &m) in &candidates {
                if m > best.1 {
                    best = (k, m);
                }
            }
            BestK {
                dataset_id,
                model_id,
                method,
                k: best.0,
                candidates,
                settings,
            }
        })
        .collect()
}

/// Evaluation-seed results restricted to the chosen k of every method,
/// plus the unexplained baselines.
pub fn evaluation_results(
    results: &BTreeMap<SettingKey, f64>,
    best: &[BestK],
    eval_seeds: &[u64],
) -> BTreeMap<SettingKey, f64> {
    let chosen: BTreeMap<(&str, &str, ExtractionMethod), usize> = best
        .iter()
        .map(|b| ((b.dataset_id.as_str(), b.model_id.as_str(), b.method), b.k))
        .collect();
    results
        .iter()
        .filter(|(key, _)| eval_seeds.contains(&key.seed))
        .filter(|(key, _)| match key.extraction {
            None => true,
            Some(m) => chosen.get(&(key.dataset_id.as_str(), key.model_id.as_str(), m)) == Some(&key.k),
        })
        .map(|(k, &v)| (k.clone(), v))
        .collect()
}

/// One Copeland comparison over a subset of settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub angle: CompareOn,
    /// `all`, `dataset`, `model` or `bundle`
    pub subset_kind: String,
    pub subset: String,
    pub settings: usize,
    pub matrix: PairwiseMatrix,
    pub ranking: Vec<RankEntry>,
}

impl Comparison {
    pub fn rank_of(&self, method: &str) -> Option<usize> {
        self.ranking.iter().find(|r| r.method == method).map(|r| r.rank)
    }
}

/// Extraction methods whose interpretations are not compared, because
/// their concepts are not meant to be read one by one.
pub const NOT_INTERPRETED: [ExtractionMethod; 3] = [ExtractionMethod::NoProjection, ExtractionMethod::Pca, ExtractionMethod::Svd];

fn angle_filter(angle: CompareOn, key: &SettingKey) -> bool {
    match angle {
        CompareOn::Interpretation => key.extraction.is_none_or(|m| !NOT_INTERPRETED.contains(&m)),
        _ => true,
    }
}

/// Comparisons along every angle, over all settings and per dataset, model
/// and (dataset, model) bundle. Subsets with fewer than two methods are
/// skipped and reported in `notes`.
pub fn compare_all(results: &BTreeMap<SettingKey, f64>, notes: &mut Vec<String>) -> Vec<Comparison> {
    let datasets: BTreeSet<&str> = results.keys().map(|k| k.dataset_id.as_str()).collect();
    let models: BTreeSet<&str> = results.keys().map(|k| k.model_id.as_str()).collect();
    let bundles: BTreeSet<(&str, &str)> = results
        .keys()
        .map(|k| (k.dataset_id.as_str(), k.model_id.as_str()))
        .collect();
    type Subset<'a> = (String, String, Box<dyn Fn(&SettingKey) -> bool + 'a>);
    let mut subsets: Vec<Subset<'_>> = vec![("all".into(), "all".into(), Box::new(|_| true))];
    for &d in &datasets {
        subsets.push(("dataset".into(), d.into(), Box::new(move |k| k.dataset_id == d)));
    }
    for &m in &models {
        subsets.push(("model".into(), m.into(), Box::new(move |k| k.model_id == m)));
    }
    for &(d, m) in &bundles {
        subsets.push((
            "bundle".into(),
            format!("{d}/{m}"),
            Box::new(move |k| k.dataset_id == d && k.model_id == m),
        ));
    }
    let mut out = Vec::new();
    for angle in [CompareOn::Extraction, CompareOn::Interpretation, CompareOn::Prompt] {
        for (kind, name, keep) in &subsets {
            let subset: BTreeMap<SettingKey, f64> = results
                .iter()
                .filter(|(k, _)| keep(k) && angle_filter(angle, k))
                .map(|(k, &v)| (k.clone(), v))
                .collect();
            match copeland_matrix(&subset, angle) {
                Ok(matrix) => {
                    let ranking = copeland_rank(&matrix);
                    out.push(Comparison {
                        angle,
                        subset_kind: kind.clone(),
                        subset: name.clone(),
                        settings: subset.len(),
                        matrix,
                        ranking,
                    });
                }
                Err(e) => notes.push(format!("{angle} on {kind} {name}: {e}")),
            }
        }
    }
    out
}

/// Spearman correlation between simulatability and one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub metric: String,
    pub kind: MetricKind,
    /// against the Copeland score |M| + 1 − rank within each bundle
    pub rho_rank: Option<f64>,
    /// against mean evaluation accuracy
    pub rho_accuracy: Option<f64>,
    pub points: usize,
    pub note: Option<String>,
}

/// One (bundle, extraction method) point of the correlation analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatabilityPoint {
    pub space: SpaceKey,
    pub score: f64,
    pub mean_accuracy: f64,
    pub metrics: MetricVector,
}

/// Pairs every extraction method of every bundle comparison, at its chosen
/// k, with that space's metrics.
pub fn simulatability_points(
    comparisons: &[Comparison],
    results: &BTreeMap<SettingKey, f64>,
    best: &[BestK],
    metrics: &BTreeMap<SpaceKey, MetricVector>,
) -> Vec<SimulatabilityPoint> {
    let mut points = Vec::new();
    for c in comparisons
        .iter()
        .filter(|c| c.angle == CompareOn::Extraction && c.subset_kind == "bundle")
    {
        let m = c.ranking.len();
        for entry in &c.ranking {
            let Some(b) = best
                .iter()
                .find(|b| format!("{}/{}", b.dataset_id, b.model_id) == c.subset && b.method.as_str() == entry.method)
            else {
                continue;
            };
            let space = b.space();
            let Some(mv) = metrics.get(&space) else { continue };
            let accs: Vec<f64> = results
                .iter()
                .filter(|(k, _)| SpaceKey::of(k).as_ref() == Some(&space))
                .map(|(_, &v)| v)
                .collect();
            if accs.is_empty() {
                continue;
            }
            points.push(SimulatabilityPoint {
                space,
                score: (m + 1 - entry.rank) as f64,
                mean_accuracy: mean(&accs),
                metrics: mv.clone(),
            });
        }
    }
    points
}

pub fn correlations(points: &[SimulatabilityPoint]) -> Vec<Correlation> {
    MetricVector::NAMES
        .iter()
        .enumerate()
        .map(|(i, &(name, kind))| {
            let usable: Vec<(&SimulatabilityPoint, f64)> = points
                .iter()
                .filter_map(|p| p.metrics.values()[i].map(|v| (p, v)))
                .collect();
            let values: Vec<f64> = usable.iter().map(|(_, v)| *v).collect();
            let scores: Vec<f64> = usable.iter().map(|(p, _)| p.score).collect();
            let accs: Vec<f64> = usable.iter().map(|(p, _)| p.mean_accuracy).collect();
            let mut notes = Vec::new();
            let mut rho = |ys: &[f64]| match spearman_rho(ys, &values) {
                Ok(r) => Some(r),
                Err(e) => {
                    notes.push(e.to_string());
                    None
                }
            };
            let rho_rank = rho(&scores);
            let rho_accuracy = rho(&accs);
            notes.dedup();
            Correlation {
                metric: name.to_string(),
                kind,
                rho_rank,
                rho_accuracy,
                points: usable.len(),
                note: (!notes.is_empty()).then(|| notes.join("; ")),
            }
        })
        .collect()
}
