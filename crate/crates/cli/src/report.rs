//! The rank and report stages: aggregate responses into rankings and write
//! the CSV tables and plain-text summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use conceptsim::analysis::CompareOn;
use conceptsim::corpus::SettingKey;
use conceptsim::metrics::MetricVector;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::pipeline::{Experiment, SpaceKey};
use crate::rank::{
    compare_all, correlations, evaluation_results, select_best_k, simulatability_points, BestK, Comparison,
    Correlation, SimulatabilityPoint,
};
use crate::store::{hash_value, read_envelope, store, write_atomic, StageReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub best_k: Vec<BestK>,
    pub comparisons: Vec<Comparison>,
    pub evaluation_settings: usize,
    pub excluded: Vec<(String, String)>,
    pub notes: Vec<String>,
}

impl RankSummary {
    pub fn comparison(&self, angle: CompareOn, subset_kind: &str, subset: &str) -> Option<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.angle == angle && c.subset_kind == subset_kind && c.subset == subset)
    }
}

/// Writes a CSV whose first line records the config hash as a comment.
pub fn write_csv(path: &Path, config_hash: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(format!("# config_hash={config_hash}\n").into_bytes());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("flushing csv: {e}"))?;
    write_atomic(path, &bytes)
}

/// Reads a CSV written by `write_csv`, returning header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn strings<const N: usize>(xs: [&str; N]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn setting_fields(key: &SettingKey) -> Vec<String> {
    vec![
        key.dataset_id.clone(),
        key.model_id.clone(),
        key.seed.to_string(),
        key.extraction_name(),
        key.interpretation_name(),
        key.prompt.to_string(),
        key.simulator_id.clone(),
        key.k.to_string(),
    ]
}

const SETTING_HEADER: [&str; 8] = [
    "dataset", "model", "seed", "extraction", "interpretation", "prompt", "simulator", "k",
];

impl Experiment {
    fn rank_path(&self) -> PathBuf {
        self.out().join("rank").join("rankings.json")
    }

    pub fn load_rank_summary(&self) -> Result<RankSummary> {
        let path = self.rank_path();
        if !path.is_file() {
            return Err(anyhow!("no rankings at {}; run `conceptsim rank` first", path.display()));
        }
        Ok(read_envelope::<RankSummary>(&path)?.payload)
    }

    pub fn rank(&self) -> Result<StageReport> {
        let mut report = StageReport::new("rank");
        let (results, excluded) = self.collect_results()?;
        if !excluded.is_empty() {
            log::warn!("{} settings have no usable response and are excluded", excluded.len());
        }
        let dir = self.out().join("rank");
        let best = select_best_k(&results, &self.config.validation_seeds);
        let eval = evaluation_results(&results, &best, &self.config.eval_seeds);
        let mut notes = Vec::new();
        let comparisons = compare_all(&eval, &mut notes);
        let input: Vec<(String, f64)> = results.iter().map(|(k, &v)| (k.slug(), v)).collect();
        let input_hash = hash_value(&json!({ "stage": "rank", "results": input }));
        let summary = RankSummary {
            best_k: best.clone(),
            comparisons,
            evaluation_settings: eval.len(),
            excluded: excluded.iter().map(|(k, r)| (k.slug(), r.clone())).collect(),
            notes,
        };
        let outcome = store(&self.rank_path(), "rank", json!({ "stage": "rank" }), &self.config_hash, &input_hash, || {
            Ok(summary.clone())
        })?;
        report.count(outcome);

        let mut header = strings(["dataset", "model", "method", "k", "mean_validation_accuracy", "selected"]);
        let mut rows = Vec::new();
        for b in &best {
            for (&k, &m) in &b.candidates {
                rows.push(vec![
                    b.dataset_id.clone(),
                    b.model_id.clone(),
                    b.method.to_string(),
                    k.to_string(),
                    format!("{m:.6}"),
                    (k == b.k).to_string(),
                ]);
            }
        }
        write_csv(&dir.join("validation.csv"), &self.config_hash, &header, &rows)?;

        header = SETTING_HEADER.iter().map(|s| s.to_string()).collect();
        header.push("accuracy".into());
        let rows: Vec<Vec<String>> = eval
            .iter()
            .map(|(k, v)| {
                let mut r = setting_fields(k);
                r.push(format!("{v:.4}"));
                r
            })
            .collect();
        write_csv(&dir.join("results.csv"), &self.config_hash, &header, &rows)?;

        header = SETTING_HEADER.iter().map(|s| s.to_string()).collect();
        header.push("reason".into());
        let rows: Vec<Vec<String>> = excluded
            .iter()
            .map(|(k, reason)| {
                let mut r = setting_fields(k);
                r.push(reason.clone());
                r
            })
            .collect();
        write_csv(&dir.join("exclusions.csv"), &self.config_hash, &header, &rows)?;
        Ok(report)
    }

    pub fn report(&self) -> Result<StageReport> {
        let mut report = StageReport::new("report");
        let summary = self.load_rank_summary()?;
        let metrics = self.collect_metrics()?;
        let (results, _) = self.collect_results()?;
        let eval = evaluation_results(&results, &summary.best_k, &self.config.eval_seeds);
        let points = simulatability_points(&summary.comparisons, &eval, &summary.best_k, &metrics);
        let corr = correlations(&points);
        let dir = self.out().join("report");
        let h = &self.config_hash;

        for (name, angles) in [
            ("ranking_table.csv", vec![CompareOn::Extraction, CompareOn::Interpretation]),
            ("ranking_prompts.csv", vec![CompareOn::Prompt]),
        ] {
            let (header, rows) = ranking_table(&summary, &angles);
            write_csv(&dir.join(name), h, &header, &rows)?;
            report.written += 1;
        }
        for c in summary.comparisons.iter().filter(|c| c.subset_kind == "all") {
            for (what, grid) in grids(c) {
                write_csv(&dir.join(format!("{}_{what}.csv", c.angle)), h, &grid.0, &grid.1)?;
                report.written += 1;
            }
        }
        let (header, rows) = metrics_table(&metrics, &summary.best_k);
        write_csv(&dir.join("metrics.csv"), h, &header, &rows)?;
        let header = strings(["metric", "kind", "rho_rank", "rho_accuracy", "points", "note"]);
        let rows: Vec<Vec<String>> = corr
            .iter()
            .map(|c| {
                vec![
                    c.metric.clone(),
                    format!("{:?}", c.kind).to_lowercase(),
                    fmt_opt(c.rho_rank),
                    fmt_opt(c.rho_accuracy),
                    c.points.to_string(),
                    c.note.clone().unwrap_or_default(),
                ]
            })
            .collect();
        write_csv(&dir.join("correlations.csv"), h, &header, &rows)?;
        let text = summary_text(self, &summary, &corr, &points);
        write_atomic(&dir.join("summary.txt"), text.as_bytes())?;
        report.written += 3;
        Ok(report)
    }
}

/// Tab.-2 layout: one row per subset of settings, one column per method.
pub fn ranking_table(summary: &RankSummary, angles: &[CompareOn]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut columns: Vec<(CompareOn, String)> = Vec::new();
    for &angle in angles {
        let mut methods: Vec<(usize, String)> = match summary.comparison(angle, "all", "all") {
            Some(c) => c.ranking.iter().map(|r| (r.rank, r.method.clone())).collect(),
            None => Vec::new(),
        };
        let known: BTreeSet<String> = methods.iter().map(|(_, m)| m.clone()).collect();
        for c in summary.comparisons.iter().filter(|c| c.angle == angle) {
            for r in &c.ranking {
                if !known.contains(&r.method) && !methods.iter().any(|(_, m)| m == &r.method) {
                    methods.push((usize::MAX, r.method.clone()));
                }
            }
        }
        methods.sort();
        columns.extend(methods.into_iter().map(|(_, m)| (angle, m)));
    }
    let mut header = strings(["subset_kind", "subset"]);
    header.extend(columns.iter().map(|(a, m)| format!("{a}:{m}")));
    let mut subsets: Vec<(String, String)> = Vec::new();
    for kind in ["dataset", "model", "bundle", "all"] {
        for c in summary.comparisons.iter().filter(|c| c.subset_kind == kind) {
            let s = (kind.to_string(), c.subset.clone());
            if !subsets.contains(&s) {
                subsets.push(s);
            }
        }
    }
    let rows = subsets
        .into_iter()
        .map(|(kind, subset)| {
            let mut row = vec![kind.clone(), subset.clone()];
            for (angle, method) in &columns {
                let cell = summary
                    .comparison(*angle, &kind, &subset)
                    .and_then(|c| c.rank_of(method))
                    .map_or_else(|| "N/A".to_string(), |r| r.to_string());
                row.push(cell);
            }
            row
        })
        .collect();
    (header, rows)
}

type Grid = (Vec<String>, Vec<Vec<String>>);

/// Percent, mean-difference and p-value matrices with methods ordered by rank.
pub fn grids(c: &Comparison) -> Vec<(&'static str, Grid)> {
    let mut order: Vec<usize> = (0..c.matrix.methods.len()).collect();
    order.sort_by_key(|&i| (c.ranking[i].rank, c.matrix.methods[i].clone()));
    let mut header = vec!["method".to_string()];
    header.extend(order.iter().map(|&i| c.matrix.methods[i].clone()));
    let grid = |cell: &dyn Fn(usize, usize) -> String| -> Grid {
        let rows = order
            .iter()
            .map(|&i| {
                let mut row = vec![format!("{} (rank {})", c.matrix.methods[i], c.ranking[i].rank)];
                row.extend(order.iter().map(|&j| cell(i, j)));
                row
            })
            .collect();
        (header.clone(), rows)
    };
    let m = &c.matrix;
    vec![
        ("percent", grid(&|i, j| m.percent[i][j].map(|v| format!("{v:.1}")).unwrap_or_default())),
        (
            "diff",
            grid(&|i, j| match m.diff_mean[i][j] {
                Some(v) if i != j => format!("{v:+.4}{}", if m.significant[i][j] { "*" } else { "" }),
                _ => String::new(),
            }),
        ),
        ("pvalue", grid(&|i, j| fmt_opt(m.p_value[i][j]))),
    ]
}

fn metrics_table(metrics: &BTreeMap<SpaceKey, MetricVector>, best: &[BestK]) -> Grid {
    let mut header = strings(["dataset", "model", "method", "k", "selected"]);
    header.extend(MetricVector::NAMES.iter().map(|(n, _)| n.to_string()));
    let chosen: BTreeSet<SpaceKey> = best.iter().map(BestK::space).collect();
    let rows = metrics
        .iter()
        .map(|(key, mv)| {
            let mut row = vec![
                key.dataset_id.clone(),
                key.model_id.clone(),
                key.method.to_string(),
                key.k.to_string(),
                chosen.contains(key).to_string(),
            ];
            row.extend(mv.values().iter().map(|v| fmt_opt(*v)));
            row
        })
        .collect();
    (header, rows)
}

fn summary_text(
    exp: &Experiment,
    summary: &RankSummary,
    corr: &[Correlation],
    points: &[SimulatabilityPoint],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "config_hash: {}", exp.config_hash);
    let _ = writeln!(
        s,
        "evaluation settings: {}, excluded settings: {}",
        summary.evaluation_settings,
        summary.excluded.len()
    );
    let _ = writeln!(s, "\nchosen number of concepts (validation seeds {:?}):", exp.config.validation_seeds);
    for b in &summary.best_k {
        let _ = writeln!(
            s,
            "  {}/{} {}: k={} ({:.3})",
            b.dataset_id, b.model_id, b.method, b.k, b.candidates[&b.k]
        );
    }
    for angle in [CompareOn::Extraction, CompareOn::Interpretation, CompareOn::Prompt] {
        let Some(c) = summary.comparison(angle, "all", "all") else { continue };
        let _ = writeln!(s, "\n{angle} ranking over {} settings:", c.settings);
        let mut ranking = c.ranking.clone();
        ranking.sort_by_key(|r| (r.rank, r.method.clone()));
        for r in ranking {
            let _ = writeln!(s, "  {:>2}  {}", r.rank, r.method);
        }
    }
    let _ = writeln!(s, "\nSpearman correlation with simulatability ({} points):", points.len());
    for c in corr {
        let _ = writeln!(s, "  {:<18} {:>9}  {}", c.metric, fmt_opt(c.rho_rank), c.note.clone().unwrap_or_default());
    }
    if !summary.notes.is_empty() {
        let _ = writeln!(s, "\nnotes:");
        for n in &summary.notes {
            let _ = writeln!(s, "  {n}");
        }
    }
    s
}
