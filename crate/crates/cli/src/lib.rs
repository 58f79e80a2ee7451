//! Experiment orchestration: a TOML config names bundles, methods, prompt
//! types, seeds and simulators; stages write content-addressed artifacts
//! under the output directory and can be rerun independently.

pub mod config;
pub mod pipeline;
pub mod rank;
pub mod report;
pub mod store;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use conceptsim::corpus::{generate_label_bank, generate_synthetic_bundle, write_bundle, SyntheticParams};

pub use config::{BundleEntry, ExperimentConfig, SimulatorConfig};
pub use pipeline::{Experiment, SpaceKey, STAGES};
pub use store::StageReport;

pub const LABEL_BANK_FILE: &str = "label_bank.json";

/// Writes a planted synthetic bundle and its label bank to `dir`.
pub fn synthesize(params: &SyntheticParams, dir: &Path) -> Result<()> {
    let synthetic = generate_synthetic_bundle(params)?;
    write_bundle(&synthetic.bundle, dir).with_context(|| format!("writing bundle to {}", dir.display()))?;
    generate_label_bank(&synthetic, params.seed).write(dir.join(LABEL_BANK_FILE))?;
    Ok(())
}

/// Shape of the synthetic sweep written by [`write_demo`].
#[derive(Debug, Clone)]
pub struct DemoSpec {
    pub n: usize,
    pub p: usize,
    /// (dataset name, classes, planted concepts)
    pub datasets: Vec<(String, usize, usize)>,
    pub k_values: Vec<usize>,
}

impl Default for DemoSpec {
    fn default() -> Self {
        Self {
            n: 300,
            p: 32,
            datasets: vec![
                ("planted-a".into(), 3, 6),
                ("planted-b".into(), 4, 8),
                ("planted-c".into(), 2, 4),
            ],
            k_values: vec![3, 5, 10, 20],
        }
    }
}

/// Synthesizes every dataset with a nonnegative (`relu`) and a signed head
/// and writes a config running the full sweep over them.
pub fn write_demo(dir: &Path, spec: &DemoSpec) -> Result<PathBuf> {
    if spec.datasets.is_empty() {
        bail!("demo needs at least one dataset");
    }
    let mut bundles = Vec::new();
    for (d, (name, classes, k_true)) in spec.datasets.iter().enumerate() {
        for (h, (model, nonneg)) in [("relu", true), ("signed", false)].into_iter().enumerate() {
            let rel = PathBuf::from("bundles").join(format!("{name}-{model}"));
            let seed = 1000 + 10 * d as u64 + h as u64;
            synthesize(&SyntheticParams::new(spec.n, spec.p, *classes, *k_true, seed, nonneg), &dir.join(&rel))?;
            bundles.push(BundleEntry {
                dataset: name.clone(),
                model: model.into(),
                path: rel.clone(),
                label_bank: Some(rel.join(LABEL_BANK_FILE)),
            });
        }
    }
    let mut value = toml::Table::new();
    value.insert("output_dir".into(), "runs".into());
    value.insert("k_values".into(), toml::Value::try_from(&spec.k_values)?);
    value.insert("bundles".into(), toml::Value::try_from(&bundles)?);
    let path = dir.join("experiment.toml");
    std::fs::write(&path, toml::to_string_pretty(&value)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
