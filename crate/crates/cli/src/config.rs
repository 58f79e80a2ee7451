//! Declarative experiment configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use conceptsim::concepts::{ExtractionMethod, FitOptions};
use conceptsim::corpus::sha256_hex;
use conceptsim::interpretation::InterpretationMethod;
use conceptsim::simulatability::{
    HttpSimulator, HttpSimulatorConfig, MockMode, MockSimulator, PromptVariant, Simulator,
};
use serde::{Deserialize, Serialize};

/// One (dataset, model) activation bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleEntry {
    pub dataset: String,
    pub model: String,
    pub path: PathBuf,
    /// JSON label bank; settings using o1CA are skipped without one.
    #[serde(default)]
    pub label_bank: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimulatorConfig {
    Mock {
        #[serde(flatten)]
        mode: MockMode,
    },
    Http(HttpSimulatorConfig),
}

impl SimulatorConfig {
    pub fn id(&self) -> String {
        match self {
            SimulatorConfig::Mock { mode } => MockSimulator::new(*mode).id(),
            SimulatorConfig::Http(c) => c.id.clone(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Simulator>> {
        Ok(match self {
            SimulatorConfig::Mock { mode } => Box::new(MockSimulator::new(*mode)),
            SimulatorConfig::Http(c) => Box::new(HttpSimulator::new(c.clone())?),
        })
    }
}

fn default_methods() -> Vec<ExtractionMethod> {
    ExtractionMethod::ALL.to_vec()
}

fn default_k_values() -> Vec<usize> {
    conceptsim::concepts::DEFAULT_K_SWEEP.to_vec()
}

fn default_interpretations() -> Vec<InterpretationMethod> {
    InterpretationMethod::ALL.to_vec()
}

fn default_prompts() -> Vec<PromptVariant> {
    PromptVariant::all()
}

fn default_eval_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_validation_seeds() -> Vec<u64> {
    vec![100, 101]
}

fn default_simulators() -> Vec<SimulatorConfig> {
    vec![SimulatorConfig::Mock {
        mode: MockMode::Lexical { seed: 0 },
    }]
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub bundles: Vec<BundleEntry>,
    #[serde(default = "default_methods")]
    pub methods: Vec<ExtractionMethod>,
    /// Candidate numbers of concepts; values above a bundle's width are dropped.
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_interpretations")]
    pub interpretations: Vec<InterpretationMethod>,
    #[serde(default = "default_prompts")]
    pub prompts: Vec<PromptVariant>,
    #[serde(default = "default_eval_seeds")]
    pub eval_seeds: Vec<u64>,
    /// Seeds used only to choose k.
    #[serde(default = "default_validation_seeds")]
    pub validation_seeds: Vec<u64>,
    /// Seed for fitting concept spaces.
    #[serde(default)]
    pub fit_seed: u64,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default = "default_simulators")]
    pub simulators: Vec<SimulatorConfig>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

impl ExperimentConfig {
    /// Parses a TOML file and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for b in &mut self.bundles {
            fix(&mut b.path);
            if let Some(bank) = &mut b.label_bank {
                fix(bank);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bundles.is_empty() {
            bail!("config lists no bundles");
        }
        let mut seen = BTreeSet::new();
        for b in &self.bundles {
            if !seen.insert((&b.dataset, &b.model)) {
                bail!("bundle ({}, {}) is listed twice", b.dataset, b.model);
            }
            if !b.path.join(conceptsim::corpus::MANIFEST_FILE).is_file() {
                bail!("bundle ({}, {}): no bundle at {}", b.dataset, b.model, b.path.display());
            }
            if let Some(bank) = &b.label_bank {
                if !bank.is_file() {
                    bail!("bundle ({}, {}): label bank {} does not exist", b.dataset, b.model, bank.display());
                }
            }
        }
        for (name, empty) in [
            ("methods", self.methods.is_empty()),
            ("k_values", self.k_values.is_empty()),
            ("prompts", self.prompts.is_empty()),
            ("eval_seeds", self.eval_seeds.is_empty()),
            ("simulators", self.simulators.is_empty()),
        ] {
            if empty {
                bail!("`{name}` must not be empty");
            }
        }
        if self.prompts.iter().any(|p| p.kind.is_explained()) && self.interpretations.is_empty() {
            bail!("explained prompt types need at least one interpretation method");
        }
        if self.k_values.contains(&0) {
            bail!("k_values must be positive");
        }
        let eval: BTreeSet<u64> = self.eval_seeds.iter().copied().collect();
        if eval.len() != self.eval_seeds.len() {
            bail!("eval_seeds contains duplicates");
        }
        let overlap: Vec<u64> = self.validation_seeds.iter().filter(|s| eval.contains(s)).copied().collect();
        if !overlap.is_empty() {
            bail!("seeds {overlap:?} are both evaluation and validation seeds");
        }
        let ids: BTreeSet<String> = self.simulators.iter().map(|s| s.id()).collect();
        if ids.len() != self.simulators.len() {
            bail!("simulator ids must be unique");
        }
        if self.parallelism == 0 {
            bail!("parallelism must be at least 1");
        }
        Ok(())
    }

    /// Hash of every field that can change an output; parallelism is left out.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("parallelism");
        }
        sha256_hex(&serde_json::to_vec(&value).expect("value serializes"))
    }

    pub fn all_seeds(&self) -> Vec<u64> {
        self.eval_seeds.iter().chain(&self.validation_seeds).copied().collect()
    }

    pub fn is_validation_seed(&self, seed: u64) -> bool {
        self.validation_seeds.contains(&seed)
    }
}
