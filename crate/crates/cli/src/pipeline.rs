//! The artifact-producing stages: extract, interpret, prompt, simulate and
//! metrics. Each stage reads the previous stage's files, so any stage can be
//! rerun on its own.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{anyhow, bail, Context, Result};
use conceptsim::attribution::{global_importance, local_importance, ImportanceReport};
use conceptsim::concepts::{
    fit_concept_space_with_codes, k_sweep, read_space, write_space, ConceptSpace, ExtractionMethod, FitMeta,
};
use conceptsim::corpus::{read_bundle, sha256_hex, ActivationBundle, ConceptLabelBank, SettingKey, MANIFEST_FILE};
use conceptsim::interpretation::{interpret, ConceptDescription, InterpretationMethod};
use conceptsim::metrics::{metric_vector, MetricVector};
use conceptsim::simulatability::{
    build_prompt, run_simulator, select_samples, ExplanationInputs, PromptBundle, SimulationResult,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{BundleEntry, ExperimentConfig};
use crate::store::{hash_value, load_current, read_envelope, store, write_atomic, Outcome, StageReport};

/// A loaded bundle with the hashes that identify its contents.
#[derive(Debug)]
pub struct LoadedBundle {
    pub entry: BundleEntry,
    pub bundle: ActivationBundle,
    pub bundle_hash: String,
    pub bank: Option<ConceptLabelBank>,
    pub bank_hash: Option<String>,
}

/// Identifies one fitted concept space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpaceKey {
    pub dataset_id: String,
    pub model_id: String,
    pub method: ExtractionMethod,
    pub k: usize,
}

impl SpaceKey {
    pub fn of(setting: &SettingKey) -> Option<SpaceKey> {
        setting.extraction.map(|method| SpaceKey {
            dataset_id: setting.dataset_id.clone(),
            model_id: setting.model_id.clone(),
            method,
            k: setting.k,
        })
    }

    pub fn slug(&self) -> String {
        let clean = |s: &str| -> String {
            s.chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
                .collect()
        };
        format!("{}__{}__{}__k{}", clean(&self.dataset_id), clean(&self.model_id), self.method, self.k)
    }
}

impl fmt::Display for SpaceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.slug())
    }
}

/// One setting of the sweep together with the bundle it runs on.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Planned {
    pub bundle: usize,
    pub key: SettingKey,
}

/// Stored next to each space directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceRecord {
    pub dir: String,
    pub fit_meta: FitMeta,
}

pub const STAGES: [&str; 7] = ["extract", "interpret", "prompt", "simulate", "metrics", "rank", "report"];

pub struct Experiment {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub bundles: Vec<LoadedBundle>,
    pool: rayon::ThreadPool,
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

fn count_outcomes(report: &mut StageReport, results: Vec<(String, Result<Outcome>)>) {
    for (what, r) in results {
        match r {
            Ok(o) => report.count(o),
            Err(e) => {
                log::error!("{}: {what}: {e:#}", report.stage);
                report.failed.push(format!("{what}: {e:#}"));
            }
        }
    }
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mut bundles = Vec::with_capacity(config.bundles.len());
        for entry in &config.bundles {
            let bundle = read_bundle(&entry.path)
                .with_context(|| format!("loading bundle ({}, {})", entry.dataset, entry.model))?;
            let bundle_hash = file_hash(&entry.path.join(MANIFEST_FILE))?;
            let (bank, bank_hash) = match &entry.label_bank {
                Some(path) => {
                    let bank = ConceptLabelBank::read(path)?;
                    bank.validate(bundle.p())
                        .with_context(|| format!("label bank {}", path.display()))?;
                    (Some(bank), Some(file_hash(path)?))
                }
                None => (None, None),
            };
            bundles.push(LoadedBundle {
                entry: entry.clone(),
                bundle,
                bundle_hash,
                bank,
                bank_hash,
            });
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .context("building worker pool")?;
        Ok(Self {
            config_hash: config.hash(),
            config,
            bundles,
            pool,
        })
    }

    pub fn out(&self) -> &Path {
        &self.config.output_dir
    }

    fn bundle_index(&self, dataset: &str, model: &str) -> Option<usize> {
        self.bundles
            .iter()
            .position(|b| b.entry.dataset == dataset && b.entry.model == model)
    }

    /// Whether `method` can be fitted on bundle `b`, with the reason if not.
    pub fn method_available(&self, b: usize, method: ExtractionMethod) -> Result<(), String> {
        if method == ExtractionMethod::Nmf && !self.bundles[b].bundle.nonneg {
            return Err("NMF needs nonnegative embeddings".into());
        }
        Ok(())
    }

    pub fn interpretation_available(&self, b: usize, interp: InterpretationMethod) -> Result<(), String> {
        if interp == InterpretationMethod::O1ca && self.bundles[b].bank.is_none() {
            return Err("o1CA needs a label bank".into());
        }
        Ok(())
    }

    /// Concept spaces to fit, in a fixed order.
    pub fn spaces(&self) -> Vec<(usize, SpaceKey)> {
        let mut out = Vec::new();
        for (b, lb) in self.bundles.iter().enumerate() {
            let p = lb.bundle.p();
            for &method in &self.config.methods {
                if self.method_available(b, method).is_err() {
                    continue;
                }
                let ks = if method == ExtractionMethod::NoProjection {
                    vec![p]
                } else {
                    k_sweep(&self.config.k_values, p)
                };
                for k in ks {
                    out.push((
                        b,
                        SpaceKey {
                            dataset_id: lb.entry.dataset.clone(),
                            model_id: lb.entry.model.clone(),
                            method,
                            k,
                        },
                    ));
                }
            }
        }
        out
    }

    fn interpretations_for(&self, b: usize) -> Vec<InterpretationMethod> {
        self.config
            .interpretations
            .iter()
            .copied()
            .filter(|&i| self.interpretation_available(b, i).is_ok())
            .collect()
    }

    /// Every setting of the sweep over evaluation and validation seeds.
    pub fn settings(&self) -> Vec<Planned> {
        let spaces = self.spaces();
        let mut out = Vec::new();
        for (b, lb) in self.bundles.iter().enumerate() {
            let interps = self.interpretations_for(b);
            for seed in self.config.all_seeds() {
                for sim in &self.config.simulators {
                    for &variant in &self.config.prompts {
                        let base = SettingKey {
                            dataset_id: lb.entry.dataset.clone(),
                            model_id: lb.entry.model.clone(),
                            seed,
                            extraction: None,
                            interpretation: None,
                            prompt: variant,
                            simulator_id: sim.id(),
                            k: 0,
                        };
                        if !variant.kind.is_explained() {
                            out.push(Planned { bundle: b, key: base });
                            continue;
                        }
                        for (_, space) in spaces.iter().filter(|(sb, _)| *sb == b) {
                            for &interp in &interps {
                                out.push(Planned {
                                    bundle: b,
                                    key: SettingKey {
                                        extraction: Some(space.method),
                                        interpretation: Some(interp),
                                        k: space.k,
                                        ..base.clone()
                                    },
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn space_dir(&self, key: &SpaceKey) -> PathBuf {
        self.out().join("spaces").join(key.slug())
    }

    fn space_record_path(&self, key: &SpaceKey) -> PathBuf {
        self.out().join("spaces").join(format!("{}.json", key.slug()))
    }

    pub fn interpretation_path(&self, key: &SpaceKey, interp: InterpretationMethod) -> PathBuf {
        self.out()
            .join("interpretations")
            .join(format!("{}__{interp}.json", key.slug()))
    }

    pub fn prompt_path(&self, key: &SettingKey) -> PathBuf {
        self.out().join("prompts").join(format!("{}.json", key.slug()))
    }

    pub fn response_path(&self, key: &SettingKey) -> PathBuf {
        self.out().join("responses").join(format!("{}.json", key.slug()))
    }

    pub fn metrics_path(&self, key: &SpaceKey) -> PathBuf {
        self.out().join("metrics").join(format!("{}.json", key.slug()))
    }

    pub fn failures_path(&self) -> PathBuf {
        self.out().join("simulate_failures.json")
    }

    pub fn space_hash(&self, b: usize, key: &SpaceKey) -> String {
        hash_value(&json!({
            "stage": "extract",
            "bundle": self.bundles[b].bundle_hash,
            "space": key,
            "fit_seed": self.config.fit_seed,
            "fit": self.config.fit,
        }))
    }

    pub fn interpretation_hash(&self, b: usize, key: &SpaceKey, interp: InterpretationMethod) -> String {
        let bank = match interp {
            InterpretationMethod::O1ca => self.bundles[b].bank_hash.clone(),
            InterpretationMethod::Cmaw => None,
        };
        hash_value(&json!({
            "stage": "interpret",
            "space": self.space_hash(b, key),
            "method": interp,
            "bank": bank,
        }))
    }

    pub fn prompt_hash(&self, b: usize, key: &SettingKey) -> String {
        let space = SpaceKey::of(key).map(|s| {
            let interp = key.interpretation.map(|i| self.interpretation_hash(b, &s, i));
            json!({ "space": self.space_hash(b, &s), "interpretation": interp })
        });
        hash_value(&json!({
            "stage": "prompt",
            "bundle": self.bundles[b].bundle_hash,
            "setting": key,
            "explanation": space,
        }))
    }

    pub fn response_hash(&self, b: usize, key: &SettingKey) -> Result<String> {
        let sim = self
            .config
            .simulators
            .iter()
            .find(|s| s.id() == key.simulator_id)
            .ok_or_else(|| anyhow!("no simulator `{}` in the config", key.simulator_id))?;
        Ok(hash_value(&json!({
            "stage": "simulate",
            "prompt": self.prompt_hash(b, key),
            "simulator": sim,
        })))
    }

    pub fn metrics_hash(&self, b: usize, key: &SpaceKey) -> String {
        hash_value(&json!({ "stage": "metrics", "space": self.space_hash(b, key) }))
    }

    /// Loads a fitted space, failing with the stage that must run first.
    pub fn load_space(&self, b: usize, key: &SpaceKey) -> Result<ConceptSpace> {
        let record = self.space_record_path(key);
        if load_current::<SpaceRecord>(&record, &self.space_hash(b, key)).is_none() {
            bail!("missing or outdated concept space {key}; run `conceptsim extract` first");
        }
        read_space(self.space_dir(key)).with_context(|| format!("reading concept space {key}"))
    }

    pub fn load_descriptions(
        &self,
        b: usize,
        key: &SpaceKey,
        interp: InterpretationMethod,
    ) -> Result<Vec<ConceptDescription>> {
        let path = self.interpretation_path(key, interp);
        load_current::<Vec<ConceptDescription>>(&path, &self.interpretation_hash(b, key, interp))
            .map(|env| env.payload)
            .ok_or_else(|| anyhow!("missing or outdated {interp} interpretation of {key}; run `conceptsim interpret` first"))
    }

    pub fn extract(&self) -> Result<StageReport> {
        let mut report = StageReport::new("extract");
        let results: Vec<(String, Result<Outcome>)> = self.pool.install(|| {
            self.spaces()
                .par_iter()
                .map(|(b, key)| (key.slug(), self.extract_one(*b, key)))
                .collect()
        });
        count_outcomes(&mut report, results);
        Ok(report)
    }

    fn extract_one(&self, b: usize, key: &SpaceKey) -> Result<Outcome> {
        let record = self.space_record_path(key);
        let dir = self.space_dir(key);
        if !dir.join(MANIFEST_FILE).is_file() && record.exists() {
            fs::remove_file(&record).with_context(|| format!("removing {}", record.display()))?;
        }
        store(
            &record,
            "extract",
            json!(key),
            &self.config_hash,
            &self.space_hash(b, key),
            || {
                let bundle = &self.bundles[b].bundle;
                let fitted = fit_concept_space_with_codes(bundle, key.method, key.k, self.config.fit_seed, &self.config.fit)?;
                write_space(&fitted.space, &dir)?;
                Ok(SpaceRecord {
                    dir: key.slug(),
                    fit_meta: fitted.space.fit_meta,
                })
            },
        )
    }

    pub fn interpret(&self) -> Result<StageReport> {
        let mut report = StageReport::new("interpret");
        let jobs: Vec<(usize, SpaceKey, InterpretationMethod)> = self
            .spaces()
            .into_iter()
            .flat_map(|(b, key)| {
                self.interpretations_for(b)
                    .into_iter()
                    .map(move |i| (b, key.clone(), i))
            })
            .collect();
        let results: Vec<(String, Result<Outcome>)> = self.pool.install(|| {
            jobs.par_iter()
                .map(|(b, key, interp)| {
                    let path = self.interpretation_path(key, *interp);
                    let r = store(
                        &path,
                        "interpret",
                        json!({ "space": key, "interpretation": interp }),
                        &self.config_hash,
                        &self.interpretation_hash(*b, key, *interp),
                        || {
                            let space = self.load_space(*b, key)?;
                            let lb = &self.bundles[*b];
                            Ok(interpret(*interp, &space, &lb.bundle, lb.bank.as_ref())?)
                        },
                    );
                    (format!("{key}__{interp}"), r)
                })
                .collect()
        });
        count_outcomes(&mut report, results);
        Ok(report)
    }

    pub fn prompt(&self) -> Result<StageReport> {
        let mut report = StageReport::new("prompt");
        let mut groups: BTreeMap<(usize, Option<SpaceKey>), Vec<SettingKey>> = BTreeMap::new();
        for p in self.settings() {
            groups.entry((p.bundle, SpaceKey::of(&p.key))).or_default().push(p.key);
        }
        let groups: Vec<_> = groups.into_iter().collect();
        let results: Vec<Vec<(String, Result<Outcome>)>> = self.pool.install(|| {
            groups
                .par_iter()
                .map(|((b, space), keys)| self.prompt_group(*b, space.as_ref(), keys))
                .collect()
        });
        count_outcomes(&mut report, results.into_iter().flatten().collect());
        Ok(report)
    }

    /// Prompts sharing one bundle and concept space; importances are
    /// computed once and only if some prompt is out of date.
    fn prompt_group(&self, b: usize, space: Option<&SpaceKey>, keys: &[SettingKey]) -> Vec<(String, Result<Outcome>)> {
        let lb = &self.bundles[b];
        let pending: Vec<&SettingKey> = keys
            .iter()
            .filter(|k| load_current::<PromptBundle>(&self.prompt_path(k), &self.prompt_hash(b, k)).is_none())
            .collect();
        let mut explanation = None;
        if let (Some(space_key), false) = (space, pending.is_empty()) {
            let needs_local = pending.iter().any(|k| k.prompt.kind.has_local());
            match self.explanation(b, space_key, needs_local) {
                Ok(e) => explanation = Some(e),
                Err(e) => {
                    let msg = format!("{e:#}");
                    return keys.iter().map(|k| (k.slug(), Err(anyhow!("{msg}")))).collect();
                }
            }
        }
        let mut descriptions: BTreeMap<InterpretationMethod, Result<Vec<ConceptDescription>, String>> = BTreeMap::new();
        keys.iter()
            .map(|key| {
                let r = store(
                    &self.prompt_path(key),
                    "prompt",
                    json!(key),
                    &self.config_hash,
                    &self.prompt_hash(b, key),
                    || {
                        let split = select_samples(&lb.bundle, key.seed)?;
                        let mut inputs = ExplanationInputs::default();
                        let desc;
                        if let (Some(space_key), Some(interp), Some((report, local))) =
                            (space, key.interpretation, explanation.as_ref())
                        {
                            desc = descriptions
                                .entry(interp)
                                .or_insert_with(|| {
                                    self.load_descriptions(b, space_key, interp).map_err(|e| format!("{e:#}"))
                                })
                                .clone()
                                .map_err(|e| anyhow!(e))?;
                            inputs.global = Some(report);
                            inputs.descriptions = Some(&desc);
                            inputs.local = local.as_ref();
                        }
                        Ok(build_prompt(key, &lb.bundle, &split, inputs)?)
                    },
                );
                (key.slug(), r)
            })
            .collect()
    }

    fn explanation(
        &self,
        b: usize,
        key: &SpaceKey,
        needs_local: bool,
    ) -> Result<(ImportanceReport, Option<ndarray::Array2<f64>>)> {
        let bundle = &self.bundles[b].bundle;
        let space = self.load_space(b, key)?;
        let codes = space.encode(bundle.activations.view())?;
        let global = global_importance(&space, bundle, codes.view())?;
        let report = ImportanceReport::build(global, &bundle.class_names)?;
        let local = if needs_local {
            Some(local_importance(&space, bundle, codes.view())?.normalized)
        } else {
            None
        };
        Ok((report, local))
    }

    pub fn simulate(&self) -> Result<StageReport> {
        let mut report = StageReport::new("simulate");
        let mut simulators = BTreeMap::new();
        for s in &self.config.simulators {
            simulators.insert(s.id(), s.build()?);
        }
        let settings = self.settings();
        let failures = Mutex::new(BTreeMap::new());
        let results: Vec<(String, Result<Outcome>)> = self.pool.install(|| {
            settings
                .par_iter()
                .map(|p| {
                    let r = self.simulate_one(p, &simulators);
                    if let Err(e) = &r {
                        failures.lock().unwrap().insert(p.key.slug(), format!("{e:#}"));
                    }
                    (p.key.slug(), r)
                })
                .collect()
        });
        let failures = failures.into_inner().unwrap();
        let text = serde_json::to_string_pretty(&json!({
            "config_hash": self.config_hash,
            "failures": failures,
        }))?;
        write_atomic(&self.failures_path(), text.as_bytes())?;
        count_outcomes(&mut report, results);
        Ok(report)
    }

    fn simulate_one(
        &self,
        p: &Planned,
        simulators: &BTreeMap<String, Box<dyn conceptsim::simulatability::Simulator>>,
    ) -> Result<Outcome> {
        let input_hash = self.response_hash(p.bundle, &p.key)?;
        store(
            &self.response_path(&p.key),
            "simulate",
            json!(p.key),
            &self.config_hash,
            &input_hash,
            || {
                let prompt_path = self.prompt_path(&p.key);
                let prompt = load_current::<PromptBundle>(&prompt_path, &self.prompt_hash(p.bundle, &p.key))
                    .ok_or_else(|| {
                        anyhow!("missing or outdated prompt {}; run `conceptsim prompt` first", p.key.slug())
                    })?
                    .payload;
                let sim = &simulators[&p.key.simulator_id];
                Ok(run_simulator(&prompt, sim.as_ref())?)
            },
        )
    }

    pub fn metrics(&self) -> Result<StageReport> {
        let mut report = StageReport::new("metrics");
        let results: Vec<(String, Result<Outcome>)> = self.pool.install(|| {
            self.spaces()
                .par_iter()
                .map(|(b, key)| {
                    let r = store(
                        &self.metrics_path(key),
                        "metrics",
                        json!(key),
                        &self.config_hash,
                        &self.metrics_hash(*b, key),
                        || {
                            let bundle = &self.bundles[*b].bundle;
                            let space = self.load_space(*b, key)?;
                            let codes = space.encode(bundle.activations.view())?;
                            let global = global_importance(&space, bundle, codes.view())?;
                            let report = ImportanceReport::build(global, &bundle.class_names)?;
                            Ok(metric_vector(&space, bundle, codes.view(), &report)?)
                        },
                    );
                    (key.slug(), r)
                })
                .collect()
        });
        count_outcomes(&mut report, results);
        Ok(report)
    }

    /// Accuracies of every planned setting with a current response, and the
    /// settings left out with the reason.
    pub fn collect_results(&self) -> Result<(BTreeMap<SettingKey, f64>, Vec<(SettingKey, String)>)> {
        let failures: BTreeMap<String, String> = fs::read_to_string(self.failures_path())
            .ok()
            .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
            .and_then(|v| serde_json::from_value(v["failures"].clone()).ok())
            .unwrap_or_default();
        let mut results = BTreeMap::new();
        let mut excluded = Vec::new();
        for p in self.settings() {
            let hash = self.response_hash(p.bundle, &p.key)?;
            match load_current::<SimulationResult>(&self.response_path(&p.key), &hash) {
                Some(env) => {
                    results.insert(p.key, env.payload.accuracy);
                }
                None => {
                    let reason = failures
                        .get(&p.key.slug())
                        .cloned()
                        .unwrap_or_else(|| "no current simulator response".into());
                    excluded.push((p.key, reason));
                }
            }
        }
        Ok((results, excluded))
    }

    /// Metric vectors of every space with current metrics.
    pub fn collect_metrics(&self) -> Result<BTreeMap<SpaceKey, MetricVector>> {
        let mut out = BTreeMap::new();
        for (b, key) in self.spaces() {
            let path = self.metrics_path(&key);
            if let Some(env) = load_current::<MetricVector>(&path, &self.metrics_hash(b, &key)) {
                out.insert(key, env.payload);
            } else if path.exists() {
                let env = read_envelope::<serde_json::Value>(&path)?;
                log::warn!("metrics for {key} are outdated (input {})", env.input_hash);
            }
        }
        Ok(out)
    }

    pub fn bundle_of(&self, key: &SettingKey) -> Option<usize> {
        self.bundle_index(&key.dataset_id, &key.model_id)
    }

    /// Number of artifacts each stage would (re)compute.
    pub fn dry_run(&self) -> Result<Vec<(String, usize, usize)>> {
        let spaces = self.spaces();
        let settings = self.settings();
        let stale = |path: PathBuf, hash: String| load_current::<serde_json::Value>(&path, &hash).is_none();
        let mut rows = Vec::new();
        let n = spaces
            .iter()
            .filter(|(b, k)| stale(self.space_record_path(k), self.space_hash(*b, k)))
            .count();
        rows.push(("extract".to_string(), spaces.len(), n));
        let jobs: Vec<_> = spaces
            .iter()
            .flat_map(|(b, k)| self.interpretations_for(*b).into_iter().map(move |i| (*b, k, i)))
            .collect();
        let n = jobs
            .iter()
            .filter(|(b, k, i)| stale(self.interpretation_path(k, *i), self.interpretation_hash(*b, k, *i)))
            .count();
        rows.push(("interpret".to_string(), jobs.len(), n));
        let n = settings
            .iter()
            .filter(|p| stale(self.prompt_path(&p.key), self.prompt_hash(p.bundle, &p.key)))
            .count();
        rows.push(("prompt".to_string(), settings.len(), n));
        let mut n = 0;
        for p in &settings {
            if stale(self.response_path(&p.key), self.response_hash(p.bundle, &p.key)?) {
                n += 1;
            }
        }
        rows.push(("simulate".to_string(), settings.len(), n));
        let n = spaces
            .iter()
            .filter(|(b, k)| stale(self.metrics_path(k), self.metrics_hash(*b, k)))
            .count();
        rows.push(("metrics".to_string(), spaces.len(), n));
        Ok(rows)
    }
}
