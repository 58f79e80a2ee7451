//! Data model and on-disk exchange format for everything the pipeline
//! consumes: activation bundles, label banks and setting keys.

mod store;
mod synthetic;

use std::fmt;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::concepts::ExtractionMethod;
use crate::error::{Error, Result};
use crate::interpretation::InterpretationMethod;
use crate::linalg::argmax;
use crate::simulatability::PromptVariant;

pub use store::{
    escape_line, quantize_f32, sha256_hex, unescape_line, DirReader, DirWriter, ListEntry,
    Manifest, MatrixEntry, FORMAT_TAG, MANIFEST_FILE,
};
pub use synthetic::{
    generate_label_bank, generate_synthetic_bundle, PlantedTruth, SyntheticBundle,
    SyntheticParams, TOPICS,
};

pub const BUNDLE_KIND: &str = "activation_bundle";

/// Samples, their latent embeddings, the model's predictions and the
/// parameters of the linear head that produced them.
///
/// `labels` are ground truth and exist only for sample selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBundle {
    pub samples: Vec<String>,
    /// n × p
    pub activations: Array2<f64>,
    pub predictions: Vec<usize>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// p × |Y|
    pub head_weights: Array2<f64>,
    pub head_bias: Array1<f64>,
    pub vocab_words: Vec<String>,
    /// m × p
    pub vocab_activations: Array2<f64>,
    pub nonneg: bool,
    /// Free-form note on how the word pool was chosen.
    pub vocab_provenance: String,
}

impl ActivationBundle {
    pub fn n(&self) -> usize {
        self.activations.nrows()
    }

    pub fn p(&self) -> usize {
        self.activations.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Pre-softmax logits of the linear head applied to `latents` (rows × p).
    pub fn head_logits(&self, latents: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if latents.ncols() != self.p() {
            return Err(Error::dimension("head input width", self.p(), latents.ncols()));
        }
        Ok(latents.dot(&self.head_weights) + &self.head_bias)
    }

    /// Logits of the explained model f on the stored samples.
    pub fn model_logits(&self) -> Array2<f64> {
        self.activations.dot(&self.head_weights) + &self.head_bias
    }

    /// Checks every structural invariant, including that the stored
    /// predictions are the argmax of the head on the stored activations.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let p = self.p();
        let classes = self.num_classes();
        if classes == 0 {
            return Err(Error::validation("class_names", "at least one class is required"));
        }
        for (field, len) in [
            ("samples", self.samples.len()),
            ("predictions", self.predictions.len()),
            ("labels", self.labels.len()),
        ] {
            if len != n {
                return Err(Error::validation(
                    field,
                    format!("length {len} does not match activations row count {n}"),
                ));
            }
        }
        if self.head_weights.dim() != (p, classes) {
            return Err(Error::validation(
                "head_weights",
                format!(
                    "shape {:?} does not match p={p} x classes={classes}",
                    self.head_weights.dim()
                ),
            ));
        }
        if self.head_bias.len() != classes {
            return Err(Error::validation(
                "head_bias",
                format!("length {} does not match classes={classes}", self.head_bias.len()),
            ));
        }
        if self.vocab_activations.nrows() != self.vocab_words.len() {
            return Err(Error::validation(
                "vocab_activations",
                format!(
                    "{} rows for {} vocab words",
                    self.vocab_activations.nrows(),
                    self.vocab_words.len()
                ),
            ));
        }
        if self.vocab_activations.ncols() != p {
            return Err(Error::validation(
                "vocab_activations",
                format!("{} columns, expected p={p}", self.vocab_activations.ncols()),
            ));
        }
        for (field, m) in [
            ("activations", &self.activations),
            ("head_weights", &self.head_weights),
            ("vocab_activations", &self.vocab_activations),
        ] {
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(field, "contains non-finite values"));
            }
        }
        for (field, idx) in [("predictions", &self.predictions), ("labels", &self.labels)] {
            if let Some(bad) = idx.iter().find(|&&c| c >= classes) {
                return Err(Error::validation(
                    field,
                    format!("class index {bad} out of range for {classes} classes"),
                ));
            }
        }
        if self.nonneg {
            for (field, m) in [
                ("activations", &self.activations),
                ("vocab_activations", &self.vocab_activations),
            ] {
                if m.iter().any(|&x| x < 0.0) {
                    return Err(Error::validation(
                        field,
                        "nonneg flag is set but a negative entry exists",
                    ));
                }
            }
        }
        let logits = self.model_logits();
        for (row, (l, &stored)) in logits.axis_iter(Axis(0)).zip(&self.predictions).enumerate() {
            let computed = argmax(l);
            if computed != stored {
                return Err(Error::InconsistentPredictions {
                    row,
                    stored,
                    computed,
                });
            }
        }
        Ok(())
    }

    /// Copy with every matrix rounded to binary32, as persisted on disk.
    /// Predictions are recomputed from the rounded values.
    pub fn quantized(&self) -> Self {
        let mut out = self.clone();
        out.activations = quantize_f32(&self.activations);
        out.head_weights = quantize_f32(&self.head_weights);
        out.head_bias = self.head_bias.mapv(|x| x as f32 as f64);
        out.vocab_activations = quantize_f32(&self.vocab_activations);
        out.predictions = out.model_logits().axis_iter(Axis(0)).map(argmax).collect();
        out
    }
}

fn index_strings(v: &[usize]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

/// Persists a bundle as a manifest plus raw binary32 matrices and text lists.
pub fn write_bundle(bundle: &ActivationBundle, path: impl AsRef<Path>) -> Result<()> {
    bundle.validate()?;
    let mut w = DirWriter::create(path)?;
    w.matrix("activations", &bundle.activations)?;
    w.matrix("head_weights", &bundle.head_weights)?;
    w.matrix("head_bias", &bundle.head_bias.clone().insert_axis(Axis(0)))?;
    w.matrix("vocab_activations", &bundle.vocab_activations)?;
    w.list("samples", &bundle.samples)?;
    w.list("class_names", &bundle.class_names)?;
    w.list("vocab_words", &bundle.vocab_words)?;
    w.list("predictions", &index_strings(&bundle.predictions))?;
    w.list("labels", &index_strings(&bundle.labels))?;
    w.finish(
        BUNDLE_KIND,
        serde_json::json!({
            "n": bundle.n(),
            "p": bundle.p(),
            "classes": bundle.num_classes(),
            "m": bundle.vocab_words.len(),
            "class_names": bundle.class_names,
            "nonneg": bundle.nonneg,
            "vocab_provenance": bundle.vocab_provenance,
        }),
    )?;
    Ok(())
}

/// Loads and fully re-validates a bundle directory.
pub fn read_bundle(path: impl AsRef<Path>) -> Result<ActivationBundle> {
    let path = path.as_ref();
    let r = DirReader::open(path)?;
    r.expect_kind(BUNDLE_KIND)?;
    let meta = &r.manifest().meta;
    let bias = r.matrix("head_bias")?;
    if bias.nrows() != 1 {
        return Err(Error::Load {
            path: path.to_path_buf(),
            message: "head_bias must be stored as a single row".into(),
        });
    }
    let bundle = ActivationBundle {
        samples: r.list("samples")?,
        activations: r.matrix("activations")?,
        predictions: r.index_list("predictions")?,
        labels: r.index_list("labels")?,
        class_names: r.list("class_names")?,
        head_weights: r.matrix("head_weights")?,
        head_bias: bias.row(0).to_owned(),
        vocab_words: r.list("vocab_words")?,
        vocab_activations: r.matrix("vocab_activations")?,
        nonneg: meta.get("nonneg").and_then(|v| v.as_bool()).unwrap_or(false),
        vocab_provenance: meta
            .get("vocab_provenance")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string(),
    };
    bundle.validate()?;
    Ok(bundle)
}

/// Serde adapter storing a matrix as a list of rows.
pub mod serde_rows {
    use ndarray::Array2;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.outer_iter().map(|r| r.to_vec()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Array2<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        from_rows(&rows, None).map_err(D::Error::custom)
    }

    pub fn from_rows(rows: &[Vec<f64>], width: Option<usize>) -> Result<Array2<f64>, String> {
        let cols = rows.first().map(Vec::len).or(width).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return Err("ragged matrix rows".into());
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Array2::from_shape_vec((rows.len(), cols), flat).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelBankEntry {
    pub label: String,
    pub sentences: Vec<String>,
    /// rows = sentences, cols = p
    #[serde(with = "serde_rows")]
    pub sentence_activations: Array2<f64>,
}

/// Candidate concept labels with representative sentences and their
/// latent embeddings, produced offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptLabelBank {
    pub entries: Vec<LabelBankEntry>,
}

impl ConceptLabelBank {
    pub fn validate(&self, p: usize) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::EmptyLabelBank);
        }
        for (i, e) in self.entries.iter().enumerate() {
            let field = format!("entries[{i}]");
            if e.sentences.is_empty() {
                return Err(Error::validation(field, "needs at least one sentence"));
            }
            if e.sentence_activations.nrows() != e.sentences.len() {
                return Err(Error::validation(
                    field,
                    format!(
                        "{} activation rows for {} sentences",
                        e.sentence_activations.nrows(),
                        e.sentences.len()
                    ),
                ));
            }
            if e.sentence_activations.ncols() != p {
                return Err(Error::validation(
                    field,
                    format!("activation width {} does not match p={p}", e.sentence_activations.ncols()),
                ));
            }
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// Identifies one simulatability run. Runs with equal keys are comparable.
///
/// `extraction == None` / `interpretation == None` stand for the
/// NoExplanation baseline; such keys carry `k == 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SettingKey {
    pub dataset_id: String,
    pub model_id: String,
    pub seed: u64,
    pub extraction: Option<ExtractionMethod>,
    pub interpretation: Option<InterpretationMethod>,
    pub prompt: PromptVariant,
    pub simulator_id: String,
    pub k: usize,
}

pub const NO_EXPLANATION: &str = "NoExplanation";

impl SettingKey {
    pub fn extraction_name(&self) -> String {
        self.extraction
            .map(|m| m.to_string())
            .unwrap_or_else(|| NO_EXPLANATION.to_string())
    }

    pub fn interpretation_name(&self) -> String {
        self.interpretation
            .map(|m| m.to_string())
            .unwrap_or_else(|| NO_EXPLANATION.to_string())
    }

    /// Filesystem-safe identifier containing every field.
    pub fn slug(&self) -> String {
        let clean = |s: &str| -> String {
            s.chars()
                .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
                .collect()
        };
        format!(
            "{}__{}__s{}__{}__{}__{}__{}__k{}",
            clean(&self.dataset_id),
            clean(&self.model_id),
            self.seed,
            self.extraction_name(),
            self.interpretation_name(),
            self.prompt,
            clean(&self.simulator_id),
            self.k
        )
    }
}

impl fmt::Display for SettingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/seed={}/{}/{}/{}/{}/k={}",
            self.dataset_id,
            self.model_id,
            self.seed,
            self.extraction_name(),
            self.interpretation_name(),
            self.prompt,
            self.simulator_id,
            self.k
        )
    }
}
