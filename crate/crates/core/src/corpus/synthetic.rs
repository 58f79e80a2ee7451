//! Planted-concept bundles for desk-scale experiments.
//!
//! Each planted concept owns one anchor latent dimension plus a few shared
//! ones, and five topic words. A sample activates one to three concepts; its
//! embedding is the weighted sum of their directions plus Gaussian noise, and
//! its text is a bag of those concepts' words mixed with filler words. The
//! linear head maps every concept to class `j mod classes`.

use ndarray::{Array1, Array2, Axis};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{quantize_f32, ActivationBundle, ConceptLabelBank, LabelBankEntry};
use crate::error::{Error, Result};
use crate::linalg::argmax;

pub const TOPICS: &[(&str, [&str; 5])] = &[
    ("ocean", ["wave", "tide", "coral", "harbor", "reef"]),
    ("kitchen", ["recipe", "oven", "spice", "bake", "flavor"]),
    ("music", ["melody", "guitar", "rhythm", "chorus", "violin"]),
    ("space", ["galaxy", "orbit", "rocket", "comet", "planet"]),
    ("garden", ["tulip", "soil", "seedling", "compost", "orchard"]),
    ("law", ["verdict", "statute", "courtroom", "lawyer", "appeal"]),
    ("medicine", ["clinic", "surgery", "vaccine", "patient", "diagnosis"]),
    ("sport", ["stadium", "referee", "league", "goal", "tournament"]),
    ("finance", ["ledger", "dividend", "mortgage", "invest", "budget"]),
    ("weather", ["thunder", "drizzle", "forecast", "humid", "blizzard"]),
    ("travel", ["passport", "airport", "luggage", "journey", "hostel"]),
    ("school", ["teacher", "lecture", "homework", "campus", "exam"]),
    ("computer", ["software", "compile", "server", "keyboard", "pixel"]),
    ("art", ["canvas", "sculpture", "gallery", "portrait", "brush"]),
    ("farm", ["tractor", "harvest", "barn", "cattle", "wheat"]),
    ("film", ["director", "screenplay", "cinema", "actor", "premiere"]),
];

const FILLERS: &[&str] = &[
    "the", "a", "of", "with", "very", "some", "then", "also", "just", "quite", "often", "more",
    "less", "here", "there", "many", "few", "each", "still", "perhaps",
];

const CLASS_NAMES: &[&str] = &[
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliett",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub n: usize,
    pub p: usize,
    pub classes: usize,
    pub k_true: usize,
    pub seed: u64,
    pub nonneg: bool,
    /// Standard deviation of the latent noise.
    pub noise: f64,
    /// Probability that a ground-truth label differs from the model prediction.
    pub label_noise: f64,
}

impl SyntheticParams {
    pub fn new(n: usize, p: usize, classes: usize, k_true: usize, seed: u64, nonneg: bool) -> Self {
        Self {
            n,
            p,
            classes,
            k_true,
            seed,
            nonneg,
            noise: 0.03,
            label_noise: 0.4,
        }
    }
}

/// What the generator planted, for tests that check recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedTruth {
    /// k_true × p, unit rows
    pub directions: Array2<f64>,
    /// n × k_true, nonnegative
    pub codes: Array2<f64>,
    pub topics: Vec<String>,
    /// The five words naming each planted concept.
    pub concept_words: Vec<Vec<String>>,
    pub class_of_concept: Vec<usize>,
    /// Stored activations minus `codes · directions`.
    pub noise: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBundle {
    pub bundle: ActivationBundle,
    pub truth: PlantedTruth,
}

fn topic(j: usize) -> (String, Vec<String>) {
    match TOPICS.get(j) {
        Some((name, words)) => (name.to_string(), words.iter().map(|w| w.to_string()).collect()),
        None => (
            format!("topic{j}"),
            (0..5).map(|r| format!("t{j}word{r}")).collect(),
        ),
    }
}

fn class_name(c: usize) -> String {
    CLASS_NAMES
        .get(c)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("class{c}"))
}

fn planted_directions(rng: &mut ChaCha8Rng, p: usize, k_true: usize, signed: bool) -> Array2<f64> {
    let mut dims: Vec<usize> = (0..p).collect();
    dims.shuffle(rng);
    let shared = (p / k_true).clamp(1, 3);
    let mut d = Array2::<f64>::zeros((k_true, p));
    for j in 0..k_true {
        let anchor = dims[j];
        d[[j, anchor]] = rng.random_range(0.8..1.2);
        let others: Vec<usize> = (0..p).filter(|&x| x != anchor).collect();
        for &dim in others.choose_multiple(rng, shared.min(others.len())) {
            d[[j, dim]] = rng.random_range(0.2..0.6);
        }
        if signed {
            for x in d.row_mut(j).iter_mut() {
                if rng.random_bool(0.5) {
                    *x = -*x;
                }
            }
        }
        let norm = d.row(j).dot(&d.row(j)).sqrt();
        d.row_mut(j).mapv_inplace(|x| x / norm);
    }
    d
}

/// Generates a self-consistent bundle with planted sparse concepts.
/// Deterministic in all parameters.
pub fn generate_synthetic_bundle(params: &SyntheticParams) -> Result<SyntheticBundle> {
    let &SyntheticParams {
        n,
        p,
        classes,
        k_true,
        seed,
        nonneg,
        noise,
        label_noise,
    } = params;
    if k_true == 0 || k_true > p {
        return Err(Error::Parameter(format!(
            "k_true must be in 1..=p (k_true={k_true}, p={p})"
        )));
    }
    if classes == 0 || n < 2 * classes {
        return Err(Error::Parameter(format!(
            "need n >= 2 * classes with classes >= 1 (n={n}, classes={classes})"
        )));
    }
    if !(0.0..=1.0).contains(&label_noise) || !(noise >= 0.0) {
        return Err(Error::Parameter("noise levels must be nonnegative probabilities/scales".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).expect("valid sigma");

    let directions = planted_directions(&mut rng, p, k_true, !nonneg);
    let (topics, concept_words): (Vec<String>, Vec<Vec<String>>) = (0..k_true).map(topic).unzip();
    let class_of_concept: Vec<usize> = (0..k_true).map(|j| j % classes).collect();

    // Sparse nonnegative codes and bag-of-words texts.
    let mut codes = Array2::zeros((n, k_true));
    let mut samples = Vec::with_capacity(n);
    let concepts: Vec<usize> = (0..k_true).collect();
    for i in 0..n {
        let roll: f64 = rng.random();
        let active = if roll < 0.4 { 1 } else if roll < 0.8 { 2 } else { 3 }.min(k_true);
        let mut tokens: Vec<&str> = Vec::new();
        for &j in concepts.choose_multiple(&mut rng, active) {
            let w: f64 = rng.random_range(0.5..2.0);
            codes[[i, j]] = w;
            let count = 1 + w.round() as usize;
            for _ in 0..count {
                tokens.push(concept_words[j].choose(&mut rng).expect("five words"));
            }
        }
        let fillers = rng.random_range(2..=4);
        for _ in 0..fillers {
            tokens.push(FILLERS.choose(&mut rng).expect("fillers"));
        }
        tokens.shuffle(&mut rng);
        samples.push(tokens.join(" "));
    }

    let clean = codes.dot(&directions);
    let mut activations = clean.mapv(|x| x + gauss.sample(&mut rng));
    if nonneg {
        activations.mapv_inplace(|x| x.max(0.0));
    }
    let activations = quantize_f32(&activations);

    // Head aligned with the planted directions.
    let mut head_weights = Array2::zeros((p, classes));
    for j in 0..k_true {
        let c = class_of_concept[j];
        let mut col = head_weights.column_mut(c);
        col += &directions.row(j);
    }
    let head_weights = quantize_f32(&head_weights);
    let head_bias = Array1::from_iter((0..classes).map(|_| rng.random_range(-0.05..0.05)))
        .mapv(|x: f64| x as f32 as f64);

    let logits = activations.dot(&head_weights) + &head_bias;
    let predictions: Vec<usize> = logits.axis_iter(Axis(0)).map(argmax).collect();
    let labels: Vec<usize> = predictions
        .iter()
        .map(|&c| {
            if classes > 1 && rng.random_bool(label_noise) {
                let shift = rng.random_range(1..classes);
                (c + shift) % classes
            } else {
                c
            }
        })
        .collect();

    // Word pool: every concept word plus fillers.
    let mut vocab_words = Vec::new();
    let mut vocab_rows: Vec<Array1<f64>> = Vec::new();
    let word_noise = Normal::new(0.0, (noise / 2.0).max(f64::MIN_POSITIVE)).expect("valid sigma");
    let filler_noise = Normal::new(0.0, 0.05).expect("valid sigma");
    for j in 0..k_true {
        for (r, word) in concept_words[j].iter().enumerate() {
            let strength = 1.4 - 0.15 * r as f64;
            let mut row = directions.row(j).mapv(|x| strength * x + word_noise.sample(&mut rng));
            if nonneg {
                row.mapv_inplace(|x| x.max(0.0));
            }
            vocab_words.push(word.clone());
            vocab_rows.push(row);
        }
    }
    for word in FILLERS {
        let mut row = Array1::from_iter((0..p).map(|_| filler_noise.sample(&mut rng)));
        if nonneg {
            row.mapv_inplace(f64::abs);
        }
        vocab_words.push(word.to_string());
        vocab_rows.push(row);
    }
    let mut vocab_activations = Array2::zeros((vocab_rows.len(), p));
    for (i, row) in vocab_rows.iter().enumerate() {
        vocab_activations.row_mut(i).assign(row);
    }
    let vocab_activations = quantize_f32(&vocab_activations);

    let noise_matrix = &activations - &clean;
    let bundle = ActivationBundle {
        samples,
        activations,
        predictions,
        labels,
        class_names: (0..classes).map(class_name).collect(),
        head_weights,
        head_bias,
        vocab_words,
        vocab_activations,
        nonneg,
        vocab_provenance: "synthetic: planted concept words plus filler words".into(),
    };
    bundle.validate()?;
    Ok(SyntheticBundle {
        bundle,
        truth: PlantedTruth {
            directions,
            codes,
            topics,
            concept_words,
            class_of_concept,
            noise: noise_matrix,
        },
    })
}

/// Label bank matching a synthetic bundle: one entry per planted concept
/// (label "topic (word, word)") plus three filler-only distractors.
pub fn generate_label_bank(synthetic: &SyntheticBundle, seed: u64) -> ConceptLabelBank {
    let truth = &synthetic.truth;
    let nonneg = synthetic.bundle.nonneg;
    let p = truth.directions.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c61_6265_6c73);
    let gauss = Normal::new(0.0, 0.03).expect("valid sigma");
    let mut entries = Vec::new();

    for (j, words) in truth.concept_words.iter().enumerate() {
        let mut sentences = Vec::new();
        let mut acts = Array2::zeros((4, p));
        for s in 0..4 {
            let mut tokens: Vec<&str> = words.choose_multiple(&mut rng, 3).map(|w| w.as_str()).collect();
            tokens.extend(FILLERS.choose_multiple(&mut rng, 2));
            tokens.shuffle(&mut rng);
            sentences.push(tokens.join(" "));
            let w: f64 = rng.random_range(0.8..1.5);
            let mut row = truth.directions.row(j).mapv(|x| w * x + gauss.sample(&mut rng));
            if nonneg {
                row.mapv_inplace(|x| x.max(0.0));
            }
            acts.row_mut(s).assign(&row);
        }
        entries.push(LabelBankEntry {
            label: format!("{} ({}, {})", truth.topics[j], words[0], words[1]),
            sentences,
            sentence_activations: acts,
        });
    }

    for label in ["small talk", "general remarks", "miscellaneous"] {
        let mut sentences = Vec::new();
        let mut acts = Array2::zeros((3, p));
        for s in 0..3 {
            let tokens: Vec<&str> = FILLERS.choose_multiple(&mut rng, 5).copied().collect();
            sentences.push(tokens.join(" "));
            let mut row = Array1::from_iter((0..p).map(|_| gauss.sample(&mut rng)));
            if nonneg {
                row.mapv_inplace(f64::abs);
            }
            acts.row_mut(s).assign(&row);
        }
        entries.push(LabelBankEntry {
            label: label.to_string(),
            sentences,
            sentence_activations: acts,
        });
    }
    ConceptLabelBank { entries }
}
