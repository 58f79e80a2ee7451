//! Choosing the learning-phase and evaluation-phase samples.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::ActivationBundle;
use crate::error::{Error, Result};

/// Samples per phase; half of the selection is correctly classified.
pub const SPLIT_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSplit {
    pub lp_indices: Vec<usize>,
    pub ep_indices: Vec<usize>,
    pub seed: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Takes up to `quota` indices from `pool`, cycling over predicted classes
/// so every class contributes as evenly as the pool allows. Chosen indices
/// are removed from the pool.
fn round_robin(pool: &mut BTreeMap<usize, Vec<usize>>, quota: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(quota);
    while out.len() < quota {
        let mut progressed = false;
        for bucket in pool.values_mut() {
            if out.len() == quota {
                break;
            }
            if let Some(i) = bucket.pop() {
                out.push(i);
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    out
}

fn group_by_prediction(
    indices: impl Iterator<Item = usize>,
    bundle: &ActivationBundle,
    rng: &mut ChaCha8Rng,
) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in indices {
        groups.entry(bundle.predictions[i]).or_default().push(i);
    }
    for bucket in groups.values_mut() {
        bucket.shuffle(rng);
    }
    groups
}

/// Picks 2·SPLIT_SIZE samples, half correctly and half wrongly classified,
/// balanced over predicted classes, then splits them at random into the
/// two phases. Shortfalls in one group are filled from the other.
pub fn select_samples(bundle: &ActivationBundle, seed: u64) -> Result<SampleSplit> {
    let n = bundle.n();
    if n < 2 {
        return Err(Error::Parameter(format!(
            "sample selection needs at least 2 samples, the bundle has {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let correct = (0..n).filter(|&i| bundle.predictions[i] == bundle.labels[i]);
    let mut correct = group_by_prediction(correct, bundle, &mut rng);
    let wrong = (0..n).filter(|&i| bundle.predictions[i] != bundle.labels[i]);
    let mut wrong = group_by_prediction(wrong, bundle, &mut rng);

    let half = SPLIT_SIZE;
    let mut warnings = Vec::new();
    let mut chosen = round_robin(&mut correct, half);
    let mut chosen_wrong = round_robin(&mut wrong, half);
    if chosen.len() < half {
        warnings.push(format!(
            "only {} correctly classified samples available, wanted {half}",
            chosen.len()
        ));
        let extra = round_robin(&mut wrong, half - chosen.len());
        chosen_wrong.extend(extra);
    }
    if chosen_wrong.len() < half && chosen.len() >= half {
        warnings.push(format!(
            "only {} misclassified samples available, wanted {half}",
            chosen_wrong.len()
        ));
        let extra = round_robin(&mut correct, 2 * half - chosen.len() - chosen_wrong.len());
        chosen.extend(extra);
    }
    chosen.extend(chosen_wrong);
    if chosen.len() < 2 * half {
        warnings.push(format!(
            "selected {} samples instead of {}",
            chosen.len(),
            2 * half
        ));
    }
    for w in &warnings {
        log::warn!("sample selection (seed {seed}): {w}");
    }

    chosen.shuffle(&mut rng);
    let lp_len = chosen.len() / 2;
    let ep_indices = chosen.split_off(lp_len);
    Ok(SampleSplit {
        lp_indices: chosen,
        ep_indices,
        seed,
        warnings,
    })
}
