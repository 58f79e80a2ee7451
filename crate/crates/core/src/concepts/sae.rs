//! Single-layer sparse autoencoder with a ReLU encoder, an untied decoder
//! with unit-norm rows, and an L1 penalty on activations.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{FitMeta, SpaceParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaeOptions {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub l1_coefficient: f64,
    /// A neuron is dead when it has not fired on this many consecutive inputs.
    pub dead_window: usize,
    /// Steps between dead-neuron checks.
    pub resample_every: usize,
    /// Fraction of training after which no more resampling happens.
    pub resample_until: f64,
    /// Steps between entries of the loss trace.
    pub log_every: usize,
}

impl Default for SaeOptions {
    fn default() -> Self {
        Self {
            steps: 10_000,
            batch_size: 32,
            learning_rate: 1e-3,
            l1_coefficient: 1e-3,
            dead_window: 1000,
            resample_every: 1000,
            resample_until: 0.5,
            log_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResampleEvent {
    pub step: usize,
    pub neurons: Vec<usize>,
}

struct Model {
    w_enc: Array2<f64>,
    b_enc: Array1<f64>,
    w_dec: Array2<f64>,
    b_dec: Array1<f64>,
}

impl Model {
    fn hidden(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
        let xc = &x - &self.b_dec;
        let pre = xc.dot(&self.w_enc) + &self.b_enc;
        let h = pre.mapv(|v| v.max(0.0));
        (xc, h)
    }

    /// Per-sample squared reconstruction error plus L1 penalty.
    fn sample_losses(&self, x: ArrayView2<'_, f64>, l1: f64) -> Array1<f64> {
        let (_, h) = self.hidden(x);
        let err = h.dot(&self.w_dec) + &self.b_dec - x;
        let rec = err.mapv(|e| e * e).sum_axis(Axis(1));
        rec + h.sum_axis(Axis(1)) * l1
    }

    fn normalize_decoder(&mut self) {
        for mut row in self.w_dec.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
}

pub(super) fn fit(
    acts: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    opts: &SaeOptions,
) -> Result<(SpaceParams, FitMeta)> {
    let (n, p) = acts.dim();
    if opts.batch_size == 0 || opts.steps == 0 {
        return Err(Error::Parameter("SAE needs positive steps and batch size".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = Model {
        w_enc: Array2::zeros((p, k)),
        b_enc: Array1::zeros(k),
        w_dec: Array2::from_shape_simple_fn((k, p), || StandardNormal.sample(&mut rng)),
        b_dec: acts.mean_axis(Axis(0)).expect("n > 0"),
    };
    model.normalize_decoder();
    model.w_enc = model.w_dec.t().to_owned();

    let batch = opts.batch_size.min(n);
    let l1 = opts.l1_coefficient;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;
    let mut since_fired = vec![0usize; k];
    let mut trace = Vec::new();
    let mut events = Vec::new();
    let mut running = 0.0;
    let mut running_count = 0usize;

    for step in 0..opts.steps {
        let mut idx = Vec::with_capacity(batch);
        while idx.len() < batch {
            if cursor == n {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            idx.push(order[cursor]);
            cursor += 1;
        }
        let x = acts.select(Axis(0), &idx);
        let (xc, h) = model.hidden(x.view());
        let err = h.dot(&model.w_dec) + &model.b_dec - &x;
        let bsz = batch as f64;
        let loss = (err.mapv(|e| e * e).sum() + l1 * h.sum()) / bsz;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("SAE loss became {loss} at step {step}")));
        }
        running += loss;
        running_count += 1;
        if (step + 1) % opts.log_every.max(1) == 0 || step + 1 == opts.steps {
            trace.push(running / running_count as f64);
            running = 0.0;
            running_count = 0;
        }

        for (j, col) in h.columns().into_iter().enumerate() {
            if col.iter().any(|&v| v > 0.0) {
                since_fired[j] = 0;
            } else {
                since_fired[j] += batch;
            }
        }

        let d_out = &err * (2.0 / bsz);
        let g_w_dec = h.t().dot(&d_out);
        let mut g_b_dec = d_out.sum_axis(Axis(0));
        let mut d_pre = d_out.dot(&model.w_dec.t()) + l1 / bsz;
        Zip::from(&mut d_pre).and(&h).for_each(|d, &hv| {
            if hv <= 0.0 {
                *d = 0.0;
            }
        });
        let g_w_enc = xc.t().dot(&d_pre);
        let g_b_enc = d_pre.sum_axis(Axis(0));
        g_b_dec -= &d_pre.dot(&model.w_enc.t()).sum_axis(Axis(0));

        let lr = opts.learning_rate * (1.0 - step as f64 / opts.steps as f64);
        model.w_dec.scaled_add(-lr, &g_w_dec);
        model.b_dec.scaled_add(-lr, &g_b_dec);
        model.w_enc.scaled_add(-lr, &g_w_enc);
        model.b_enc.scaled_add(-lr, &g_b_enc);
        model.normalize_decoder();

        let done = step + 1;
        let may_resample = (done as f64) < opts.resample_until * opts.steps as f64;
        if may_resample && opts.resample_every > 0 && done % opts.resample_every == 0 {
            let dead: Vec<usize> = (0..k).filter(|&j| since_fired[j] >= opts.dead_window).collect();
            if !dead.is_empty() {
                resample(&mut model, acts, &dead, l1, &mut rng);
                for &j in &dead {
                    since_fired[j] = 0;
                }
                log::debug!("SAE step {done}: resampled {} dead neurons", dead.len());
                events.push(ResampleEvent {
                    step: done,
                    neurons: dead,
                });
            }
        }
    }

    let final_loss = model.sample_losses(acts, l1).mean().unwrap_or(0.0);
    let meta = FitMeta {
        seed,
        iterations: opts.steps,
        final_objective: Some(final_loss),
        converged: true,
        warning: None,
        objective_trace: trace,
        resample_events: events,
    };
    Ok((
        SpaceParams::Sae {
            w_enc: model.w_enc,
            b_enc: model.b_enc,
            w_dec: model.w_dec,
            b_dec: model.b_dec,
        },
        meta,
    ))
}

/// Points each dead neuron at an input drawn with probability proportional
/// to its squared loss.
fn resample(model: &mut Model, acts: ArrayView2<'_, f64>, dead: &[usize], l1: f64, rng: &mut ChaCha8Rng) {
    let losses = model.sample_losses(acts, l1).mapv(|l| l * l);
    let total: f64 = losses.sum();
    let alive: Vec<usize> = (0..model.w_enc.ncols()).filter(|j| !dead.contains(j)).collect();
    let enc_scale = if alive.is_empty() {
        1.0
    } else {
        alive
            .iter()
            .map(|&j| model.w_enc.column(j).dot(&model.w_enc.column(j)).sqrt())
            .sum::<f64>()
            / alive.len() as f64
    };
    for &j in dead {
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = losses.len() - 1;
            for (i, &l) in losses.iter().enumerate() {
                if target < l {
                    chosen = i;
                    break;
                }
                target -= l;
            }
            chosen
        } else {
            rng.random_range(0..losses.len())
        };
        let dir = &acts.row(pick) - &model.b_dec;
        let norm = dir.dot(&dir).sqrt();
        if norm == 0.0 {
            continue;
        }
        let unit = dir / norm;
        model.w_dec.slice_mut(s![j, ..]).assign(&unit);
        model.w_enc.slice_mut(s![.., j]).assign(&(&unit * (0.2 * enc_scale)));
        model.b_enc[j] = 0.0;
    }
}
