//! FastICA, parallel (symmetric) variant with the log-cosh contrast.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{FitMeta, SpaceParams};
use crate::error::{Error, Result};
use crate::linalg::{pinv, symmetric_eigen, thin_svd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcaOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// log-cosh scale
    pub alpha: f64,
}

impl Default for IcaOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-4,
            alpha: 1.0,
        }
    }
}

/// `W ← (W Wᵀ)^{-1/2} W`
fn symmetric_decorrelation(w: &Array2<f64>) -> Result<Array2<f64>> {
    let (vals, vecs) = symmetric_eigen(w.dot(&w.t()).view());
    if vals.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Numerical("ICA: singular unmixing matrix".into()));
    }
    let scaled = &vecs / &vals.mapv(|v| v.sqrt());
    Ok(scaled.dot(&vecs.t()).dot(w))
}

pub(super) fn fit(
    acts: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    opts: &IcaOptions,
) -> Result<(SpaceParams, FitMeta)> {
    let (n, _p) = acts.dim();
    let mean = acts
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::Parameter("ICA needs at least one sample".into()))?;
    let centred = &acts - &mean;
    let svd = thin_svd(centred.view())?;
    let top = svd.s.first().copied().unwrap_or(0.0);
    if svd.s.len() < k || svd.s[k - 1] <= top * 1e-10 {
        return Err(Error::Numerical(format!(
            "ICA: centred latents have rank below k={k}, cannot whiten"
        )));
    }
    let scale = (n as f64).sqrt();
    let mut whitening = svd.v.slice(s![.., ..k]).t().to_owned();
    for (mut row, &sv) in whitening.rows_mut().into_iter().zip(svd.s.iter()) {
        row *= scale / sv;
    }
    // n × k, unit covariance
    let z = centred.dot(&whitening.t());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_init = Array2::from_shape_simple_fn((k, k), || StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelation(&w_init)?;

    let mut converged = false;
    let mut iterations = 0;
    let mut lim = f64::INFINITY;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        // n × k projections
        let proj = z.dot(&w.t());
        let g = proj.mapv(|x| (opts.alpha * x).tanh());
        let g_prime_mean: Array1<f64> = g
            .mapv(|t| opts.alpha * (1.0 - t * t))
            .mean_axis(Axis(0))
            .expect("n > 0");
        let gz = g.t().dot(&z) / n as f64;
        let target = gz - &(&w * &g_prime_mean.insert_axis(Axis(1)));
        let w_new = symmetric_decorrelation(&target)?;
        lim = w_new
            .rows()
            .into_iter()
            .zip(w.rows())
            .map(|(a, b)| (a.dot(&b).abs() - 1.0).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if lim < opts.tol {
            converged = true;
            break;
        }
    }
    let warning = (!converged).then(|| {
        format!(
            "FastICA did not converge in {} iterations (last change {lim:.3e})",
            opts.max_iter
        )
    });
    let components = w.dot(&whitening);
    let mixing = pinv(components.view())?;
    let meta = FitMeta {
        seed,
        iterations,
        final_objective: Some(lim),
        converged,
        warning,
        ..FitMeta::default()
    };
    Ok((
        SpaceParams::Ica {
            mean,
            whitening,
            unmixing: w,
            components,
            mixing,
        },
        meta,
    ))
}
