//! Nonnegative matrix factorisation `A ≈ U W` with multiplicative updates
//! under the Frobenius objective.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{FitMeta, SpaceParams};
use crate::error::{Error, Result};
use crate::linalg::frobenius_sq;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmfOptions {
    pub max_iter: usize,
    /// Stop when the relative objective decrease falls below this.
    pub tol: f64,
    /// Coordinate-descent sweeps per row when encoding.
    pub encode_max_iter: usize,
    pub encode_tol: f64,
}

impl Default for NmfOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            tol: 1e-6,
            encode_max_iter: 5000,
            encode_tol: 1e-12,
        }
    }
}

/// `x · num / den`, leaving `x` untouched where `den` vanishes (its
/// numerator vanishes there too for nonnegative factors).
fn mu_step(x: &mut Array2<f64>, num: &Array2<f64>, den: &Array2<f64>) {
    Zip::from(x).and(num).and(den).for_each(|x, &n, &d| {
        if d > 0.0 {
            *x *= n / d;
        }
    });
}

/// Nonnegative least squares for one row, `min_u ‖a − u W‖²` with `u ≥ 0`,
/// by cyclic projected coordinate descent on the normal equations.
/// `gram = W Wᵀ` and `cross = a Wᵀ`. Stops once a full sweep moves no
/// coordinate by more than `tol` relative to the largest coordinate.
pub fn nnls_coordinate_descent(
    gram: ArrayView2<'_, f64>,
    cross: ArrayView1<'_, f64>,
    init: Option<ArrayView1<'_, f64>>,
    max_sweeps: usize,
    tol: f64,
) -> Array1<f64> {
    let k = cross.len();
    let mut u = match init {
        Some(u0) => u0.mapv(|x| x.max(0.0)),
        None => Array1::zeros(k),
    };
    let mut gu = gram.dot(&u);
    for _ in 0..max_sweeps {
        let mut moved = 0.0_f64;
        for j in 0..k {
            let d = gram[[j, j]];
            if d <= 0.0 {
                continue;
            }
            let next = (u[j] + (cross[j] - gu[j]) / d).max(0.0);
            let delta = next - u[j];
            if delta != 0.0 {
                gu.scaled_add(delta, &gram.column(j));
                u[j] = next;
                moved = moved.max(delta.abs());
            }
        }
        let size = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if moved <= tol * size.max(1e-12) {
            break;
        }
    }
    u
}

pub(super) fn encode(
    acts: ArrayView2<'_, f64>,
    dictionary: ArrayView2<'_, f64>,
    max_iter: usize,
    tol: f64,
) -> Array2<f64> {
    let gram = dictionary.dot(&dictionary.t());
    let cross = acts.dot(&dictionary.t());
    let mut out = Array2::zeros((acts.nrows(), dictionary.nrows()));
    for (mut row, c) in out.rows_mut().into_iter().zip(cross.rows()) {
        row.assign(&nnls_coordinate_descent(gram.view(), c, None, max_iter, tol));
    }
    out
}

/// Fits the factorisation; returns the parameters, fit metadata and the
/// training codes (polished per row with the dictionary fixed).
pub(super) fn fit(
    acts: ArrayView2<'_, f64>,
    k: usize,
    seed: u64,
    opts: &NmfOptions,
) -> Result<(SpaceParams, FitMeta, Array2<f64>)> {
    let (n, p) = acts.dim();
    if acts.iter().any(|&x| x < 0.0) {
        return Err(Error::RequiresNonnegative {
            method: "NMF".into(),
        });
    }
    let mean = acts.mean().unwrap_or(0.0);
    let avg = (mean / k as f64).sqrt().max(1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize| {
        Array2::from_shape_simple_fn((rows, cols), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            avg * z.abs()
        })
    };
    let mut w = draw(k, p);
    let mut u = draw(n, k);

    let objective = |u: &Array2<f64>, w: &Array2<f64>| frobenius_sq((&acts - &u.dot(w)).view());
    let mut trace = Vec::with_capacity(opts.max_iter.min(4096));
    let mut prev = objective(&u, &w);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        // dictionary
        let num = u.t().dot(&acts);
        let den = u.t().dot(&u).dot(&w);
        mu_step(&mut w, &num, &den);
        // codes
        let num = acts.dot(&w.t());
        let den = u.dot(&w.dot(&w.t()));
        mu_step(&mut u, &num, &den);

        let cur = objective(&u, &w);
        if !cur.is_finite() {
            return Err(Error::Numerical(format!("NMF objective became {cur} at iteration {iterations}")));
        }
        trace.push(cur);
        let rel = (prev - cur) / prev.max(f64::MIN_POSITIVE);
        prev = cur;
        if rel < opts.tol {
            converged = true;
            break;
        }
    }

    // Polish training codes with the dictionary fixed, warm-started from the
    // joint fit. The per-row problem is convex, so they agree with `encode`
    // up to the solver tolerance.
    let gram = w.dot(&w.t());
    let cross = acts.dot(&w.t());
    for (mut row, c) in u.rows_mut().into_iter().zip(cross.rows()) {
        let start = row.to_owned();
        let polished = nnls_coordinate_descent(
            gram.view(),
            c,
            Some(start.view()),
            opts.encode_max_iter,
            opts.encode_tol,
        );
        row.assign(&polished);
    }
    let final_objective = objective(&u, &w);

    let warning = (!converged).then(|| {
        format!(
            "NMF reached {} iterations before the relative decrease fell below {:e}",
            opts.max_iter, opts.tol
        )
    });
    let meta = FitMeta {
        seed,
        iterations,
        final_objective: Some(final_objective),
        converged,
        warning,
        objective_trace: trace,
        ..FitMeta::default()
    };
    Ok((
        SpaceParams::Nmf {
            dictionary: w,
            encode_max_iter: opts.encode_max_iter,
            encode_tol: opts.encode_tol,
        },
        meta,
        u,
    ))
}
