//! Concept spaces: an encoder from the latent space to k concept
//! activations and a decoder back, fitted jointly over all classes.
//!
//! Every decoder here is affine, `decode(u) = u · D + offset` with `D` a
//! k × p matrix, which is what makes Gradient×Input attributions exact.

mod ica;
mod linear;
mod nmf;
mod sae;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::corpus::{ActivationBundle, DirReader, DirWriter};
use crate::error::{Error, Result};

pub use ica::IcaOptions;
pub use nmf::{nnls_coordinate_descent, NmfOptions};
pub use sae::{ResampleEvent, SaeOptions};

pub const SPACE_KIND: &str = "concept_space";

/// Default sweep over the number of concepts.
pub const DEFAULT_K_SWEEP: [usize; 7] = [3, 5, 10, 20, 50, 150, 500];

/// Sweep values that fit in a p-dimensional latent space.
pub fn k_sweep(candidates: &[usize], p: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = candidates.iter().copied().filter(|&k| k >= 1 && k <= p).collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        ks.push(p);
    }
    ks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExtractionMethod {
    NoProjection,
    #[serde(rename = "PCA")]
    Pca,
    #[serde(rename = "SVD")]
    Svd,
    #[serde(rename = "ICA")]
    Ica,
    #[serde(rename = "NMF")]
    Nmf,
    #[serde(rename = "SAE")]
    Sae,
}

impl ExtractionMethod {
    pub const ALL: [ExtractionMethod; 6] = [
        ExtractionMethod::NoProjection,
        ExtractionMethod::Pca,
        ExtractionMethod::Svd,
        ExtractionMethod::Ica,
        ExtractionMethod::Nmf,
        ExtractionMethod::Sae,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExtractionMethod::NoProjection => "NoProjection",
            ExtractionMethod::Pca => "PCA",
            ExtractionMethod::Svd => "SVD",
            ExtractionMethod::Ica => "ICA",
            ExtractionMethod::Nmf => "NMF",
            ExtractionMethod::Sae => "SAE",
        }
    }

    /// Methods whose codes are nonnegative by construction.
    pub fn nonnegative_codes(self) -> bool {
        matches!(self, ExtractionMethod::Nmf | ExtractionMethod::Sae)
    }
}

impl fmt::Display for ExtractionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExtractionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExtractionMethod::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parameter(format!("unknown extraction method `{s}`")))
    }
}

/// Per-method hyperparameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub nmf: NmfOptions,
    pub ica: IcaOptions,
    pub sae: SaeOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    pub seed: u64,
    pub iterations: usize,
    pub final_objective: Option<f64>,
    pub converged: bool,
    pub warning: Option<String>,
    /// Objective after every iteration (NMF) or every logged step (SAE).
    #[serde(default)]
    pub objective_trace: Vec<f64>,
    #[serde(default)]
    pub resample_events: Vec<ResampleEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpaceParams {
    Identity,
    Pca {
        mean: Array1<f64>,
        /// p × k, orthonormal columns
        components: Array2<f64>,
    },
    Svd {
        /// p × k, orthonormal columns
        components: Array2<f64>,
    },
    Ica {
        mean: Array1<f64>,
        /// k × p, maps centred latents to unit-variance whitened coordinates
        whitening: Array2<f64>,
        /// k × k, orthogonal
        unmixing: Array2<f64>,
        /// k × p, `unmixing · whitening`
        components: Array2<f64>,
        /// p × k, pseudo-inverse of `components`
        mixing: Array2<f64>,
    },
    Nmf {
        /// k × p, nonnegative
        dictionary: Array2<f64>,
        encode_max_iter: usize,
        encode_tol: f64,
    },
    Sae {
        /// p × k
        w_enc: Array2<f64>,
        b_enc: Array1<f64>,
        /// k × p, unit-norm rows
        w_dec: Array2<f64>,
        b_dec: Array1<f64>,
    },
}

/// A fitted encoder/decoder pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSpace {
    pub method: ExtractionMethod,
    pub k: usize,
    pub p: usize,
    pub params: SpaceParams,
    pub options: FitOptions,
    pub fit_meta: FitMeta,
}

/// A fitted space together with the training codes the fit produced.
#[derive(Debug, Clone)]
pub struct FittedSpace {
    pub space: ConceptSpace,
    /// n × k
    pub codes: Array2<f64>,
}

pub fn fit_concept_space(
    bundle: &ActivationBundle,
    method: ExtractionMethod,
    k: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<ConceptSpace> {
    fit_concept_space_with_codes(bundle, method, k, seed, options).map(|f| f.space)
}

/// Fits `method` on the bundle's activations. `NoProjection` ignores `k`
/// and uses k = p.
pub fn fit_concept_space_with_codes(
    bundle: &ActivationBundle,
    method: ExtractionMethod,
    k: usize,
    seed: u64,
    options: &FitOptions,
) -> Result<FittedSpace> {
    let acts = bundle.activations.view();
    let (n, p) = acts.dim();
    if n == 0 {
        return Err(Error::Parameter("cannot fit a concept space on zero samples".into()));
    }
    if k == 0 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    let rank_bound = n.min(p);
    if matches!(method, ExtractionMethod::Pca | ExtractionMethod::Svd | ExtractionMethod::Ica)
        && k > rank_bound
    {
        return Err(Error::Parameter(format!(
            "{method} needs k <= min(n, p) = {rank_bound}, got k={k}"
        )));
    }
    if method == ExtractionMethod::Nmf && !bundle.nonneg {
        return Err(Error::RequiresNonnegative {
            method: method.to_string(),
        });
    }

    let (params, meta, k) = match method {
        ExtractionMethod::NoProjection => (
            SpaceParams::Identity,
            FitMeta {
                seed,
                converged: true,
                ..FitMeta::default()
            },
            p,
        ),
        ExtractionMethod::Pca => {
            let (params, meta) = linear::fit_pca(acts, k, seed)?;
            (params, meta, k)
        }
        ExtractionMethod::Svd => {
            let (params, meta) = linear::fit_svd(acts, k, seed)?;
            (params, meta, k)
        }
        ExtractionMethod::Ica => {
            let (params, meta) = ica::fit(acts, k, seed, &options.ica)?;
            (params, meta, k)
        }
        ExtractionMethod::Nmf => {
            let (params, meta, codes) = nmf::fit(acts, k, seed, &options.nmf)?;
            let space = ConceptSpace {
                method,
                k,
                p,
                params,
                options: options.clone(),
                fit_meta: meta,
            };
            return Ok(FittedSpace { space, codes });
        }
        ExtractionMethod::Sae => {
            let (params, meta) = sae::fit(acts, k, seed, &options.sae)?;
            (params, meta, k)
        }
    };
    if let Some(w) = &meta.warning {
        log::warn!("{method} (k={k}): {w}");
    }
    let space = ConceptSpace {
        method,
        k,
        p,
        params,
        options: options.clone(),
        fit_meta: meta,
    };
    let codes = space.encode(acts)?;
    Ok(FittedSpace { space, codes })
}

impl ConceptSpace {
    /// Maps latents (rows × p) to concept activations (rows × k).
    pub fn encode(&self, acts: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if acts.ncols() != self.p {
            return Err(Error::dimension("encode input width", self.p, acts.ncols()));
        }
        Ok(match &self.params {
            SpaceParams::Identity => acts.to_owned(),
            SpaceParams::Pca { mean, components } => (&acts - mean).dot(components),
            SpaceParams::Svd { components } => acts.dot(components),
            SpaceParams::Ica {
                mean, components, ..
            } => (&acts - mean).dot(&components.t()),
            SpaceParams::Nmf {
                dictionary,
                encode_max_iter,
                encode_tol,
            } => nmf::encode(acts, dictionary.view(), *encode_max_iter, *encode_tol),
            SpaceParams::Sae {
                w_enc, b_enc, b_dec, ..
            } => ((&acts - b_dec).dot(w_enc) + b_enc).mapv(|x| x.max(0.0)),
        })
    }

    /// Maps concept activations (rows × k) back to latents (rows × p).
    pub fn decode(&self, codes: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if codes.ncols() != self.k {
            return Err(Error::dimension("decode input width", self.k, codes.ncols()));
        }
        Ok(codes.dot(&self.decoder_matrix()) + &self.decoder_offset())
    }

    /// The k × p matrix `D` of the affine decoder.
    pub fn decoder_matrix(&self) -> Array2<f64> {
        match &self.params {
            SpaceParams::Identity => Array2::eye(self.p),
            SpaceParams::Pca { components, .. } | SpaceParams::Svd { components } => {
                components.t().to_owned()
            }
            SpaceParams::Ica { mixing, .. } => mixing.t().to_owned(),
            SpaceParams::Nmf { dictionary, .. } => dictionary.clone(),
            SpaceParams::Sae { w_dec, .. } => w_dec.clone(),
        }
    }

    pub fn decoder_offset(&self) -> Array1<f64> {
        match &self.params {
            SpaceParams::Pca { mean, .. } | SpaceParams::Ica { mean, .. } => mean.clone(),
            SpaceParams::Sae { b_dec, .. } => b_dec.clone(),
            _ => Array1::zeros(self.p),
        }
    }

    /// Whitened coordinates used inside ICA; `None` for other methods.
    pub fn ica_whiten(&self, acts: ArrayView2<'_, f64>) -> Option<Array2<f64>> {
        match &self.params {
            SpaceParams::Ica {
                mean, whitening, ..
            } => Some((&acts - mean).dot(&whitening.t())),
            _ => None,
        }
    }
}

/// Pre-softmax logits of the concept bottleneck model `f_c`:
/// `decode(codes) · head_weights + head_bias`.
pub fn concept_logits(
    space: &ConceptSpace,
    bundle: &ActivationBundle,
    codes: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if space.p != bundle.p() {
        return Err(Error::dimension("concept space latent width", bundle.p(), space.p));
    }
    bundle.head_logits(space.decode(codes)?.view())
}

fn row_matrix(v: &Array1<f64>) -> Array2<f64> {
    v.clone().insert_axis(Axis(0))
}

fn load_row(r: &DirReader, name: &str) -> Result<Array1<f64>> {
    let m = r.matrix(name)?;
    if m.nrows() != 1 {
        return Err(Error::Load {
            path: r.root().to_path_buf(),
            message: format!("`{name}` must be a single row"),
        });
    }
    Ok(m.row(0).to_owned())
}

/// Persists a space in the manifest-plus-matrices directory format.
pub fn write_space(space: &ConceptSpace, path: impl AsRef<Path>) -> Result<()> {
    let mut w = DirWriter::create(path)?;
    let mut extra = serde_json::Map::new();
    match &space.params {
        SpaceParams::Identity => {}
        SpaceParams::Pca { mean, components } => {
            w.matrix("mean", &row_matrix(mean))?;
            w.matrix("components", components)?;
        }
        SpaceParams::Svd { components } => w.matrix("components", components)?,
        SpaceParams::Ica {
            mean,
            whitening,
            unmixing,
            components,
            mixing,
        } => {
            w.matrix("mean", &row_matrix(mean))?;
            w.matrix("whitening", whitening)?;
            w.matrix("unmixing", unmixing)?;
            w.matrix("components", components)?;
            w.matrix("mixing", mixing)?;
        }
        SpaceParams::Nmf {
            dictionary,
            encode_max_iter,
            encode_tol,
        } => {
            w.matrix("dictionary", dictionary)?;
            extra.insert("encode_max_iter".into(), (*encode_max_iter).into());
            extra.insert("encode_tol".into(), (*encode_tol).into());
        }
        SpaceParams::Sae {
            w_enc,
            b_enc,
            w_dec,
            b_dec,
        } => {
            w.matrix("w_enc", w_enc)?;
            w.matrix("b_enc", &row_matrix(b_enc))?;
            w.matrix("w_dec", w_dec)?;
            w.matrix("b_dec", &row_matrix(b_dec))?;
        }
    }
    w.finish(
        SPACE_KIND,
        serde_json::json!({
            "method": space.method,
            "k": space.k,
            "p": space.p,
            "hyper": space.options,
            "fit_meta": space.fit_meta,
            "params": extra,
        }),
    )?;
    Ok(())
}

pub fn read_space(path: impl AsRef<Path>) -> Result<ConceptSpace> {
    let path = path.as_ref();
    let r = DirReader::open(path)?;
    r.expect_kind(SPACE_KIND)?;
    let meta = r.manifest().meta.clone();
    let bad = |message: String| Error::Load {
        path: path.to_path_buf(),
        message,
    };
    let method: ExtractionMethod = serde_json::from_value(meta["method"].clone())
        .map_err(|e| bad(format!("method: {e}")))?;
    let k = meta["k"].as_u64().ok_or_else(|| bad("missing k".into()))? as usize;
    let p = meta["p"].as_u64().ok_or_else(|| bad("missing p".into()))? as usize;
    let options: FitOptions =
        serde_json::from_value(meta["hyper"].clone()).map_err(|e| bad(format!("hyper: {e}")))?;
    let fit_meta: FitMeta = serde_json::from_value(meta["fit_meta"].clone())
        .map_err(|e| bad(format!("fit_meta: {e}")))?;
    let params = match method {
        ExtractionMethod::NoProjection => SpaceParams::Identity,
        ExtractionMethod::Pca => SpaceParams::Pca {
            mean: load_row(&r, "mean")?,
            components: r.matrix("components")?,
        },
        ExtractionMethod::Svd => SpaceParams::Svd {
            components: r.matrix("components")?,
        },
        ExtractionMethod::Ica => SpaceParams::Ica {
            mean: load_row(&r, "mean")?,
            whitening: r.matrix("whitening")?,
            unmixing: r.matrix("unmixing")?,
            components: r.matrix("components")?,
            mixing: r.matrix("mixing")?,
        },
        ExtractionMethod::Nmf => SpaceParams::Nmf {
            dictionary: r.matrix("dictionary")?,
            encode_max_iter: meta["params"]["encode_max_iter"]
                .as_u64()
                .unwrap_or(options.nmf.encode_max_iter as u64) as usize,
            encode_tol: meta["params"]["encode_tol"]
                .as_f64()
                .unwrap_or(options.nmf.encode_tol),
        },
        ExtractionMethod::Sae => SpaceParams::Sae {
            w_enc: r.matrix("w_enc")?,
            b_enc: load_row(&r, "b_enc")?,
            w_dec: r.matrix("w_dec")?,
            b_dec: load_row(&r, "b_dec")?,
        },
    };
    let space = ConceptSpace {
        method,
        k,
        p,
        params,
        options,
        fit_meta,
    };
    let d = space.decoder_matrix();
    if d.dim() != (k, p) {
        return Err(bad(format!("decoder shape {:?} does not match k={k}, p={p}", d.dim())));
    }
    Ok(space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_bundle, SyntheticParams};
    use ndarray::Array2;

    fn bundle(nonneg: bool) -> ActivationBundle {
        generate_synthetic_bundle(&SyntheticParams::new(120, 12, 3, 4, 3, nonneg))
            .unwrap()
            .bundle
    }

    fn quick() -> FitOptions {
        let mut o = FitOptions::default();
        o.sae.steps = 300;
        o
    }

    fn rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let norm: f64 = a.iter().map(|x| x * x).sum();
        (diff / norm).sqrt()
    }

    #[test]
    fn no_projection_is_identity() {
        let b = bundle(false);
        let s = fit_concept_space(&b, ExtractionMethod::NoProjection, 3, 0, &quick()).unwrap();
        assert_eq!(s.k, b.p());
        assert_eq!(s.encode(b.activations.view()).unwrap(), b.activations);
        assert_eq!(s.decode(b.activations.view()).unwrap(), b.activations);
        let logits = concept_logits(&s, &b, b.activations.view()).unwrap();
        assert_eq!(logits, b.model_logits());
    }

    #[test]
    fn pca_encodes_zero_as_negative_mean_projection() {
        let b = bundle(false);
        let s = fit_concept_space(&b, ExtractionMethod::Pca, 5, 0, &quick()).unwrap();
        let SpaceParams::Pca { mean, components } = &s.params else { panic!() };
        let zero = Array2::zeros((1, b.p()));
        let got = s.encode(zero.view()).unwrap();
        let expected = -mean.dot(components);
        for (x, y) in got.row(0).iter().zip(expected.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn invertible_methods_reconstruct_at_full_rank() {
        let b = bundle(false);
        for method in [ExtractionMethod::Pca, ExtractionMethod::Svd, ExtractionMethod::Ica] {
            let s = fit_concept_space(&b, method, b.p(), 1, &quick()).unwrap();
            let rebuilt = s.decode(s.encode(b.activations.view()).unwrap().view()).unwrap();
            assert!(rel_err(&b.activations, &rebuilt) <= 1e-6, "{method}");
            let logits = concept_logits(&s, &b, s.encode(b.activations.view()).unwrap().view()).unwrap();
            let max_abs = logits
                .iter()
                .zip(b.model_logits().iter())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            assert!(max_abs <= 1e-5, "{method}: {max_abs}");
        }
    }

    #[test]
    fn svd_at_data_rank_is_exact() {
        // Rank-3 data embedded in 6 dimensions.
        let mut b = bundle(false);
        let basis = b.activations.slice(ndarray::s![0..3, ..]).to_owned();
        let coeffs = b.activations.slice(ndarray::s![.., 0..3]).to_owned();
        b.activations = coeffs.dot(&basis);
        let s = fit_concept_space(&b, ExtractionMethod::Svd, 3, 0, &quick()).unwrap();
        let rebuilt = s.decode(s.encode(b.activations.view()).unwrap().view()).unwrap();
        assert!(rel_err(&b.activations, &rebuilt) <= 1e-6);
    }

    #[test]
    fn nmf_rejects_signed_embeddings() {
        let b = bundle(false);
        let err = fit_concept_space(&b, ExtractionMethod::Nmf, 3, 0, &quick()).unwrap_err();
        assert!(err.to_string().contains("requires nonnegative embeddings"));
    }

    #[test]
    fn k_bounds_are_checked() {
        let b = bundle(false);
        assert!(fit_concept_space(&b, ExtractionMethod::Pca, 13, 0, &quick()).is_err());
        assert!(fit_concept_space(&b, ExtractionMethod::Svd, 0, 0, &quick()).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = bundle(true);
        let s = fit_concept_space(&b, ExtractionMethod::Pca, 4, 0, &quick()).unwrap();
        assert!(s.encode(Array2::zeros((2, 5)).view()).is_err());
        assert!(s.decode(Array2::zeros((2, 5)).view()).is_err());
    }

    #[test]
    fn encode_is_deterministic_for_every_method() {
        let b = bundle(true);
        for method in ExtractionMethod::ALL {
            let a = fit_concept_space(&b, method, 4, 7, &quick()).unwrap();
            let c = fit_concept_space(&b, method, 4, 7, &quick()).unwrap();
            assert_eq!(a, c, "{method}");
            let x = a.encode(b.activations.view()).unwrap();
            let y = a.encode(b.activations.view()).unwrap();
            assert_eq!(x, y, "{method}");
        }
    }

    #[test]
    fn persistence_round_trip_for_every_method() {
        let b = bundle(true);
        for method in ExtractionMethod::ALL {
            let s = fit_concept_space(&b, method, 4, 2, &quick()).unwrap();
            let dir = tempfile::tempdir().unwrap();
            write_space(&s, dir.path()).unwrap();
            let back = read_space(dir.path()).unwrap();
            assert_eq!(back.method, method);
            assert_eq!(back.k, s.k);
            assert_eq!(back.fit_meta, s.fit_meta);
            let x = s.encode(b.activations.view()).unwrap();
            let y = back.encode(b.activations.view()).unwrap();
            assert!(rel_err(&x, &y) < 1e-5, "{method}");
        }
    }

    #[test]
    fn k_sweep_clips_to_latent_width() {
        assert_eq!(k_sweep(&DEFAULT_K_SWEEP, 16), vec![3, 5, 10]);
        assert_eq!(k_sweep(&DEFAULT_K_SWEEP, 2), vec![2]);
    }

    #[test]
    fn method_names_parse() {
        for m in ExtractionMethod::ALL {
            assert_eq!(m.as_str().parse::<ExtractionMethod>().unwrap(), m);
        }
        assert!("LDA".parse::<ExtractionMethod>().is_err());
    }
}
