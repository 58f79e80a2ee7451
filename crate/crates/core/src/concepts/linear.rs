//! Closed-form orthogonal projections: PCA on centred latents, SVD on raw ones.

use ndarray::{s, ArrayView2, Axis};

use super::{FitMeta, SpaceParams};
use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, thin_svd};

fn check_rank(s: &ndarray::Array1<f64>, k: usize, method: &str) -> Option<String> {
    let top = s.first().copied().unwrap_or(0.0);
    let tiny = top * 1e-12;
    let weak = s.iter().take(k).filter(|&&x| x <= tiny).count();
    (weak > 0).then(|| {
        format!("{method}: {weak} of the first {k} singular values are numerically zero")
    })
}

pub(super) fn fit_pca(acts: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<(SpaceParams, FitMeta)> {
    let mean = acts
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::Parameter("PCA needs at least one sample".into()))?;
    let centred = &acts - &mean;
    let svd = thin_svd(centred.view())?;
    let components = svd.v.slice(s![.., ..k]).to_owned();
    let resid = &centred - &centred.dot(&components).dot(&components.t());
    let meta = FitMeta {
        seed,
        converged: true,
        final_objective: Some(frobenius_sq(resid.view())),
        warning: check_rank(&svd.s, k, "PCA"),
        ..FitMeta::default()
    };
    Ok((SpaceParams::Pca { mean, components }, meta))
}

pub(super) fn fit_svd(acts: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<(SpaceParams, FitMeta)> {
    let svd = thin_svd(acts)?;
    let components = svd.v.slice(s![.., ..k]).to_owned();
    let resid = &acts - &acts.dot(&components).dot(&components.t());
    let meta = FitMeta {
        seed,
        converged: true,
        final_objective: Some(frobenius_sq(resid.view())),
        warning: check_rank(&svd.s, k, "SVD"),
        ..FitMeta::default()
    };
    Ok((SpaceParams::Svd { components }, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn pca_components_are_orthonormal_and_sign_fixed() {
        let a = array![
            [1.0, 2.0, 0.5],
            [2.0, 1.0, 0.0],
            [0.0, 3.0, 1.0],
            [4.0, 0.5, 2.0],
            [1.5, 1.5, 1.5]
        ];
        let (params, meta) = fit_pca(a.view(), 2, 0).unwrap();
        let SpaceParams::Pca { components, .. } = params else { panic!() };
        let gram = components.t().dot(&components);
        assert!((&gram - &Array2::<f64>::eye(2)).iter().all(|x| x.abs() < 1e-12));
        for col in components.columns() {
            let best = col.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(best > 0.0);
        }
        assert!(meta.final_objective.unwrap() >= 0.0);
    }

    #[test]
    fn svd_on_single_direction_data() {
        let a = array![[1.0, 2.0], [2.0, 4.0], [-1.0, -2.0]];
        let (params, meta) = fit_svd(a.view(), 1, 0).unwrap();
        let SpaceParams::Svd { components } = params else { panic!() };
        let expected = [1.0 / 5f64.sqrt(), 2.0 / 5f64.sqrt()];
        assert!((components[[0, 0]] - expected[0]).abs() < 1e-12);
        assert!((components[[1, 0]] - expected[1]).abs() < 1e-12);
        assert!(meta.final_objective.unwrap() < 1e-20);
        assert!(meta.warning.is_none());
    }
}
