//! Block bootstrap standard errors and the composite likelihood
//! information criterion.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::stream;

use super::fit::{fit, FitOptions, FitResult, LikelihoodKind, Objective};
use super::model::{ModelSpec, Transform};
use super::Dataset;

/// Settings for [`bootstrap_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapOptions {
    /// Replicates per block; blocks are consecutive and non-overlapping.
    pub block_length: usize,
    /// Number of resamples B (at least 50).
    pub n_resamples: usize,
    pub seed: u64,
    /// Finite-difference step for the Hessian on the transformed scale.
    pub hessian_step: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self {
            block_length: 1,
            n_resamples: 100,
            seed: 0,
            hessian_step: 1e-4,
        }
    }
}

/// Fits `model` and then runs [`bootstrap_fit`] on the result.
pub fn block_bootstrap(
    model: &ModelSpec,
    data: &Dataset,
    kind: LikelihoodKind,
    fit_opts: &FitOptions,
    boot: &BootstrapOptions,
) -> Result<FitResult> {
    let fitted = fit(model, data, kind, fit_opts)?;
    bootstrap_fit(&fitted, data, fit_opts, boot)
}

/// Angle differences are taken on the circle of circumference π.
fn centered(t: Transform, z: f64, center: f64) -> f64 {
    match t {
        Transform::Circular => center + (z - center + 0.5 * PI).rem_euclid(PI) - 0.5 * PI,
        _ => z,
    }
}

fn cholesky_ok(h: &[Vec<f64>]) -> bool {
    let n = h.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = h[i][i] - s;
                if !(d > 0.0) || !d.is_finite() {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (h[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

/// Adds block-bootstrap standard errors and CLIC to a fit.
///
/// Each resample draws blocks of consecutive replicates with replacement
/// and refits from the original estimates. Standard errors are resample
/// standard deviations of the free parameters. With H the negative Hessian
/// of the total log-PL on the transformed scale and Σ the bootstrap
/// covariance of the transformed estimates, the variability matrix is
/// J ≈ HΣH, so CLIC = −2ℓ(θ̂) + 2·tr(JH⁻¹) = −2ℓ(θ̂) + 2·tr(HΣ). A Hessian
/// that is not positive definite leaves CLIC unset.
pub fn bootstrap_fit(fitted: &FitResult, data: &Dataset, fit_opts: &FitOptions, boot: &BootstrapOptions) -> Result<FitResult> {
    let r = data.n_replicates();
    if r < 2 {
        return invalid("the block bootstrap needs at least 2 replicates");
    }
    if boot.n_resamples < 50 {
        return invalid(format!("at least 50 resamples are needed, got {}", boot.n_resamples));
    }
    if boot.block_length == 0 || boot.block_length > r {
        return invalid(format!("block length must lie in 1..={r}, got {}", boot.block_length));
    }
    if !(boot.hessian_step > 0.0) {
        return invalid("the Hessian step must be > 0");
    }
    let model = &fitted.model;
    let transforms = model.transforms();
    let idx: Vec<usize> = (0..fitted.free.len()).filter(|&i| fitted.free[i]).collect();
    if idx.is_empty() {
        return invalid("the bootstrap needs at least one free parameter");
    }
    let blocks: Vec<usize> = (0..r).step_by(boot.block_length).collect();
    let refit_opts = FitOptions {
        n_starts: 1,
        starts: Some(vec![fitted.estimates.clone()]),
        ..fit_opts.clone()
    };
    let draws: Vec<Option<Vec<f64>>> = (0..boot.n_resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(boot.seed, b as u64);
            let mut rows = Vec::with_capacity(r + boot.block_length);
            while rows.len() < r {
                let start = blocks[rng.random_range(0..blocks.len())];
                rows.extend(start..(start + boot.block_length).min(r));
            }
            rows.truncate(r);
            fit(model, &data.select_replicates(&rows), fitted.kind, &refit_opts)
                .ok()
                .map(|f| f.estimates)
        })
        .collect();
    let ok: Vec<&Vec<f64>> = draws.iter().flatten().collect();
    let mut notes = fitted.notes.clone();
    if ok.len() < draws.len() {
        notes.push(format!("{} of {} bootstrap refits failed", draws.len() - ok.len(), draws.len()));
    }
    if ok.len() < 2 {
        return Err(Error::AllStartsFailed);
    }
    let nb = ok.len() as f64;
    let z_hat: Vec<f64> = idx.iter().map(|&i| transforms[i].to_free(fitted.estimates[i])).collect();
    let zs: Vec<Vec<f64>> = ok
        .iter()
        .map(|v| {
            idx.iter()
                .zip(&z_hat)
                .map(|(&i, &c)| centered(transforms[i], transforms[i].to_free(v[i]), c))
                .collect()
        })
        .collect();

    let mut std_errors = vec![None; fitted.free.len()];
    for &i in &idx {
        let c = fitted.estimates[i];
        let xs: Vec<f64> = ok.iter().map(|v| centered(transforms[i], v[i], c)).collect();
        let mean = xs.iter().sum::<f64>() / nb;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        std_errors[i] = Some(var.sqrt());
    }

    let p = idx.len();
    let zbar: Vec<f64> = (0..p).map(|k| zs.iter().map(|z| z[k]).sum::<f64>() / nb).collect();
    let sigma: Vec<Vec<f64>> = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| zs.iter().map(|z| (z[a] - zbar[a]) * (z[b] - zbar[b])).sum::<f64>() / (nb - 1.0))
                .collect()
        })
        .collect();

    let obj = Objective::new(data, fitted.kind, fit_opts.pair_cutoff, fit_opts.quadrature)?;
    let f = |z: &[f64]| -> Result<f64> {
        let mut v = fitted.estimates.clone();
        for (k, &i) in idx.iter().enumerate() {
            v[i] = transforms[i].to_natural(z[k]);
        }
        Ok(-obj.loglik(&model.with_values(&v)?)?)
    };
    let h = boot.hessian_step;
    let f0 = f(&z_hat)?;
    let shifted = |steps: &[(usize, f64)]| -> Result<f64> {
        let mut z = z_hat.clone();
        for &(k, s) in steps {
            z[k] += s;
        }
        f(&z)
    };
    let mut hess = vec![vec![0.0; p]; p];
    for a in 0..p {
        hess[a][a] = (shifted(&[(a, h)])? - 2.0 * f0 + shifted(&[(a, -h)])?) / (h * h);
        for b in 0..a {
            let v = (shifted(&[(a, h), (b, h)])? - shifted(&[(a, h), (b, -h)])? - shifted(&[(a, -h), (b, h)])?
                + shifted(&[(a, -h), (b, -h)])?)
                / (4.0 * h * h);
            hess[a][b] = v;
            hess[b][a] = v;
        }
    }
    let (clic, penalty) = if cholesky_ok(&hess) {
        let tr: f64 = (0..p).map(|a| (0..p).map(|b| hess[a][b] * sigma[b][a]).sum::<f64>()).sum();
        (Some(-2.0 * fitted.log_pl + 2.0 * tr), Some(tr))
    } else {
        notes.push(Error::SingularHessian.to_string() + "; CLIC omitted");
        (None, None)
    };
    Ok(FitResult {
        std_errors: Some(std_errors),
        clic,
        clic_penalty: penalty,
        notes,
        ..fitted.clone()
    })
}
