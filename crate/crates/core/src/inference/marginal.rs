//! Independence likelihood for marginal models.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::levy::{set_distribution, LevySeed};

use super::optim::{nelder_mead, NelderMeadOptions};
use super::Dataset;

/// Marginal law of every cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MarginModel {
    /// The seed law at unit volume.
    Seed(LevySeed),
    /// Weibull with log-scale linear in the site covariate:
    /// ln λ(s) = log_scale + slope·z(s).
    Weibull { shape: f64, log_scale: f64, slope: f64 },
}

impl MarginModel {
    fn validate(&self) -> Result<()> {
        match self {
            MarginModel::Seed(s) => s.validate(),
            MarginModel::Weibull { shape, log_scale, slope } => {
                if !(*shape > 0.0 && shape.is_finite()) || !log_scale.is_finite() || !slope.is_finite() {
                    return invalid("Weibull margins need a finite shape > 0 and finite scale coefficients");
                }
                Ok(())
            }
        }
    }

    fn free_params(&self) -> Vec<f64> {
        match self {
            MarginModel::Seed(s) => s.params().iter().map(|v| v.ln()).collect(),
            MarginModel::Weibull { shape, log_scale, slope } => vec![shape.ln(), *log_scale, *slope],
        }
    }

    fn from_free(&self, z: &[f64]) -> Result<Self> {
        match self {
            MarginModel::Seed(s) => Ok(MarginModel::Seed(s.with_params(&z.iter().map(|v| v.exp()).collect::<Vec<_>>())?)),
            MarginModel::Weibull { .. } => Ok(MarginModel::Weibull {
                shape: z[0].exp(),
                log_scale: z[1],
                slope: z[2],
            }),
        }
    }
}

/// Σ over observed cells of the marginal log density.
pub fn independence_loglik(margin: &MarginModel, data: &Dataset) -> Result<f64> {
    margin.validate()?;
    data.validate()?;
    let mut total = 0.0;
    match margin {
        MarginModel::Seed(s) => {
            let d = set_distribution(s, 1.0)?;
            for x in data.observed() {
                total += d.log_density(x)?;
            }
        }
        MarginModel::Weibull { shape, log_scale, slope } => {
            if *slope != 0.0 && data.covariate.is_none() {
                return invalid("a covariate slope needs a dataset covariate");
            }
            for row in &data.values {
                for (i, &x) in row.iter().enumerate() {
                    if x.is_nan() {
                        continue;
                    }
                    if x < 0.0 {
                        return Err(Error::OutOfSupport(x));
                    }
                    let z = data.covariate.as_ref().map_or(0.0, |c| c[i]);
                    let ls = log_scale + slope * z;
                    let t = x.ln() - ls;
                    total += shape.ln() - ls + (shape - 1.0) * t - (shape * t).exp();
                }
            }
        }
    }
    Ok(total)
}

/// Result of [`fit_margin`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginFit {
    pub margin: MarginModel,
    pub loglik: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Maximizes the independence likelihood from the parameters in `start`.
pub fn fit_margin(start: &MarginModel, data: &Dataset, opts: &NelderMeadOptions) -> Result<MarginFit> {
    let l0 = independence_loglik(start, data)?;
    if !l0.is_finite() {
        return Err(Error::NonFiniteLikelihood("independence likelihood at the start".into()));
    }
    let m = nelder_mead(
        |z| match start.from_free(z).and_then(|mm| independence_loglik(&mm, data)) {
            Ok(v) => -v,
            Err(_) => f64::INFINITY,
        },
        &start.free_params(),
        opts,
    );
    Ok(MarginFit {
        margin: start.from_free(&m.x)?,
        loglik: -m.value,
        evaluations: m.evals,
        converged: m.converged,
    })
}
