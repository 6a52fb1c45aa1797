//! Parameter estimation: pairwise and independence likelihoods, empirical
//! covariograms, simplex search and block-bootstrap uncertainty.

mod bootstrap;
mod covariogram;
mod fit;
mod marginal;
mod model;
mod optim;
mod pairwise;


pub use bootstrap::{block_bootstrap, bootstrap_fit, BootstrapOptions};
pub use covariogram::{empirical_covariogram, fit_range, CovariogramBin};
pub use fit::{fit, pair_list, starting_values, FitOptions, FitResult, LikelihoodKind, Objective};
pub use marginal::{fit_margin, independence_loglik, MarginFit, MarginModel};
pub use model::{ModelSpec, Transform};
pub use optim::{nelder_mead, Minimum, NelderMeadOptions};
pub use pairwise::{
    default_pair_quadrature, pair_loglik_continuous, pair_loglik_discrete, pair_loglik_gamma_difference,
    variance_gamma_log_density, variance_gamma_tie_log_density,
};

use std::collections::HashSet;

use crate::error::{invalid, Error, Result};
use crate::simulate::{FieldSample, SiteSet};

/// Observations on a fixed site set, one row per replicate.
///
/// Missing cells are NaN and are skipped by every likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sites: SiteSet,
    pub values: Vec<Vec<f64>>,
    /// Optional per-site covariate for marginal models.
    pub covariate: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(sites: SiteSet, values: Vec<Vec<f64>>) -> Result<Self> {
        let d = Self {
            sites,
            values,
            covariate: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn from_sample(sample: &FieldSample) -> Result<Self> {
        Self::new(sample.sites.clone(), sample.values.clone())
    }

    pub fn with_covariate(mut self, c: Vec<f64>) -> Result<Self> {
        self.covariate = Some(c);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.sites.validate()?;
        if self.sites.len() < 2 {
            return invalid("a dataset needs at least 2 sites");
        }
        if self.values.is_empty() {
            return invalid("a dataset needs at least one replicate");
        }
        let mut seen = HashSet::new();
        for id in &self.sites.ids {
            if !seen.insert(id) {
                return invalid(format!("site id '{id}' appears twice"));
            }
        }
        for (r, row) in self.values.iter().enumerate() {
            if row.len() != self.sites.len() {
                return invalid(format!("replicate {r} has {} values for {} sites", row.len(), self.sites.len()));
            }
            if row.iter().any(|v| v.is_infinite()) {
                return invalid(format!("replicate {r} has an infinite value"));
            }
        }
        if let Some(c) = &self.covariate {
            if c.len() != self.sites.len() || c.iter().any(|v| !v.is_finite()) {
                return invalid("the covariate needs one finite value per site");
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_replicates(&self) -> usize {
        self.values.len()
    }

    /// Dataset made of the given replicate rows, in order.
    pub fn select_replicates(&self, rows: &[usize]) -> Self {
        Self {
            sites: self.sites.clone(),
            values: rows.iter().map(|&r| self.values[r].clone()).collect(),
            covariate: self.covariate.clone(),
        }
    }

    /// Finite values in row-major order.
    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().flatten().copied().filter(|v| !v.is_nan())
    }
}

/// Fixed-point accumulator: the total does not depend on summation order.
#[derive(Default, Clone, Copy)]
pub(crate) struct ExactSum(pub(crate) i128);

const FIXED_SCALE: f64 = (1u64 << 60) as f64;

impl ExactSum {
    pub(crate) fn add(&mut self, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::NonFiniteLikelihood(format!("term {v}")));
        }
        self.0 += (v * FIXED_SCALE).round() as i128;
        Ok(())
    }

    /// Adds a value known to be finite.
    pub(crate) fn add_finite(&mut self, v: f64) {
        self.0 += (v * FIXED_SCALE).round() as i128;
    }

    pub(crate) fn value(self) -> f64 {
        self.0 as f64 / FIXED_SCALE
    }
}
