//! Model specification with named parameters and their unconstrained
//! transforms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hypograph::{Anisotropy, HeightFunction, PairGeometry, Shape};
use crate::levy::LevySeed;

/// A hypograph-smoothed Lévy basis model.
///
/// Parameters are addressed by name: the seed parameters, the kernel
/// parameters (`rho`, and `nu` for the t shape), `nugget` when a nugget
/// weight is present and `angle`, `stretch` when anisotropy is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub seed: LevySeed,
    pub kernel: HeightFunction,
    /// Weight w of the nugget in the convex sum (1 − w)·H + w·nugget.
    #[serde(default)]
    pub nugget: Option<f64>,
    #[serde(default)]
    pub aniso: Option<Anisotropy>,
    /// Names of parameters held at their current values during fitting.
    #[serde(default)]
    pub fixed: Vec<String>,
}

/// Map between a natural parameter and the real line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// z = ln v.
    Log,
    /// z = ln(w / (1 − w)).
    Logit,
    /// v = z mod π.
    Circular,
    /// z = ln(b − 1).
    LogShifted,
}

impl Transform {
    pub fn to_free(self, v: f64) -> f64 {
        match self {
            Transform::Log => v.ln(),
            Transform::Logit => (v / (1.0 - v)).ln(),
            Transform::Circular => v,
            Transform::LogShifted => (v - 1.0).ln(),
        }
    }

    pub fn to_natural(self, z: f64) -> f64 {
        match self {
            Transform::Log => z.exp(),
            Transform::Logit => 1.0 / (1.0 + (-z).exp()),
            Transform::Circular => z.rem_euclid(PI),
            Transform::LogShifted => 1.0 + z.exp(),
        }
    }

    /// Nearest value at which [`Transform::to_free`] is finite.
    pub fn interior(self, v: f64) -> f64 {
        match self {
            Transform::Log => v.max(1e-8),
            Transform::Logit => v.clamp(0.01, 0.99),
            Transform::Circular => v.rem_euclid(PI),
            Transform::LogShifted => v.max(1.02),
        }
    }
}

impl ModelSpec {
    pub fn new(seed: LevySeed, kernel: HeightFunction) -> Result<Self> {
        let m = Self {
            seed,
            kernel,
            nugget: None,
            aniso: None,
            fixed: Vec::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_nugget(mut self, w: f64) -> Result<Self> {
        self.nugget = Some(w);
        self.validate()?;
        Ok(self)
    }

    pub fn with_aniso(mut self, a: Anisotropy) -> Result<Self> {
        self.aniso = Some(a);
        self.validate()?;
        Ok(self)
    }

    pub fn with_fixed(mut self, names: &[&str]) -> Result<Self> {
        self.fixed = names.iter().map(|s| s.to_string()).collect();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.seed.validate()?;
        self.kernel.validate()?;
        if matches!(self.kernel.shape, Shape::Nugget | Shape::ConvexSum { .. }) {
            return invalid("the model kernel must be a single continuous shape; use the nugget weight for mixtures");
        }
        if let Some(w) = self.nugget {
            if !(0.0..1.0).contains(&w) {
                return invalid(format!("nugget weight must lie in [0, 1), got {w}"));
            }
        }
        if let Some(a) = &self.aniso {
            a.validate()?;
            if self.kernel.dim != 2 {
                return invalid("anisotropy needs a planar kernel");
            }
        }
        let names = self.names();
        for f in &self.fixed {
            if !names.contains(&f.as_str()) {
                return invalid(format!("unknown parameter '{f}' in fixed list; model has {names:?}"));
            }
        }
        Ok(())
    }

    /// Parameter names in vector order.
    pub fn names(&self) -> Vec<&'static str> {
        let mut n: Vec<&'static str> = self.seed.param_names().to_vec();
        n.extend(self.kernel.shape.param_names());
        if self.nugget.is_some() {
            n.push("nugget");
        }
        if self.aniso.is_some() {
            n.extend(["angle", "stretch"]);
        }
        n
    }

    /// Natural-scale parameter values in [`ModelSpec::names`] order.
    pub fn values(&self) -> Vec<f64> {
        let mut v = self.seed.params();
        v.extend(self.kernel.shape.params());
        if let Some(w) = self.nugget {
            v.push(w);
        }
        if let Some(a) = &self.aniso {
            v.extend([a.angle, a.stretch]);
        }
        v
    }

    pub fn transforms(&self) -> Vec<Transform> {
        self.names()
            .iter()
            .map(|n| match *n {
                "nugget" => Transform::Logit,
                "angle" => Transform::Circular,
                "stretch" => Transform::LogShifted,
                _ => Transform::Log,
            })
            .collect()
    }

    /// The same model with all parameters replaced.
    pub fn with_values(&self, v: &[f64]) -> Result<Self> {
        let names = self.names();
        if v.len() != names.len() {
            return invalid(format!("model has {} parameters, got {}", names.len(), v.len()));
        }
        let ns = self.seed.param_names().len();
        let nk = self.kernel.shape.param_names().len();
        let mut m = self.clone();
        m.seed = self.seed.with_params(&v[..ns])?;
        m.kernel = HeightFunction::new(self.kernel.shape.with_params(&v[ns..ns + nk])?, self.kernel.dim)?;
        let mut k = ns + nk;
        if m.nugget.is_some() {
            m.nugget = Some(v[k]);
            k += 1;
        }
        if m.aniso.is_some() {
            m.aniso = Some(Anisotropy::new(v[k], v[k + 1])?);
        }
        m.validate()?;
        Ok(m)
    }

    /// Mask of parameters that are estimated.
    pub fn free_mask(&self) -> Vec<bool> {
        self.names().iter().map(|n| !self.fixed.iter().any(|f| f == n)).collect()
    }

    /// Height function including the nugget.
    pub fn height(&self) -> Result<HeightFunction> {
        self.kernel.with_nugget(self.nugget.unwrap_or(0.0))
    }

    /// Distance between two sites after the anisotropic transform.
    pub fn lag(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let (a, b) = match &self.aniso {
            Some(t) => (t.apply(a), t.apply(b)),
            None => (a, b),
        };
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    /// Volumes for two distinct sites at lag u, with the nugget removed
    /// from the shared part.
    pub fn geometry(&self, u: f64) -> Result<PairGeometry> {
        if !(u >= 0.0) {
            return invalid(format!("lag must be >= 0, got {u}"));
        }
        let w = self.nugget.unwrap_or(0.0);
        PairGeometry::new(1.0, (1.0 - w) * self.kernel.correlation(u)?)
    }
}
