//! Geometric anisotropy as a linear change of planar coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Rotation by `angle` followed by stretching the first axis by `stretch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anisotropy {
    pub angle: f64,
    pub stretch: f64,
}

impl Default for Anisotropy {
    fn default() -> Self {
        Self {
            angle: 0.0,
            stretch: 1.0,
        }
    }
}

impl Anisotropy {
    pub fn new(angle: f64, stretch: f64) -> Result<Self> {
        let a = Self { angle, stretch };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..std::f64::consts::PI).contains(&self.angle) {
            return invalid(format!("anisotropy angle must lie in [0, pi), got {}", self.angle));
        }
        if !(self.stretch >= 1.0) || !self.stretch.is_finite() {
            return invalid(format!("anisotropy stretch must be finite and >= 1, got {}", self.stretch));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.angle == 0.0 && self.stretch == 1.0
    }

    /// diag(b, 1)·R(θ)·s.
    pub fn apply(&self, s: [f64; 2]) -> [f64; 2] {
        let (sin, cos) = self.angle.sin_cos();
        let x = cos * s[0] - sin * s[1];
        let y = sin * s[0] + cos * s[1];
        [self.stretch * x, y]
    }

    /// Inverse of [`Anisotropy::apply`].
    pub fn invert(&self, s: [f64; 2]) -> [f64; 2] {
        let (sin, cos) = self.angle.sin_cos();
        let x = s[0] / self.stretch;
        let y = s[1];
        [cos * x + sin * y, -sin * x + cos * y]
    }
}

/// Maps an observed site into the isotropic coordinate system.
pub fn transform_coordinates(aniso: &Anisotropy, site: &[f64]) -> Result<Vec<f64>> {
    if site.len() != 2 {
        return invalid(format!("anisotropy needs 2-D sites, got dimension {}", site.len()));
    }
    aniso.validate()?;
    Ok(aniso.apply([site[0], site[1]]).to_vec())
}
