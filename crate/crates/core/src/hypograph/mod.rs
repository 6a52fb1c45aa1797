//! Height functions, their correlation functions and pair volumes.
//!
//! A height function H is a radially non-increasing spherical density on
//! ℝ^d (d ∈ {1, 2}). Its hypograph A_H has unit volume, and for sites at
//! distance u the overlap volume of the two translated hypographs is
//! C(u) = 2·Ḡ(u/2), with Ḡ the survival function of one coordinate of a
//! random vector with density H.
//!
//! Scale conventions, all chosen so that the correlation functions read as
//! in the usual parametrizations:
//!
//! | shape | C(u) | one-coordinate law |
//! |---|---|---|
//! | cylinder(ρ) | disc lens area / πρ² | uniform disc of radius ρ |
//! | half_ball(ρ) | (1−z)²(2+z)/2, z = u/2ρ | half-ball of radius ρ |
//! | gaussian(ρ) | 2Φ̄(u/2ρ) | N(0, ρ²) |
//! | student_t(ρ, ν) | 2t̄_ν(u/2ρ) | ρ·t_ν |
//! | laplace(ρ) | exp(−u/ρ) | Laplace with scale ρ/2 |
//! | slash(ρ) | 2Φ̄(z) + 2(φ(0)−φ(z))/z, z = u/2ρ | ρ·Z/U |
//!
//! In d = 1 the cylinder is an interval, so its correlation is linear, and
//! the half-ball profile is the semicircle, whose correlation is the disc
//! lens curve.

mod anisotropy;

pub use anisotropy::{transform_coordinates, Anisotropy};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numeric::bessel::{bessel_k, bessel_k_scaled};
use crate::numeric::special::{
    ln_gamma_unchecked, std_normal_sf, student_t_sf, INV_SQRT_2PI,
};

/// Profile of a height function, with its scale parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Cylinder { rho: f64 },
    HalfBall { rho: f64 },
    Gaussian { rho: f64 },
    StudentT { rho: f64, nu: f64 },
    Laplace { rho: f64 },
    Slash { rho: f64 },
    Nugget,
    ConvexSum { weights: Vec<f64>, parts: Vec<Shape> },
}

/// Normalized height function H on ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightFunction {
    pub shape: Shape,
    pub dim: usize,
}

/// Volumes (α, α₀, α_res) of one hypograph, the overlap of two translates,
/// and the part of one translate outside the other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub alpha: f64,
    pub alpha0: f64,
    pub alpha_res: f64,
}

impl PairGeometry {
    pub fn new(alpha: f64, alpha0: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(alpha0 >= 0.0) || alpha0 > alpha * (1.0 + 1e-12) {
            return invalid(format!("need 0 <= alpha0 <= alpha, got alpha={alpha}, alpha0={alpha0}"));
        }
        let alpha0 = alpha0.min(alpha);
        Ok(Self {
            alpha,
            alpha0,
            alpha_res: alpha - alpha0,
        })
    }
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("kernel parameter {name} must be finite and > 0, got {v}"))
            }
        };
        match self {
            Shape::Cylinder { rho }
            | Shape::HalfBall { rho }
            | Shape::Gaussian { rho }
            | Shape::Laplace { rho }
            | Shape::Slash { rho } => pos("rho", *rho),
            Shape::StudentT { rho, nu } => pos("rho", *rho).and(pos("nu", *nu)),
            Shape::Nugget => Ok(()),
            Shape::ConvexSum { weights, parts } => {
                if weights.len() != parts.len() || parts.is_empty() {
                    return invalid("convex sum needs one weight per part and at least one part");
                }
                if weights.iter().any(|w| !(*w >= 0.0)) {
                    return invalid("convex sum weights must be >= 0");
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return invalid(format!("convex sum weights must sum to 1, got {total}"));
                }
                for p in parts {
                    if matches!(p, Shape::ConvexSum { .. }) {
                        return invalid("nested convex sums are not supported");
                    }
                    p.validate()?;
                }
                Ok(())
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Shape::Cylinder { .. } => "cylinder",
            Shape::HalfBall { .. } => "half_ball",
            Shape::Gaussian { .. } => "gaussian",
            Shape::StudentT { .. } => "student_t",
            Shape::Laplace { .. } => "laplace",
            Shape::Slash { .. } => "slash",
            Shape::Nugget => "nugget",
            Shape::ConvexSum { .. } => "convex_sum",
        }
    }

    /// Names of the scalar parameters, matching [`Shape::params`].
    pub fn param_names(&self) -> Vec<&'static str> {
        match self {
            Shape::StudentT { .. } => vec!["rho", "nu"],
            Shape::Nugget | Shape::ConvexSum { .. } => vec![],
            _ => vec!["rho"],
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Shape::Cylinder { rho }
            | Shape::HalfBall { rho }
            | Shape::Gaussian { rho }
            | Shape::Laplace { rho }
            | Shape::Slash { rho } => vec![*rho],
            Shape::StudentT { rho, nu } => vec![*rho, *nu],
            Shape::Nugget | Shape::ConvexSum { .. } => vec![],
        }
    }

    /// Same family with parameters replaced, in [`Shape::param_names`] order.
    pub fn with_params(&self, p: &[f64]) -> Result<Shape> {
        if p.len() != self.param_names().len() {
            return invalid(format!(
                "{} kernel takes {} parameters, got {}",
                self.family_name(),
                self.param_names().len(),
                p.len()
            ));
        }
        let s = match self {
            Shape::Cylinder { .. } => Shape::Cylinder { rho: p[0] },
            Shape::HalfBall { .. } => Shape::HalfBall { rho: p[0] },
            Shape::Gaussian { .. } => Shape::Gaussian { rho: p[0] },
            Shape::StudentT { .. } => Shape::StudentT { rho: p[0], nu: p[1] },
            Shape::Laplace { .. } => Shape::Laplace { rho: p[0] },
            Shape::Slash { .. } => Shape::Slash { rho: p[0] },
            other => other.clone(),
        };
        s.validate()?;
        Ok(s)
    }
}

impl HeightFunction {
    pub fn new(shape: Shape, dim: usize) -> Result<Self> {
        let h = Self { shape, dim };
        h.validate()?;
        Ok(h)
    }

    /// Two-dimensional height function.
    pub fn planar(shape: Shape) -> Result<Self> {
        Self::new(shape, 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return invalid(format!("only dimensions 1 and 2 are supported, got {}", self.dim));
        }
        self.shape.validate()
    }

    /// Adds a nugget of weight `w` as a convex sum; `w = 0` returns a copy.
    pub fn with_nugget(&self, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return invalid(format!("nugget weight must lie in [0, 1], got {w}"));
        }
        if w == 0.0 {
            return Ok(self.clone());
        }
        if w == 1.0 {
            return Self::new(Shape::Nugget, self.dim);
        }
        Self::new(
            Shape::ConvexSum {
                weights: vec![1.0 - w, w],
                parts: vec![self.shape.clone(), Shape::Nugget],
            },
            self.dim,
        )
    }

    /// Continuous components with their weights, plus the total nugget weight.
    pub fn components(&self) -> (Vec<(f64, HeightFunction)>, f64) {
        match &self.shape {
            Shape::Nugget => (vec![], 1.0),
            Shape::ConvexSum { weights, parts } => {
                let mut out = Vec::new();
                let mut nugget = 0.0;
                for (w, p) in weights.iter().zip(parts) {
                    if matches!(p, Shape::Nugget) {
                        nugget += w;
                    } else if *w > 0.0 {
                        out.push((
                            *w,
                            HeightFunction {
                                shape: p.clone(),
                                dim: self.dim,
                            },
                        ));
                    }
                }
                (out, nugget)
            }
            _ => (vec![(1.0, self.clone())], 0.0),
        }
    }

    /// H at distance `r` from the center.
    ///
    /// The nugget has no density; it contributes +∞ at 0 and 0 elsewhere.
    pub fn height(&self, r: f64) -> f64 {
        let r = r.abs();
        let d2 = self.dim == 2;
        match self.shape {
            Shape::Cylinder { rho } => {
                if r <= rho {
                    if d2 {
                        1.0 / (PI * rho * rho)
                    } else {
                        0.5 / rho
                    }
                } else {
                    0.0
                }
            }
            Shape::HalfBall { rho } => {
                if r >= rho {
                    0.0
                } else if d2 {
                    1.5 / (PI * rho.powi(3)) * (rho * rho - r * r).sqrt()
                } else {
                    2.0 / (PI * rho * rho) * (rho * rho - r * r).sqrt()
                }
            }
            Shape::Gaussian { rho } => {
                let e = (-0.5 * (r / rho).powi(2)).exp();
                if d2 {
                    e / (2.0 * PI * rho * rho)
                } else {
                    INV_SQRT_2PI * e / rho
                }
            }
            Shape::StudentT { rho, nu } => {
                let z2 = (r / rho).powi(2) / nu;
                if d2 {
                    (1.0 + z2).powf(-(0.5 * nu + 1.0)) / (2.0 * PI * rho * rho)
                } else {
                    let c = (ln_gamma_unchecked(0.5 * (nu + 1.0)) - ln_gamma_unchecked(0.5 * nu)).exp()
                        / (nu * PI).sqrt();
                    c * (1.0 + z2).powf(-0.5 * (nu + 1.0)) / rho
                }
            }
            Shape::Laplace { rho } => {
                let b = 0.5 * rho;
                if d2 {
                    if r == 0.0 {
                        f64::INFINITY
                    } else {
                        bessel_k(0.0, r / b).unwrap_or(0.0) / (2.0 * PI * b * b)
                    }
                } else {
                    (-r / b).exp() / (2.0 * b)
                }
            }
            Shape::Slash { rho } => {
                let z = r / rho;
                if d2 {
                    slash_w2_integral(0.5 * z * z) / (2.0 * PI * rho * rho)
                } else if z < 1e-4 {
                    INV_SQRT_2PI * (0.5 - z * z / 8.0) / rho
                } else {
                    -INV_SQRT_2PI * (-0.5 * z * z).exp_m1() / (rho * z * z)
                }
            }
            Shape::Nugget => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Shape::ConvexSum {
                ref weights,
                ref parts,
            } => weights
                .iter()
                .zip(parts)
                .map(|(w, p)| {
                    let h = HeightFunction {
                        shape: p.clone(),
                        dim: self.dim,
                    }
                    .height(r);
                    if *w == 0.0 {
                        0.0
                    } else {
                        w * h
                    }
                })
                .sum(),
        }
    }

    /// max_s H(s); infinite for the planar Laplace shape and the nugget.
    pub fn h_max(&self) -> f64 {
        self.height(0.0)
    }

    /// Radius beyond which H vanishes, if bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self.shape {
            Shape::Cylinder { rho } | Shape::HalfBall { rho } => Some(rho),
            Shape::Nugget => Some(0.0),
            Shape::ConvexSum { ref parts, .. } => parts.iter().try_fold(0.0f64, |acc, p| {
                HeightFunction {
                    shape: p.clone(),
                    dim: self.dim,
                }
                .support_radius()
                .map(|r| acc.max(r))
            }),
            _ => None,
        }
    }

    /// Ḡ(r): survival function of one coordinate of a vector with density H.
    pub fn radial_survival(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return invalid(format!("radial_survival needs r >= 0, got {r}"));
        }
        match &self.shape {
            Shape::Nugget => invalid("the nugget has no radial survival function"),
            Shape::ConvexSum { weights, parts } => {
                let mut total = 0.0;
                for (w, p) in weights.iter().zip(parts) {
                    if *w > 0.0 {
                        total += w * HeightFunction {
                            shape: p.clone(),
                            dim: self.dim,
                        }
                        .radial_survival(r)?;
                    }
                }
                Ok(total)
            }
            _ => Ok(self.survival_unchecked(r)),
        }
    }

    fn survival_unchecked(&self, r: f64) -> f64 {
        let d2 = self.dim == 2;
        match self.shape {
            Shape::Cylinder { rho } => {
                if d2 {
                    0.5 * disc_lens(r / rho)
                } else {
                    (0.5 * (1.0 - r / rho)).max(0.0)
                }
            }
            Shape::HalfBall { rho } => {
                let z = r / rho;
                if z >= 1.0 {
                    0.0
                } else if d2 {
                    0.25 * (1.0 - z) * (1.0 - z) * (2.0 + z)
                } else {
                    0.5 * disc_lens(z)
                }
            }
            Shape::Gaussian { rho } => std_normal_sf(r / rho),
            Shape::StudentT { rho, nu } => student_t_sf(r / rho, nu).unwrap_or(f64::NAN),
            Shape::Laplace { rho } => 0.5 * (-2.0 * r / rho).exp(),
            Shape::Slash { rho } => {
                let z = r / rho;
                if z == 0.0 {
                    0.5
                } else {
                    // φ(0) − φ(z) = −φ(0)·expm1(−z²/2)
                    std_normal_sf(z) - INV_SQRT_2PI * (-0.5 * z * z).exp_m1() / z
                }
            }
            Shape::Nugget | Shape::ConvexSum { .. } => f64::NAN,
        }
    }

    /// Correlation function C(u) = α₀(u)/α.
    pub fn correlation(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return invalid(format!("correlation needs lag u >= 0, got {u}"));
        }
        match &self.shape {
            Shape::Nugget => Ok(if u == 0.0 { 1.0 } else { 0.0 }),
            Shape::ConvexSum { weights, parts } => {
                let mut total = 0.0;
                for (w, p) in weights.iter().zip(parts) {
                    if *w > 0.0 {
                        total += w * HeightFunction {
                            shape: p.clone(),
                            dim: self.dim,
                        }
                        .correlation(u)?;
                    }
                }
                Ok(total.min(1.0))
            }
            _ => {
                if u == 0.0 {
                    Ok(1.0)
                } else {
                    Ok((2.0 * self.survival_unchecked(0.5 * u)).clamp(0.0, 1.0))
                }
            }
        }
    }

    /// Volume triple for two sites at lag `u`.
    pub fn pair_geometry(&self, u: f64) -> Result<PairGeometry> {
        PairGeometry::new(1.0, self.correlation(u)?)
    }

    /// P(‖S‖ > r) for S with density H (continuous shapes only).
    pub fn radial_tail(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return invalid(format!("radial_tail needs r >= 0, got {r}"));
        }
        if r == 0.0 {
            return Ok(1.0);
        }
        if self.dim == 1 {
            return Ok((2.0 * self.radial_survival(r)?).min(1.0));
        }
        Ok(match &self.shape {
            Shape::Cylinder { rho } => (1.0 - (r / rho).powi(2)).max(0.0),
            Shape::HalfBall { rho } => (1.0 - (r / rho).powi(2)).max(0.0).powf(1.5),
            Shape::Gaussian { rho } => (-0.5 * (r / rho).powi(2)).exp(),
            Shape::StudentT { rho, nu } => (1.0 + (r / rho).powi(2) / nu).powf(-0.5 * nu),
            Shape::Laplace { rho } => {
                let x = 2.0 * r / rho;
                // x·K₁(x), computed scaled to stay finite for large x
                x * bessel_k_scaled(1.0, x)? * (-x).exp()
            }
            Shape::Slash { rho } => {
                let a = 0.5 * (r / rho).powi(2);
                if a < 1e-8 {
                    1.0 - a / 3.0
                } else {
                    0.5 * PI.sqrt() * libm::erf(a.sqrt()) / a.sqrt()
                }
            }
            Shape::Nugget => return invalid("the nugget has no radial distribution"),
            Shape::ConvexSum { weights, parts } => {
                let mut total = 0.0;
                for (w, p) in weights.iter().zip(parts) {
                    if *w > 0.0 {
                        total += w * HeightFunction {
                            shape: p.clone(),
                            dim: self.dim,
                        }
                        .radial_tail(r)?;
                    }
                }
                total
            }
        })
    }

    /// Smallest r with P(‖S‖ > r) ≤ `tail`.
    pub fn radial_quantile_upper(&self, tail: f64) -> Result<f64> {
        if !(tail > 0.0 && tail < 1.0) {
            if tail >= 1.0 {
                return Ok(0.0);
            }
            return invalid(format!("tail probability must lie in (0, 1), got {tail}"));
        }
        if let Some(sr) = self.support_radius() {
            if self.radial_tail(sr)? <= tail {
                return bisect_radius(self, tail, 0.0, sr);
            }
        }
        let mut hi = self.scale().max(1e-12);
        while self.radial_tail(hi)? > tail {
            hi *= 2.0;
            if !hi.is_finite() {
                return invalid("radial quantile diverged");
            }
        }
        bisect_radius(self, tail, 0.0, hi)
    }

    /// Characteristic length used to size grids.
    pub fn scale(&self) -> f64 {
        match &self.shape {
            Shape::Cylinder { rho }
            | Shape::HalfBall { rho }
            | Shape::Gaussian { rho }
            | Shape::StudentT { rho, .. }
            | Shape::Laplace { rho }
            | Shape::Slash { rho } => *rho,
            Shape::Nugget => 0.0,
            Shape::ConvexSum { parts, .. } => parts
                .iter()
                .map(|p| {
                    HeightFunction {
                        shape: p.clone(),
                        dim: self.dim,
                    }
                    .scale()
                })
                .fold(0.0, f64::max),
        }
    }
}

fn bisect_radius(h: &HeightFunction, tail: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h.radial_tail(mid)? <= tail {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Normalized lens area of two unit-radius discs at center distance 2z,
/// (2/π)(acos z − z√(1−z²)).
fn disc_lens(z: f64) -> f64 {
    if z >= 1.0 {
        0.0
    } else {
        (2.0 / PI) * (z.acos() - z * (1.0 - z * z).sqrt())
    }
}

/// ∫₀¹ w² e^{−a w²} dw.
fn slash_w2_integral(a: f64) -> f64 {
    if a < 1.0 {
        let mut term = 1.0;
        let mut sum = 1.0 / 3.0;
        for k in 1..60 {
            term *= -a / k as f64;
            let add = term / (2 * k + 3) as f64;
            sum += add;
            if add.abs() < 1e-17 * sum {
                break;
            }
        }
        sum
    } else {
        let sa = a.sqrt();
        PI.sqrt() * libm::erf(sa) / (4.0 * a * sa) - (-a).exp() / (2.0 * a)
    }
}

/// The linear approximation (1 − u/2ρ)₊ to the cylinder correlation.
pub fn correlation_linear_approx(rho: f64, u: f64) -> Result<f64> {
    if !(rho > 0.0) {
        return invalid(format!("rho must be > 0, got {rho}"));
    }
    if !(u >= 0.0) {
        return invalid(format!("lag must be >= 0, got {u}"));
    }
    Ok((1.0 - u / (2.0 * rho)).max(0.0))
}

/// Free-standing form of [`HeightFunction::correlation`].
pub fn correlation(h: &HeightFunction, u: f64) -> Result<f64> {
    h.correlation(u)
}

/// Free-standing form of [`HeightFunction::radial_survival`].
pub fn radial_survival(h: &HeightFunction, r: f64) -> Result<f64> {
    h.radial_survival(r)
}

/// Free-standing form of [`HeightFunction::pair_geometry`].
pub fn pair_geometry(h: &HeightFunction, u: f64) -> Result<PairGeometry> {
    h.pair_geometry(u)
}
