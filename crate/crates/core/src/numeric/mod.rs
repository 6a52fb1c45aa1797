//! Special functions, quadrature and random streams.

pub mod bessel;
pub mod quad;
pub mod rng;
pub mod special;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k};
pub use quad::{integrate, QuadratureSpec};
pub use rng::{derive_seed, stream, RngStream};
pub use special::{
    ln_std_normal_sf, log_gamma, std_normal_cdf, std_normal_pdf, std_normal_sf, student_t_cdf,
    student_t_sf,
};
