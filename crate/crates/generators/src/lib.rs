//! Finite-difference operators for the Poisson, Poisson-AR(1) and
//! convection-diffusion processes, their ground-truth precision matrices,
//! and seeded samplers.

pub mod error;
pub mod operators;
pub mod sample;
pub mod spec;
pub mod truth;

pub use error::{GenError, Result};
pub use operators::{ar1_bidiagonal, difference_1d, laplacian_1d};
pub use sample::sample_process;
pub use spec::{ProcessKind, ProcessParams, ProcessSpec};
pub use truth::{build, build_convection_diffusion, convection_diffusion_operator, build_poisson_2d, build_poisson_ar1, GroundTruth};
