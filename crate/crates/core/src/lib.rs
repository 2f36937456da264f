//! Multiway (tensor-valued) data containers and Kronecker-structured linear
//! algebra.
//!
//! Tensors are stored colexicographically so their flat buffer is `vec(X)`.
//! Per-mode factors are always indexed by the tensor mode they act on.

pub mod eig;
pub mod error;
pub mod io;
pub mod linalg;
pub mod ops;
pub mod structured;
pub mod tensor;

pub use eig::EigKronSum;
pub use error::{CoreError, Result};
pub use ops::{mode_gram, partial_trace, rearrange, rearrange_inverse, sample_covariance};
pub use structured::{FactorSet, Normalization, Structure, StructuredMatrix};
pub use tensor::Tensor;

pub use nalgebra::{DMatrix, DVector};
