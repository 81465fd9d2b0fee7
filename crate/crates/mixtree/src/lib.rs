//! Hierarchical tensor decompositions over binary mode trees, mixed
//! decompositions that exchange tensors between two trees at chosen mixture
//! nodes, and exact matricization-rank analysis of the generated grid
//! tensors.
//!
//! The crate is organized around six pieces:
//!
//! - [`scalar`] / [`tensor`]: exact-rational (or f64) dense tensors with the
//!   outer product, its generalized form, mode permutation, matricization,
//!   and the Kronecker product.
//! - [`rank`]: exact integer-preserving Gaussian elimination and a numeric
//!   SVD backend for matrix rank.
//! - [`tree`]: binary mode trees, the bit-split tree families, tilings of
//!   index sets, and the combinatorial rank bounds they induce.
//! - [`decomp`]: the tree decomposition, the mixed decomposition, hybrid
//!   tree enumeration, and the constructive weight assignments.
//! - [`network`]: forward-pass semantics of the matching dilated
//!   convolutional networks and the exhaustive grid-tensor oracle.
//! - [`analysis`]: verification suites tying the above together into
//!   machine-checkable reports.

pub mod analysis;
pub mod decomp;
pub mod error;
pub mod exec;
pub mod io;
pub mod modes;
pub mod network;
pub mod rank;
pub mod scalar;
pub mod tensor;
pub mod tree;

pub use error::{Error, Result};
pub use modes::{parse_index_spec, ModeSet};
pub use scalar::{BinaryOp, Scalar, ScalarKind};
pub use tensor::{DenseTensor, MatrixView};
