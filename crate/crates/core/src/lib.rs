//! Rank-one convexification of nonconvex energy densities by hierarchical
//! sequences of laminates.
//!
//! The crate is `no_std` and needs only `alloc`. Tensors are fixed-size
//! (`D = 2` or `3`), the direction set and lamination trees live on the heap.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod convexify;
pub mod directions;
pub mod energy;
pub mod error;
pub mod hroc;
mod math;
pub mod microstructure;
pub mod tensor;
pub mod tree;

pub use convexify::{convexify, Bracket, ConvexHull1D, Convexifier, SampledLine};
pub use directions::{scale_direction, ConvexifyParams, DirectionSet, Dyad, LineSampling};
pub use energy::EnergyDensity;
pub use error::Error;
pub use hroc::{hroc, hroc_kernel, ContinuityCache, Hroc, HrocResult, LaminateCandidate, PointKey};
pub use tensor::{Matrix, Matrix2, Matrix3, Tensor4, Vector};
pub use tree::{check_hm, HSequence, Split, TreeNode};
