//! Numerical geometry of complex and quaternionic hyperbolic spaces: Busemann
//! calculus, isometries, boundary measures and barycenters, the natural map
//! between boundaries and the spectral inequality behind its Jacobian bound.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod barycenter;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod hvec;
pub mod io;
pub mod isometry;
pub mod measures;
pub mod natural_map;
pub mod qmatrix;
pub mod quat;
pub mod rigidity;
pub mod sampling;
pub mod spectrum;
pub mod suites;

pub use algebra::{ScalarAlgebra, Space};
pub use error::{Error, Result};
pub use exec::Execution;
pub use geometry::{BoundaryPoint, Frame, Point, TangentVector};
pub use hvec::HVec;
pub use isometry::{Isometry, IsometryClass, IsometryKind, Representation};
pub use qmatrix::QMatrix;
pub use quat::Quat;
