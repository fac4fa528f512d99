//! Mesh data model, discrete differential operators and deformation solvers
//! for steering the geometry of a running finite element simulation.
//!
//! Everything numeric is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`). The `*64` aliases at the bottom of this
//! file name the double-precision instantiations used by the server, bridge
//! and command line tools.

pub mod error;
pub mod geometry;
pub mod mesh;
pub mod operators;
pub mod real;
pub mod skeleton;
pub mod solve;
pub mod sparse;
pub mod surface_deform;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::{Point3, Vec3};
pub use mesh::{DisplacementField, QualityStats, SurfaceMesh, TetMesh};
pub use real::Real;
pub use sparse::SparseMatrix;

pub type Vec3f64 = Vec3<f64>;
pub type TetMesh64 = TetMesh<f64>;
pub type SurfaceMesh64 = SurfaceMesh<f64>;
pub type DisplacementField64 = DisplacementField<f64>;
pub type QualityStats64 = QualityStats<f64>;
pub type SparseMatrix64 = SparseMatrix<f64>;
pub type CurveSkeleton64 = skeleton::CurveSkeleton<f64>;
pub type PartitionedMesh64 = volume::PartitionedMesh<f64>;
