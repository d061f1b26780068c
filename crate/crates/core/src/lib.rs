//! Numerical construction of the Blaschke-Santalo diagram of the pair
//! (first Dirichlet eigenvalue, inverse torsional rigidity) over planar
//! convex domains.
//!
//! Every shape is reduced to the scale-invariant coordinates
//! `x = lambda_1 |Omega|` and `y = |Omega|^2 / T`, computed with conforming
//! P1 finite elements and Richardson extrapolation.

pub mod diagram;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod optimize;
pub mod shapederiv;
pub mod special;

pub use fem::{evaluate_shape, FemConfig, ShapeMetrics};
pub use geometry::{ConvexPolygon, SupportFunction, Vec2};
pub use mesh::TriMesh;

