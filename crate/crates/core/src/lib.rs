//! Exact integrated positional encoding (EIPE) of pyramidal frusta.
//!
//! The integrated positional encoding of a region is the volume average of
//! the sinusoidal feature lift `sin(2^l x_k)`, `cos(2^l x_k)` over that
//! region. For any flat-faced polyhedron this average has a closed form: the
//! divergence theorem turns each volume integral into a sum of triangle
//! surface integrals, and each triangle integral is a second divided
//! difference of `cos` or `sin` at the triangle's vertex coordinates.
//!
//! Modules:
//!
//! | module | contents |
//! |--------|----------|
//! | [`geometry`] | camera poses, pyramidal frusta, triangulation, volume, scene contraction |
//! | [`exact`] | per-triangle coefficients, degenerate limits, the underflow guard, [`exact::eipe`] |
//! | [`baseline`] | point encoding, Gaussian IPE, cone moments, contracted Gaussians, square-pyramid closed form |
//! | [`oracle`] | tetrahedral decomposition and Monte-Carlo ground truth |
//! | [`render`] | stratified interval sampling and emission-absorption compositing |
//! | [`analysis`] | EIPE-vs-IPE sweeps, underflow scans, encode tables and their CSV forms |
//! | [`corpus`] | seeded random frusta and cones used by tests and the CLI |

pub mod analysis;
pub mod baseline;
pub mod corpus;
mod error;
pub mod exact;
pub mod geometry;
mod numeric;
pub mod oracle;
pub mod render;

pub use error::{Error, Result};
pub use exact::{EncodingVector, Guard};
pub use geometry::{CameraPose, Frustum, TriangleFace};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;
