//! Gaussian word embeddings.
//!
//! Every word is a spherical Gaussian `N(mean, sigma^2 I)`. Means and
//! deviations are learned by skip-gram style negative sampling where the
//! energy of a (word, context) pair is the negated closed-form
//! Wasserstein-2 distance plus a bias. Knowledge-graph relations can be
//! mixed in as a second kind of context; the asymmetric `IsA` relation
//! then uses a KL-divergence energy.
//!
//! The numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common case.

pub mod artifactio;
pub mod corpus;
pub mod evalsuite;
pub mod geometry;
pub mod relations;
pub mod scalar;
pub mod trainer;

pub use scalar::Scalar;

/// Spherical Gaussian with `f64` parameters.
pub type Gaussian = geometry::GaussianWord<f64>;
/// Spherical Gaussian with `f32` parameters.
pub type Gaussian32 = geometry::GaussianWord<f32>;
/// Diagonal Gaussian with `f64` parameters.
pub type DiagGaussian = geometry::DiagonalGaussian<f64>;
/// Embedding table with `f64` parameters; the on-disk model format stores 64-bit floats.
pub type Embeddings = trainer::EmbeddingMatrix<f64>;
/// Embedding table with `f32` parameters.
pub type Embeddings32 = trainer::EmbeddingMatrix<f32>;
/// A loaded model (word list plus `f64` parameters).
pub type Model = artifactio::Model<f64>;
