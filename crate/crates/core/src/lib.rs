//! Unsupervised deep features for binary (private / public) image
//! classification, computed from dumped CNN activation maps.
//!
//! The stages are:
//!
//! 1. [`pooling`]: global average pooling, signed square root, L2 norm.
//! 2. [`kmeans`]: a K-means codebook over the training features.
//! 3. [`encoding`]: triangle encoding against that codebook.
//! 4. [`fusion`]: optional serial concatenation of two layers' encodings.
//! 5. [`classifier`]: L2-regularized logistic regression with a bias input.
//!
//! [`io`] holds the file formats and [`pipeline`] wires the stages together.

pub mod classifier;
pub mod encoding;
pub mod error;
pub mod fusion;
pub mod io;
pub mod kmeans;
pub mod pipeline;
pub mod pooling;
pub mod synthetic;

pub use error::{Error, Result};
