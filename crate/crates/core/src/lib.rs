//! Stability analysis for Gabor-transform phase retrieval.
//!
//! The crate estimates the Cheeger constant of spectrogram-weighted time-frequency grids by
//! spectral clustering, partitions the plane into well-connected components, evaluates the
//! resulting multicomponent stability bound, and inverts noiseless spectrograms through the
//! ambiguity-function factorization.
//!
//! | module | contents |
//! |--------|----------|
//! | [`signal`] | sampled signals, WAV/CSV ingestion, Gaussian test signals |
//! | [`gabor`] | Gabor transform, ambiguity function, gradients, holomorphy checks |
//! | [`graph`] | weighted grid graphs, cuts, brute-force Cheeger constant |
//! | [`spectral`] | normalized Laplacian, Fiedler vector, sweep cuts |
//! | [`partition`] | recursive bipartitioning and the stability bound |
//! | [`stability`] | measurement norms, phase distance, zero counts, instability sweep |
//! | [`reconstruct`] | spectrogram inversion by regularized deconvolution |
//! | [`io`] | binary field files, SVG and CSV output |

pub mod cli;
pub mod distance;
pub mod error;
pub mod gabor;
pub mod graph;
pub mod io;
pub mod partition;
pub mod reconstruct;
pub mod signal;
pub mod spectral;
pub mod stability;

pub use error::{Error, Result};
