//! Differentially private counterfactual explanations.
//!
//! The pipeline has two halves. The model owner trains an autoencoder under a
//! perturbed objective (the functional mechanism: Laplace noise on the
//! polynomial coefficients of the reconstruction loss), averages latent
//! encodings into per-class prototypes, and answers explanation queries by
//! searching a perturbation of the target-class prototype. Because all data
//! access happens during prototype construction, everything downstream is
//! post-processing and inherits the privacy guarantee.
//!
//! The adversary half ([`attacks`]) measures what an attacker gains from the
//! released explanations: surrogate extraction from transfer sets, threshold
//! and learned membership inference, and attribute inference.
//!
//! With the `parallel` feature (default), Monte Carlo loops and batch query
//! evaluation run on a rayon pool; results are bit-identical to the
//! sequential fallback because every work item owns an rng forked by index.

pub mod attacks;
pub mod autoencoder;
pub mod classifier;
pub mod counterfactual;
pub mod data;
pub mod error;
pub mod exec;
pub mod mechanism;
pub mod model_io;
pub mod numerics;
pub mod rng;

pub use error::{Error, Result};
pub use rng::RngState;
