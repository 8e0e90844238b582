//! Cross-subject seizure detection with adversarial domain adaptation.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`signal`] — multichannel recordings, 1 s windowing, and a synthetic
//!    cohort generator with controllable inter-subject domain shift.
//! 2. [`features`] — the 11 per-channel seizure biomarkers (line-length,
//!    power, variance, 8 band powers) plus z-score normalization.
//! 3. [`adaptation`] — per-subject autoencoders trained adversarially
//!    against a shared subject discriminator ([`nn`] supplies the dense
//!    network stack), yielding a subject-invariant latent space.
//! 4. [`gbtree`] — weighted gradient-boosted trees scoring seizure
//!    probability on the latent features.
//! 5. [`eval`] — block-wise n-shot splits, AUC scoring, and the
//!    multi-trial SS-vs-CS experiment runner.
//!
//! [`embed`] provides exact t-SNE for visualizing feature and latent
//! distributions, and [`persist`] the `SZAD1` binary model format.

pub mod adaptation;
pub mod embed;
pub mod error;
pub mod eval;
pub mod features;
pub mod gbtree;
pub mod mat;
pub mod nn;
pub mod persist;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
