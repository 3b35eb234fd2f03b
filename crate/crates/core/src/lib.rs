//! Subspace filtering of powder X-ray diffraction intensity profiles.
//!
//! The filter models a sampled intensity profile as a short sum of
//! exponentially damped complex sinusoids. The model is estimated from the
//! leading singular triplets of the Hankel matrix built from the samples:
//! a Lanczos bidiagonalization with partial reorthogonalization computes the
//! truncated SVD (with FFT-accelerated Hankel products), a shift-invariance
//! least-squares step recovers the signal poles, and a final least squares
//! yields amplitudes and phases. Reconstructing the model gives the filtered
//! profile.
//!
//! The crate also ships a Debye-function generator for synthetic nanocrystal
//! powder patterns (cuboctahedral, icosahedral and decahedral clusters with
//! log-normal size distributions), Poisson noise injection with reproducible
//! counter-based seeding, and a Monte Carlo harness that measures filter
//! performance over noise realizations.
//!
//! Data-parallel inner loops (pair-distance histograms, per-angle Debye
//! sums, Monte Carlo runs) use rayon when the default `parallel` feature is
//! enabled and fall back to sequential code without it; results are
//! bitwise-identical either way.

pub mod cluster;
pub mod debye;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod hankel;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod noise;
pub mod order;
pub mod rng;
pub mod svd;
pub mod synth;

pub use error::{Error, Result};
pub use grid::{AngularGrid, IntensityProfile};
pub use model::{DampedSinusoid, ModelEstimate};
