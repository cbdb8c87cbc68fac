//! Design and simulation of spectrally shaped antipodal sensing waveforms
//! for random-modulation pre-integration acquisition, plus the sparse
//! recovery and signal models needed to evaluate them end to end.
//!
//! The crate is organized around the lifecycle of an experiment:
//!
//! * [`mat`], [`special`], [`qcqp`] — self-contained numerical kernels
//!   (dense symmetric eigensolver, Si/Ci, a simplex/quadratic-ball solver);
//! * [`spectral`] — frequency-domain waveform-spectrum design driven by the
//!   rakeness criterion (expected squared correlation with a signal class);
//! * [`eigen_design`] — the closed-form eigen-domain (Karhunen–Loève)
//!   solution of the same trade-off, with brute-force verification oracles;
//! * [`waveform`] — synthesis of antipodal (±1) chip sequences realizing a
//!   target spectrum or correlation matrix;
//! * [`rmpi`] — the acquisition model: projections, noise injection,
//!   restricted-isometry diagnostics;
//! * [`recon`] — orthogonal matching pursuit and ISTA with the usual
//!   debiasing, plus reconstruction-quality metrics;
//! * [`ecg`], [`gabor`], [`glyph`] — synthetic signal classes used by the
//!   experiments and their sparsity dictionaries;
//! * [`rng`], [`textio`] — determinism and serialization support.

pub mod ecg;
pub mod eigen_design;
pub mod error;
pub mod gabor;
pub mod glyph;
pub mod mat;
pub mod qcqp;
pub mod recon;
pub mod rmpi;
pub mod rng;
pub mod special;
pub mod spectral;
pub mod textio;
pub mod waveform;

pub use error::{Error, Result};
