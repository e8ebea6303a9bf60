//! Simulation and estimation toolkit for FDA-MIMO radar range–angle
//! estimation under transmit and receive carrier-frequency offsets.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds steering vectors and matched-filter outputs, both the
//!   exact (quadrature) form and the first-order Taylor form with its
//!   equalized offset-noise terms.
//! * [`noise_stats`] assembles the analytic offset-noise covariances, checks
//!   their structure and computes equalized SNRs.
//! * [`estimators`] holds 2D-MUSIC, row-MUSIC, cumulant MUSIC, OMP and the
//!   atomic-norm denoiser.
//! * [`crlb`] evaluates Fisher information and the diagonal CRLBs under the
//!   colored total covariance.
//! * [`experiments`] drives Monte-Carlo runs and table/figure reproduction.
//! * [`cli`] is the command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod complex_serde;
pub mod crlb;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod linalg;
pub mod model;
pub mod noise_stats;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use model::{OffsetModel, PulseDraw, RadarConfig, SignalMatrix, Target};

pub use num_complex::Complex64;
