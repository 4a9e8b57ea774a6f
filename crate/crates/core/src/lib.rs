//! Coordinated transmit beamforming for multi-antenna network ISAC.
//!
//! - [`model`]: scene geometry, steering vectors, path gains, channels.
//! - [`detection`]: reflection energy, closed-form detection probabilities and
//!   a Monte Carlo detector.
//! - [`optimizer`]: relaxation-based beamforming design and the
//!   communication-only benchmark.
//! - [`harness`]: configuration, sweeps, validation runs and result files.

pub mod detection;
pub mod harness;
pub mod model;
pub mod optimizer;
pub mod rng;
