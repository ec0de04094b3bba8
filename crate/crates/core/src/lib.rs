//! Achievable-rate analysis of mixed-ADC massive MIMO uplink receivers.
//!
//! A base station with `N` antennas owns only `K` pairs of high-resolution
//! ADCs; the remaining `N - K` antennas are sampled by one-bit quantizers.
//! Rates are measured by the generalized mutual information (GMI) of a
//! Gaussian codebook with nearest-neighbor decoding after a linear combiner.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: Hermitian positive-definite solves and quadratic forms.
//! - [`rng`] and [`exec`]: reproducible substreams and worker-count
//!   independent parallel evaluation.
//! - [`channel`]: channel types, Rayleigh draws and ADC switch vectors.
//! - [`gmi`]: closed-form moments, the LMMSE combiner and the GMI.
//! - [`asymptotics`], [`dithering`], [`ergodic`], [`multiuser`],
//!   [`outage`], [`energy`]: the analyses built on top of [`gmi`].
//! - [`oracle`]: brute-force Monte Carlo estimators of the defining
//!   expectations, used to validate every closed form.
//!
//! Noise power is normalised to one throughout, so the single-user SNR equals
//! the symbol energy `es`. All rates are in nats unless a name says otherwise.

#![allow(clippy::needless_range_loop)]

pub mod asymptotics;
pub mod channel;
pub mod dithering;
pub mod energy;
pub mod ergodic;
mod error;
pub mod exec;
pub mod gmi;
pub mod multiuser;
pub mod numerics;
pub mod oracle;
pub mod outage;
pub mod rng;

pub use channel::{AdcSwitch, EstimatedChannel, SimoChannel};
pub use dithering::DitherPolicy;
pub use energy::{EfficiencyPoint, PowerModel};
pub use ergodic::{ErgodicBounds, SwitchPolicy, TrainingConfig};
pub use error::{Error, Result};
pub use exec::Executor;
pub use gmi::{Architecture, GmiResult, MomentPair};
pub use multiuser::{MuGmiResult, MultiUserChannel, SwitchScheme};
pub use numerics::{ComplexVector, Estimate, HermitianMatrix, C64};
pub use rng::SimRng;

/// Converts a rate in nats to bits.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}
