//! Simulation and closed-form analysis of a single-carrier massive MIMO
//! uplink whose users transmit with residual carrier-frequency offsets.
//!
//! The system model: `K` single-antenna users send time-domain frames to a
//! base station with `M` antennas over frequency-selective block-fading
//! channels with `L` taps. Each frame is one coherence interval: a dedicated
//! CFO-estimation slot of `N` samples followed by an uplink slot of `N_U`
//! samples carrying per-user channel-training impulses and data. The
//! receiver estimates each user's CFO from periodic impulses in the first
//! slot, derotates, estimates channels, and detects data with time-reversed
//! maximum-ratio combining.
//!
//! The crate provides both sides of the story:
//!
//! * **Closed forms** ([`analytic`], [`cfo`]): the CFO-estimator error
//!   variance, the per-component interference variances at the detector
//!   output, the resulting SINR and achievable rate, minimum-SNR solvers for
//!   a target rate, and the large-`M` SNR gap to a CFO-free system.
//! * **Waveform simulation** ([`frame`], [`channel`], [`chest`], [`trmrc`],
//!   [`montecarlo`]): sample-level transmit/propagate/receive machinery and
//!   a deterministic Monte-Carlo harness that decomposes the detector output
//!   into signal, interference, and noise components and checks their
//!   measured variances against the closed forms.
//!
//! Entry points: [`config::SystemConfig`] describes a system,
//! [`analytic::rate`] and [`analytic::snr_gap_db`] evaluate the closed
//! forms, and [`montecarlo::run_trials`] + [`montecarlo::compare`] validate
//! them by simulation.

pub mod analytic;
pub mod cfo;
pub mod channel;
pub mod chest;
pub mod config;
pub mod error;
pub mod frame;
pub mod montecarlo;
pub mod trmrc;

pub use config::SystemConfig;
pub use error::{Error, Result};
