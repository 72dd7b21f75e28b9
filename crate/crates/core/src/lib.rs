//! Simulation library for multiuser mmWave hybrid beamforming with
//! imperfect phase shifters.
//!
//! A base station with a large half-wavelength ULA serves single-RF-chain
//! users through a fully-connected phase-shifter network whose per-element
//! gain and phase are Gaussian-perturbed. The crate provides:
//!
//! - Rician multiuser channel generation ([`geometry`])
//! - phase quantization, impairment profiles, and DFT training pilots
//!   ([`rf`])
//! - SVD-based analog beamformer design, user scheduling, and ZF/RZF
//!   digital precoding ([`beamforming`])
//! - exact and closed-form interference statistics, sum rates, the
//!   high-SNR ceiling, and non-silent-user statistics ([`rate`])
//! - the four-stage downlink estimation pipeline that removes the ceiling
//!   ([`estimation`])
//! - a deterministic Monte-Carlo harness with CSV output ([`harness`])

pub mod beamforming;
pub mod config;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod rate;
pub mod rf;
pub mod rng;
pub mod stats;
pub mod trial;

pub use beamforming::{EquivalentChannel, HybridBeamformer, SchedulePolicy};
pub use config::{Method, NoiseConvention, Precoder, ScenarioConfig};
pub use error::{Error, Result};
pub use estimation::{AodEstimate, Stage1Observation};
pub use geometry::{ArrayResponse, ChannelRealization, PathSet};
pub use harness::ResultRow;
pub use linalg::{svd, CMat, Svd, C64};
pub use rate::{ImpairmentMoments, InterferenceForm, RateResult};
pub use rf::{AnalogMatrix, PhaseErrorProfile, PhaseResolution, PilotVariant};
