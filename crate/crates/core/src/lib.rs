//! Coordinated multiuser MIMO beamforming for secondary systems that share
//! spectrum with a primary system under an interference cap.
//!
//! The crate is organised bottom-up:
//!
//! * [`channel`] draws channel realizations for the interference, broadcast
//!   and multiple-access system models.
//! * [`sinr`] builds the block-diagonal trace forms and evaluates SINRs,
//!   rates and constraint residuals.
//! * [`convex`] solves the transmit subproblems over block-diagonal PSD
//!   variables and provides the receive filter and rank-one extraction.
//! * [`algorithms`] runs the alternating fairness and sum-rate loops.
//! * [`experiment`] is the config-driven Monte Carlo runner.

// Negated comparisons make NaN fail every positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod channel;
pub mod convex;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod sinr;

pub use algorithms::{
    fairness_optimize, initialize_feasible, run_algorithm, srm_optimize, Algorithm, Mode,
    RunTrace, StopReason,
};
pub use channel::{generate_channels, nominal_power_budget, ChannelSet, ScenarioConfig, SystemModel};
pub use error::{ConfigError, ExperimentError, ModelError};
pub use linalg::{BlockDiag, C64, CMatrix, CRowVector, CVector};
pub use sinr::{BeamformerSet, BlockForms, ReducedForms};
