//! Queueing model of the receptor-side reception process in diffusion-based
//! drug delivery.
//!
//! * [`params`]: configuration and reception-space capacity `N_m`
//! * [`diffusion`]: point-source channel, concentration, enter rate `λ`
//! * [`queue`]: rejection rate `γ`, state-dependent rates, birth-death
//!   steady state
//! * [`dosage`]: occupancy factor and the release interval `[Q_min, Q_max]`
//! * [`sim`]: exact stochastic simulation of the chain, used to validate
//!   the analytic steady state
//! * [`cli`]: sweep tables behind the `mcrx` binary

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diffusion;
pub mod dosage;
pub mod error;
pub mod params;
pub mod queue;
pub mod sim;

pub use error::{Error, Result};
pub use params::{load_params, SystemParams};
pub use queue::{build_chain, steady_state, ChainOptions, ChainSpec, RateSet, SteadyState};
