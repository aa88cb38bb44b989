//! Smooth Q-learning in normal-form games.
//!
//! Continuous and discrete learning dynamics with exploration schedules,
//! logit (quantal response) equilibria and their folds, regret and
//! potential-based diagnostics, and experiment orchestration.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtins;
pub mod coordination;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod game;
pub mod metrics;
pub mod potential;
pub mod projection;
pub mod qre;
pub mod schedule;

pub use error::{Error, Result};
pub use game::{AgentParams, ChoiceProfile, GameFile, NormalFormGame};
pub use potential::WeightedPotential;
pub use schedule::{ExplorationSchedule, RampShape, ScheduleKind};
