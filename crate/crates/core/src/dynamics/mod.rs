//! Continuous and discrete engines for smooth Q-learning.

mod continuous;
mod discrete;
mod field;
mod trajectory;

pub use continuous::{integrate_sql, integrate_sql_with, IntegrateOptions};
pub use discrete::{
    allocate_interactions, batch_q_update, boltzmann_distribution, q_update_step, simulate_discrete,
    simulate_discrete_from_q, BatchMode, DiscreteOptions,
};
pub use field::sql_vector_field;
pub use trajectory::{QValueState, Trajectory};

pub(crate) use field::{from_log_ratio, log_ratio_field, to_log_ratio};
pub(crate) use trajectory::fmt as fmt_float;
