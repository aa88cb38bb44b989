use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ChoiceProfile, NormalFormGame};
use crate::schedule::ExplorationSchedule;

use super::trajectory::{check_schedules, rates_at, QValueState, Trajectory};

/// How a batch of `n` identical updates of one memory is collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// Exact unroll of `Q <- (1 - alpha) Q + alpha r`:
    /// `(1 - alpha)^n q + r (1 - (1 - alpha)^n)`.
    #[default]
    Stepwise,
    /// Unroll of `Q <- r + (1 - alpha) Q` taken one step further:
    /// `(1 - alpha)^n q + (r / alpha) (1 - (1 - alpha)^(n + 1))`. Its fixed
    /// point `r / alpha` makes the Boltzmann temperature depend on `alpha`.
    /// At `alpha = 0` it becomes `q + (n + 1) r`.
    Accumulating,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1), got {alpha}")));
    }
    Ok(())
}

/// One memory update of action `i` of player `k`.
pub fn q_update_step(q: &QValueState, k: usize, i: usize, reward: f64, alpha: f64) -> Result<QValueState> {
    check_alpha(alpha)?;
    let slot = q
        .q
        .get(k)
        .and_then(|qk| qk.get(i))
        .ok_or_else(|| Error::InvalidParameter(format!("no memory for player {k}, action {i}")))?;
    let mut next = q.clone();
    next.q[k][i] = (1.0 - alpha) * slot + alpha * reward;
    Ok(next)
}

/// `x_i = exp(beta q_i) / sum_j exp(beta q_j)`, computed with max subtraction.
pub fn boltzmann_distribution(q_k: &[f64], beta: f64) -> Result<Vec<f64>> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be non-negative, got {beta}")));
    }
    if q_k.is_empty() || q_k.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("memories must be finite and non-empty".into()));
    }
    let m = q_k.iter().map(|v| beta * v).fold(f64::NEG_INFINITY, f64::max);
    let mut x: Vec<f64> = q_k.iter().map(|v| (beta * v - m).exp()).collect();
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    Ok(x)
}

/// Collapses `n` updates of one memory under a constant reward.
pub fn batch_q_update(q: f64, reward: f64, alpha: f64, n: u128, mode: BatchMode) -> Result<f64> {
    check_alpha(alpha)?;
    let n = n as f64;
    let decay = (1.0 - alpha).powf(n);
    Ok(match mode {
        BatchMode::Stepwise => decay * q + reward * (1.0 - decay),
        BatchMode::Accumulating if alpha == 0.0 => q + (n + 1.0) * reward,
        BatchMode::Accumulating => decay * q + reward / alpha * (1.0 - decay * (1.0 - alpha)),
    })
}

/// Splits `m` interactions over actions in proportion to `x`, rounding by
/// largest remainder so that the counts sum to exactly `m`.
pub fn allocate_interactions(m: u128, x: &[f64]) -> Vec<u128> {
    let scaled: Vec<f64> = x.iter().map(|&p| m as f64 * p.max(0.0)).collect();
    let mut n: Vec<u128> = scaled.iter().map(|&f| f.floor() as u128).collect();
    let frac: Vec<f64> = scaled.iter().zip(&n).map(|(&f, &c)| f - c as f64).collect();
    let mut order: Vec<usize> = (0..x.len()).collect();
    // stable sort keeps ties in index order
    order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]));
    let total: u128 = n.iter().sum();
    if total <= m {
        let mut left = m - total;
        for &i in order.iter().cycle() {
            if left == 0 {
                break;
            }
            n[i] += 1;
            left -= 1;
        }
    } else {
        // floating rounding overshot; trim the smallest fractional parts
        let mut extra = total - m;
        for &i in order.iter().rev().cycle() {
            if extra == 0 {
                break;
            }
            if n[i] > 0 {
                n[i] -= 1;
                extra -= 1;
            }
        }
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteOptions {
    /// Number of choice-distribution updates.
    pub epochs: usize,
    /// Memory updates per choice-distribution update, `M`.
    pub interactions: u128,
    /// Schedule time spanned by all epochs; epoch `e` samples the schedules
    /// at `e * horizon / epochs`.
    pub horizon: f64,
    pub mode: BatchMode,
    pub record_stride: usize,
}

impl DiscreteOptions {
    pub fn new(epochs: usize, interactions: u128, horizon: f64) -> Self {
        Self {
            epochs,
            interactions,
            horizon,
            mode: BatchMode::default(),
            record_stride: 1,
        }
    }

    pub fn mode(mut self, mode: BatchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }
}

/// Starts from memories `ln(x0) / beta_k(0)`, which reproduce `x0` exactly.
pub fn simulate_discrete(
    game: &NormalFormGame,
    schedules: &[ExplorationSchedule],
    x0: &ChoiceProfile,
    opts: &DiscreteOptions,
) -> Result<Trajectory> {
    game.check_profile(x0)?;
    check_schedules(game, schedules)?;
    let (start, clamped) = x0.clamp_interior();
    let q0 = QValueState {
        q: start
            .strategies()
            .iter()
            .zip(schedules)
            .map(|(xk, s)| xk.iter().map(|p| p.ln() / s.beta()).collect())
            .collect(),
    };
    run(game, schedules, q0, opts, clamped)
}

pub fn simulate_discrete_from_q(
    game: &NormalFormGame,
    schedules: &[ExplorationSchedule],
    q0: QValueState,
    opts: &DiscreteOptions,
) -> Result<Trajectory> {
    check_schedules(game, schedules)?;
    if q0.q.len() != game.num_players()
        || q0.q.iter().zip(game.action_counts()).any(|(qk, &n)| qk.len() != n)
    {
        return Err(Error::InvalidParameter("memory shape does not match the game".into()));
    }
    run(game, schedules, q0, opts, false)
}

fn run(
    game: &NormalFormGame,
    schedules: &[ExplorationSchedule],
    mut q: QValueState,
    opts: &DiscreteOptions,
    clamped: bool,
) -> Result<Trajectory> {
    if opts.interactions == 0 {
        return Err(Error::InvalidParameter("need at least one interaction per epoch".into()));
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {}",
            opts.horizon
        )));
    }
    let stride = opts.record_stride.max(1);
    let dt = opts.horizon / opts.epochs.max(1) as f64;
    let rates0 = rates_at(schedules, 0.0)?;
    let mut x = q
        .q
        .iter()
        .zip(&rates0)
        .map(|(qk, r)| boltzmann_distribution(qk, r.beta))
        .collect::<Result<Vec<_>>>()?;
    let mut traj = Trajectory::new(game, true, clamped);
    traj.push(game, 0.0, x.clone(), rates0, Some(q.clone()))?;

    for e in 0..opts.epochs {
        let rates = rates_at(schedules, e as f64 * dt)?;
        let rewards = game.all_rewards(&x);
        for k in 0..game.num_players() {
            let counts = allocate_interactions(opts.interactions, &x[k]);
            for (i, &n) in counts.iter().enumerate() {
                q.q[k][i] = batch_q_update(q.q[k][i], rewards[k][i], rates[k].alpha, n, opts.mode)?;
            }
            x[k] = boltzmann_distribution(&q.q[k], rates[k].beta)?;
        }
        if q.q.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure {
                time: (e + 1) as f64 * dt,
                norm: f64::INFINITY,
            });
        }
        if (e + 1) % stride == 0 || e + 1 == opts.epochs {
            let t1 = (e + 1) as f64 * dt;
            traj.push(game, t1, x.clone(), rates_at(schedules, t1)?, Some(q.clone()))?;
        }
    }
    Ok(traj)
}
