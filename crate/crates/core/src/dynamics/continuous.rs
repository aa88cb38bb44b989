use crate::error::{Error, Result};
use crate::game::{ChoiceProfile, NormalFormGame};
use crate::schedule::ExplorationSchedule;

use super::field::{from_log_ratio, log_ratio_field, to_log_ratio};
use super::trajectory::{check_schedules, rates_at, Trajectory};

/// Field norm above which a step is split.
const NORM_LIMIT: f64 = 1e3;
const MAX_HALVINGS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub t_end: f64,
    pub step: f64,
    /// Record every `record_stride`-th step; the first and last states are
    /// always recorded.
    pub record_stride: usize,
}

impl IntegrateOptions {
    pub fn new(t_end: f64, step: f64) -> Self {
        Self {
            t_end,
            step,
            record_stride: 1,
        }
    }

    pub fn stride(mut self, record_stride: usize) -> Self {
        self.record_stride = record_stride;
        self
    }
}

pub fn integrate_sql(
    game: &NormalFormGame,
    schedules: &[ExplorationSchedule],
    x0: &ChoiceProfile,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    integrate_sql_with(game, schedules, x0, &IntegrateOptions::new(t_end, step))
}

/// Classical RK4 in log-ratio coordinates with rates frozen over each step.
pub fn integrate_sql_with(
    game: &NormalFormGame,
    schedules: &[ExplorationSchedule],
    x0: &ChoiceProfile,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    game.check_profile(x0)?;
    check_schedules(game, schedules)?;
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {}", opts.step)));
    }
    if !(opts.t_end >= 0.0 && opts.t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_end must be non-negative, got {}", opts.t_end)));
    }
    let stride = opts.record_stride.max(1);
    let counts = game.action_counts();
    let (start, clamped) = x0.clamp_interior();
    let mut y = to_log_ratio(start.strategies());
    let mut traj = Trajectory::new(game, false, clamped);
    traj.push(game, 0.0, start.into_strategies(), rates_at(schedules, 0.0)?, None)?;

    let steps = (opts.t_end / opts.step).round() as usize;
    let h0 = if steps == 0 { 0.0 } else { opts.t_end / steps as f64 };
    for n in 0..steps {
        let t = n as f64 * h0;
        let points = rates_at(schedules, t)?;
        let rates: Vec<(f64, f64)> = points.iter().map(|p| (p.alpha, p.beta)).collect();
        let f = |y: &[f64]| log_ratio_field(game, &rates, y);

        let norm = f(&y).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !norm.is_finite() {
            return Err(Error::StepFailure { time: t, norm });
        }
        let mut halvings = 0;
        while norm / f64::from(1u32 << halvings.min(31)) > NORM_LIMIT {
            halvings += 1;
            if halvings > MAX_HALVINGS {
                return Err(Error::StepFailure { time: t, norm });
            }
        }
        let substeps = 1usize << halvings;
        let h = h0 / substeps as f64;
        for _ in 0..substeps {
            rk4_step(&f, &mut y, h);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepFailure { time: t + h0, norm });
        }
        if (n + 1) % stride == 0 || n + 1 == steps {
            let t1 = (n + 1) as f64 * h0;
            traj.push(game, t1, from_log_ratio(counts, &y), rates_at(schedules, t1)?, None)?;
        }
    }
    Ok(traj)
}

fn rk4_step(f: &impl Fn(&[f64]) -> Vec<f64>, y: &mut [f64], h: f64) {
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(k).map(|(ai, ki)| ai + s * ki).collect()
    };
    let k1 = f(y);
    let k2 = f(&axpy(y, &k1, h / 2.0));
    let k3 = f(&axpy(y, &k2, h / 2.0));
    let k4 = f(&axpy(y, &k3, h));
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}
