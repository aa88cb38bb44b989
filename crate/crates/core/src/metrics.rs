//! Entropy, modified potential, Lyapunov audit and regret accounting.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::{fmt_float, Trajectory};
use crate::error::{Error, Result};
use crate::game::{dot, AgentParams, ChoiceProfile, NormalFormGame};
use crate::potential::{multilinear_unchecked, WeightedPotential};

/// Default bound on the per-step decrease of the modified potential at RK4
/// step `1e-2`.
pub const LYAPUNOV_TOL: f64 = 1e-8;

/// `H(x) = -<x, ln x>` with `0 ln 0 = 0`.
pub fn shannon_entropy(x: &[f64]) -> f64 {
    -x.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

/// `D(p || x)`, or `+inf` when `x` misses part of the support of `p`.
pub fn kl_divergence(p: &[f64], x: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&pi, &xi) in p.iter().zip(x) {
        if pi <= 0.0 {
            continue;
        }
        if xi <= 0.0 {
            return f64::INFINITY;
        }
        d += pi * (pi / xi).ln();
    }
    d.max(0.0)
}

/// `Phi(x) + sum_k (delta_k / w_k) H(x_k)`.
///
/// Dividing by the weight makes this a Lyapunov function for weighted
/// potential games as well; with unit weights it is the plain entropy bonus.
pub fn modified_potential(potential: &WeightedPotential, deltas: &[f64], profile: &ChoiceProfile) -> Result<f64> {
    let x = profile.strategies();
    let counts = potential.action_counts();
    if deltas.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            what: "deltas",
            expected: counts.len(),
            found: deltas.len(),
        });
    }
    if x.len() != counts.len() {
        return Err(Error::DimensionMismatch {
            what: "profile players",
            expected: counts.len(),
            found: x.len(),
        });
    }
    for (xk, &n) in x.iter().zip(counts) {
        if xk.len() != n {
            return Err(Error::DimensionMismatch {
                what: "profile actions",
                expected: n,
                found: xk.len(),
            });
        }
    }
    let bonus: f64 = deltas
        .iter()
        .zip(potential.weights())
        .zip(x)
        .map(|((d, w), xk)| d / w * shannon_entropy(xk))
        .sum();
    Ok(multilinear_unchecked(potential, x) + bonus)
}

/// `d/dt Phi^H` along the learning dynamics, in closed form:
/// `sum_k (beta_k / w_k) Var_{x_k}(r_k - delta_k ln x_k)`.
pub fn potential_ascent_rate(game: &NormalFormGame, params: &[AgentParams], profile: &ChoiceProfile) -> Result<f64> {
    let pot = game.potential().ok_or(Error::MissingPotential)?;
    profile.require_positive()?;
    let mut rate = 0.0;
    for (k, p) in params.iter().enumerate() {
        let xk = &profile.strategies()[k];
        let rh: Vec<f64> = game
            .reward_vector(profile, k)?
            .iter()
            .zip(xk)
            .map(|(r, x)| r - p.delta() * x.ln())
            .collect();
        let mean = dot(xk, &rh);
        let var: f64 = xk.iter().zip(&rh).map(|(x, r)| x * (r - mean).powi(2)).sum();
        rate += p.beta / pot.weights()[k] * var;
    }
    Ok(rate)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LyapunovAudit {
    Checked { max_decrease: f64, samples: usize },
    /// Monotonicity is only guaranteed for constant exploration rates.
    Skipped { reason: String },
}

impl LyapunovAudit {
    pub fn passes(&self, tol: f64) -> bool {
        match self {
            LyapunovAudit::Checked { max_decrease, .. } => *max_decrease <= tol,
            LyapunovAudit::Skipped { .. } => true,
        }
    }
}

/// Largest drop of `Phi^H` between consecutive samples.
pub fn lyapunov_audit(traj: &Trajectory, potential: &WeightedPotential) -> Result<LyapunovAudit> {
    let first = traj.schedule_values.first().ok_or(Error::EmptyTrajectory)?;
    let deltas: Vec<f64> = first.iter().map(|p| p.delta).collect();
    let varying = traj
        .schedule_values
        .iter()
        .any(|pts| pts.iter().zip(&deltas).any(|(p, d)| p.delta != *d));
    if varying {
        return Ok(LyapunovAudit::Skipped {
            reason: "exploration rates vary over time; the modified potential need not increase".into(),
        });
    }
    let values = traj
        .profiles
        .iter()
        .map(|x| modified_potential(potential, &deltas, x))
        .collect::<Result<Vec<_>>>()?;
    let max_decrease = values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    Ok(LyapunovAudit::Checked {
        max_decrease,
        samples: values.len(),
    })
}

/// Regret of one agent at every sample time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub agent: usize,
    pub times: Vec<f64>,
    /// Against the best fixed pure action in hindsight.
    pub regret: Vec<f64>,
    /// In the entropy-regularized game, against the best mixed strategy.
    pub regret_h: Vec<f64>,
    /// `-<p, ln x(0)>` with `p` the hindsight maximizer at that time.
    pub bound: Vec<f64>,
    /// Hindsight maximizer at the final time.
    pub hindsight: Vec<f64>,
}

impl RegretReport {
    /// Largest `regret_h - bound` over the run.
    pub fn worst_excess(&self) -> f64 {
        self.regret_h
            .iter()
            .zip(&self.bound)
            .map(|(r, b)| r - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Regret of agent `k` along `traj`, which must use constant rates for `k`.
///
/// Integrals are trapezoid sums over the stored samples. The regularized
/// benchmark `max_p int beta <p, r> + alpha H(p)` has the closed form
/// `alpha T logsumexp(beta R / (alpha T))` where `R = int r`, attained at
/// `p = softmax(R / (delta T))`.
pub fn regret(traj: &Trajectory, game: &NormalFormGame, k: usize) -> Result<RegretReport> {
    if traj.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if k >= game.num_players() {
        return Err(Error::InvalidParameter(format!("agent {k} out of range")));
    }
    let rates = traj.schedule_values[0][k];
    if traj.schedule_values.iter().any(|p| p[k] != rates) {
        return Err(Error::InvalidParameter(format!(
            "regret needs constant rates for agent {k}"
        )));
    }
    let (alpha, beta) = (rates.alpha, rates.beta);
    let n = game.action_counts()[k];
    let x0 = &traj.profiles[0].strategies()[k];
    if x0.iter().any(|&v| v <= 0.0) {
        return Err(Error::Domain("regret bound needs an interior start".into()));
    }

    let mut samples = Vec::with_capacity(traj.len());
    for x in &traj.profiles {
        let r = game.reward_vector(x, k)?;
        let xk = &x.strategies()[k];
        let u = dot(xk, &r);
        samples.push((r, u, beta * u + alpha * shannon_entropy(xk)));
    }

    let mut int_r = vec![0.0; n];
    let (mut int_u, mut int_uh) = (0.0, 0.0);
    let mut report = RegretReport {
        agent: k,
        times: traj.times.clone(),
        regret: Vec::with_capacity(traj.len()),
        regret_h: Vec::with_capacity(traj.len()),
        bound: Vec::with_capacity(traj.len()),
        hindsight: vec![1.0 / n as f64; n],
    };
    for s in 0..traj.len() {
        if s > 0 {
            let h = 0.5 * (traj.times[s] - traj.times[s - 1]);
            let (a, b) = (&samples[s - 1], &samples[s]);
            for (acc, (ra, rb)) in int_r.iter_mut().zip(a.0.iter().zip(&b.0)) {
                *acc += h * (ra + rb);
            }
            int_u += h * (a.1 + b.1);
            int_uh += h * (a.2 + b.2);
        }
        let t = traj.times[s] - traj.times[0];
        let best = int_r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        report.regret.push(best - int_u);
        let (benchmark, p) = if t <= 0.0 {
            (0.0, vec![1.0 / n as f64; n])
        } else if alpha == 0.0 {
            let i = int_r.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
            let mut p = vec![0.0; n];
            p[i] = 1.0;
            (beta * best, p)
        } else {
            let scaled: Vec<f64> = int_r.iter().map(|v| beta * v / (alpha * t)).collect();
            (alpha * t * logsumexp(&scaled), softmax(&scaled))
        };
        report.regret_h.push(benchmark - int_uh);
        report.bound.push(-p.iter().zip(x0).map(|(pi, xi)| pi * xi.ln()).sum::<f64>());
        report.hindsight = p;
    }
    Ok(report)
}

/// Columns `t, R_1..R_N, RH_1..RH_N, bound_1..bound_N`, one report per agent
/// in agent order, all over the same time grid.
pub fn regret_csv(reports: &[RegretReport]) -> String {
    let mut out = String::from("t");
    for prefix in ["R", "RH", "bound"] {
        for k in 1..=reports.len() {
            let _ = write!(out, ",{prefix}_{k}");
        }
    }
    out.push('\n');
    let Some(first) = reports.first() else {
        return out;
    };
    for (s, &t) in first.times.iter().enumerate() {
        out.push_str(&fmt_float(t));
        for column in [
            |r: &RegretReport, s: usize| r.regret[s],
            |r: &RegretReport, s: usize| r.regret_h[s],
            |r: &RegretReport, s: usize| r.bound[s],
        ] {
            for r in reports {
                let _ = write!(out, ",{}", fmt_float(column(r, s)));
            }
        }
        out.push('\n');
    }
    out
}
