use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{from_log_ratio, to_log_ratio};
use crate::error::{Error, Result};
use crate::game::{pair_marginal, ChoiceProfile, NormalFormGame};

/// Residual below which a solved point is accepted.
pub const ACCEPT_RESIDUAL: f64 = 1e-10;
/// Damping of the fixed-point fallback.
pub const DAMPING: f64 = 0.5;
const FIXED_POINT_CAP: usize = 20_000;
const NEWTON_CAP: usize = 100;
/// Two solutions closer than this (max-norm in probabilities) are the same.
pub const DEDUP_TOL: f64 = 1e-7;

/// A logit equilibrium together with its defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QREPoint {
    pub profile: ChoiceProfile,
    pub deltas: Vec<f64>,
    pub residual: f64,
    pub stable: Option<bool>,
    /// The point sits on (numerically) a fold, where two branches touch.
    #[serde(default)]
    pub degenerate: bool,
}

pub(crate) fn check_deltas(game: &NormalFormGame, deltas: &[f64]) -> Result<()> {
    if deltas.len() != game.num_players() {
        return Err(Error::DimensionMismatch {
            what: "exploration rates",
            expected: game.num_players(),
            found: deltas.len(),
        });
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "exploration rates must be positive, got {d}"
        )));
    }
    Ok(())
}

pub(crate) fn softmax_scaled(r: &[f64], delta: f64) -> Vec<f64> {
    let m = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut e: Vec<f64> = r.iter().map(|v| ((v - m) / delta).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|v| *v /= s);
    e
}

fn logit_response(game: &NormalFormGame, deltas: &[f64], x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    game.all_rewards(x)
        .iter()
        .zip(deltas)
        .map(|(r, &d)| softmax_scaled(r, d))
        .collect()
}

fn residual_raw(game: &NormalFormGame, deltas: &[f64], x: &[Vec<f64>]) -> f64 {
    logit_response(game, deltas, x)
        .iter()
        .flatten()
        .zip(x.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `max_{k,i} |x_ki - softmax_i(r_k(x) / delta_k)|`.
pub fn qre_residual(game: &NormalFormGame, deltas: &[f64], profile: &ChoiceProfile) -> Result<f64> {
    game.check_profile(profile)?;
    check_deltas(game, deltas)?;
    Ok(residual_raw(game, deltas, profile.strategies()))
}

/// Equilibrium equations in log-ratio coordinates,
/// `F_ki(y) = r_ki - r_k,last - delta_k y_ki`.
fn equations(game: &NormalFormGame, deltas: &[f64], y: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let x = from_log_ratio(game.action_counts(), y);
    let rewards = game.all_rewards(&x);
    let mut f = Vec::with_capacity(y.len());
    for (rk, &d) in rewards.iter().zip(deltas) {
        let n = rk.len();
        for i in 0..n - 1 {
            f.push(rk[i] - rk[n - 1] - d * y[f.len()]);
        }
    }
    (f, x)
}

fn jacobian(game: &NormalFormGame, deltas: &[f64], x: &[Vec<f64>]) -> DMatrix<f64> {
    let counts = game.action_counts();
    let offsets: Vec<usize> = counts
        .iter()
        .scan(0, |acc, &n| {
            let o = *acc;
            *acc += n - 1;
            Some(o)
        })
        .collect();
    let dim: usize = counts.iter().map(|n| n - 1).sum();
    let mut jac = DMatrix::zeros(dim, dim);
    for k in 0..counts.len() {
        let nk = counts[k];
        for i in 0..nk - 1 {
            jac[(offsets[k] + i, offsets[k] + i)] = -deltas[k];
        }
        for l in 0..counts.len() {
            if l == k {
                continue;
            }
            let nl = counts[l];
            let d = pair_marginal(counts, game.payoffs(k), x, k, l);
            let xl = &x[l];
            for i in 0..nk - 1 {
                for j in 0..nl - 1 {
                    // d x_lm / d y_lj = x_lm (1[m = j] - x_lj)
                    let mut v = 0.0;
                    for m in 0..nl {
                        let dx = xl[m] * (f64::from(u8::from(m == j)) - xl[j]);
                        v += (d[i * nl + m] - d[(nk - 1) * nl + m]) * dx;
                    }
                    jac[(offsets[k] + i, offsets[l] + j)] = v;
                }
            }
        }
    }
    jac
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// Damped Newton with backtracking on `|F|^2`. Returns the final iterate.
fn newton(game: &NormalFormGame, deltas: &[f64], mut y: Vec<f64>) -> Vec<f64> {
    let (mut f, mut x) = equations(game, deltas, &y);
    for _ in 0..NEWTON_CAP {
        if residual_raw(game, deltas, &x) < 1e-14 {
            break;
        }
        let jac = jacobian(game, deltas, &x);
        let Some(step) = jac.lu().solve(&DVector::from_column_slice(&f)) else {
            break;
        };
        let merit = sq_norm(&f);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let (ft, xt) = equations(game, deltas, &trial);
            if sq_norm(&ft) < merit * (1.0 - 1e-4 * t) && ft.iter().all(|v| v.is_finite()) {
                y = trial;
                f = ft;
                x = xt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    y
}

fn damped_iteration(game: &NormalFormGame, deltas: &[f64], mut x: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for _ in 0..FIXED_POINT_CAP {
        let br = logit_response(game, deltas, &x);
        let mut change: f64 = 0.0;
        for (xk, bk) in x.iter_mut().zip(&br) {
            for (xi, bi) in xk.iter_mut().zip(bk) {
                change = change.max((bi - *xi).abs());
                *xi = (1.0 - DAMPING) * *xi + DAMPING * bi;
            }
        }
        if change < ACCEPT_RESIDUAL * 0.1 {
            break;
        }
    }
    x
}

fn finish(game: &NormalFormGame, deltas: &[f64], y: &[f64]) -> (Vec<Vec<f64>>, f64) {
    let x = from_log_ratio(game.action_counts(), y);
    let r = residual_raw(game, deltas, &x);
    (x, r)
}

/// Solves the logit fixed point from `x_init`.
///
/// Newton's method in log-ratio coordinates runs first because it also
/// converges to unstable equilibria, which plain iteration cannot reach.
/// If it stalls, damped fixed-point iteration takes over and Newton polishes
/// the result.
pub fn solve_qre(game: &NormalFormGame, deltas: &[f64], x_init: &ChoiceProfile) -> Result<QREPoint> {
    game.check_profile(x_init)?;
    check_deltas(game, deltas)?;
    let (seed, _) = x_init.clamp_interior();
    let y = newton(game, deltas, to_log_ratio(seed.strategies()));
    let (mut x, mut residual) = finish(game, deltas, &y);
    if !(residual < ACCEPT_RESIDUAL) {
        let relaxed = damped_iteration(game, deltas, seed.into_strategies());
        let (start, _) = ChoiceProfile::from_raw(relaxed).clamp_interior();
        let y = newton(game, deltas, to_log_ratio(start.strategies()));
        (x, residual) = finish(game, deltas, &y);
    }
    if !(residual < ACCEPT_RESIDUAL) {
        return Err(Error::NoConvergence {
            iterations: FIXED_POINT_CAP + 2 * NEWTON_CAP,
            residual,
            last: x,
        });
    }
    Ok(QREPoint {
        profile: ChoiceProfile::from_raw(x),
        deltas: deltas.to_vec(),
        residual,
        stable: None,
        degenerate: false,
    })
}

/// Runs [`solve_qre`] from every seed and keeps the distinct solutions,
/// ordered lexicographically by profile.
pub fn solve_qre_multi(
    game: &NormalFormGame,
    deltas: &[f64],
    seeds: &[ChoiceProfile],
) -> Result<Vec<QREPoint>> {
    check_deltas(game, deltas)?;
    let mut found: Vec<QREPoint> = Vec::new();
    for seed in seeds {
        match solve_qre(game, deltas, seed) {
            Ok(p) => {
                if !found.iter().any(|q| q.profile.max_abs_diff(&p.profile) < DEDUP_TOL) {
                    found.push(p);
                }
            }
            Err(e) if e.is_numerical() => continue,
            Err(e) => return Err(e),
        }
    }
    found.sort_by(|a, b| {
        let (pa, pb) = (a.profile.strategies(), b.profile.strategies());
        pa.iter()
            .flatten()
            .zip(pb.iter().flatten())
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(found)
}

/// Seeds for two-player games: player 2 sweeps a logit grid (or, with more
/// than two actions, near-pure and uniform mixes) and player 1 plays the
/// logit response to each.
pub fn response_curve_seeds(game: &NormalFormGame, deltas: &[f64], per_axis: usize) -> Result<Vec<ChoiceProfile>> {
    check_deltas(game, deltas)?;
    if game.num_players() != 2 {
        return Err(Error::InvalidParameter("response-curve seeds need two players".into()));
    }
    let m = game.action_counts()[1];
    let mut ys: Vec<Vec<f64>> = Vec::new();
    if m == 2 {
        let per_axis = per_axis.max(2);
        for s in 0..per_axis {
            let z = -60.0 + 120.0 * s as f64 / (per_axis - 1) as f64;
            let p = 1.0 / (1.0 + (-z).exp());
            ys.push(vec![p, 1.0 / (1.0 + z.exp())]);
        }
    } else {
        ys.push(vec![1.0 / m as f64; m]);
        for j in 0..m {
            for &w in &[0.5, 0.9, 0.999] {
                let mut y = vec![(1.0 - w) / (m - 1) as f64; m];
                y[j] = w;
                ys.push(y);
            }
        }
    }
    let mut seeds = Vec::with_capacity(ys.len());
    for y in ys {
        let placeholder = vec![1.0 / game.action_counts()[0] as f64; game.action_counts()[0]];
        let r = game.all_rewards(&[placeholder, y.clone()]);
        let x = softmax_scaled(&r[0], deltas[0]);
        seeds.push(ChoiceProfile::from_raw(vec![x, y]));
    }
    Ok(seeds)
}
