//! Weighted potentials and their multilinear extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{contract_except, dot, ChoiceProfile, NormalFormGame};

/// Tolerance on the defining identities of a weighted potential.
pub const POTENTIAL_TOL: f64 = 1e-9;

/// `phi` over joint pure profiles (same layout as payoff tensors) with one
/// positive weight per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPotential {
    action_counts: Vec<usize>,
    phi: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedPotential {
    pub fn new(action_counts: Vec<usize>, phi: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total: usize = action_counts.iter().product();
        if phi.len() != total {
            return Err(Error::DimensionMismatch {
                what: "potential entries",
                expected: total,
                found: phi.len(),
            });
        }
        if weights.len() != action_counts.len() {
            return Err(Error::DimensionMismatch {
                what: "potential weights",
                expected: action_counts.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter("potential weights must be positive".into()));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("potential entries must be finite".into()));
        }
        Ok(Self {
            action_counts,
            phi,
            weights,
        })
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[cfg(test)]
    pub(crate) fn phi_mut(&mut self) -> &mut [f64] {
        &mut self.phi
    }
}

/// Outcome of checking the weighted-potential identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialCheck {
    pub holds: bool,
    pub max_violation: f64,
}

/// Checks `u_k(i, a_-k) - u_k(j, a_-k) = w_k (phi(i, a_-k) - phi(j, a_-k))`
/// for every player, every pair of own actions and every opponent profile.
/// Shape mismatches are reported as a failed check with infinite violation.
pub fn verify_weighted_potential(game: &NormalFormGame, candidate: &WeightedPotential) -> PotentialCheck {
    if candidate.action_counts() != game.action_counts() {
        return PotentialCheck {
            holds: false,
            max_violation: f64::INFINITY,
        };
    }
    let counts = game.action_counts();
    let mut worst: f64 = 0.0;
    for (k, &nk) in counts.iter().enumerate() {
        let u = game.payoffs(k);
        let w = candidate.weights[k];
        let stride: usize = counts[k + 1..].iter().product();
        // Differences against action 0 suffice: every pairwise identity is a
        // difference of two of these.
        for idx in 0..u.len() {
            let own = (idx / stride) % nk;
            if own == 0 {
                continue;
            }
            let base = idx - own * stride;
            let du = u[idx] - u[base];
            let dphi = candidate.phi[idx] - candidate.phi[base];
            worst = worst.max((du - w * dphi).abs());
        }
    }
    PotentialCheck {
        holds: worst <= POTENTIAL_TOL,
        max_violation: worst,
    }
}

/// `Phi(x) = sum_a phi(a) prod_k x_{k a_k}`.
pub fn multilinear_potential(potential: &WeightedPotential, profile: &ChoiceProfile) -> Result<f64> {
    let x = profile.strategies();
    let counts = potential.action_counts();
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
    Ok(multilinear_unchecked(potential, x))
}

pub(crate) fn multilinear_unchecked(potential: &WeightedPotential, x: &[Vec<f64>]) -> f64 {
    let mut marginal = vec![0.0; potential.action_counts[0]];
    contract_except(&potential.action_counts, &potential.phi, x, 0, &mut marginal);
    dot(&x[0], &marginal)
}
