use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{log_ratio_field, to_log_ratio};
use crate::error::{Error, Result};
use crate::game::NormalFormGame;

use super::solve::{check_deltas, QREPoint};
use super::two_by_two::STABILITY_TOL;

/// Finite-difference step of the linearization.
pub const JACOBIAN_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    /// Some eigenvalue has real part within the tolerance of zero, as happens
    /// near a fold.
    Indeterminate,
}

impl Stability {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Stability::Stable => Some(true),
            Stability::Unstable => Some(false),
            Stability::Indeterminate => None,
        }
    }
}

/// Linear stability of a rest point of the learning dynamics with unit
/// adaptation rates (`alpha_k = delta_k`).
///
/// The Jacobian is taken in log-ratio coordinates, which chart the interior
/// of the simplex, so its eigenvalues are those of the dynamics restricted
/// to the tangent space.
pub fn stability_of(game: &NormalFormGame, deltas: &[f64], point: &QREPoint) -> Result<Stability> {
    check_deltas(game, deltas)?;
    game.check_profile(&point.profile)?;
    if !point.profile.strategies().iter().flatten().all(|&p| p > 0.0) {
        return Err(Error::Domain("stability needs an interior point".into()));
    }
    let rates: Vec<(f64, f64)> = deltas.iter().map(|&d| (d, 1.0)).collect();
    let y0 = to_log_ratio(point.profile.strategies());
    let dim = y0.len();
    let mut jac = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut plus = y0.clone();
        let mut minus = y0.clone();
        plus[j] += JACOBIAN_STEP;
        minus[j] -= JACOBIAN_STEP;
        let fp = log_ratio_field(game, &rates, &plus);
        let fm = log_ratio_field(game, &rates, &minus);
        for i in 0..dim {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    let eig = jac.complex_eigenvalues();
    if eig.iter().any(|z| z.re.abs() < STABILITY_TOL) {
        return Ok(Stability::Indeterminate);
    }
    Ok(if eig.iter().all(|z| z.re < 0.0) {
        Stability::Stable
    } else {
        Stability::Unstable
    })
}
