//! Two-dimensional slices of the modified potential of a two-player game.
//!
//! Each player's strategy is charted by log-ratios against its last action,
//! so a point of the slice `a u + b v` maps back to a profile by
//! exponentiating and normalizing per player. The origin is the uniform
//! profile.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{fmt_float, from_log_ratio};
use crate::error::{Error, Result};
use crate::game::ChoiceProfile;
use crate::metrics::modified_potential;
use crate::potential::WeightedPotential;

/// Smallest admissible angle between the two directions, in radians.
const MIN_ANGLE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub seed: u64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
}

impl ProjectionSpec {
    /// Orthonormal Gaussian directions for a game with `action_counts`.
    pub fn random(action_counts: &[usize], seed: u64, alpha_grid: Vec<f64>, beta_grid: Vec<f64>) -> Result<Self> {
        let dim: usize = action_counts.iter().map(|n| n.saturating_sub(1)).sum();
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "a 2D slice needs at least 2 coordinates, game has {dim}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || -> Vec<f64> { (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect() };
        let unit = |w: Vec<f64>| {
            let n = norm(&w);
            w.into_iter().map(|x| x / n).collect::<Vec<_>>()
        };
        let u = unit(draw());
        let v = loop {
            let w = draw();
            let along: f64 = dot(&u, &w);
            let w: Vec<f64> = w.iter().zip(&u).map(|(a, b)| a - along * b).collect();
            if norm(&w) > 1e-8 {
                break unit(w);
            }
        };
        let spec = Self {
            seed,
            u,
            v,
            alpha_grid,
            beta_grid,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.u.len() != self.v.len() {
            return Err(Error::DimensionMismatch {
                what: "projection direction",
                expected: self.u.len(),
                found: self.v.len(),
            });
        }
        let (nu, nv) = (norm(&self.u), norm(&self.v));
        if nu == 0.0 || nv == 0.0 || !nu.is_finite() || !nv.is_finite() {
            return Err(Error::InvalidParameter("projection directions must be non-zero".into()));
        }
        let cos = (dot(&self.u, &self.v) / (nu * nv)).clamp(-1.0, 1.0);
        let angle = cos.abs().acos();
        if angle <= MIN_ANGLE {
            return Err(Error::InvalidParameter(format!(
                "projection directions are parallel (angle {angle:.3e} rad)"
            )));
        }
        if self.alpha_grid.iter().chain(&self.beta_grid).any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("projection grids must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPoint {
    pub alpha: f64,
    pub beta: f64,
    pub phi_h: f64,
}

/// Evaluates the modified potential with a common `delta` on every grid
/// point, `alpha` outermost.
pub fn project_potential(
    potential: &WeightedPotential,
    delta: f64,
    spec: &ProjectionSpec,
) -> Result<Vec<ProjectionPoint>> {
    spec.validate()?;
    let counts = potential.action_counts();
    if counts.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "projection needs a two-player potential, got {} players",
            counts.len()
        )));
    }
    let dim: usize = counts.iter().map(|n| n - 1).sum();
    if spec.u.len() != dim {
        return Err(Error::DimensionMismatch {
            what: "projection direction",
            expected: dim,
            found: spec.u.len(),
        });
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be non-negative, got {delta}")));
    }
    let mut out = Vec::with_capacity(spec.alpha_grid.len() * spec.beta_grid.len());
    for &a in &spec.alpha_grid {
        for &b in &spec.beta_grid {
            let y: Vec<f64> = spec.u.iter().zip(&spec.v).map(|(u, v)| a * u + b * v).collect();
            let profile = ChoiceProfile::from_raw(from_log_ratio(counts, &y));
            let phi_h = modified_potential(potential, &[delta, delta], &profile)?;
            out.push(ProjectionPoint { alpha: a, beta: b, phi_h });
        }
    }
    Ok(out)
}

/// Columns `delta, alpha, beta, phi_h`; one block per exploration rate.
pub fn projection_csv(blocks: &[(f64, Vec<ProjectionPoint>)]) -> String {
    let mut out = String::from("delta,alpha,beta,phi_h\n");
    for (delta, points) in blocks {
        for p in points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_float(*delta),
                fmt_float(p.alpha),
                fmt_float(p.beta),
                fmt_float(p.phi_h)
            );
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
