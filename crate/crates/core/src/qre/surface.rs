use std::fmt::Write as _;

use rayon::prelude::*;

use crate::coordination::{classify_coordination, CoordinationFacts};
use crate::dynamics::fmt_float;
use crate::error::{Error, Result};
use crate::game::NormalFormGame;

use super::solve::QREPoint;
use super::two_by_two::qre_2x2_roots_for_deltas;

/// Equilibria of a 2x2 game over a rectangular grid of exploration rates.
/// Cell `(i, j)` pairs `delta_x[i]` with `delta_y[j]` and is stored at
/// `i * delta_y.len() + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceScan {
    pub facts: CoordinationFacts,
    pub delta_x: Vec<f64>,
    pub delta_y: Vec<f64>,
    pub counts: Vec<usize>,
    pub points: Vec<Vec<QREPoint>>,
    /// Cells whose count differs from a 4-neighbour.
    pub fold_cells: Vec<(usize, usize)>,
}

impl SurfaceScan {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.delta_y.len() + j
    }

    pub fn count(&self, i: usize, j: usize) -> usize {
        self.counts[self.index(i, j)]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.delta_x.len(), self.delta_y.len())
    }

    /// Columns `delta_x, delta_y, count`, then one `(x_Q, y_Q, stable)`
    /// triple per equilibrium, blank-padded to the widest cell (at least 3).
    pub fn to_csv(&self) -> String {
        let width = self.counts.iter().copied().max().unwrap_or(0).max(3);
        let mut out = String::from("delta_x,delta_y,count");
        for r in 1..=width {
            let _ = write!(out, ",x_q_{r},y_q_{r},stable_{r}");
        }
        out.push('\n');
        for (i, &dx) in self.delta_x.iter().enumerate() {
            for (j, &dy) in self.delta_y.iter().enumerate() {
                let idx = self.index(i, j);
                let _ = write!(out, "{},{},{}", fmt_float(dx), fmt_float(dy), self.counts[idx]);
                for r in 0..width {
                    match self.points[idx].get(r) {
                        Some(p) => {
                            let v = p.profile.first_action_probs();
                            let stable = p.stable.map(|s| s.to_string()).unwrap_or_default();
                            let _ = write!(out, ",{},{},{stable}", fmt_float(v[0]), fmt_float(v[1]));
                        }
                        None => out.push_str(",,,"),
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Solves every grid cell (in parallel, output in grid order).
pub fn sweep_surface(
    game: &NormalFormGame,
    range_x: (f64, f64),
    range_y: (f64, f64),
    resolution: usize,
) -> Result<SurfaceScan> {
    for (lo, hi) in [range_x, range_y] {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exploration ranges must be positive and ordered, got ({lo}, {hi})"
            )));
        }
    }
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let facts = classify_coordination(game)?;
    let delta_x = linspace(range_x.0, range_x.1, resolution);
    let delta_y = linspace(range_y.0, range_y.1, resolution);
    let ny = delta_y.len();
    let points: Vec<Vec<QREPoint>> = (0..delta_x.len() * ny)
        .into_par_iter()
        .map(|idx| qre_2x2_roots_for_deltas(&facts, delta_x[idx / ny], delta_y[idx % ny]))
        .collect();
    let counts: Vec<usize> = points.iter().map(Vec::len).collect();
    let nx = delta_x.len();
    let mut fold_cells = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let c = counts[i * ny + j];
            let differs = neighbours4(i, j, nx, ny).any(|(a, b)| counts[a * ny + b] != c);
            if differs {
                fold_cells.push((i, j));
            }
        }
    }
    Ok(SurfaceScan {
        facts,
        delta_x,
        delta_y,
        counts,
        points,
        fold_cells,
    })
}

pub(crate) fn neighbours4(i: usize, j: usize, nx: usize, ny: usize) -> impl Iterator<Item = (usize, usize)> {
    let (i, j) = (i as isize, j as isize);
    [(-1, 0), (1, 0), (0, -1), (0, 1)]
        .into_iter()
        .map(move |(di, dj)| (i + di, j + dj))
        .filter(move |&(a, b)| a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny)
        .map(|(a, b)| (a as usize, b as usize))
}
