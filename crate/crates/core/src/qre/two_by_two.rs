use crate::coordination::CoordinationFacts;
use crate::error::{Error, Result};
use crate::game::{AgentParams, ChoiceProfile};

use super::solve::QREPoint;

/// Grid resolution of the root scan.
pub const SCAN_POINTS: usize = 100_000;
/// Bisection stops once brackets are this narrow (in logit units).
pub const BISECTION_TOL: f64 = 1e-12;
const TANGENCY_TOL: f64 = 1e-9;
/// Eigenvalues closer than this to zero leave stability undecided.
pub const STABILITY_TOL: f64 = 1e-6;

fn sigma(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// All logit equilibria of a 2x2 game.
///
/// With `s = logit x`, the equilibrium conditions collapse to the scalar
/// equation `g(s) = (k1 Y(s) - lambda1) / delta_x - s = 0` where
/// `Y(s) = sigma((k2 sigma(s) - lambda2) / delta_y)` is player 2's response.
/// Every root lies between the extremes of the first term, so the scan
/// covers that bounded interval (padded by one unit) and the end signs are
/// opposite, which makes the root count odd. Grid points are skipped when a
/// Lipschitz bound proves that no sign change can occur before them; the
/// result is identical to evaluating every grid point.
pub fn qre_2x2_roots(
    facts: &CoordinationFacts,
    params_x: AgentParams,
    params_y: AgentParams,
) -> Result<Vec<QREPoint>> {
    let (dx, dy) = (params_x.delta(), params_y.delta());
    if !(dx > 0.0 && dy > 0.0) {
        return Err(Error::InvalidParameter(
            "the scalar reduction needs positive exploration rates".into(),
        ));
    }
    Ok(qre_2x2_roots_for_deltas(facts, dx, dy))
}

pub fn qre_2x2_roots_for_deltas(facts: &CoordinationFacts, dx: f64, dy: f64) -> Vec<QREPoint> {
    let (k1, l1, k2, l2) = (facts.k1, facts.lambda1, facts.k2, facts.lambda2);
    let response_y = |s: f64| sigma((k2 * sigma(s) - l2) / dy);
    let g = |s: f64| (k1 * response_y(s) - l1) / dx - s;

    let lo = (-l1).min(k1 - l1) / dx - 1.0;
    let hi = (-l1).max(k1 - l1) / dx + 1.0;
    let h = (hi - lo) / SCAN_POINTS as f64;
    let lipschitz = (k1 * k2).abs() / (16.0 * dx * dy) + 1.0;

    let mut roots = Vec::new();
    let mut i = 0usize;
    let mut g_prev = g(lo);
    while i < SCAN_POINTS {
        let skip = (0.999 * g_prev.abs() / (lipschitz * h)).floor();
        let j = if skip >= 2.0 {
            (i + skip as usize).min(SCAN_POINTS)
        } else {
            i + 1
        };
        let s = if j == SCAN_POINTS { hi } else { lo + j as f64 * h };
        let gv = g(s);
        if (g_prev > 0.0) != (gv > 0.0) {
            debug_assert_eq!(j, i + 1);
            let s_prev = lo + i as f64 * h;
            roots.push(bisect(&g, s_prev, s, g_prev > 0.0));
        }
        i = j;
        g_prev = gv;
    }

    roots
        .into_iter()
        .map(|s| {
            let x = sigma(s);
            let t = (k2 * x - l2) / dy;
            let y = sigma(t);
            let profile = ChoiceProfile::from_raw(vec![vec![x, sigma(-s)], vec![y, sigma(-t)]]);
            // y is player 2's exact response, so only player 1 has a defect
            let residual = (x - sigma((k1 * y - l1) / dx)).abs();
            // slope of g at the root; zero at a fold
            let slope = k1 * k2 * y * (1.0 - y) * x * (1.0 - x) / (dx * dy) - 1.0;
            let det = dx * dy - k1 * k2 * x * (1.0 - x) * y * (1.0 - y);
            // the trace is negative, so the sign of the determinant decides;
            // the eigenvalue nearest zero is about det / trace
            let stable = if (det / (dx + dy)).abs() < STABILITY_TOL {
                None
            } else {
                Some(det > 0.0)
            };
            QREPoint {
                profile,
                deltas: vec![dx, dy],
                residual,
                stable,
                degenerate: slope.abs() < TANGENCY_TOL,
            }
        })
        .collect()
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, positive_at_a: bool) -> f64 {
    while b - a > BISECTION_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (g(m) > 0.0) == positive_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
