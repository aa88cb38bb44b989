//! Closed-form facts about 2x2 coordination games.
//!
//! Probabilities always refer to the first action `a1`. `u_ij` is player 1's
//! payoff when player 1 plays `i` and player 2 plays `j`; `v_ij` is player
//! 2's payoff when player 2 plays `i` and player 1 plays `j`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::potential::WeightedPotential;

/// A pure equilibrium on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalProfile {
    /// `(a1, a1)`, i.e. `(x, y) = (1, 1)`.
    A1A1,
    /// `(a2, a2)`, i.e. `(x, y) = (0, 0)`.
    A2A2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinationFacts {
    pub u11: f64,
    pub u12: f64,
    pub u21: f64,
    pub u22: f64,
    pub v11: f64,
    pub v12: f64,
    pub v21: f64,
    pub v22: f64,
    pub lambda1: f64,
    pub k1: f64,
    pub lambda2: f64,
    pub k2: f64,
    /// Player 1's mixed-equilibrium probability of `a1`, `lambda2 / k2`.
    pub x_mix: f64,
    /// Player 2's mixed-equilibrium probability of `a1`, `lambda1 / k1`.
    pub y_mix: f64,
    /// Whether the strict coordination inequalities hold. The remaining
    /// fields are still filled in when they do not.
    pub is_coordination: bool,
    /// `None` when neither pure equilibrium risk-dominates.
    pub risk_dominant: Option<DiagonalProfile>,
    pub payoff_dominant: Option<DiagonalProfile>,
    /// True iff exactly one of `x_mix`, `y_mix` exceeds one half.
    pub surface_connected_prediction: bool,
}

impl CoordinationFacts {
    /// The same facts after renaming `a1 <-> a2` for both players.
    pub fn relabeled(&self) -> Self {
        let game = NormalFormGame::bimatrix(
            &[vec![self.u22, self.u21], vec![self.u12, self.u11]],
            &[vec![self.v22, self.v21], vec![self.v12, self.v11]],
        )
        .expect("2x2 shape");
        classify_coordination(&game).expect("2x2 shape")
    }

    /// Player 1's payoff advantage of `a1` over `a2` when player 2 plays
    /// `a1` with probability `y`.
    pub fn reward_gap_x(&self, y: f64) -> f64 {
        self.k1 * y - self.lambda1
    }

    /// Player 2's payoff advantage of `a1` over `a2` against `x`.
    pub fn reward_gap_y(&self, x: f64) -> f64 {
        self.k2 * x - self.lambda2
    }
}

fn require_2x2(game: &NormalFormGame) -> Result<()> {
    if game.action_counts() != [2, 2] {
        return Err(Error::InvalidParameter(format!(
            "expected a 2x2 game, got action counts {:?}",
            game.action_counts()
        )));
    }
    Ok(())
}

pub fn classify_coordination(game: &NormalFormGame) -> Result<CoordinationFacts> {
    require_2x2(game)?;
    let u = |i: usize, j: usize| game.payoff(0, &[i, j]);
    // player 2 chooses `i`, player 1 chooses `j`
    let v = |i: usize, j: usize| game.payoff(1, &[j, i]);
    let (u11, u12, u21, u22) = (u(0, 0), u(0, 1), u(1, 0), u(1, 1));
    let (v11, v12, v21, v22) = (v(0, 0), v(0, 1), v(1, 0), v(1, 1));

    let lambda1 = u22 - u12;
    let k1 = u11 - u12 - u21 + u22;
    let lambda2 = v22 - v12;
    let k2 = v11 - v12 - v21 + v22;
    let x_mix = lambda2 / k2;
    let y_mix = lambda1 / k1;
    let is_coordination = u11 > u21 && u22 > u12 && v11 > v21 && v22 > v12;

    let lhs = (u22 - u12) * (v22 - v12);
    let rhs = (u11 - u21) * (v11 - v21);
    let risk_dominant = if lhs > rhs {
        Some(DiagonalProfile::A2A2)
    } else if lhs < rhs {
        Some(DiagonalProfile::A1A1)
    } else {
        None
    };
    let payoff_dominant = if u22 >= u11 && v22 >= v11 && (u22 > u11 || v22 > v11) {
        Some(DiagonalProfile::A2A2)
    } else if u11 >= u22 && v11 >= v22 && (u11 > u22 || v11 > v22) {
        Some(DiagonalProfile::A1A1)
    } else {
        None
    };
    let surface_connected_prediction = (x_mix > 0.5) != (y_mix > 0.5);

    Ok(CoordinationFacts {
        u11,
        u12,
        u21,
        u22,
        v11,
        v12,
        v21,
        v22,
        lambda1,
        k1,
        lambda2,
        k2,
        x_mix,
        y_mix,
        is_coordination,
        risk_dominant,
        payoff_dominant,
        surface_connected_prediction,
    })
}

/// Potential of a 2x2 coordination game together with the ratio `w = k1/k2`
/// that parametrizes it.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential2x2 {
    pub potential: WeightedPotential,
    pub w: f64,
}

/// Builds
///
/// ```text
/// P = | u11 - u21   u11 - u21 - w (v11 - v21) |
///     | 0           k1 - w (v11 - v21)        |
/// ```
///
/// with `w = k1 / k2`. Player weights are `(1, 1/w)` so that the unilateral
/// payoff differences of both players are reproduced exactly.
pub fn potential_2x2(game: &NormalFormGame) -> Result<Potential2x2> {
    let f = classify_coordination(game)?;
    if f.k2 == 0.0 || f.k1 == 0.0 {
        return Err(Error::InvalidParameter(
            "degenerate 2x2 game: k1 and k2 must be non-zero".into(),
        ));
    }
    let w = f.k1 / f.k2;
    if w <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "k1 and k2 have opposite signs (w = {w}); no positive weights exist"
        )));
    }
    let a = f.u11 - f.u21;
    let b = w * (f.v11 - f.v21);
    let phi = vec![a, a - b, 0.0, f.k1 - b];
    let potential = WeightedPotential::new(vec![2, 2], phi, vec![1.0, 1.0 / w])?;
    Ok(Potential2x2 { potential, w })
}
