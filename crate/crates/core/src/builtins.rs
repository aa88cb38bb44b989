//! Named games and random game generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coordination::potential_2x2;
use crate::error::{Error, Result};
use crate::game::NormalFormGame;

/// Names accepted by [`builtin_game`].
pub const BUILTIN_NAMES: [&str; 5] = [
    "stag_hunt",
    "battle_of_sexes",
    "pareto_coordination",
    "appendix_potential",
    "diagonal_10",
];

const APPENDIX_PHI: [[f64; 10]; 10] = [
    [4., 4., 8., 1., 9., 1., 1., 9., 8., 2.],
    [7., 7., 9., 4., 7., 7., 4., 2., 6., 9.],
    [1., 2., 3., 9., 3., 2., 7., 2., 7., 5.],
    [3., 8., 7., 5., 8., 3., 4., 8., 4., 6.],
    [2., 1., 8., 7., 1., 5., 1., 4., 3., 4.],
    [1., 7., 9., 3., 5., 1., 5., 2., 9., 3.],
    [2., 4., 1., 7., 9., 6., 6., 9., 4., 9.],
    [4., 6., 1., 8., 3., 2., 5., 4., 9., 6.],
    [4., 2., 2., 1., 3., 6., 9., 7., 6., 1.],
    [5., 2., 8., 7., 2., 7., 6., 7., 6., 10.],
];

pub fn builtin_game(name: &str) -> Result<NormalFormGame> {
    match name {
        "stag_hunt" => Ok(stag_hunt()),
        "battle_of_sexes" => Ok(battle_of_sexes()),
        "pareto_coordination" => Ok(pareto_coordination()),
        "appendix_potential" => Ok(appendix_potential_game()),
        "diagonal_10" => diagonal_game(&(1..=10).map(f64::from).collect::<Vec<_>>()),
        _ => Err(Error::UnknownGame(name.to_string())),
    }
}

fn with_2x2_potential(game: NormalFormGame) -> NormalFormGame {
    let p = potential_2x2(&game).expect("builtin coordination game");
    game.with_potential(p.potential).expect("2x2 potential")
}

pub fn stag_hunt() -> NormalFormGame {
    let g = NormalFormGame::symmetric(&[vec![3.0, 0.0], vec![2.0, 1.5]]).expect("2x2");
    with_2x2_potential(g)
}

pub fn battle_of_sexes() -> NormalFormGame {
    let g = NormalFormGame::bimatrix(&[vec![1.5, 0.0], vec![0.0, 1.0]], &[vec![1.0, 0.0], vec![0.0, 2.0]])
        .expect("2x2");
    with_2x2_potential(g)
}

pub fn pareto_coordination() -> NormalFormGame {
    let g = NormalFormGame::bimatrix(&[vec![1.0, 0.0], vec![0.0, 1.5]], &[vec![1.0, 0.0], vec![0.0, 1.8]])
        .expect("2x2");
    with_2x2_potential(g)
}

/// Zero-sum, with no pure equilibrium.
pub fn matching_pennies() -> NormalFormGame {
    NormalFormGame::bimatrix(&[vec![1.0, -1.0], vec![-1.0, 1.0]], &[vec![-1.0, 1.0], vec![1.0, -1.0]])
        .expect("2x2")
}

/// Whether exploration costs or earns a factor `M` in utility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Catastrophe {
    Loss,
    Gain,
}

/// Symmetric coordination game whose mixed equilibrium does not depend on `m`.
///
/// `Loss`: rows `(2m, 0) / (2m - 1, 2)`, mixed point `2/3`, with `(a2, a2)`
/// risk-dominant. `Gain`: rows `(2m, 1.5) / (2m - 1, 2)`, mixed point
/// `1/3`, with `(a1, a1)` risk-dominant.
pub fn catastrophe_game(m: f64, direction: Catastrophe) -> Result<NormalFormGame> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("M must be positive, got {m}")));
    }
    let off = match direction {
        Catastrophe::Loss => 0.0,
        Catastrophe::Gain => 1.5,
    };
    let g = NormalFormGame::symmetric(&[vec![2.0 * m, off], vec![2.0 * m - 1.0, 2.0]])?;
    Ok(with_2x2_potential(g))
}

/// Symmetric game with payoff `d_i` on `(a_i, a_i)` and zero elsewhere.
pub fn diagonal_game(entries: &[f64]) -> Result<NormalFormGame> {
    if entries.len() < 2 {
        return Err(Error::InvalidParameter("need at least two diagonal entries".into()));
    }
    if !(entries[0] > 0.0 && entries.windows(2).all(|w| w[1] > w[0])) {
        return Err(Error::InvalidParameter(format!(
            "diagonal entries must be positive and strictly increasing, got {entries:?}"
        )));
    }
    let n = entries.len();
    let phi: Vec<f64> = (0..n * n)
        .map(|idx| if idx / n == idx % n { entries[idx / n] } else { 0.0 })
        .collect();
    NormalFormGame::identical_interest(vec![n, n], phi)
}

/// The fixed 10x10 potential, rows indexed by player 1's action.
pub fn appendix_phi_matrix() -> Vec<Vec<f64>> {
    APPENDIX_PHI.iter().map(|row| row.to_vec()).collect()
}

pub fn appendix_potential_game() -> NormalFormGame {
    let phi = APPENDIX_PHI.iter().flatten().copied().collect();
    NormalFormGame::identical_interest(vec![10, 10], phi).expect("10x10")
}

/// Two-player identical-interest game with entries drawn uniformly from
/// `range`.
pub fn random_potential_game(n: usize, m: usize, seed: u64, range: (f64, f64)) -> Result<NormalFormGame> {
    if n < 2 || m < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 actions each, got {n}x{m}")));
    }
    if !(range.0 < range.1 && range.0.is_finite() && range.1.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad value range {range:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = (0..n * m).map(|_| rng.random_range(range.0..range.1)).collect();
    NormalFormGame::identical_interest(vec![n, m], phi)
}

/// General-sum game with independent uniform `[0, 1)` payoffs.
pub fn random_game(action_counts: &[usize], seed: u64) -> Result<NormalFormGame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles: usize = action_counts.iter().product();
    let payoffs = (0..action_counts.len())
        .map(|_| (0..profiles).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    NormalFormGame::new(action_counts.to_vec(), payoffs)
}

/// Random 2x2 game in which both diagonal profiles are strict equilibria.
pub fn random_coordination_game(rng: &mut ChaCha8Rng) -> NormalFormGame {
    let mut draw = || rng.random_range(0.0..1.0);
    let (u21, u12, v21, v12) = (draw(), draw(), draw(), draw());
    let u11 = u21 + draw() + 1e-3;
    let u22 = u12 + draw() + 1e-3;
    let v11 = v21 + draw() + 1e-3;
    let v22 = v12 + draw() + 1e-3;
    // v_ij has player 2's action first, so b = v^T
    NormalFormGame::bimatrix(&[vec![u11, u12], vec![u21, u22]], &[vec![v11, v21], vec![v12, v22]])
        .expect("2x2")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coordination::{classify_coordination, DiagonalProfile};
    use crate::potential::verify_weighted_potential;

    #[test]
    fn table_payoffs() {
        let g = builtin_game("stag_hunt").unwrap();
        assert_eq!(g.payoffs(0), &[3.0, 0.0, 2.0, 1.5]);
        assert_eq!(g.payoffs(1), &[3.0, 2.0, 0.0, 1.5]);
        let g = builtin_game("battle_of_sexes").unwrap();
        assert_eq!((g.payoff(0, &[0, 0]), g.payoff(1, &[0, 0])), (1.5, 1.0));
        assert_eq!((g.payoff(0, &[1, 1]), g.payoff(1, &[1, 1])), (1.0, 2.0));
        let g = builtin_game("pareto_coordination").unwrap();
        assert_eq!((g.payoff(0, &[1, 1]), g.payoff(1, &[1, 1])), (1.5, 1.8));
        assert!(matches!(builtin_game("chicken"), Err(Error::UnknownGame(_))));
    }

    #[test]
    fn builtins_carry_valid_potentials() {
        for name in BUILTIN_NAMES {
            let g = builtin_game(name).unwrap();
            let check = verify_weighted_potential(&g, g.potential().unwrap());
            assert!(check.holds, "{name}: {}", check.max_violation);
        }
    }

    #[test]
    fn catastrophe_mixed_points_do_not_move_with_m() {
        for m in [1.0, 10.0, 50.0, 1e6] {
            let f = classify_coordination(&catastrophe_game(m, Catastrophe::Loss).unwrap()).unwrap();
            assert!((f.x_mix - 2.0 / 3.0).abs() < 1e-9 && (f.y_mix - 2.0 / 3.0).abs() < 1e-9);
            assert_eq!(f.risk_dominant, Some(DiagonalProfile::A2A2));
            let f = classify_coordination(&catastrophe_game(m, Catastrophe::Gain).unwrap()).unwrap();
            assert!((f.x_mix - 1.0 / 3.0).abs() < 1e-9);
            assert_eq!(f.risk_dominant, Some(DiagonalProfile::A1A1));
        }
        let g = catastrophe_game(10.0, Catastrophe::Loss).unwrap();
        assert_eq!(g.payoffs(0), &[20.0, 0.0, 19.0, 2.0]);
        assert!(catastrophe_game(0.0, Catastrophe::Gain).is_err());
    }

    #[test]
    fn diagonal_games() {
        let f = classify_coordination(&diagonal_game(&[1.0, 2.0]).unwrap()).unwrap();
        assert!((f.x_mix - 2.0 / 3.0).abs() < 1e-15);
        assert!(diagonal_game(&[1.0, 1.0]).is_err());
        assert!(diagonal_game(&[0.0, 1.0]).is_err());
        assert_eq!(builtin_game("diagonal_10").unwrap().payoff(0, &[9, 9]), 10.0);
    }

    #[test]
    fn appendix_matrix() {
        let phi = appendix_phi_matrix();
        assert_eq!(phi[0], vec![4., 4., 8., 1., 9., 1., 1., 9., 8., 2.]);
        assert_eq!(phi[9][9], 10.0);
        let max = phi.iter().flatten().copied().fold(f64::MIN, f64::max);
        assert_eq!(max, 10.0);
        assert_eq!(phi.iter().flatten().filter(|&&v| v == 10.0).count(), 1);
    }

    #[test]
    fn random_potential_games_are_deterministic_and_in_range() {
        let a = random_potential_game(2, 2, 5, (0.0, 1.0)).unwrap();
        let b = random_potential_game(2, 2, 5, (0.0, 1.0)).unwrap();
        assert_eq!(a, b);
        assert!(a.payoffs(0).iter().all(|&v| (0.0..1.0).contains(&v)));
        assert!(verify_weighted_potential(&a, a.potential().unwrap()).holds);
        assert!(random_potential_game(1, 2, 0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn random_coordination_games_are_coordination_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert!(classify_coordination(&random_coordination_game(&mut rng)).unwrap().is_coordination);
        }
    }
}
