use crate::error::{Error, Result};
use crate::game::{dot, AgentParams, ChoiceProfile, NormalFormGame};

/// `dx_ki/dt = x_ki ( beta_k [r_ki - <x_k, r_k>] - alpha_k [ln x_ki - <x_k, ln x_k>] )`.
pub fn sql_vector_field(
    game: &NormalFormGame,
    params: &[AgentParams],
    profile: &ChoiceProfile,
) -> Result<Vec<Vec<f64>>> {
    game.check_profile(profile)?;
    check_params(game, params)?;
    if profile.strategies().iter().flatten().any(|&p| p <= 0.0) {
        return Err(Error::Domain(
            "the exploration term is undefined on the boundary of the simplex".into(),
        ));
    }
    let x = profile.strategies();
    let rewards = game.all_rewards(x);
    Ok(x.iter()
        .zip(&rewards)
        .zip(params)
        .map(|((xk, rk), p)| {
            let mean_r = dot(xk, rk);
            let logs: Vec<f64> = xk.iter().map(|v| v.ln()).collect();
            let mean_log = dot(xk, &logs);
            xk.iter()
                .zip(rk)
                .zip(&logs)
                .map(|((xi, ri), li)| xi * (p.beta * (ri - mean_r) - p.alpha * (li - mean_log)))
                .collect()
        })
        .collect())
}

pub(crate) fn check_params(game: &NormalFormGame, params: &[AgentParams]) -> Result<()> {
    if params.len() != game.num_players() {
        return Err(Error::DimensionMismatch {
            what: "agent parameters",
            expected: game.num_players(),
            found: params.len(),
        });
    }
    Ok(())
}

/// Unconstrained coordinates `y_ki = ln(x_ki / x_k,last)`, flattened over
/// players. Each player contributes `n_k - 1` entries.
pub(crate) fn to_log_ratio(x: &[Vec<f64>]) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.iter().map(|xk| xk.len() - 1).sum());
    for xk in x {
        let last = xk[xk.len() - 1].ln();
        y.extend(xk[..xk.len() - 1].iter().map(|v| v.ln() - last));
    }
    y
}

/// Inverse of [`to_log_ratio`]: a max-shifted softmax over `(y, 0)`.
pub(crate) fn from_log_ratio(counts: &[usize], y: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(counts.len());
    let mut offset = 0;
    for &n in counts {
        let yk = &y[offset..offset + n - 1];
        offset += n - 1;
        let m = yk.iter().copied().fold(0.0, f64::max);
        let mut xk: Vec<f64> = yk.iter().map(|v| (v - m).exp()).collect();
        xk.push((-m).exp());
        let s: f64 = xk.iter().sum();
        xk.iter_mut().for_each(|v| *v /= s);
        out.push(xk);
    }
    out
}

/// Field in log-ratio coordinates, `dy_ki/dt = beta_k (r_ki - r_k,last) - alpha_k y_ki`.
/// `rates` holds `(alpha_k, beta_k)`.
pub(crate) fn log_ratio_field(game: &NormalFormGame, rates: &[(f64, f64)], y: &[f64]) -> Vec<f64> {
    let x = from_log_ratio(game.action_counts(), y);
    let rewards = game.all_rewards(&x);
    let mut out = Vec::with_capacity(y.len());
    let mut offset = 0;
    for (rk, &(alpha, beta)) in rewards.iter().zip(rates) {
        let n = rk.len();
        let last = rk[n - 1];
        for i in 0..n - 1 {
            out.push(beta * (rk[i] - last) - alpha * y[offset + i]);
        }
        offset += n - 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::qre::{qre_2x2_roots, qre_residual};
    use crate::coordination::classify_coordination;
    use proptest::prelude::*;

    fn params(alpha: f64, beta: f64, n: usize) -> Vec<AgentParams> {
        vec![AgentParams::new(alpha, beta).unwrap(); n]
    }

    #[test]
    fn zero_game_uniform_is_stationary() {
        let g = NormalFormGame::new(vec![3, 4], vec![vec![0.0; 12]; 2]).unwrap();
        let x = ChoiceProfile::uniform(g.action_counts());
        let f = sql_vector_field(&g, &params(0.7, 2.0, 2), &x).unwrap();
        assert!(f.iter().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn stag_hunt_replicator_component() {
        let g = builtins::stag_hunt();
        let x = ChoiceProfile::from_first_action(&[0.9, 0.9]).unwrap();
        let f = sql_vector_field(&g, &params(0.0, 1.0, 2), &x).unwrap();
        let r = g.reward_vector(&x, 0).unwrap();
        let u = g.expected_utility(&x, 0).unwrap();
        assert!((f[0][0] - 0.9 * (r[0] - u)).abs() < 1e-15);
    }

    #[test]
    fn exact_qre_is_a_rest_point() {
        let g = builtins::stag_hunt();
        let facts = classify_coordination(&g).unwrap();
        let p = AgentParams::from_delta(0.3, 1.0).unwrap();
        for root in qre_2x2_roots(&facts, p, p).unwrap() {
            let f = sql_vector_field(&g, &[p, p], &root.profile).unwrap();
            assert!(f.iter().flatten().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn boundary_profile_is_rejected() {
        let g = builtins::stag_hunt();
        let x = ChoiceProfile::from_first_action(&[1.0, 0.5]).unwrap();
        assert!(matches!(
            sql_vector_field(&g, &params(0.1, 1.0, 2), &x),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn log_ratio_round_trip() {
        let x = vec![vec![0.2, 0.3, 0.5], vec![0.9, 0.1]];
        let back = from_log_ratio(&[3, 2], &to_log_ratio(&x));
        for (a, b) in x.iter().flatten().zip(back.iter().flatten()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    fn game_state() -> impl Strategy<Value = (NormalFormGame, ChoiceProfile, Vec<AgentParams>)> {
        prop::collection::vec(2usize..=4, 2..=3).prop_flat_map(|counts| {
            let total: usize = counts.iter().product();
            let players = counts.len();
            let pay = prop::collection::vec(prop::collection::vec(-3.0f64..3.0, total), players);
            let strat = counts
                .iter()
                .map(|&n| prop::collection::vec(0.01f64..1.0, n))
                .collect::<Vec<_>>();
            let rates = prop::collection::vec((0.0f64..0.99, 0.05f64..3.0), players);
            (Just(counts), pay, strat, rates).prop_map(|(counts, pay, strat, rates)| {
                (
                    NormalFormGame::new(counts, pay).unwrap(),
                    ChoiceProfile::normalized(strat).unwrap(),
                    rates
                        .into_iter()
                        .map(|(a, b)| AgentParams::new(a, b).unwrap())
                        .collect(),
                )
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn field_is_tangent_and_matches_modified_replicator((g, x, p) in game_state()) {
            let f = sql_vector_field(&g, &p, &x).unwrap();
            for k in 0..g.num_players() {
                prop_assert!(f[k].iter().sum::<f64>().abs() < 1e-12);
                let rh = g.modified_reward(&x, &p[k], k).unwrap();
                let xk = &x.strategies()[k];
                let mean = dot(xk, &rh);
                for i in 0..xk.len() {
                    prop_assert!((f[k][i] - xk[i] * (rh[i] - mean)).abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rest_points_are_qre((g, x, p) in game_state()) {
            // Stationarity and the logit fixed-point equations pick out the
            // same interior points; relax a random state to a rest point first.
            let deltas: Vec<f64> = p.iter().map(|q| q.alpha / q.beta).collect();
            prop_assume!(deltas.iter().all(|d| *d > 0.2));
            let seed = x.clone();
            let solved = crate::qre::solve_qre(&g, &deltas, &seed);
            prop_assume!(solved.is_ok());
            let q = solved.unwrap();
            let f = sql_vector_field(&g, &p, &q.profile).unwrap();
            prop_assert!(f.iter().flatten().all(|v| v.abs() < 1e-10));
            prop_assert!(qre_residual(&g, &deltas, &q.profile).unwrap() < 1e-8);
            // and a non-QRE state is not a rest point
            let res = qre_residual(&g, &deltas, &x).unwrap();
            if res > 1e-3 {
                let f = sql_vector_field(&g, &p, &x).unwrap();
                prop_assert!(f.iter().flatten().any(|v| v.abs() > 1e-10));
            }
        }
    }
}
