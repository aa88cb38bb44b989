//! Finite normal-form games, mixed profiles and the entropy-modified payoffs
//! that turn smooth Q-learning into replicator dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::WeightedPotential;

/// Probabilities below this value are treated as boundary.
pub const PROB_FLOOR: f64 = 1e-12;

/// Tolerance on `sum(x_k) == 1` when validating a profile.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Dense payoff tensors, one per player, indexed row-major by the joint pure
/// profile (player 0 is the slowest-varying index).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    payoffs: Vec<Vec<f64>>,
    potential: Option<WeightedPotential>,
}

impl NormalFormGame {
    pub fn new(action_counts: Vec<usize>, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if action_counts.is_empty() {
            return Err(Error::InvalidParameter("a game needs at least one player".into()));
        }
        if let Some(k) = action_counts.iter().position(|&n| n == 0) {
            return Err(Error::InvalidParameter(format!("player {k} has no actions")));
        }
        if payoffs.len() != action_counts.len() {
            return Err(Error::DimensionMismatch {
                what: "payoff tensors",
                expected: action_counts.len(),
                found: payoffs.len(),
            });
        }
        let total: usize = action_counts.iter().product();
        for u in &payoffs {
            if u.len() != total {
                return Err(Error::DimensionMismatch {
                    what: "payoff tensor entries",
                    expected: total,
                    found: u.len(),
                });
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("payoffs must be finite".into()));
            }
        }
        let mut strides = vec![1; action_counts.len()];
        for k in (0..action_counts.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * action_counts[k + 1];
        }
        Ok(Self {
            action_counts,
            strides,
            payoffs,
            potential: None,
        })
    }

    /// Two-player game from the row player's matrix `a` and the column
    /// player's matrix `b`, both indexed `[row action][column action]`.
    pub fn bimatrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let m = a.first().map_or(0, Vec::len);
        if b.len() != n || a.iter().chain(b).any(|row| row.len() != m) {
            return Err(Error::InvalidParameter(
                "bimatrix payoffs must be two matrices of equal shape".into(),
            ));
        }
        let flat = |mat: &[Vec<f64>]| mat.iter().flatten().copied().collect::<Vec<_>>();
        Self::new(vec![n, m], vec![flat(a), flat(b)])
    }

    /// Symmetric two-player game with `u_2 = u_1^T`.
    pub fn symmetric(a: &[Vec<f64>]) -> Result<Self> {
        let n = a.len();
        let transposed: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a[j][i]).collect())
            .collect();
        Self::bimatrix(a, &transposed)
    }

    /// Game in which every player's payoff is the potential itself.
    pub fn identical_interest(action_counts: Vec<usize>, phi: Vec<f64>) -> Result<Self> {
        let players = action_counts.len();
        let game = Self::new(action_counts, vec![phi.clone(); players])?;
        let counts = game.action_counts().to_vec();
        game.with_potential(WeightedPotential::new(counts, phi, vec![1.0; players])?)
    }

    pub fn with_potential(mut self, potential: WeightedPotential) -> Result<Self> {
        if potential.action_counts() != self.action_counts.as_slice() {
            return Err(Error::InvalidParameter(format!(
                "potential shape {:?} does not match game shape {:?}",
                potential.action_counts(),
                self.action_counts
            )));
        }
        let check = crate::potential::verify_weighted_potential(&self, &potential);
        if !check.holds {
            return Err(Error::InvalidParameter(format!(
                "potential does not match the payoffs (largest violation {:.3e})",
                check.max_violation
            )));
        }
        self.potential = Some(potential);
        Ok(self)
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_profiles(&self) -> usize {
        self.action_counts.iter().product()
    }

    pub fn payoffs(&self, k: usize) -> &[f64] {
        &self.payoffs[k]
    }

    pub fn potential(&self) -> Option<&WeightedPotential> {
        self.potential.as_ref()
    }

    pub fn joint_index(&self, actions: &[usize]) -> usize {
        actions.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn payoff(&self, k: usize, actions: &[usize]) -> f64 {
        self.payoffs[k][self.joint_index(actions)]
    }

    pub fn check_profile(&self, profile: &ChoiceProfile) -> Result<()> {
        let x = profile.strategies();
        if x.len() != self.num_players() {
            return Err(Error::DimensionMismatch {
                what: "profile players",
                expected: self.num_players(),
                found: x.len(),
            });
        }
        for (xk, &n) in x.iter().zip(&self.action_counts) {
            if xk.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "profile actions",
                    expected: n,
                    found: xk.len(),
                });
            }
        }
        Ok(())
    }

    /// `r_k(x)`: expected payoff of each pure action of player `k` against
    /// the opponents' mixed strategies.
    pub fn reward_vector(&self, profile: &ChoiceProfile, k: usize) -> Result<Vec<f64>> {
        self.check_profile(profile)?;
        self.check_player(k)?;
        let mut out = vec![0.0; self.action_counts[k]];
        self.rewards_into(&self.payoffs[k], profile.strategies(), k, &mut out);
        Ok(out)
    }

    /// `u_k(x) = <x_k, r_k(x)>`.
    pub fn expected_utility(&self, profile: &ChoiceProfile, k: usize) -> Result<f64> {
        let r = self.reward_vector(profile, k)?;
        Ok(dot(&profile.strategies()[k], &r))
    }

    /// `r^H_ki = beta_k r_ki - alpha_k (ln x_ki + 1)`.
    pub fn modified_reward(
        &self,
        profile: &ChoiceProfile,
        params: &AgentParams,
        k: usize,
    ) -> Result<Vec<f64>> {
        profile.require_positive()?;
        let r = self.reward_vector(profile, k)?;
        let xk = &profile.strategies()[k];
        Ok(r.iter()
            .zip(xk)
            .map(|(ri, xi)| params.beta * ri - params.alpha * (xi.ln() + 1.0))
            .collect())
    }

    /// `u^H_k = beta_k <x_k, r_k> - alpha_k <x_k, ln x_k>`.
    pub fn modified_utility(
        &self,
        profile: &ChoiceProfile,
        params: &AgentParams,
        k: usize,
    ) -> Result<f64> {
        profile.require_positive()?;
        let u = self.expected_utility(profile, k)?;
        let xk = &profile.strategies()[k];
        let neg_entropy: f64 = xk.iter().map(|x| x * x.ln()).sum();
        Ok(params.beta * u - params.alpha * neg_entropy)
    }

    fn check_player(&self, k: usize) -> Result<()> {
        if k >= self.num_players() {
            return Err(Error::InvalidParameter(format!(
                "player index {k} out of range for {} players",
                self.num_players()
            )));
        }
        Ok(())
    }

    pub(crate) fn rewards_into(&self, tensor: &[f64], x: &[Vec<f64>], k: usize, out: &mut [f64]) {
        contract_except(&self.action_counts, tensor, x, k, out);
    }

    /// Reward vectors of all players at once.
    pub(crate) fn all_rewards(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        (0..self.num_players())
            .map(|k| {
                let mut r = vec![0.0; self.action_counts[k]];
                self.rewards_into(&self.payoffs[k], x, k, &mut r);
                r
            })
            .collect()
    }
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChoiceProfile {
    strategies: Vec<Vec<f64>>,
}

impl ChoiceProfile {
    pub fn new(strategies: Vec<Vec<f64>>) -> Result<Self> {
        for (k, xk) in strategies.iter().enumerate() {
            if xk.is_empty() {
                return Err(Error::InvalidParameter(format!("player {k} has an empty strategy")));
            }
            if xk.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "player {k} strategy has negative or non-finite entries"
                )));
            }
            let s: f64 = xk.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::InvalidParameter(format!(
                    "player {k} strategy sums to {s}, not 1"
                )));
            }
        }
        Ok(Self { strategies })
    }

    /// Normalizes each non-negative vector onto the simplex.
    pub fn normalized(strategies: Vec<Vec<f64>>) -> Result<Self> {
        let mut out = Vec::with_capacity(strategies.len());
        for (k, xk) in strategies.into_iter().enumerate() {
            let s: f64 = xk.iter().sum();
            if !(s > 0.0) || xk.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "player {k} weights cannot be normalized"
                )));
            }
            out.push(xk.into_iter().map(|p| p / s).collect());
        }
        Ok(Self { strategies: out })
    }

    pub(crate) fn from_raw(strategies: Vec<Vec<f64>>) -> Self {
        Self { strategies }
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        Self {
            strategies: action_counts
                .iter()
                .map(|&n| vec![1.0 / n as f64; n])
                .collect(),
        }
    }

    pub fn pure(action_counts: &[usize], actions: &[usize]) -> Result<Self> {
        if actions.len() != action_counts.len() {
            return Err(Error::DimensionMismatch {
                what: "pure profile",
                expected: action_counts.len(),
                found: actions.len(),
            });
        }
        let mut strategies = Vec::with_capacity(actions.len());
        for (&n, &a) in action_counts.iter().zip(actions) {
            if a >= n {
                return Err(Error::InvalidParameter(format!("action {a} out of range {n}")));
            }
            let mut v = vec![0.0; n];
            v[a] = 1.0;
            strategies.push(v);
        }
        Ok(Self { strategies })
    }

    /// Profile of two-action players from the probability each assigns to
    /// its first action.
    pub fn from_first_action(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|&p| vec![p, 1.0 - p]).collect())
    }

    pub fn strategies(&self) -> &[Vec<f64>] {
        &self.strategies
    }

    pub fn into_strategies(self) -> Vec<Vec<f64>> {
        self.strategies
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn min_prob(&self) -> f64 {
        self.strategies
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_interior(&self) -> bool {
        self.min_prob() >= PROB_FLOOR
    }

    /// First-action probabilities, the coordinates used for 2x2 games.
    pub fn first_action_probs(&self) -> Vec<f64> {
        self.strategies.iter().map(|x| x[0]).collect()
    }

    /// Raises entries below [`PROB_FLOOR`] to the floor, keeping the sum at one.
    /// The flag reports whether anything was changed.
    pub fn clamp_interior(&self) -> (Self, bool) {
        let mut clamped = false;
        let strategies = self
            .strategies
            .iter()
            .map(|xk| {
                if xk.iter().all(|&p| p >= PROB_FLOOR) {
                    return xk.clone();
                }
                clamped = true;
                // lift to the floor and take the excess from the largest entry,
                // since renormalizing would push the lifted entries back below it
                let mut raised: Vec<f64> = xk.iter().map(|&p| p.max(PROB_FLOOR)).collect();
                let excess = raised.iter().sum::<f64>() - 1.0;
                let top = (0..raised.len()).max_by(|&a, &b| raised[a].total_cmp(&raised[b])).unwrap_or(0);
                raised[top] -= excess;
                raised
            })
            .collect();
        (Self { strategies }, clamped)
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        if self.strategies.iter().flatten().any(|&p| p <= 0.0) {
            return Err(Error::Domain(
                "logarithm of a zero probability; profile must be strictly interior".into(),
            ));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.strategies
            .iter()
            .flatten()
            .zip(other.strategies.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Memory-loss rate `alpha` and adaptation rate `beta` of one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    pub alpha: f64,
    pub beta: f64,
}

impl AgentParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1), got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Parameters with exploration rate `delta` at adaptation rate `beta`.
    pub fn from_delta(delta: f64, beta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "exploration rate must be non-negative, got {delta}"
            )));
        }
        Self::new(delta * beta, beta)
    }

    /// Exploration rate `alpha / beta`.
    pub fn delta(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// Contracts a joint-profile tensor against every player's strategy except
/// `k`, leaving a vector over player `k`'s actions. No shape validation.
pub(crate) fn contract_except(
    counts: &[usize],
    tensor: &[f64],
    x: &[Vec<f64>],
    k: usize,
    out: &mut [f64],
) {
    out.iter_mut().for_each(|v| *v = 0.0);
    match counts.len() {
        1 => out.copy_from_slice(tensor),
        2 => {
            let (n, m) = (counts[0], counts[1]);
            if k == 0 {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = dot(&tensor[i * m..(i + 1) * m], &x[1]);
                }
            } else {
                for i in 0..n {
                    let xi = x[0][i];
                    for (o, u) in out.iter_mut().zip(&tensor[i * m..(i + 1) * m]) {
                        *o += xi * u;
                    }
                }
            }
        }
        players => {
            let mut actions = vec![0usize; players];
            for &u in tensor {
                let mut w = 1.0;
                for l in 0..players {
                    if l != k {
                        w *= x[l][actions[l]];
                    }
                }
                out[actions[k]] += w * u;
                // odometer, last player fastest
                for l in (0..players).rev() {
                    actions[l] += 1;
                    if actions[l] < counts[l] {
                        break;
                    }
                    actions[l] = 0;
                }
            }
        }
    }
}

/// `d r_ki / d x_lm`: the tensor contracted against every player except `k`
/// and `l` (`k != l`), as a row-major `n_k x n_l` matrix.
pub(crate) fn pair_marginal(
    counts: &[usize],
    tensor: &[f64],
    x: &[Vec<f64>],
    k: usize,
    l: usize,
) -> Vec<f64> {
    let (nk, nl) = (counts[k], counts[l]);
    let mut out = vec![0.0; nk * nl];
    let players = counts.len();
    let mut actions = vec![0usize; players];
    for &u in tensor {
        let mut w = 1.0;
        for p in 0..players {
            if p != k && p != l {
                w *= x[p][actions[p]];
            }
        }
        out[actions[k] * nl + actions[l]] += w * u;
        for p in (0..players).rev() {
            actions[p] += 1;
            if actions[p] < counts[p] {
                break;
            }
            actions[p] = 0;
        }
    }
    out
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// On-disk game description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub players: usize,
    pub actions: Vec<usize>,
    pub payoffs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialFile {
    pub phi: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GameFile {
    pub fn into_game(self) -> Result<NormalFormGame> {
        if self.players != self.actions.len() {
            return Err(Error::DimensionMismatch {
                what: "`actions` length vs `players`",
                expected: self.players,
                found: self.actions.len(),
            });
        }
        let game = NormalFormGame::new(self.actions.clone(), self.payoffs)?;
        match self.potential {
            Some(p) => game.with_potential(WeightedPotential::new(self.actions, p.phi, p.weights)?),
            None => Ok(game),
        }
    }

    pub fn from_game(game: &NormalFormGame) -> Self {
        Self {
            players: game.num_players(),
            actions: game.action_counts().to_vec(),
            payoffs: game.payoffs.clone(),
            potential: game.potential().map(|p| PotentialFile {
                phi: p.phi().to_vec(),
                weights: p.weights().to_vec(),
            }),
        }
    }
}

impl NormalFormGame {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<GameFile>(text)?.into_game()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GameFile::from_game(self))?)
    }
}
