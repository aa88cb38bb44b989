use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ChoiceProfile, NormalFormGame};
use crate::metrics::modified_potential;
use crate::schedule::{ExplorationSchedule, SchedulePoint};

/// Q-value memories, one vector per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QValueState {
    pub q: Vec<Vec<f64>>,
}

/// Recorded samples of one run. All vectors have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub profiles: Vec<ChoiceProfile>,
    pub q_values: Option<Vec<QValueState>>,
    /// Per sample, the rates of each agent.
    pub schedule_values: Vec<Vec<SchedulePoint>>,
    pub utilities: Vec<Vec<f64>>,
    /// Modified potential, when the game carries one.
    pub phi_h: Option<Vec<f64>>,
    /// Whether the start profile had entries below the probability floor
    /// and was lifted onto it.
    pub clamped_start: bool,
}

impl Trajectory {
    pub(crate) fn new(game: &NormalFormGame, with_q: bool, clamped_start: bool) -> Self {
        Self {
            times: Vec::new(),
            profiles: Vec::new(),
            q_values: with_q.then(Vec::new),
            schedule_values: Vec::new(),
            utilities: Vec::new(),
            phi_h: game.potential().map(|_| Vec::new()),
            clamped_start,
        }
    }

    pub(crate) fn push(
        &mut self,
        game: &NormalFormGame,
        t: f64,
        x: Vec<Vec<f64>>,
        rates: Vec<SchedulePoint>,
        q: Option<QValueState>,
    ) -> Result<()> {
        let profile = ChoiceProfile::from_raw(x);
        let utilities = (0..game.num_players())
            .map(|k| game.expected_utility(&profile, k))
            .collect::<Result<Vec<_>>>()?;
        if let (Some(phi_h), Some(pot)) = (self.phi_h.as_mut(), game.potential()) {
            let deltas: Vec<f64> = rates.iter().map(|r| r.delta).collect();
            phi_h.push(modified_potential(pot, &deltas, &profile)?);
        }
        if let (Some(store), Some(q)) = (self.q_values.as_mut(), q) {
            store.push(q);
        }
        self.times.push(t);
        self.profiles.push(profile);
        self.schedule_values.push(rates);
        self.utilities.push(utilities);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_profile(&self) -> Result<&ChoiceProfile> {
        self.profiles.last().ok_or(Error::EmptyTrajectory)
    }

    pub fn final_utilities(&self) -> Result<&[f64]> {
        self.utilities.last().map(Vec::as_slice).ok_or(Error::EmptyTrajectory)
    }

    /// Columns `t, delta_1..delta_N, x_k_i..., u_1..u_N, phi_h`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let Some(first) = self.profiles.first() else {
            return out;
        };
        let players = first.num_players();
        let mut header = vec!["t".to_string()];
        header.extend((1..=players).map(|k| format!("delta_{k}")));
        for (k, xk) in first.strategies().iter().enumerate() {
            header.extend((1..=xk.len()).map(|i| format!("x_{}_{i}", k + 1)));
        }
        header.extend((1..=players).map(|k| format!("u_{k}")));
        header.push("phi_h".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for s in 0..self.len() {
            let mut row = vec![fmt(self.times[s])];
            row.extend(self.schedule_values[s].iter().map(|r| fmt(r.delta)));
            row.extend(self.profiles[s].strategies().iter().flatten().map(|&v| fmt(v)));
            row.extend(self.utilities[s].iter().map(|&v| fmt(v)));
            row.push(self.phi_h.as_ref().map(|p| fmt(p[s])).unwrap_or_default());
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn rates_at(schedules: &[ExplorationSchedule], t: f64) -> Result<Vec<SchedulePoint>> {
    schedules.iter().map(|s| s.eval(t)).collect()
}

pub(crate) fn check_schedules(game: &NormalFormGame, schedules: &[ExplorationSchedule]) -> Result<()> {
    if schedules.len() != game.num_players() {
        return Err(Error::DimensionMismatch {
            what: "schedules",
            expected: game.num_players(),
            found: schedules.len(),
        });
    }
    Ok(())
}
