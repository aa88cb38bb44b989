//! Experiment orchestration: a JSON config in, CSV artifacts and a JSON
//! summary out.
//!
//! Runs over the initial conditions execute in parallel; results are
//! collected in start order and written afterwards, so identical configs
//! produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builtins::{self, Catastrophe};
use crate::coordination::classify_coordination;
use crate::dynamics::{integrate_sql_with, simulate_discrete, BatchMode, DiscreteOptions, IntegrateOptions, Trajectory};
use crate::error::{Error, Result};
use crate::game::{ChoiceProfile, GameFile, NormalFormGame};
use crate::metrics::{lyapunov_audit, regret, regret_csv, LyapunovAudit, LYAPUNOV_TOL};
use crate::potential::multilinear_potential;
use crate::projection::{project_potential, projection_csv, ProjectionSpec};
use crate::qre::{detect_folds, linspace, qre_2x2_roots_for_deltas, sweep_surface};
use crate::schedule::{ExplorationSchedule, RampShape};

/// Mass moved off the favoured action in each corner start.
pub const CORNER_EPSILON: f64 = 0.05;

/// Adaptation rate used by the 2x2 scenarios. Small enough that exploration
/// peaks of 10 keep `alpha = delta * beta` below one.
pub const SCENARIO_BETA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSource {
    Builtin(String),
    File { file: PathBuf },
    RandomPotential { random_potential: RandomPotentialSpec },
    Inline(GameFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomPotentialSpec {
    pub n: usize,
    pub m: usize,
    #[serde(default = "unit_range")]
    pub range: (f64, f64),
}

fn unit_range() -> (f64, f64) {
    (0.0, 1.0)
}

impl GameSource {
    pub fn load(&self, seed: u64) -> Result<NormalFormGame> {
        match self {
            GameSource::Builtin(name) => builtins::builtin_game(name),
            GameSource::File { file } => NormalFormGame::from_json(&fs::read_to_string(file)?),
            GameSource::RandomPotential { random_potential: r } => {
                builtins::random_potential_game(r.n, r.m, seed, r.range)
            }
            GameSource::Inline(g) => g.clone().into_game(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            GameSource::Builtin(name) => name.clone(),
            GameSource::File { file } => file.display().to_string(),
            GameSource::RandomPotential { random_potential: r } => format!("random_potential_{}x{}", r.n, r.m),
            GameSource::Inline(_) => "inline".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EngineConfig {
    Continuous {
        t_end: f64,
        step: f64,
        #[serde(default = "one")]
        record_stride: usize,
    },
    Discrete {
        epochs: usize,
        /// Written as a JSON number, so `1e20` is accepted.
        #[serde(with = "whole_number")]
        interactions: u128,
        horizon: f64,
        #[serde(default)]
        mode: BatchMode,
        #[serde(default = "one")]
        record_stride: usize,
    },
}

fn one() -> usize {
    1
}

/// `u128` through `f64`, since buffered enum content cannot hold 128-bit
/// integers.
mod whole_number {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        match u64::try_from(*v) {
            Ok(small) => s.serialize_u64(small),
            Err(_) => s.serialize_f64(*v as f64),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        let v = f64::deserialize(d)?;
        if !(v >= 1.0 && v.fract() == 0.0 && v < 3.4e38) {
            return Err(D::Error::custom(format!("expected a positive whole number, got {v}")));
        }
        Ok(v as u128)
    }
}

impl EngineConfig {
    pub fn name(&self) -> &'static str {
        match self {
            EngineConfig::Continuous { .. } => "continuous",
            EngineConfig::Discrete { .. } => "discrete",
        }
    }

    pub fn run(
        &self,
        game: &NormalFormGame,
        schedules: &[ExplorationSchedule],
        x0: &ChoiceProfile,
    ) -> Result<Trajectory> {
        match *self {
            EngineConfig::Continuous {
                t_end,
                step,
                record_stride,
            } => integrate_sql_with(game, schedules, x0, &IntegrateOptions::new(t_end, step).stride(record_stride)),
            EngineConfig::Discrete {
                epochs,
                interactions,
                horizon,
                mode,
                record_stride,
            } => simulate_discrete(
                game,
                schedules,
                x0,
                &DiscreteOptions::new(epochs, interactions, horizon)
                    .mode(mode)
                    .stride(record_stride),
            ),
        }
    }
}

/// Where runs start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialConditions {
    Point {
        profile: Vec<Vec<f64>>,
    },
    /// One start near every pure profile, with `1 - (n - 1) epsilon` on the
    /// favoured action.
    Corners {
        #[serde(default = "corner_epsilon")]
        epsilon: f64,
    },
    /// Cartesian product of first-action probabilities; two-action players
    /// only.
    Lattice {
        values: Vec<f64>,
    },
}

fn corner_epsilon() -> f64 {
    CORNER_EPSILON
}

impl InitialConditions {
    pub fn profiles(&self, game: &NormalFormGame) -> Result<Vec<ChoiceProfile>> {
        match self {
            InitialConditions::Point { profile } => {
                let p = ChoiceProfile::new(profile.clone())?;
                game.check_profile(&p)?;
                Ok(vec![p])
            }
            InitialConditions::Corners { epsilon } => corner_starts(game.action_counts(), *epsilon),
            InitialConditions::Lattice { values } => {
                if game.action_counts().iter().any(|&n| n != 2) {
                    return Err(Error::InvalidParameter(
                        "lattice starts need every player to have two actions".into(),
                    ));
                }
                let players = game.num_players();
                let total = values.len().pow(players as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut probs = vec![0.0; players];
                        for k in (0..players).rev() {
                            probs[k] = values[idx % values.len()];
                            idx /= values.len();
                        }
                        ChoiceProfile::from_first_action(&probs)
                    })
                    .collect()
            }
        }
    }
}

/// Starts near each pure profile, player 1's action varying slowest.
pub fn corner_starts(action_counts: &[usize], epsilon: f64) -> Result<Vec<ChoiceProfile>> {
    if action_counts.iter().any(|&n| !(epsilon > 0.0 && (n - 1) as f64 * epsilon < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "corner epsilon {epsilon} leaves no mass for the favoured action"
        )));
    }
    let total: usize = action_counts.iter().product();
    (0..total)
        .map(|mut idx| {
            let mut strategies = vec![Vec::new(); action_counts.len()];
            for k in (0..action_counts.len()).rev() {
                let n = action_counts[k];
                let a = idx % n;
                idx /= n;
                let mut xk = vec![epsilon; n];
                xk[a] = 1.0 - (n - 1) as f64 * epsilon;
                strategies[k] = xk;
            }
            ChoiceProfile::new(strategies)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceConfig {
    pub range_x: (f64, f64),
    pub range_y: (f64, f64),
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub deltas: Vec<f64>,
    /// `(lo, hi, points)` for both slice coordinates.
    pub grid: (f64, f64, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default = "yes")]
    pub trajectory: bool,
    #[serde(default)]
    pub regret: bool,
    #[serde(default)]
    pub surface: Option<SurfaceConfig>,
    #[serde(default)]
    pub projection: Option<ProjectionConfig>,
}

fn yes() -> bool {
    true
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            trajectory: true,
            regret: false,
            surface: None,
            projection: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub game: GameSource,
    /// One per player.
    pub schedules: Vec<ExplorationSchedule>,
    pub engine: EngineConfig,
    pub initial: InitialConditions,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub start: Vec<Vec<f64>>,
    pub end: Vec<Vec<f64>>,
    pub utilities: Vec<f64>,
    /// Potential of the final profile (without the entropy term).
    pub potential: Option<f64>,
    pub clamped_start: bool,
    pub lyapunov: Option<LyapunovAudit>,
    /// Largest `regret_h - bound` over time and agents.
    pub regret_excess: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub game: String,
    pub action_counts: Vec<usize>,
    pub engine: String,
    pub seed: u64,
    pub schedules: Vec<ExplorationSchedule>,
    pub runs: Vec<RunSummary>,
    /// Largest coordinate-wise distance between any final profile and the
    /// first one.
    pub endpoint_spread: f64,
    pub potential: Option<Stats>,
    pub fold_components: Option<usize>,
    pub warnings: Vec<String>,
    /// Written files, relative to the output directory.
    pub files: Vec<String>,
}

/// Runs the experiment and writes artifacts into `out_dir` (created if
/// missing).
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentSummary> {
    let game = config.game.load(config.seed)?;
    if config.schedules.len() != game.num_players() {
        return Err(Error::DimensionMismatch {
            what: "schedules",
            expected: game.num_players(),
            found: config.schedules.len(),
        });
    }
    for s in &config.schedules {
        s.validate()?;
    }
    let starts = config.initial.profiles(&game)?;
    fs::create_dir_all(out_dir)?;

    let trajectories: Vec<Trajectory> = starts
        .par_iter()
        .map(|x0| config.engine.run(&game, &config.schedules, x0))
        .collect::<Result<_>>()?;

    let mut summary = ExperimentSummary {
        game: config.game.describe(),
        action_counts: game.action_counts().to_vec(),
        engine: config.engine.name().into(),
        seed: config.seed,
        schedules: config.schedules.clone(),
        runs: Vec::with_capacity(trajectories.len()),
        endpoint_spread: 0.0,
        potential: None,
        fold_components: None,
        warnings: Vec::new(),
        files: Vec::new(),
    };
    let constant = config.schedules.iter().all(ExplorationSchedule::is_constant);
    let width = digits(trajectories.len());
    let mut potentials = Vec::new();
    for (idx, (x0, traj)) in starts.iter().zip(&trajectories).enumerate() {
        let end = traj.final_profile()?;
        let potential = game.potential().map(|p| multilinear_potential(p, end)).transpose()?;
        potentials.extend(potential);
        let lyapunov = match game.potential() {
            Some(p) => Some(lyapunov_audit(traj, p)?),
            None => None,
        };
        if let Some(audit) = &lyapunov {
            if !audit.passes(LYAPUNOV_TOL) {
                summary
                    .warnings
                    .push(format!("run {idx}: modified potential decreased ({audit:?})"));
            }
        }
        let mut regret_excess = None;
        if config.outputs.regret && constant {
            let reports = (0..game.num_players())
                .map(|k| regret(traj, &game, k))
                .collect::<Result<Vec<_>>>()?;
            regret_excess = reports.iter().map(|r| r.worst_excess()).reduce(f64::max);
            let name = format!("regret_{idx:0width$}.csv");
            fs::write(out_dir.join(&name), regret_csv(&reports))?;
            summary.files.push(name);
        }
        if config.outputs.trajectory {
            let name = format!("trajectory_{idx:0width$}.csv");
            traj.write_csv(&out_dir.join(&name))?;
            summary.files.push(name);
        }
        if traj.clamped_start {
            summary.warnings.push(format!("run {idx}: start was lifted onto the probability floor"));
        }
        summary.runs.push(RunSummary {
            start: x0.strategies().to_vec(),
            end: end.strategies().to_vec(),
            utilities: traj.final_utilities()?.to_vec(),
            potential,
            clamped_start: traj.clamped_start,
            lyapunov,
            regret_excess,
        });
    }
    if config.outputs.regret && !constant {
        summary
            .warnings
            .push("regret skipped: it needs constant exploration rates".into());
    }
    if let Some(first) = trajectories.first() {
        let reference = first.final_profile()?;
        for t in &trajectories {
            summary.endpoint_spread = summary.endpoint_spread.max(t.final_profile()?.max_abs_diff(reference));
        }
    }
    summary.potential = Stats::of(&potentials);

    if let Some(s) = &config.outputs.surface {
        let scan = sweep_surface(&game, s.range_x, s.range_y, s.resolution)?;
        let folds = detect_folds(&scan);
        fs::write(out_dir.join("surface.csv"), scan.to_csv())?;
        fs::write(out_dir.join("folds.csv"), folds.polyline_csv())?;
        summary.files.extend(["surface.csv".into(), "folds.csv".into()]);
        summary.fold_components = Some(folds.num_components());
        summary.warnings.extend(folds.warnings);
    }
    if let Some(p) = &config.outputs.projection {
        let pot = game.potential().ok_or(Error::MissingPotential)?;
        let grid = linspace(p.grid.0, p.grid.1, p.grid.2);
        let spec = ProjectionSpec::random(game.action_counts(), config.seed, grid.clone(), grid)?;
        let blocks = p
            .deltas
            .iter()
            .map(|&d| Ok((d, project_potential(pot, d, &spec)?)))
            .collect::<Result<Vec<_>>>()?;
        fs::write(out_dir.join("projection.csv"), projection_csv(&blocks))?;
        summary.files.push("projection.csv".into());
    }
    fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).max(1).to_string().len()
}

/// Largest common exploration rate at which a 2x2 game still has three
/// equilibria, scanned on `(0, hi]` with the given number of points.
pub fn diagonal_fold_delta(game: &NormalFormGame, hi: f64, points: usize) -> Result<Option<f64>> {
    let facts = classify_coordination(game)?;
    Ok(linspace(hi / points as f64, hi, points)
        .into_iter()
        .filter(|&d| qre_2x2_roots_for_deltas(&facts, d, d).len() >= 3)
        .reduce(f64::max))
}

/// Exploration-cycle schedules at [`SCENARIO_BETA`] whose peak clears the
/// common-rate fold of a 2x2 game by a factor of two. Times are given in
/// unit-rate time and stretched to the scenario rate. Returns the schedule
/// and the measured fold rate.
pub fn default_spike(game: &NormalFormGame, t_peak: f64, t_end: f64) -> Result<(ExplorationSchedule, f64)> {
    let fold = diagonal_fold_delta(game, 5.0, 500)?.ok_or_else(|| {
        Error::InvalidParameter("game has a single equilibrium for every exploration rate".into())
    })?;
    let s = ExplorationSchedule::clr1(
        0.0,
        2.0 * fold,
        t_peak / SCENARIO_BETA,
        t_end / SCENARIO_BETA,
        RampShape::Linear,
        SCENARIO_BETA,
    )?;
    Ok((s, fold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatastropheConfig {
    pub m: f64,
    pub direction: Catastrophe,
    /// Exploration peak of the spike run, shared by both agents.
    pub spike_peak: f64,
    /// Starting rate of the decaying low-exploration run.
    pub exploit_delta: f64,
    /// Rise and end of the spike, in unit-rate time.
    pub t_peak: f64,
    pub t_end: f64,
    /// Total run length, in unit-rate time.
    pub horizon: f64,
    pub step: f64,
}

impl CatastropheConfig {
    pub fn new(m: f64, direction: Catastrophe) -> Self {
        Self {
            m,
            direction,
            spike_peak: 5.0,
            exploit_delta: 0.01,
            t_peak: 25.0,
            t_end: 50.0,
            horizon: 100.0,
            step: 0.02,
        }
    }

    /// `(0.9, 0.9)` for the loss game, `(0.1, 0.1)` for the gain game.
    pub fn start(&self) -> ChoiceProfile {
        let p = match self.direction {
            Catastrophe::Loss => 0.9,
            Catastrophe::Gain => 0.1,
        };
        ChoiceProfile::from_first_action(&[p, p]).expect("valid probabilities")
    }

    pub fn exploit_schedule(&self) -> Result<ExplorationSchedule> {
        ExplorationSchedule::ete(
            self.exploit_delta,
            self.t_end / SCENARIO_BETA,
            RampShape::Linear,
            SCENARIO_BETA,
        )
    }

    pub fn explore_schedule(&self) -> Result<ExplorationSchedule> {
        ExplorationSchedule::clr1(
            0.0,
            self.spike_peak,
            self.t_peak / SCENARIO_BETA,
            self.t_end / SCENARIO_BETA,
            RampShape::Linear,
            SCENARIO_BETA,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatastropheReport {
    pub m: f64,
    pub direction: Catastrophe,
    pub start: Vec<f64>,
    pub exploit_end: Vec<f64>,
    pub explore_end: Vec<f64>,
    /// Player 1's utility at the final state of each run.
    pub exploit_utility: f64,
    pub explore_utility: f64,
    /// Larger over smaller utility in the expected direction: exploit over
    /// explore for the loss game, explore over exploit for the gain game.
    pub ratio: f64,
    pub config: CatastropheConfig,
}

impl CatastropheReport {
    pub fn relative_error(&self) -> f64 {
        (self.ratio - self.m).abs() / self.m
    }
}

/// Low-exploration and exploration-spike runs of the catastrophe game from
/// the same start.
pub fn run_catastrophe(cfg: &CatastropheConfig) -> Result<(CatastropheReport, [Trajectory; 2])> {
    let game = builtins::catastrophe_game(cfg.m, cfg.direction)?;
    let x0 = cfg.start();
    let opts = IntegrateOptions::new(cfg.horizon / SCENARIO_BETA, cfg.step / SCENARIO_BETA).stride(10);
    let low = cfg.exploit_schedule()?;
    let spike = cfg.explore_schedule()?;
    let (exploit, explore) = rayon::join(
        || integrate_sql_with(&game, &[low.clone(), low.clone()], &x0, &opts),
        || integrate_sql_with(&game, &[spike.clone(), spike.clone()], &x0, &opts),
    );
    let (exploit, explore) = (exploit?, explore?);
    let exploit_utility = exploit.final_utilities()?[0];
    let explore_utility = explore.final_utilities()?[0];
    let ratio = match cfg.direction {
        Catastrophe::Loss => exploit_utility / explore_utility,
        Catastrophe::Gain => explore_utility / exploit_utility,
    };
    let report = CatastropheReport {
        m: cfg.m,
        direction: cfg.direction,
        start: x0.first_action_probs(),
        exploit_end: exploit.final_profile()?.first_action_probs(),
        explore_end: explore.final_profile()?.first_action_probs(),
        exploit_utility,
        explore_utility,
        ratio,
        config: cfg.clone(),
    };
    Ok((report, [exploit, explore]))
}
