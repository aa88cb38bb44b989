use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use smoothq::builtins::{self, Catastrophe, BUILTIN_NAMES};
use smoothq::dynamics::{integrate_sql, BatchMode};
use smoothq::experiment::{
    default_spike, run_catastrophe, run_experiment, CatastropheConfig, EngineConfig, ExperimentConfig, GameSource,
    InitialConditions, Outputs, SurfaceConfig, SCENARIO_BETA,
};
use smoothq::metrics::{regret, regret_csv};
use smoothq::projection::{project_potential, projection_csv, ProjectionSpec};
use smoothq::qre::{detect_folds, linspace, response_curve_seeds, solve_qre_multi, stability_of, sweep_surface};
use smoothq::{ChoiceProfile, Error, ExplorationSchedule, NormalFormGame, RampShape};

/// Smooth Q-learning dynamics, logit equilibria and exploration experiments.
#[derive(Parser)]
#[command(name = "smoothq", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Builtin game name or path to a game JSON file.
    #[arg(long, global = true)]
    game: Option<String>,
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum)]
    engine: Option<Engine>,
    /// Format of what is printed to stdout.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Continuous,
    Discrete,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run learning dynamics from a grid of starts.
    Simulate,
    /// Solve for logit equilibria at fixed exploration rates.
    #[command(allow_negative_numbers = true)]
    Qre {
        /// One rate per player, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 241)]
        seeds_per_axis: usize,
    },
    /// Sweep equilibria of a 2x2 game over exploration rates and find folds.
    Surface {
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 5.0])]
        range_x: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 5.0])]
        range_y: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Slice the modified potential along two random directions.
    #[command(allow_negative_numbers = true)]
    Project {
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 5.0])]
        deltas: Vec<f64>,
        /// Grid as lo,hi,points.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-5.0, 5.0, 41.0])]
        grid: Vec<f64>,
    },
    /// Regret of every agent under constant exploration from the uniform start.
    #[command(allow_negative_numbers = true)]
    Regret {
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
    },
    /// Utility lost or gained by exploring in the catastrophe games.
    #[command(allow_negative_numbers = true)]
    Catastrophe {
        #[arg(long, default_value_t = 10.0)]
        m: f64,
        #[arg(long, value_enum, default_value = "loss")]
        direction: Direction,
    },
    /// Print the builtin game names.
    ListGames,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Direction {
    Loss,
    Gain,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numerical = e.chain().any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_numerical));
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::ListGames => {
            let text = match g.format {
                Format::Json => serde_json::to_string(&BUILTIN_NAMES)?,
                Format::Csv => BUILTIN_NAMES.join("\n"),
            };
            emit(&(text + "\n"))
        }
        Command::Simulate => simulate(g),
        Command::Qre { deltas, seeds_per_axis } => qre(g, deltas, *seeds_per_axis),
        Command::Surface {
            range_x,
            range_y,
            resolution,
        } => surface(g, pair(range_x, "range-x")?, pair(range_y, "range-y")?, *resolution),
        Command::Project { deltas, grid } => project(g, deltas, grid),
        Command::Regret {
            delta,
            beta,
            t_end,
            step,
        } => regret_cmd(g, *delta, *beta, *t_end, *step),
        Command::Catastrophe { m, direction } => catastrophe(g, *m, *direction),
    }
}

fn pair(values: &[f64], flag: &str) -> anyhow::Result<(f64, f64)> {
    match values {
        &[lo, hi] => Ok((lo, hi)),
        _ => bail!(Error::InvalidParameter(format!("--{flag} takes lo,hi, got {} values", values.len()))),
    }
}

fn game_source(name: &str) -> anyhow::Result<GameSource> {
    if BUILTIN_NAMES.contains(&name) {
        return Ok(GameSource::Builtin(name.into()));
    }
    if Path::new(name).is_file() {
        return Ok(GameSource::File { file: name.into() });
    }
    Err(Error::UnknownGame(name.into()).into())
}

fn load_game(g: &Global) -> anyhow::Result<NormalFormGame> {
    let source = game_source(g.game.as_deref().unwrap_or("stag_hunt"))?;
    Ok(source.load(g.seed)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(Error::from)
        .with_context(|| format!("parsing {}", path.display()))
}

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|()| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    emit(&(serde_json::to_string_pretty(value)? + "\n"))
}

/// A spike at twice the fold rate for 2x2 games; a strong exploration cycle
/// from the corner starts otherwise.
fn default_config(g: &Global) -> anyhow::Result<ExperimentConfig> {
    let source = game_source(g.game.as_deref().unwrap_or("stag_hunt"))?;
    let game = source.load(g.seed)?;
    let config = if game.action_counts() == [2, 2] {
        let (spike, _) = default_spike(&game, 25.0, 50.0)?;
        ExperimentConfig {
            game: source,
            schedules: vec![spike.clone(), spike],
            engine: EngineConfig::Continuous {
                t_end: 80.0 / SCENARIO_BETA,
                step: 0.02 / SCENARIO_BETA,
                record_stride: 10,
            },
            initial: InitialConditions::Lattice {
                values: vec![0.05, 0.5, 0.95],
            },
            outputs: Outputs {
                surface: Some(SurfaceConfig {
                    range_x: (0.05, 5.0),
                    range_y: (0.05, 5.0),
                    resolution: 200,
                }),
                ..Outputs::default()
            },
            seed: g.seed,
        }
    } else {
        let beta = 0.1;
        let s = ExplorationSchedule::clr1(0.0, 5.0, 25.0 / beta, 50.0 / beta, RampShape::Linear, beta)?;
        ExperimentConfig {
            game: source,
            schedules: vec![s; game.num_players()],
            engine: EngineConfig::Continuous {
                t_end: 100.0 / beta,
                step: 0.05 / beta,
                record_stride: 10,
            },
            initial: InitialConditions::Corners {
                epsilon: smoothq::experiment::CORNER_EPSILON,
            },
            outputs: Outputs::default(),
            seed: g.seed,
        }
    };
    Ok(config)
}

/// Switches engines while keeping the schedule time span. The discrete
/// engine uses the accumulating update so that learning goes on once the
/// exploration rate, and with it the step size, reaches zero.
fn with_engine(engine: EngineConfig, want: Engine) -> EngineConfig {
    match (engine, want) {
        (EngineConfig::Continuous { t_end, record_stride, .. }, Engine::Discrete) => EngineConfig::Discrete {
            epochs: 20_000,
            interactions: 1_000,
            horizon: t_end,
            mode: BatchMode::Accumulating,
            record_stride: record_stride.max(1) * 10,
        },
        (EngineConfig::Discrete { horizon, .. }, Engine::Continuous) => EngineConfig::Continuous {
            t_end: horizon,
            step: horizon / 4000.0,
            record_stride: 10,
        },
        (e, _) => e,
    }
}

fn simulate(g: &Global) -> anyhow::Result<()> {
    let mut config = match &g.config {
        Some(path) => {
            let mut c: ExperimentConfig = read_json(path)?;
            if let Some(name) = &g.game {
                c.game = game_source(name)?;
            }
            c.seed = g.seed;
            c
        }
        None => default_config(g)?,
    };
    if let Some(engine) = g.engine {
        config.engine = with_engine(config.engine, engine);
    }
    let summary = run_experiment(&config, &g.out)?;
    match g.format {
        Format::Json => print_json(&summary),
        Format::Csv => {
            let mut csv = String::from("run,end,potential\n");
            for (i, r) in summary.runs.iter().enumerate() {
                let end: Vec<String> = r.end.iter().flatten().map(|v| format!("{v:e}")).collect();
                let pot = r.potential.map(|p| format!("{p:e}")).unwrap_or_default();
                let _ = writeln!(csv, "{i},{},{pot}", end.join(" "));
            }
            emit(&csv)
        }
    }
}

fn qre(g: &Global, deltas: &[f64], per_axis: usize) -> anyhow::Result<()> {
    let game = load_game(g)?;
    let seeds = if game.num_players() == 2 {
        response_curve_seeds(&game, deltas, per_axis)?
    } else {
        vec![ChoiceProfile::uniform(game.action_counts())]
    };
    let mut points = solve_qre_multi(&game, deltas, &seeds)?;
    for p in &mut points {
        p.stable = stability_of(&game, deltas, p)?.as_bool();
    }
    match g.format {
        Format::Json => print_json(&points),
        Format::Csv => {
            let mut csv = String::from("index,profile,residual,stable\n");
            for (i, p) in points.iter().enumerate() {
                let x: Vec<String> = p.profile.strategies().iter().flatten().map(|v| format!("{v:e}")).collect();
                let stable = p.stable.map(|s| s.to_string()).unwrap_or_default();
                let _ = writeln!(csv, "{i},{},{:e},{stable}", x.join(" "), p.residual);
            }
            emit(&csv)
        }
    }
}

fn surface(g: &Global, range_x: (f64, f64), range_y: (f64, f64), resolution: usize) -> anyhow::Result<()> {
    let game = load_game(g)?;
    let scan = sweep_surface(&game, range_x, range_y, resolution)?;
    let folds = detect_folds(&scan);
    fs::create_dir_all(&g.out)?;
    fs::write(g.out.join("surface.csv"), scan.to_csv())?;
    fs::write(g.out.join("folds.csv"), folds.polyline_csv())?;
    for w in &folds.warnings {
        eprintln!("warning: {w}");
    }
    match g.format {
        Format::Json => print_json(&serde_json::json!({
            "fold_components": folds.num_components(),
            "components": folds.components.iter().map(|c| serde_json::json!({
                "kind": c.kind,
                "cells": c.cells.len(),
            })).collect::<Vec<_>>(),
            "warnings": folds.warnings,
            "files": ["surface.csv", "folds.csv"],
        })),
        Format::Csv => {
            emit(&folds.polyline_csv())
        }
    }
}

fn project(g: &Global, deltas: &[f64], grid: &[f64]) -> anyhow::Result<()> {
    let game = load_game(g)?;
    let pot = game.potential().ok_or(Error::MissingPotential)?;
    if grid.len() != 3 {
        bail!(Error::InvalidParameter(format!("--grid takes lo,hi,points, got {} values", grid.len())));
    }
    if grid[2] < 1.0 || grid[2].fract() != 0.0 {
        bail!(Error::InvalidParameter(format!("grid point count must be a positive integer, got {}", grid[2])));
    }
    let axis = linspace(grid[0], grid[1], grid[2] as usize);
    let spec = match &g.config {
        Some(path) => read_json::<ProjectionSpec>(path)?,
        None => ProjectionSpec::random(game.action_counts(), g.seed, axis.clone(), axis)?,
    };
    let blocks = deltas
        .iter()
        .map(|&d| Ok((d, project_potential(pot, d, &spec)?)))
        .collect::<smoothq::Result<Vec<_>>>()?;
    let csv = projection_csv(&blocks);
    fs::create_dir_all(&g.out)?;
    fs::write(g.out.join("projection.csv"), &csv)?;
    match g.format {
        Format::Json => print_json(&serde_json::json!({ "spec": spec, "files": ["projection.csv"] })),
        Format::Csv => {
            emit(&csv)
        }
    }
}

fn regret_cmd(g: &Global, delta: f64, beta: f64, t_end: f64, step: f64) -> anyhow::Result<()> {
    let game = load_game(g)?;
    let schedules = vec![ExplorationSchedule::constant(delta, beta)?; game.num_players()];
    let traj = integrate_sql(&game, &schedules, &ChoiceProfile::uniform(game.action_counts()), t_end, step)?;
    let reports = (0..game.num_players())
        .map(|k| regret(&traj, &game, k))
        .collect::<smoothq::Result<Vec<_>>>()?;
    let csv = regret_csv(&reports);
    fs::create_dir_all(&g.out)?;
    fs::write(g.out.join("regret.csv"), &csv)?;
    match g.format {
        Format::Json => print_json(&serde_json::json!({
            "agents": reports.iter().map(|r| serde_json::json!({
                "agent": r.agent,
                "final_regret": r.regret.last(),
                "final_regret_h": r.regret_h.last(),
                "bound": r.bound.last(),
                "worst_excess": r.worst_excess(),
                "hindsight": r.hindsight,
            })).collect::<Vec<_>>(),
            "files": ["regret.csv"],
        })),
        Format::Csv => {
            emit(&csv)
        }
    }
}

fn catastrophe(g: &Global, m: f64, direction: Direction) -> anyhow::Result<()> {
    let cfg = match &g.config {
        Some(path) => read_json::<CatastropheConfig>(path)?,
        None => CatastropheConfig::new(
            m,
            match direction {
                Direction::Loss => Catastrophe::Loss,
                Direction::Gain => Catastrophe::Gain,
            },
        ),
    };
    // fail early on a bad M before integrating
    builtins::catastrophe_game(cfg.m, cfg.direction)?;
    let (report, [exploit, explore]) = run_catastrophe(&cfg)?;
    fs::create_dir_all(&g.out)?;
    exploit.write_csv(&g.out.join("catastrophe_exploit.csv"))?;
    explore.write_csv(&g.out.join("catastrophe_explore.csv"))?;
    fs::write(g.out.join("catastrophe.json"), serde_json::to_string_pretty(&report)?)?;
    match g.format {
        Format::Json => print_json(&report),
        Format::Csv => {
            emit(&format!(
                "m,direction,exploit_utility,explore_utility,ratio\n{},{:?},{:e},{:e},{:e}\n",
                report.m, report.direction, report.exploit_utility, report.explore_utility, report.ratio
            ))
        }
    }
}

