//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use smoothq::builtins::{self, Catastrophe};
use smoothq::coordination::classify_coordination;
use smoothq::dynamics::{
    batch_q_update, integrate_sql, integrate_sql_with, q_update_step, simulate_discrete, BatchMode,
    DiscreteOptions, IntegrateOptions, QValueState,
};
use smoothq::experiment::{corner_starts, run_catastrophe, CatastropheConfig, SCENARIO_BETA};
use smoothq::metrics::{lyapunov_audit, regret, LyapunovAudit};
use smoothq::potential::multilinear_potential;
use smoothq::qre::{
    detect_folds, qre_2x2_roots_for_deltas, region_check, response_curve_seeds, solve_qre_multi,
    sweep_surface, QREPoint,
};
use smoothq::{ChoiceProfile, ExplorationSchedule, NormalFormGame, RampShape};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn constant(delta: f64, beta: f64) -> ExplorationSchedule {
    ExplorationSchedule::constant(delta, beta).unwrap()
}

/// Schedules written in unit-rate time, run at the scenario rate.
fn clr1(peak: f64, t_peak: f64, t_end: f64) -> ExplorationSchedule {
    ExplorationSchedule::clr1(
        0.0,
        peak,
        t_peak / SCENARIO_BETA,
        t_end / SCENARIO_BETA,
        RampShape::Linear,
        SCENARIO_BETA,
    )
    .unwrap()
}

fn ete(peak: f64, t_end: f64) -> ExplorationSchedule {
    ExplorationSchedule::ete(peak, t_end / SCENARIO_BETA, RampShape::Linear, SCENARIO_BETA).unwrap()
}

fn endpoint(game: &NormalFormGame, s: &[ExplorationSchedule], start: [f64; 2], horizon: f64) -> Vec<f64> {
    let x0 = ChoiceProfile::from_first_action(&start).unwrap();
    let opts = IntegrateOptions::new(horizon / SCENARIO_BETA, 0.02 / SCENARIO_BETA).stride(100);
    integrate_sql_with(game, s, &x0, &opts)
        .unwrap()
        .final_profile()
        .unwrap()
        .first_action_probs()
}

fn near(p: &[f64], target: [f64; 2], tol: f64) -> bool {
    (p[0] - target[0]).abs() <= tol && (p[1] - target[1]).abs() <= tol
}

fn regret_bound() -> Outcome {
    // beta = 0.5 keeps alpha = delta * beta below one for delta = 1
    let beta = 0.5;
    let worst = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let players = rng.random_range(2..=3);
            let counts: Vec<usize> = (0..players).map(|_| rng.random_range(2..=5)).collect();
            let game = builtins::random_game(&counts, 1000 + seed).unwrap();
            let x0 = ChoiceProfile::uniform(&counts);
            let mut worst = f64::NEG_INFINITY;
            for delta in [0.1, 1.0] {
                let s = vec![constant(delta, beta); players];
                let traj = integrate_sql(&game, &s, &x0, 50.0, 0.01).unwrap();
                for (k, &n) in counts.iter().enumerate() {
                    let r = regret(&traj, &game, k).unwrap();
                    let excess = r.regret_h.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v - (n as f64).ln()));
                    worst = worst.max(excess);
                }
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    ensure(worst <= 1e-6, || format!("max R^H - ln n = {worst:.3e}"))?;
    Ok(format!("200 runs, max R^H - ln n = {worst:.3e}"))
}

fn lyapunov() -> Outcome {
    let worst = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (n, m) = (rng.random_range(2..=5), rng.random_range(2..=5));
            let game = builtins::random_potential_game(n, m, 2000 + seed, (0.0, 1.0)).unwrap();
            let draw = |len: usize, rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..len).map(|_| rng.random_range(0.05..1.0)).collect()
            };
            let x0 = ChoiceProfile::normalized(vec![draw(n, &mut rng), draw(m, &mut rng)]).unwrap();
            let s = [constant(0.3, 1.0), constant(0.3, 1.0)];
            let traj = integrate_sql(&game, &s, &x0, 20.0, 1e-2).unwrap();
            match lyapunov_audit(&traj, game.potential().unwrap()).unwrap() {
                LyapunovAudit::Checked { max_decrease, .. } => max_decrease,
                LyapunovAudit::Skipped { .. } => f64::INFINITY,
            }
        })
        .reduce(|| 0.0, f64::max);
    ensure(worst <= 1e-8, || format!("max decrease per step {worst:.3e}"))?;
    Ok(format!("100 games, max decrease per step {worst:.3e}"))
}

fn oracle_equivalence() -> Outcome {
    let pairs = [(0.05, 0.05), (0.1, 0.4), (0.3, 0.15), (0.5, 0.5), (2.0, 1.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let games: Vec<NormalFormGame> = (0..200).map(|_| builtins::random_coordination_game(&mut rng)).collect();
    let results: Vec<Result<(usize, usize), String>> = games
        .par_iter()
        .enumerate()
        .flat_map_iter(|(g, game)| {
            let facts = classify_coordination(game).unwrap();
            pairs.iter().map(move |&(dx, dy)| {
                let oracle = qre_2x2_roots_for_deltas(&facts, dx, dy);
                let seeds = response_curve_seeds(game, &[dx, dy], 241).unwrap();
                let found = solve_qre_multi(game, &[dx, dy], &seeds).unwrap();
                let first = |v: &[QREPoint]| -> Vec<Vec<f64>> {
                    let mut out: Vec<Vec<f64>> = v.iter().map(|p| p.profile.first_action_probs()).collect();
                    out.sort_by(|a, b| a[0].total_cmp(&b[0]));
                    out
                };
                let (a, b) = (first(&oracle), first(&found));
                if a.len() % 2 == 0 {
                    return Err(format!("game {g}, deltas ({dx}, {dy}): even root count {}", a.len()));
                }
                if a.len() != b.len() {
                    return Err(format!(
                        "game {g}, deltas ({dx}, {dy}): scalar roots {} vs solver {}",
                        a.len(),
                        b.len()
                    ));
                }
                for (p, q) in a.iter().zip(&b) {
                    if !near(p, [q[0], q[1]], 1e-8) {
                        return Err(format!("game {g}, deltas ({dx}, {dy}): {p:?} vs {q:?}"));
                    }
                }
                Ok((a.len(), 1))
            })
        })
        .collect();
    let mut triples = 0;
    for r in &results {
        let (count, _) = r.clone()?;
        if count == 3 {
            triples += 1;
        }
    }
    Ok(format!("1000 cases agree, {triples} with three equilibria"))
}

fn regions() -> Outcome {
    let mut total = 0;
    for (name, game) in [
        ("stag_hunt", builtins::stag_hunt()),
        ("pareto_coordination", builtins::pareto_coordination()),
        ("battle_of_sexes", builtins::battle_of_sexes()),
    ] {
        let scan = sweep_surface(&game, (0.05, 5.0), (0.05, 5.0), 200).unwrap();
        for cell in &scan.points {
            for p in cell {
                total += 1;
                let c = region_check(&scan.facts, p);
                ensure(c.allowed, || {
                    format!("{name}: {:?} at deltas {:?} is excluded", p.profile.first_action_probs(), p.deltas)
                })?;
            }
        }
    }
    // symmetric rates on a symmetric game: no symmetric equilibrium in (1/2, x_mix)
    let facts = classify_coordination(&builtins::stag_hunt()).unwrap();
    let mut symmetric = 0;
    for i in 1..=2000 {
        let d = 5.0 * i as f64 / 2000.0;
        for p in qre_2x2_roots_for_deltas(&facts, d, d) {
            let v = p.profile.first_action_probs();
            if (v[0] - v[1]).abs() < 1e-9 {
                symmetric += 1;
                ensure(!(v[0] > 0.5 && v[0] < facts.x_mix), || {
                    format!("symmetric equilibrium {v:?} inside the band at delta {d}")
                })?;
            }
        }
    }
    Ok(format!("{total} equilibria, 0 violations; {symmetric} symmetric Stag Hunt points outside (1/2, 0.6)"))
}

fn fold_topology() -> Outcome {
    let mut parts = Vec::new();
    for (name, game, expect) in [
        ("stag_hunt", builtins::stag_hunt(), 1),
        ("pareto_coordination", builtins::pareto_coordination(), 1),
        ("battle_of_sexes", builtins::battle_of_sexes(), 2),
    ] {
        let scan = sweep_surface(&game, (0.05, 5.0), (0.05, 5.0), 200).unwrap();
        let folds = detect_folds(&scan);
        ensure(folds.num_components() == expect, || {
            format!("{name}: {} components, expected {expect}", folds.num_components())
        })?;
        parts.push(format!("{name} {}", folds.num_components()));
    }
    Ok(parts.join(", "))
}

fn catastrophe() -> Outcome {
    let mut parts = Vec::new();
    for m in [10.0, 50.0] {
        for dir in [Catastrophe::Loss, Catastrophe::Gain] {
            let (r, _) = run_catastrophe(&CatastropheConfig::new(m, dir)).unwrap();
            ensure(r.relative_error() <= 0.01, || {
                format!(
                    "M = {m} {dir:?}: ratio {:.4} (exploit {:.4} at {:?}, explore {:.4} at {:?})",
                    r.ratio, r.exploit_utility, r.exploit_end, r.explore_utility, r.explore_end
                )
            })?;
            parts.push(format!("M={m} {dir:?} ratio {:.4}", r.ratio));
        }
    }
    Ok(parts.join(", "))
}

fn equilibrium_selection() -> Outcome {
    let game = builtins::stag_hunt();
    let grid = [0.05, 0.5, 0.95];
    let quiet = constant(0.0, SCENARIO_BETA);
    let spike = clr1(10.0, 25.0, 50.0);
    for (who, s) in [("agent 1", [spike.clone(), quiet.clone()]), ("agent 2", [quiet, spike])] {
        for &x in &grid {
            for &y in &grid {
                let end = endpoint(&game, &s, [x, y], 80.0);
                ensure(near(&end, [0.0, 0.0], 0.05), || {
                    format!("{who} spiking from ({x}, {y}) ended at {end:?}")
                })?;
            }
        }
    }
    let low = [constant(0.01, 1.0), constant(0.01, 1.0)];
    for &x in &[0.65, 0.8, 0.95] {
        for &y in &[0.65, 0.8, 0.95] {
            let x0 = ChoiceProfile::from_first_action(&[x, y]).unwrap();
            let end = integrate_sql(&game, &low, &x0, 80.0, 0.02)
                .unwrap()
                .final_profile()
                .unwrap()
                .first_action_probs();
            ensure(near(&end, [1.0, 1.0], 0.05), || format!("delta 0.01 from ({x}, {y}) ended at {end:?}"))?;
        }
    }
    Ok("single-agent spike: 18/18 starts to (0,0); delta 0.01: 9/9 starts to (1,1)".into())
}

fn path_dependence() -> Outcome {
    let game = builtins::battle_of_sexes();
    let a = endpoint(&game, &[ete(2.0, 50.0), clr1(5.0, 25.0, 50.0)], [0.9, 0.9], 80.0);
    let b = endpoint(&game, &[ete(2.0, 50.0), clr1(2.0, 25.0, 50.0)], [0.9, 0.9], 80.0);
    ensure(near(&a, [1.0, 1.0], 0.05), || format!("ETE/CLR-1 peak 5 ended at {a:?}"))?;
    ensure(near(&b, [0.0, 0.0], 0.05), || format!("ETE/CLR-1 peak 2 ended at {b:?}"))?;
    Ok(format!("from (0.9, 0.9): {a:.3?} and {b:.3?}"))
}

fn funnel() -> Outcome {
    // 10x10 runs use beta = 0.1 with times stretched by 10
    let beta = 0.1;
    let s = |peak: f64, t_peak: f64, t_end: f64| {
        ExplorationSchedule::clr1(0.0, peak, t_peak / beta, t_end / beta, RampShape::Linear, beta).unwrap()
    };
    let game = builtins::appendix_potential_game();
    let pot = game.potential().unwrap();
    let starts = corner_starts(&[10, 10], 0.05).unwrap();
    let finals = |sched: [ExplorationSchedule; 2]| -> Vec<f64> {
        starts
            .par_iter()
            .map(|x0| {
                let opts = IntegrateOptions::new(100.0 / beta, 0.05 / beta).stride(1000);
                let traj = integrate_sql_with(&game, &sched, x0, &opts).unwrap();
                multilinear_potential(pot, traj.final_profile().unwrap()).unwrap()
            })
            .collect()
    };
    let spread = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let strong = finals([s(5.0, 25.0, 50.0), s(5.0, 25.0, 50.0)]);
    let (lo, hi) = spread(&strong);
    ensure(hi - lo <= 1e-3 && (lo - 10.0).abs() <= 1e-3 && (hi - 10.0).abs() <= 1e-3, || {
        format!("strong run potentials in [{lo}, {hi}]")
    })?;
    let weak = finals([s(5.0, 25.0, 50.0), s(5.0, 10.0, 20.0)]);
    let (wlo, whi) = spread(&weak);
    ensure(whi - wlo <= 1e-3 && whi < 10.0, || format!("weak run potentials in [{wlo}, {whi}]"))?;
    Ok(format!("strong: all {lo:.6}; weak: all {wlo:.6} (< 10)"))
}

fn engine_agreement() -> Outcome {
    let game = builtins::stag_hunt();
    let s = [clr1(2.0, 25.0, 50.0), clr1(2.0, 25.0, 50.0)];
    let x0 = ChoiceProfile::from_first_action(&[0.9, 0.9]).unwrap();
    let opts = DiscreteOptions::new(20_000, 1_000, 80.0 / SCENARIO_BETA).mode(BatchMode::Accumulating).stride(1000);
    let discrete = simulate_discrete(&game, &s, &x0, &opts)
        .unwrap()
        .final_profile()
        .unwrap()
        .first_action_probs();
    let continuous = endpoint(&game, &s, [0.9, 0.9], 80.0);
    let gap = (discrete[0] - continuous[0]).abs().max((discrete[1] - continuous[1]).abs());
    ensure(gap <= 0.02, || format!("continuous {continuous:?} vs discrete {discrete:?}"))?;
    Ok(format!("continuous {continuous:.4?}, discrete {discrete:.4?}, gap {gap:.2e}"))
}

fn batch_recursion() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in 1..=9 {
        let alpha = a as f64 / 10.0;
        for n in 1..=50u32 {
            for &(q, r) in &[(0.0, 1.0), (2.5, -1.5), (-3.0, 0.25)] {
                let mut state = QValueState { q: vec![vec![q]] };
                for _ in 0..n {
                    state = q_update_step(&state, 0, 0, r, alpha).unwrap();
                }
                let closed = batch_q_update(q, r, alpha, n as u128, BatchMode::Stepwise).unwrap();
                let scale = state.q[0][0].abs().max(1e-300);
                worst = worst.max((closed - state.q[0][0]).abs() / scale);
            }
        }
    }
    ensure(worst < 1e-10, || format!("stepwise closed form off by {worst:.3e} (relative)"))?;

    let literal = |q: f64, r: f64, alpha: f64, n: i32| {
        (1.0 - alpha).powi(n) * q + r / alpha * (1.0 - (1.0 - alpha).powi(n + 1))
    };
    let mut lit_worst: f64 = 0.0;
    for a in 1..=9 {
        let alpha = a as f64 / 10.0;
        for n in 1..=50 {
            let got = batch_q_update(0.7, 1.3, alpha, n as u128, BatchMode::Accumulating).unwrap();
            lit_worst = lit_worst.max((got - literal(0.7, 1.3, alpha, n)).abs() / got.abs());
        }
    }
    ensure(lit_worst < 1e-12, || format!("accumulating mode off the formula by {lit_worst:.3e}"))?;
    let example = batch_q_update(0.0, 1.0, 0.5, 2, BatchMode::Accumulating).unwrap();
    ensure((example - 1.75).abs() < 1e-15, || format!("accumulating example gave {example}"))?;
    let memory = batch_q_update(0.5, 2.0, 0.0, 4, BatchMode::Accumulating).unwrap();
    ensure((memory - (0.5 + 5.0 * 2.0)).abs() < 1e-12, || format!("alpha = 0 gave {memory}"))?;
    let oblivious = batch_q_update(0.5, 2.0, 1.0 - 1e-12, 4, BatchMode::Accumulating).unwrap();
    ensure((oblivious - 2.0).abs() < 1e-9, || format!("alpha -> 1 gave {oblivious}"))?;
    Ok(format!(
        "stepwise max relative error {worst:.2e} over 450 (alpha, n) cells; accumulating formula and limits hold"
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("regret bound", regret_bound),
        ("lyapunov monotonicity", lyapunov),
        ("oracle equivalence", oracle_equivalence),
        ("equilibrium regions", regions),
        ("fold topology", fold_topology),
        ("catastrophe magnitudes", catastrophe),
        ("equilibrium selection", equilibrium_selection),
        ("path dependence", path_dependence),
        ("large-game funnel", funnel),
        ("engine agreement", engine_agreement),
        ("batch recursion", batch_recursion),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name} ({secs:.1}s): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
