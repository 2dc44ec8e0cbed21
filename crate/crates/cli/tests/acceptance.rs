//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Tolerances and budgets are pinned below.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use correq::entropy::LAMBDA_SWEEP;
use correq::experiment::{
    bench_timing, gen_random_game, run_sweep, RngSpec, SweepConfig, TimingConfig,
};
use correq::{
    build_ce_polytope, check_ce, check_nash, check_regularized_stationarity, epsilon_certificate,
    solve_closed_form, CorrelatedStrategy, Execution, JointStrategy, LinearProgram, NormalFormGame,
    RegularizationWeights, SimplexOptions, Status,
};

const G_STAR_TOL: f64 = 1e-12;
const G_STAR_BUDGET: Duration = Duration::from_millis(1);

const EQUIVALENCE_TOL: f64 = 1e-8;
const EQUIVALENCE_MIN_SAMPLES: usize = 1000;
const EQUIVALENCE_BUDGET: Duration = Duration::from_secs(10);

const STATIONARITY_TOL: f64 = 1e-10;
const MASS_TOL: f64 = 1e-12;
const STATIONARITY_BUDGET: Duration = Duration::from_secs(60);

const DOMINATION_TOL: f64 = 1e-8;
const CANCELLATION_TOL: f64 = 1e-12;

const LP_GAMES: u64 = 100;
const LP_CHECK_TOL: f64 = 1e-7;
const LP_OPTIMUM_TOL: f64 = 1e-8;
const G_STAR_TOTAL_COST_OPTIMUM: f64 = 4.0;
const LP_BUDGET: Duration = Duration::from_secs(30);

const TIMING_MAX_FRACTION: f64 = 0.1;
const TIMING_REPS: usize = 5;

const SMALL_LAMBDA: f64 = 1e-8;
const UNIFORM_LIMIT_TOL: f64 = 1e-6;

const SWEEP_SEED: u64 = 7;

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("uniform strategy is a CE of G*", uniform_ce_on_g_star),
        (
            "Nash of x iff CE of the induced product",
            nash_ce_equivalence,
        ),
        ("closed form is stationary with unit mass", stationarity),
        ("empirical epsilon never exceeds the bound", domination),
        ("bound equals the cost range for every player", cancellation),
        ("LP feasibility and optimization round trip", lp_round_trip),
        (
            "closed form at least 10x faster than LP at 3x3x3",
            timing_trend,
        ),
        ("tiny lambda gives the uniform strategy", small_lambda_limit),
        ("sweep output is deterministic", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {} PASS {name} ({detail}; {secs:.3}s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({detail}; {secs:.3}s)", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn g_star() -> NormalFormGame {
    NormalFormGame::bimatrix(2, 2, &[3., 3., 2., 4.], &[1., 2., 1., 0.]).unwrap()
}

fn chicken() -> NormalFormGame {
    NormalFormGame::bimatrix(2, 2, &[0., -7., -2., -6.], &[0., -2., -7., -6.]).unwrap()
}

fn uniform_ce_on_g_star() -> Result<String, String> {
    let g = g_star();
    let y = CorrelatedStrategy::uniform(4);
    let start = Instant::now();
    let report = check_ce(&g, &y, G_STAR_TOL).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(
        report.max_violation().abs() <= G_STAR_TOL
            && report.is_satisfied()
            && elapsed < G_STAR_BUDGET,
        format!(
            "max_violation {:e}, check took {elapsed:?}",
            report.max_violation()
        ),
    )
}

fn dirichlet(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..n {
                    a[r][k] -= f * a[col][k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Fully mixed equilibrium of a square bimatrix game from the
/// indifference equations, if one exists.
fn full_support_equilibrium(g: &NormalFormGame) -> Option<JointStrategy> {
    let n = g.num_actions(0);
    let c = |i: usize, a: usize, b: usize| g.cost(i, a * n + b);
    let mut a1 = Vec::new();
    let mut a2 = Vec::new();
    for k in 1..n {
        a1.push((0..n).map(|b| c(0, k, b) - c(0, 0, b)).collect::<Vec<_>>());
        a2.push((0..n).map(|a| c(1, a, k) - c(1, a, 0)).collect::<Vec<_>>());
    }
    a1.push(vec![1.0; n]);
    a2.push(vec![1.0; n]);
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let q = solve_dense(a1, rhs.clone())?;
    let p = solve_dense(a2, rhs)?;
    if p.iter().chain(&q).any(|v| *v <= 1e-9) {
        return None;
    }
    let normalize = |v: Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    JointStrategy::new(vec![normalize(p), normalize(q)]).ok()
}

fn nash_ce_equivalence() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);
    let mut samples = 0;
    let mut random = 0;
    let mut nash = 0;
    let mut analytic = 0;
    let mut mismatches = 0;
    let mut check = |g: &NormalFormGame, x: &JointStrategy| {
        let ne = check_nash(g, x, EQUIVALENCE_TOL).unwrap().max_violation() <= EQUIVALENCE_TOL;
        let y = g.induce_correlated(x).unwrap();
        let ce = check_ce(g, &y, EQUIVALENCE_TOL).unwrap().max_violation() <= EQUIVALENCE_TOL;
        samples += 1;
        nash += ne as usize;
        mismatches += (ne != ce) as usize;
    };
    for (size, n) in [(0u64, 2usize), (1, 3)] {
        for k in 0..200u64 {
            let g = gen_random_game(
                &[n, n],
                &mut RngSpec::new(SWEEP_SEED).stream(size * 1000 + k),
            )
            .unwrap();
            for _ in 0..3 {
                let x = JointStrategy::new(vec![dirichlet(&mut rng, n), dirichlet(&mut rng, n)])
                    .unwrap();
                check(&g, &x);
                random += 1;
            }
            for a in 0..n {
                for b in 0..n {
                    check(&g, &JointStrategy::pure(&[n, n], &[a, b]).unwrap());
                }
            }
            if let Some(x) = full_support_equilibrium(&g) {
                analytic += 1;
                check(&g, &x);
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(
        random >= EQUIVALENCE_MIN_SAMPLES && mismatches == 0 && analytic > 0 && elapsed < EQUIVALENCE_BUDGET,
        format!(
            "{samples} strategies ({random} random, the rest pure profiles and {analytic} analytic mixed equilibria), {nash} Nash, {mismatches} counterexamples"
        ),
    )
}

fn sweep_config(execution: Execution) -> SweepConfig {
    SweepConfig {
        seed: SWEEP_SEED,
        execution,
        ..SweepConfig::default()
    }
}

fn stationarity() -> Result<String, String> {
    let start = Instant::now();
    let config = sweep_config(Execution::Parallel);
    let games = config.games().map_err(|e| e.to_string())?;
    let mut worst_residual = 0.0f64;
    let mut worst_mass = 0.0f64;
    let mut worst_product_mass = 0.0f64;
    let mut solves = 0;
    for (_, g) in &games {
        for &lambda in &LAMBDA_SWEEP {
            let w = RegularizationWeights::uniform(g.num_players(), lambda).unwrap();
            let s = solve_closed_form(g, &w).map_err(|e| format!("lambda {lambda}: {e}"))?;
            let report = check_regularized_stationarity(g, &s.decomposition, &w, STATIONARITY_TOL)
                .map_err(|e| e.to_string())?;
            worst_residual = worst_residual.max(report.max_residual);
            worst_mass = worst_mass.max((s.y.probs().iter().sum::<f64>() - 1.0).abs());
            worst_product_mass = worst_product_mass.max((s.decomposition.mass() - 1.0).abs());
            solves += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(
        worst_residual <= STATIONARITY_TOL && worst_mass <= MASS_TOL && elapsed < STATIONARITY_BUDGET,
        format!(
            "{} games x {} lambdas = {solves} solves, max residual {worst_residual:e}, max mass error of y {worst_mass:e}, of the measure product {worst_product_mass:e}",
            games.len(),
            LAMBDA_SWEEP.len()
        ),
    )
}

fn domination() -> Result<String, String> {
    let result = run_sweep(&sweep_config(Execution::Parallel)).map_err(|e| e.to_string())?;
    let violations = result
        .records
        .iter()
        .filter(|r| !(r.eps_empirical <= r.eps_bound + DOMINATION_TOL) || !r.holds)
        .count();
    let slack = result
        .records
        .iter()
        .map(|r| r.eps_bound - r.eps_empirical)
        .fold(f64::INFINITY, f64::min);
    ensure(
        violations == 0 && !result.records.is_empty(),
        format!(
            "{} records, {violations} violations, smallest bound minus empirical {slack:e}",
            result.records.len()
        ),
    )
}

fn cancellation() -> Result<String, String> {
    let config = sweep_config(Execution::Parallel);
    let games = config.games().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (_, g) in &games {
        for &lambda in &LAMBDA_SWEEP {
            let w = RegularizationWeights::uniform(g.num_players(), lambda).unwrap();
            let s = solve_closed_form(g, &w).unwrap();
            let cert = epsilon_certificate(&s.decomposition, &w).map_err(|e| e.to_string())?;
            for (i, bound) in cert.bound.iter().enumerate() {
                let costs = g.costs(i);
                let hi = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
                worst = worst.max((bound - (hi - lo)).abs());
            }
        }
    }
    ensure(
        worst <= CANCELLATION_TOL,
        format!("{} games, max |bound_i - range_i| = {worst:e}", games.len()),
    )
}

/// Minimum of `c . y` over the polytope, by enumerating every vertex.
fn vertex_enumeration_min(lp: &LinearProgram, c: &[f64]) -> Option<f64> {
    let n = lp.num_vars();
    let mut ineq: Vec<Vec<f64>> = lp.rows().to_vec();
    for k in 0..n {
        let mut row = vec![0.0; n];
        row[k] = -1.0;
        ineq.push(row);
    }
    let mut best: Option<f64> = None;
    let mut chosen: Vec<usize> = (0..n - 1).collect();
    loop {
        let mut a: Vec<Vec<f64>> = chosen.iter().map(|&k| ineq[k].clone()).collect();
        a.push(vec![1.0; n]);
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        if let Some(y) = solve_dense(a, b) {
            let feasible = ineq
                .iter()
                .all(|r| r.iter().zip(&y).map(|(g, v)| g * v).sum::<f64>() <= 1e-12);
            if feasible {
                let value: f64 = c.iter().zip(&y).map(|(a, b)| a * b).sum();
                best = Some(best.map_or(value, |v: f64| v.min(value)));
            }
        }
        // Next combination of n - 1 rows in lexicographic order.
        let m = ineq.len();
        let k = chosen.len();
        let Some(i) = (0..k).rev().find(|&i| chosen[i] < m - k + i) else {
            return best;
        };
        chosen[i] += 1;
        for j in i + 1..k {
            chosen[j] = chosen[j - 1] + 1;
        }
    }
}

fn lp_round_trip() -> Result<String, String> {
    let start = Instant::now();
    let opts = SimplexOptions::default();
    let mut worst = 0.0f64;
    for k in 0..LP_GAMES {
        let actions: Vec<usize> = if k % 4 == 3 {
            vec![3, 3, 3]
        } else {
            vec![2 + (k % 4) as usize, 2 + ((k / 4) % 4) as usize]
        };
        let g = gen_random_game(&actions, &mut RngSpec::new(SWEEP_SEED).stream(k)).unwrap();
        let out = build_ce_polytope(&g).unwrap().feasible_point(&opts);
        if out.status != Status::Feasible {
            return Err(format!(
                "game {k} {actions:?}: status {}",
                out.status.as_str()
            ));
        }
        let y = CorrelatedStrategy::new(out.y.unwrap()).map_err(|e| e.to_string())?;
        let report = check_ce(&g, &y, LP_CHECK_TOL).unwrap();
        if !report.is_satisfied() {
            return Err(format!("game {k}: violation {:e}", report.max_violation()));
        }
        worst = worst.max(report.max_violation());
    }

    let g = g_star();
    let c: Vec<f64> = (0..4).map(|k| g.cost(0, k) + g.cost(1, k)).collect();
    let lp = build_ce_polytope(&g)
        .unwrap()
        .with_objective(c.clone())
        .unwrap();
    let out = lp.minimize(&opts);
    let value = out.objective.ok_or("G* minimization returned no point")?;
    let oracle = vertex_enumeration_min(&lp, &c).ok_or("no vertex found")?;
    let elapsed = start.elapsed();
    ensure(
        out.status == Status::Optimal
            && value <= G_STAR_TOTAL_COST_OPTIMUM + LP_OPTIMUM_TOL
            && (value - oracle).abs() <= LP_OPTIMUM_TOL
            && elapsed < LP_BUDGET,
        format!(
            "{LP_GAMES} games feasible, worst CE violation {worst:e}; G* total cost {value} vs vertex enumeration {oracle}"
        ),
    )
}

fn timing_trend() -> Result<String, String> {
    let config = TimingConfig {
        sizes: vec![vec![3, 3, 3]],
        reps: TIMING_REPS,
        seed: SWEEP_SEED,
        ..TimingConfig::default()
    };
    let rows = bench_timing(&config).map_err(|e| e.to_string())?;
    let row = &rows[0];
    ensure(
        row.lp_status.has_point() && row.t_closed_form_s <= TIMING_MAX_FRACTION * row.t_lp_s,
        format!(
            "median per game: closed form {:e}s, LP {:e}s, ratio {:.1}",
            row.t_closed_form_s,
            row.t_lp_s,
            row.ratio()
        ),
    )
}

fn small_lambda_limit() -> Result<String, String> {
    let mut fixtures = vec![
        ("G*".to_string(), g_star()),
        ("chicken".to_string(), chicken()),
    ];
    for (k, size) in correq::experiment::default_sweep_sizes()
        .into_iter()
        .enumerate()
    {
        let g = gen_random_game(&size, &mut RngSpec::new(SWEEP_SEED).stream(k as u64)).unwrap();
        fixtures.push((format!("{size:?}"), g));
    }
    let mut worst = 0.0f64;
    for (name, g) in &fixtures {
        let w = RegularizationWeights::uniform(g.num_players(), SMALL_LAMBDA).unwrap();
        let s = solve_closed_form(g, &w).map_err(|e| format!("{name}: {e}"))?;
        let uniform = 1.0 / g.num_joint_actions() as f64;
        let dev =
            s.y.probs()
                .iter()
                .fold(0.0f64, |m, p| m.max((p - uniform).abs()));
        if dev > UNIFORM_LIMIT_TOL {
            return Err(format!("{name}: max |y - 1/A| = {dev:e}"));
        }
        worst = worst.max(dev);
    }
    Ok(format!(
        "{} fixtures, max |y - 1/A| = {worst:e}",
        fixtures.len()
    ))
}

/// Drops the two timing columns.
fn without_timing(csv: &str) -> String {
    csv.lines()
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            fields[..fields.len() - 2].join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn cli_sweep() -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_correq"))
        .args(["sweep", "--seed", &SWEEP_SEED.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("cli sweep exited with {}", out.status));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn determinism() -> Result<String, String> {
    let parallel = run_sweep(&sweep_config(Execution::Parallel)).map_err(|e| e.to_string())?;
    let sequential = run_sweep(&sweep_config(Execution::Sequential)).map_err(|e| e.to_string())?;
    let lib_a = without_timing(&parallel.records_csv());
    let lib_b = without_timing(&sequential.records_csv());
    let cli_a = without_timing(&cli_sweep()?);
    let cli_b = without_timing(&cli_sweep()?);
    let summaries = parallel.summary_csv() == sequential.summary_csv();
    ensure(
        lib_a == lib_b && cli_a == cli_b && cli_a == lib_a && summaries,
        format!(
            "{} rows; library parallel vs sequential equal: {}, cli runs equal: {}, cli vs library equal: {}, summaries equal: {summaries}",
            lib_a.lines().count() - 1,
            lib_a == lib_b,
            cli_a == cli_b,
            cli_a == lib_a
        ),
    )
}
