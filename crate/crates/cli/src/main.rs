//! `correq` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a checked condition fails (violation
//! above `--tol`, infeasible LP, broken certificate), 2 on bad input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use correq::entropy::LAMBDA_SWEEP;
use correq::equilibria::CONDITION_TOL;
use correq::experiment::{
    bench_timing, default_sweep_sizes, format_actions, gen_random_game, parse_actions, run_sweep,
    timing_csv, RngSpec, SweepConfig, TimingConfig,
};
use correq::{
    build_ce_polytope, check_ce, check_nash, solve_closed_form, CorrelatedStrategy, Execution,
    JointStrategy, NormalFormGame, RegularizationWeights, SimplexOptions,
};

#[derive(Parser)]
#[command(
    name = "correq",
    version,
    about = "Correlated equilibria of normal-form games"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Tolerance for equilibrium and certificate checks.
    #[arg(long, global = true, default_value_t = CONDITION_TOL)]
    tol: f64,
    /// Seed for random game generation.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format. Defaults to json, or csv for `sweep` and `bench`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Progress and diagnostics on stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random game with costs uniform on [0, 1).
    Gen {
        /// Action counts, e.g. `3x3` or `2x2x2`.
        #[arg(long, default_value = "2x2")]
        actions: String,
        /// Stream index under the seed; distinct indices give independent games.
        #[arg(long, default_value_t = 0)]
        index: u64,
    },
    /// Check the correlated-equilibrium conditions for a joint distribution.
    CheckCe {
        game: PathBuf,
        /// Strategy file (array, or object with a `y` field) or `uniform`.
        #[arg(long, default_value = "uniform")]
        strategy: String,
        /// Include every deviation entry in the report.
        #[arg(long)]
        entries: bool,
    },
    /// Check the Nash conditions for independent mixed strategies.
    CheckNe {
        game: PathBuf,
        /// Strategy file (array of arrays, or object with an `x` field) or `uniform`.
        #[arg(long, default_value = "uniform")]
        strategy: String,
        #[arg(long)]
        entries: bool,
    },
    /// Closed-form entropy-regularized equilibrium with its certificate.
    SolveEntropy {
        game: PathBuf,
        /// One weight for all players or one per player, comma separated.
        #[arg(long, default_value = "1")]
        lambda: String,
    },
    /// Solve the correlated-equilibrium LP with the internal simplex.
    SolveLp {
        game: PathBuf,
        /// `none` for feasibility, `total-cost`, or comma-separated coefficients.
        #[arg(long, default_value = "none")]
        objective: String,
        /// Also write the LP in plain text standard form.
        #[arg(long)]
        lp_dump: Option<PathBuf>,
    },
    /// Regularization sweep over seeded random games.
    Sweep {
        /// Games per size.
        #[arg(long, default_value_t = 100)]
        games: usize,
        /// Comma-separated sizes, e.g. `2x2,5x5,2x2x2`.
        #[arg(long)]
        sizes: Option<String>,
        /// Comma-separated weights.
        #[arg(long)]
        lambdas: Option<String>,
        /// Also write per-(size, lambda) mean and spread as CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Time an LP feasibility solve for every game.
        #[arg(long)]
        with_lp: bool,
        /// Disable data parallelism.
        #[arg(long)]
        sequential: bool,
    },
    /// Median timing of the closed form against LP feasibility.
    Bench {
        #[arg(long)]
        sizes: Option<String>,
        /// Games per size; each rep times the whole batch.
        #[arg(long, default_value_t = 10)]
        games: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
}

enum Failure {
    /// Bad input: exit 2.
    Input(String),
}

impl From<correq::Error> for Failure {
    fn from(e: correq::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    if !(g.tol >= 0.0 && g.tol.is_finite()) {
        return Err(Failure::Input(format!(
            "--tol must be finite and nonnegative, got {}",
            g.tol
        )));
    }
    match &cli.command {
        Command::Gen { actions, index } => cmd_gen(g, actions, *index),
        Command::CheckCe {
            game,
            strategy,
            entries,
        } => cmd_check_ce(g, game, strategy, *entries),
        Command::CheckNe {
            game,
            strategy,
            entries,
        } => cmd_check_ne(g, game, strategy, *entries),
        Command::SolveEntropy { game, lambda } => cmd_solve_entropy(g, game, lambda),
        Command::SolveLp {
            game,
            objective,
            lp_dump,
        } => cmd_solve_lp(g, game, objective, lp_dump.as_deref()),
        Command::Sweep {
            games,
            sizes,
            lambdas,
            summary,
            with_lp,
            sequential,
        } => {
            let config = SweepConfig {
                games_per_size: *games,
                sizes: match sizes {
                    Some(s) => parse_sizes(s)?,
                    None => default_sweep_sizes(),
                },
                lambdas: match lambdas {
                    Some(s) => parse_floats(s, "--lambdas")?,
                    None => LAMBDA_SWEEP.to_vec(),
                },
                seed: g.seed,
                lp_timing: *with_lp,
                execution: if *sequential {
                    Execution::Sequential
                } else {
                    Execution::Parallel
                },
            };
            cmd_sweep(g, &config, summary.as_deref())
        }
        Command::Bench {
            sizes,
            games,
            reps,
            lambda,
        } => {
            let mut config = TimingConfig {
                games: *games,
                reps: *reps,
                seed: g.seed,
                lambda: *lambda,
                ..TimingConfig::default()
            };
            if let Some(s) = sizes {
                config.sizes = parse_sizes(s)?;
            }
            cmd_bench(g, &config)
        }
    }
}

fn cmd_gen(g: &Global, actions: &str, index: u64) -> Outcome {
    let counts = parse_actions(actions)?;
    let game = gen_random_game(&counts, &mut RngSpec::new(g.seed).stream(index))?;
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => game.to_json_string() + "\n",
        Format::Csv => {
            let mut out = String::from("player,joint,cost\n");
            for i in 0..game.num_players() {
                for (k, c) in game.costs(i).iter().enumerate() {
                    out.push_str(&format!("{i},{k},{c}\n"));
                }
            }
            out
        }
    };
    emit(g, &text)?;
    Ok(true)
}

fn cmd_check_ce(g: &Global, game_path: &Path, strategy: &str, entries: bool) -> Outcome {
    let game = load_game(game_path)?;
    let y = if strategy == "uniform" {
        CorrelatedStrategy::uniform(game.num_joint_actions())
    } else {
        let value = load_json(Path::new(strategy))?;
        let probs = field_or_self(&value, "y")
            .and_then(float_array)
            .ok_or_else(|| {
                Failure::Input(format!(
                    "{strategy}: expected an array of probabilities or an object with field \"y\""
                ))
            })?;
        CorrelatedStrategy::new(probs).map_err(|e| Failure::Input(format!("{strategy}: {e}")))?
    };
    let start = Instant::now();
    let report = check_ce(&game, &y, g.tol)?;
    verbose(
        g,
        format!(
            "check-ce: {} entries in {:?}",
            report.entries().len(),
            start.elapsed()
        ),
    );
    emit(g, &deviation_output(g, &report, entries))?;
    Ok(report.is_satisfied())
}

fn cmd_check_ne(g: &Global, game_path: &Path, strategy: &str, entries: bool) -> Outcome {
    let game = load_game(game_path)?;
    let x = if strategy == "uniform" {
        JointStrategy::uniform(game.action_counts())
    } else {
        let value = load_json(Path::new(strategy))?;
        let marginals = field_or_self(&value, "x")
            .and_then(Value::as_array)
            .and_then(|rows| rows.iter().map(float_array).collect::<Option<Vec<_>>>())
            .ok_or_else(|| {
                Failure::Input(format!(
                    "{strategy}: expected an array of per-player arrays or an object with field \"x\""
                ))
            })?;
        JointStrategy::new(marginals).map_err(|e| Failure::Input(format!("{strategy}: {e}")))?
    };
    let report = check_nash(&game, &x, g.tol)?;
    emit(g, &deviation_output(g, &report, entries))?;
    Ok(report.is_satisfied())
}

fn cmd_solve_entropy(g: &Global, game_path: &Path, lambda: &str) -> Outcome {
    let game = load_game(game_path)?;
    let values = parse_floats(lambda, "--lambda")?;
    let weights = match values.as_slice() {
        [one] => RegularizationWeights::uniform(game.num_players(), *one)?,
        _ => RegularizationWeights::new(values)?,
    };
    let start = Instant::now();
    let solution = solve_closed_form(&game, &weights)?;
    verbose(
        g,
        format!("solve-entropy: closed form in {:?}", start.elapsed()),
    );
    let cert = solution.certify(&game, g.tol)?;
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&solution.to_json(Some(&cert))),
        Format::Csv => {
            let mut out = String::from("joint,actions,y,log_y\n");
            for (k, (p, lp)) in solution.y.probs().iter().zip(&solution.log_y).enumerate() {
                let tuple = game.joint_tuple(k)?;
                out.push_str(&format!("{k},{},{p},{lp}\n", format_actions(&tuple)));
            }
            out
        }
    };
    emit(g, &text)?;
    Ok(cert.holds)
}

fn cmd_solve_lp(g: &Global, game_path: &Path, objective: &str, dump: Option<&Path>) -> Outcome {
    let game = load_game(game_path)?;
    let mut lp = build_ce_polytope(&game)?;
    match objective {
        "none" => {}
        "total-cost" => {
            let c = (0..game.num_joint_actions())
                .map(|k| (0..game.num_players()).map(|i| game.cost(i, k)).sum())
                .collect();
            lp = lp.with_objective(c)?;
        }
        list => lp = lp.with_objective(parse_floats(list, "--objective")?)?,
    }
    if let Some(path) = dump {
        fs::write(path, lp.to_text())
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let opts = SimplexOptions::default();
    let start = Instant::now();
    let out = if lp.objective().is_some() {
        lp.minimize(&opts)
    } else {
        lp.feasible_point(&opts)
    };
    verbose(
        g,
        format!(
            "solve-lp: {} rows, {} vars, {} iterations in {:?}",
            lp.num_rows(),
            lp.num_vars(),
            out.iterations,
            start.elapsed()
        ),
    );
    let text = match g.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&json!({
            "status": out.status.as_str(),
            "objective": out.objective,
            "iterations": out.iterations,
            "pivots": out.pivots,
            "residual": if out.residual.is_finite() { json!(out.residual) } else { Value::Null },
            "y": out.y,
        })),
        Format::Csv => {
            let mut text = String::from("joint,y\n");
            for (k, v) in out.y.iter().flatten().enumerate() {
                text.push_str(&format!("{k},{v}\n"));
            }
            text
        }
    };
    emit(g, &text)?;
    if !out.status.has_point() {
        eprintln!("solve-lp: {}", out.status.as_str());
    }
    Ok(out.status.has_point())
}

fn cmd_sweep(g: &Global, config: &SweepConfig, summary: Option<&Path>) -> Outcome {
    verbose(
        g,
        format!(
            "sweep: {} games per size, sizes {:?}, lambdas {:?}, seed {}",
            config.games_per_size, config.sizes, config.lambdas, config.seed
        ),
    );
    let start = Instant::now();
    let result = run_sweep(config)?;
    verbose(
        g,
        format!(
            "sweep: {} records in {:?}",
            result.records.len(),
            start.elapsed()
        ),
    );
    let text = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => result.records_csv(),
        Format::Json => pretty(&json!({
            "records": result.records.iter().map(|r| json!({
                "game_id": r.game_id,
                "seed": r.seed,
                "n_players": r.n_players(),
                "actions": format_actions(&r.action_counts),
                "lambda": r.lambda,
                "eps_empirical": r.eps_empirical,
                "eps_bound": r.eps_bound,
                "t_closed_form_s": r.t_closed_form_s,
                "t_lp_s": r.t_lp_s,
            })).collect::<Vec<_>>(),
            "summary": result.summary.iter().map(|s| json!({
                "actions": format_actions(&s.action_counts),
                "lambda": s.lambda,
                "count": s.count,
                "eps_empirical_mean": s.eps_empirical_mean,
                "eps_empirical_std": s.eps_empirical_std,
                "eps_bound_max_mean": s.eps_bound_max_mean,
                "eps_bound_mean_mean": s.eps_bound_mean_mean,
            })).collect::<Vec<_>>(),
        })),
    };
    emit(g, &text)?;
    if let Some(path) = summary {
        fs::write(path, result.summary_csv())
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let violations = result.violations().count();
    if violations > 0 {
        eprintln!("sweep: {violations} records break empirical <= bound");
    }
    Ok(violations == 0)
}

fn cmd_bench(g: &Global, config: &TimingConfig) -> Outcome {
    let rows = bench_timing(config)?;
    let text = match g.format.unwrap_or(Format::Csv) {
        Format::Csv => timing_csv(&rows),
        Format::Json => pretty(&Value::Array(
            rows.iter()
                .map(|r| {
                    json!({
                        "actions": format_actions(&r.action_counts),
                        "reps": r.reps,
                        "t_closed_form_s": r.t_closed_form_s,
                        "t_lp_s": r.t_lp_s,
                        "ratio": r.ratio(),
                        "lp_status": r.lp_status.as_str(),
                    })
                })
                .collect(),
        )),
    };
    emit(g, &text)?;
    Ok(rows.iter().all(|r| r.lp_status.has_point()))
}

fn deviation_output(g: &Global, report: &correq::DeviationReport, entries: bool) -> String {
    match g.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&report.to_json(entries)),
        Format::Csv => {
            let mut out = String::from("player,from,to,value\n");
            for d in report.entries() {
                out.push_str(&format!("{},{},{},{}\n", d.player, d.from, d.to, d.value));
            }
            out
        }
    }
}

fn load_game(path: &Path) -> Result<NormalFormGame, Failure> {
    let text = read(path)?;
    NormalFormGame::from_json_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_json(path: &Path) -> Result<Value, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {}", path.display(), correq::Error::from(e))))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn field_or_self<'a>(value: &'a Value, field: &str) -> Option<&'a Value> {
    match value {
        Value::Object(map) => map.get(field),
        other => Some(other),
    }
}

fn float_array(value: &Value) -> Option<Vec<f64>> {
    value.as_array()?.iter().map(Value::as_f64).collect()
}

fn parse_floats(text: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Input(format!("{flag}: cannot parse {s:?} as a number")))
        })
        .collect()
}

fn parse_sizes(text: &str) -> Result<Vec<Vec<usize>>, Failure> {
    text.split(',')
        .map(|s| parse_actions(s.trim()).map_err(Failure::from))
        .collect()
}

fn pretty(value: &Value) -> String {
    serde_json::to_string_pretty(value).expect("plain data") + "\n"
}

fn emit(g: &Global, text: &str) -> Result<(), Failure> {
    match &g.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verbose(g: &Global, msg: String) {
    if g.verbose {
        eprintln!("{msg}");
    }
}
