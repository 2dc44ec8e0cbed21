//! Seeded random games, the regularization sweep and solver timing.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64(seed)`; game `k` of a run draws from stream `k` of that
//! generator. Costs are drawn player by player in flat joint-action order as
//! `f64` samples of the standard uniform distribution on `[0, 1)`. The
//! stream layout is independent of platform and of thread scheduling.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::entropy::{solve_closed_form, RegularizationWeights, LAMBDA_SWEEP};
use crate::error::{Error, Result};
use crate::game::{NormalFormGame, MAX_JOINT_ACTIONS};
use crate::lp::{build_ce_polytope, SimplexOptions, Status};
use crate::par::{self, Execution};

pub const RNG_ALGORITHM: &str = "chacha8";

/// Version of the record and summary CSV layouts below.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const RECORD_CSV_HEADER: &str =
    "game_id,seed,n_players,actions,lambda,eps_empirical,eps_bound,t_closed_form_s,t_lp_s";

pub const SUMMARY_CSV_HEADER: &str = "n_players,actions,lambda,count,eps_empirical_mean,eps_empirical_std,eps_bound_max_mean,eps_bound_mean_mean";

pub const TIMING_CSV_HEADER: &str = "actions,reps,t_closed_form_s,t_lp_s,ratio";

/// Tolerance for the empirical-versus-bound comparison of each record.
pub const CERTIFY_TOL: f64 = 1e-8;

/// Timer readings below this are reported as this value.
const TIMER_FLOOR_S: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub seed: u64,
}

impl RngSpec {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn stream(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Game with every cost drawn i.i.d. uniform on `[0, 1)`.
pub fn gen_random_game<R: Rng + ?Sized>(
    action_counts: &[usize],
    rng: &mut R,
) -> Result<NormalFormGame> {
    if action_counts.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "random games need at least 2 players, got {}",
            action_counts.len()
        )));
    }
    if let Some(i) = action_counts.iter().position(|&c| c < 2) {
        return Err(Error::InvalidParameter(format!(
            "random games need at least 2 actions per player, player {i} has {}",
            action_counts[i]
        )));
    }
    let total = action_counts
        .iter()
        .try_fold(1usize, |acc, &c| acc.checked_mul(c))
        .filter(|&t| t <= MAX_JOINT_ACTIONS)
        .ok_or_else(|| {
            Error::SizeCap(format!(
                "{action_counts:?} exceeds {MAX_JOINT_ACTIONS} joint actions"
            ))
        })?;
    let costs = (0..action_counts.len())
        .map(|_| (0..total).map(|_| rng.gen::<f64>()).collect())
        .collect();
    NormalFormGame::new(action_counts.to_vec(), costs)
}

pub fn format_actions(action_counts: &[usize]) -> String {
    action_counts
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

/// Parses `"3x3x3"` into `[3, 3, 3]`.
pub fn parse_actions(text: &str) -> Result<Vec<usize>> {
    text.split('x')
        .map(|part| {
            part.trim().parse::<usize>().map_err(|_| {
                Error::InvalidParameter(format!(
                    "bad action-count list {text:?}, expected e.g. 3x3"
                ))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Number of games per size.
    pub games_per_size: usize,
    pub sizes: Vec<Vec<usize>>,
    pub lambdas: Vec<f64>,
    pub seed: u64,
    /// Also time the LP feasibility solve once per game.
    pub lp_timing: bool,
    pub execution: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            games_per_size: 100,
            sizes: default_sweep_sizes(),
            lambdas: LAMBDA_SWEEP.to_vec(),
            seed: 7,
            lp_timing: false,
            execution: Execution::default(),
        }
    }
}

pub fn default_sweep_sizes() -> Vec<Vec<usize>> {
    vec![
        vec![2, 2],
        vec![5, 5],
        vec![10, 10],
        vec![2, 2, 2],
        vec![5, 5, 5],
    ]
}

impl SweepConfig {
    /// All games of the run with their ids, in id order.
    pub fn games(&self) -> Result<Vec<(u64, NormalFormGame)>> {
        let rng = RngSpec::new(self.seed);
        let mut out = Vec::with_capacity(self.sizes.len() * self.games_per_size);
        for size in &self.sizes {
            for _ in 0..self.games_per_size {
                let id = out.len() as u64;
                out.push((id, gen_random_game(size, &mut rng.stream(id))?));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub game_id: u64,
    pub seed: u64,
    pub action_counts: Vec<usize>,
    pub lambda: f64,
    pub eps_empirical: f64,
    /// `max_i epsilon_i / lambda_i`.
    pub eps_bound: f64,
    /// `mean_i epsilon_i / lambda_i`.
    pub eps_bound_mean: f64,
    pub holds: bool,
    pub t_closed_form_s: f64,
    pub t_lp_s: Option<f64>,
}

impl SweepRecord {
    pub fn n_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.game_id,
            self.seed,
            self.n_players(),
            format_actions(&self.action_counts),
            self.lambda,
            self.eps_empirical,
            self.eps_bound,
            self.t_closed_form_s,
            self.t_lp_s.map(|t| t.to_string()).unwrap_or_default(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub action_counts: Vec<usize>,
    pub lambda: f64,
    pub count: usize,
    pub eps_empirical_mean: f64,
    /// Population standard deviation.
    pub eps_empirical_std: f64,
    pub eps_bound_max_mean: f64,
    pub eps_bound_mean_mean: f64,
}

impl SweepSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.action_counts.len(),
            format_actions(&self.action_counts),
            self.lambda,
            self.count,
            self.eps_empirical_mean,
            self.eps_empirical_std,
            self.eps_bound_max_mean,
            self.eps_bound_mean_mean,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
    pub summary: Vec<SweepSummary>,
}

impl SweepResult {
    pub fn records_csv(&self) -> String {
        let mut out = String::from(RECORD_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SUMMARY_CSV_HEADER);
        out.push('\n');
        for s in &self.summary {
            let _ = writeln!(out, "{}", s.csv_row());
        }
        out
    }

    pub fn violations(&self) -> impl Iterator<Item = &SweepRecord> {
        self.records.iter().filter(|r| !r.holds)
    }
}

fn seconds_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64().max(TIMER_FLOOR_S)
}

/// One LP feasibility solve, including building the polytope.
fn solve_lp(game: &NormalFormGame) -> Result<Status> {
    let lp = build_ce_polytope(game)?;
    Ok(std::hint::black_box(lp.feasible_point(&SimplexOptions::default())).status)
}

fn time_lp(game: &NormalFormGame) -> Result<(f64, Status)> {
    let start = Instant::now();
    let status = solve_lp(game)?;
    Ok((seconds_since(start), status))
}

/// Solves and certifies one game at every weight in `lambdas`.
pub fn evaluate_game(
    game_id: u64,
    game: &NormalFormGame,
    lambdas: &[f64],
    seed: u64,
    lp_timing: bool,
) -> Result<Vec<SweepRecord>> {
    let t_lp_s = if lp_timing {
        Some(time_lp(game)?.0)
    } else {
        None
    };
    lambdas
        .iter()
        .map(|&lambda| {
            let weights = RegularizationWeights::uniform(game.num_players(), lambda)?;
            let start = Instant::now();
            let solution = solve_closed_form(game, &weights)?;
            let t_closed_form_s = seconds_since(start);
            let cert = solution.certify(game, CERTIFY_TOL)?;
            Ok(SweepRecord {
                game_id,
                seed,
                action_counts: game.action_counts().to_vec(),
                lambda,
                eps_empirical: cert.empirical,
                eps_bound: cert.bound,
                eps_bound_mean: cert.certificate.mean_bound,
                holds: cert.holds,
                t_closed_form_s,
                t_lp_s,
            })
        })
        .collect()
}

/// Evaluates the given games; records come out in game order, then
/// weight order, regardless of execution mode.
pub fn sweep_games(
    games: &[(u64, NormalFormGame)],
    lambdas: &[f64],
    seed: u64,
    lp_timing: bool,
    execution: Execution,
) -> Result<SweepResult> {
    let per_game = par::try_map(games, execution, |(id, game)| {
        evaluate_game(*id, game, lambdas, seed, lp_timing)
    })?;
    let records: Vec<SweepRecord> = per_game.into_iter().flatten().collect();
    let summary = summarize(&records);
    Ok(SweepResult { records, summary })
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    if config.lambdas.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one lambda".into(),
        ));
    }
    let games = config.games()?;
    sweep_games(
        &games,
        &config.lambdas,
        config.seed,
        config.lp_timing,
        config.execution,
    )
}

/// Per (size, lambda) mean and spread, in first-appearance order.
pub fn summarize(records: &[SweepRecord]) -> Vec<SweepSummary> {
    let mut keys: Vec<(Vec<usize>, f64)> = Vec::new();
    for r in records {
        if !keys
            .iter()
            .any(|(a, l)| *a == r.action_counts && l.to_bits() == r.lambda.to_bits())
        {
            keys.push((r.action_counts.clone(), r.lambda));
        }
    }
    keys.into_iter()
        .map(|(actions, lambda)| {
            let group: Vec<&SweepRecord> = records
                .iter()
                .filter(|r| r.action_counts == actions && r.lambda.to_bits() == lambda.to_bits())
                .collect();
            let count = group.len();
            let mean =
                |f: fn(&SweepRecord) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / count as f64;
            let emp_mean = mean(|r| r.eps_empirical);
            let var = group
                .iter()
                .map(|r| (r.eps_empirical - emp_mean).powi(2))
                .sum::<f64>()
                / count as f64;
            SweepSummary {
                action_counts: actions,
                lambda,
                count,
                eps_empirical_mean: emp_mean,
                eps_empirical_std: var.sqrt(),
                eps_bound_max_mean: mean(|r| r.eps_bound),
                eps_bound_mean_mean: mean(|r| r.eps_bound_mean),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingConfig {
    pub sizes: Vec<Vec<usize>>,
    /// Games per size. LP cost varies a lot from game to game (a game whose
    /// first pure profile is already an equilibrium needs no pivots), so
    /// each rep times the whole batch.
    pub games: usize,
    pub reps: usize,
    pub seed: u64,
    pub lambda: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            sizes: vec![
                vec![2, 2],
                vec![5, 5],
                vec![10, 10],
                vec![2, 2, 2],
                vec![3, 3, 3],
                vec![5, 5, 5],
            ],
            games: 10,
            reps: 5,
            seed: 7,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub action_counts: Vec<usize>,
    pub reps: usize,
    /// Median over reps of the batch time, per game.
    pub t_closed_form_s: f64,
    /// Median over reps of the batch time, per game.
    pub t_lp_s: f64,
    /// First LP status without a point, else `Feasible`.
    pub lp_status: Status,
}

impl TimingRow {
    /// LP time over closed-form time.
    pub fn ratio(&self) -> f64 {
        self.t_lp_s / self.t_closed_form_s
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            format_actions(&self.action_counts),
            self.reps,
            self.t_closed_form_s,
            self.t_lp_s,
            self.ratio()
        )
    }
}

pub fn timing_csv(rows: &[TimingRow]) -> String {
    let mut out = String::from(TIMING_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median wall time of the closed form and of LP feasibility on the same
/// game, one game per size. Always sequential.
pub fn bench_timing(config: &TimingConfig) -> Result<Vec<TimingRow>> {
    if config.reps == 0 || config.games == 0 {
        return Err(Error::InvalidParameter(
            "reps and games must be at least 1".into(),
        ));
    }
    let rng = RngSpec::new(config.seed);
    config
        .sizes
        .iter()
        .enumerate()
        .map(|(k, size)| {
            let games = (0..config.games)
                .map(|j| gen_random_game(size, &mut rng.stream((k * config.games + j) as u64)))
                .collect::<Result<Vec<_>>>()?;
            let weights = RegularizationWeights::uniform(size.len(), config.lambda)?;
            let mut closed = Vec::with_capacity(config.reps);
            let mut lp = Vec::with_capacity(config.reps);
            let mut lp_status = Status::Feasible;
            // Untimed warm-up so neither side pays first-call costs.
            std::hint::black_box(solve_closed_form(&games[0], &weights)?);
            time_lp(&games[0])?;
            for _ in 0..config.reps {
                let start = Instant::now();
                for game in &games {
                    std::hint::black_box(solve_closed_form(game, &weights)?);
                }
                closed.push(seconds_since(start));

                let start = Instant::now();
                for game in &games {
                    let status = solve_lp(game)?;
                    if lp_status.has_point() && !status.has_point() {
                        lp_status = status;
                    }
                }
                lp.push(seconds_since(start));
            }
            let per_game = config.games as f64;
            Ok(TimingRow {
                action_counts: size.clone(),
                reps: config.reps,
                t_closed_form_s: median(&mut closed) / per_game,
                t_lp_s: median(&mut lp) / per_game,
                lp_status,
            })
        })
        .collect()
}
