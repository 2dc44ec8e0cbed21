//! Verification of equilibrium conditions.
//!
//! Deviation reports enumerate every ordered swap `(player, from, to)` with
//! `from != to`, in the order players ascending, then `from`, then `to`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::entropy::RegularizationWeights;
use crate::error::Result;
use crate::game::{CorrelatedStrategy, Decomposition, JointStrategy, NormalFormGame};

/// Default tolerance for Nash / correlated-equilibrium conditions.
pub const CONDITION_TOL: f64 = 1e-8;

/// Default tolerance for stationarity of closed-form solutions.
pub const STATIONARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub player: usize,
    pub from: usize,
    pub to: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    entries: Vec<Deviation>,
    max_violation: f64,
    witness: Option<Deviation>,
    tolerance: f64,
}

impl DeviationReport {
    fn from_entries(entries: Vec<Deviation>, tolerance: f64) -> Self {
        let witness = entries
            .iter()
            .copied()
            .reduce(|best, e| if e.value > best.value { e } else { best });
        let max_violation = witness.map_or(0.0, |w| w.value);
        Self {
            entries,
            max_violation,
            witness,
            tolerance,
        }
    }

    pub fn entries(&self) -> &[Deviation] {
        &self.entries
    }

    /// Largest deviation value, or 0 when no deviation exists.
    pub fn max_violation(&self) -> f64 {
        self.max_violation
    }

    /// The first entry attaining `max_violation`.
    pub fn witness(&self) -> Option<Deviation> {
        self.witness
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_satisfied(&self) -> bool {
        self.max_violation <= self.tolerance
    }

    pub fn to_json(&self, with_entries: bool) -> Value {
        let witness = self.witness.map_or(
            Value::Null,
            |w| json!({"player": w.player, "from": w.from, "to": w.to}),
        );
        let mut out = json!({
            "max_violation": self.max_violation,
            "witness": witness,
            "tolerance": self.tolerance,
            "satisfied": self.is_satisfied(),
        });
        if with_entries {
            out["entries"] = serde_json::to_value(&self.entries).expect("plain data");
        }
        out
    }
}

/// Regret of each player against every pure deviation under independent play.
///
/// Entry value is `sum_a x_i(a) c_i(a; x_-i) - c_i(to; x_-i)`; the `from`
/// field is the player's most probable action (it carries no meaning beyond
/// labelling, since Nash deviations are not conditioned on a recommendation).
pub fn check_nash(game: &NormalFormGame, x: &JointStrategy, tol: f64) -> Result<DeviationReport> {
    game.check_joint(x)?;
    let mut entries = Vec::new();
    for player in 0..game.num_players() {
        let count = game.num_actions(player);
        let conditional: Vec<f64> = (0..count)
            .map(|a| game.conditional_cost(player, a, x))
            .collect::<Result<_>>()?;
        let marginal = x.marginal(player);
        let current: f64 = marginal.iter().zip(&conditional).map(|(p, c)| p * c).sum();
        let from = marginal
            .iter()
            .enumerate()
            .fold(0, |best, (a, p)| if *p > marginal[best] { a } else { best });
        if count > 1 {
            entries.extend(conditional.iter().enumerate().map(|(to, c)| Deviation {
                player,
                from,
                to,
                value: current - c,
            }));
        }
    }
    Ok(DeviationReport::from_entries(entries, tol))
}

/// Swap-deviation gains `sum_{a_-i} (c_i(from, a_-i) - c_i(to, a_-i)) y(from, a_-i)`.
pub fn check_ce(
    game: &NormalFormGame,
    y: &CorrelatedStrategy,
    tol: f64,
) -> Result<DeviationReport> {
    game.check_correlated(y)?;
    Ok(DeviationReport::from_entries(
        ce_entries(game, y.probs()),
        tol,
    ))
}

pub(crate) fn ce_entries(game: &NormalFormGame, y: &[f64]) -> Vec<Deviation> {
    let total: usize = (0..game.num_players())
        .map(|i| game.num_actions(i) * (game.num_actions(i) - 1))
        .sum();
    let mut entries = Vec::with_capacity(total);
    for player in 0..game.num_players() {
        let count = game.num_actions(player);
        let stride = game.stride(player);
        let costs = game.costs(player);
        let mut sums = vec![0.0; count * count];
        for base in game.opponent_profiles(player) {
            for from in 0..count {
                let flat = base + from * stride;
                let weight = y[flat];
                if weight == 0.0 {
                    continue;
                }
                for to in 0..count {
                    sums[from * count + to] += (costs[flat] - costs[base + to * stride]) * weight;
                }
            }
        }
        for from in 0..count {
            for to in (0..count).filter(|&to| to != from) {
                entries.push(Deviation {
                    player,
                    from,
                    to,
                    value: sums[from * count + to],
                });
            }
        }
    }
    entries
}

/// Largest swap-deviation gain over all players and action pairs.
pub fn empirical_suboptimality(game: &NormalFormGame, y: &CorrelatedStrategy) -> Result<f64> {
    Ok(check_ce(game, y, 0.0)?.max_violation())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerStationarity {
    pub multiplier: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarityReport {
    pub players: Vec<PlayerStationarity>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub certified: bool,
}

impl StationarityReport {
    fn from_rows<I: IntoIterator<Item = Vec<f64>>>(rows: I, sign: f64, tol: f64) -> Self {
        let players: Vec<PlayerStationarity> = rows
            .into_iter()
            .map(|row| {
                let mean = row.iter().sum::<f64>() / row.len() as f64;
                let residual = row.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
                PlayerStationarity {
                    multiplier: sign * mean,
                    residual,
                }
            })
            .collect();
        let max_residual = players.iter().fold(0.0f64, |m, p| m.max(p.residual));
        Self {
            players,
            max_residual,
            tolerance: tol,
            certified: max_residual <= tol,
        }
    }
}

/// Stationarity of a fully mixed decomposition in the unregularized lifted
/// game: every player's cost must be the same at every joint action.
pub fn check_fully_mixed_gne(
    game: &NormalFormGame,
    d: &Decomposition,
    tol: f64,
) -> Result<StationarityReport> {
    game.check_decomposition(d)?;
    d.require_fully_mixed()?;
    let rows = (0..game.num_players()).map(|i| game.costs(i).to_vec());
    Ok(StationarityReport::from_rows(rows, 1.0, tol))
}

/// Stationarity in the entropy-regularized lifted game: the regularized cost
/// `c_i(a) + log(alpha_i(a)) / lambda_i` must be constant in `a`.
pub fn check_regularized_stationarity(
    game: &NormalFormGame,
    d: &Decomposition,
    weights: &RegularizationWeights,
    tol: f64,
) -> Result<StationarityReport> {
    game.check_decomposition(d)?;
    weights.check_players(game.num_players())?;
    d.require_fully_mixed()?;
    let rows = (0..game.num_players()).map(|i| {
        let inv = 1.0 / weights.get(i);
        game.costs(i)
            .iter()
            .zip(d.log_measure(i))
            .map(|(c, la)| c + la * inv)
            .collect::<Vec<_>>()
    });
    Ok(StationarityReport::from_rows(rows, -1.0, tol))
}
