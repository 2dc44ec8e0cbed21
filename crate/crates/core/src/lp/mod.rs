//! The correlated-equilibrium polytope as a linear program.
//!
//! Variables are the joint-action probabilities `y` in flat order. The
//! constraints are
//!
//! ```text
//! G y <= 0      one row per (player, from, to), from != to
//! 1^T y  = 1
//! y      >= 0
//! ```
//!
//! with rows ordered by player, then `from`, then `to`.

mod simplex;

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::NormalFormGame;

pub use simplex::{SimplexOptions, SolveOutcome, Status};

/// Default cap on the number of deviation rows.
pub const DEFAULT_ROW_CAP: usize = 1_000_000;

/// Identifies the swap `from -> to` of `player` that a row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RowLabel {
    pub player: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    rows: Vec<Vec<f64>>,
    labels: Vec<RowLabel>,
    objective: Option<Vec<f64>>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Number of inequality rows (the equality row is not counted).
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[RowLabel] {
        &self.labels
    }

    pub fn objective(&self) -> Option<&[f64]> {
        self.objective.as_deref()
    }

    pub fn with_objective(mut self, c: Vec<f64>) -> Result<Self> {
        if c.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "objective has {} entries, LP has {} variables",
                c.len(),
                self.num_vars
            )));
        }
        if let Some(k) = c.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "objective[{k}] is not finite"
            )));
        }
        self.objective = Some(c);
        Ok(self)
    }

    /// Largest violation of `G y <= 0`, `1^T y = 1` and `y >= 0`.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        let ineq = self
            .rows
            .iter()
            .map(|r| r.iter().zip(y).map(|(g, v)| g * v).sum::<f64>())
            .fold(0.0f64, f64::max);
        let mass = (y.iter().sum::<f64>() - 1.0).abs();
        let neg = y.iter().fold(0.0f64, |m, v| m.max(-v));
        ineq.max(mass).max(neg)
    }

    /// Finds some point of the polytope (phase one only).
    pub fn feasible_point(&self, opts: &SimplexOptions) -> SolveOutcome {
        simplex::solve(self, None, opts)
    }

    /// Minimizes the attached objective (zero when none is attached).
    pub fn minimize(&self, opts: &SimplexOptions) -> SolveOutcome {
        let zero;
        let c = match &self.objective {
            Some(c) => c.as_slice(),
            None => {
                zero = vec![0.0; self.num_vars];
                &zero
            }
        };
        simplex::solve(self, Some(c), opts)
    }

    /// Plain-text dump for cross-checking with external solvers.
    ///
    /// ```text
    /// # comment lines
    /// vars <n>
    /// rows <m>
    /// objective <c_0> ... <c_{n-1}>      (or: objective none)
    /// ineq <player> <from> <to> <g_0> ... <g_{n-1}> <= 0
    /// ...
    /// eq <1> ... <1> = 1
    /// bounds y >= 0
    /// ```
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        out.push_str("# correlated-equilibrium LP in standard form\n");
        out.push_str("# minimize c^T y  s.t.  G y <= 0,  1^T y = 1,  y >= 0\n");
        out.push_str("# columns: joint actions in flat order (last player fastest)\n");
        out.push_str("# rows: player ascending, then from ascending, then to ascending\n");
        let _ = writeln!(out, "vars {}", self.num_vars);
        let _ = writeln!(out, "rows {}", self.rows.len());
        match &self.objective {
            Some(c) => {
                let _ = writeln!(out, "objective {}", join(c));
            }
            None => out.push_str("objective none\n"),
        }
        for (row, l) in self.rows.iter().zip(&self.labels) {
            let _ = writeln!(
                out,
                "ineq {} {} {} {} <= 0",
                l.player,
                l.from,
                l.to,
                join(row)
            );
        }
        let _ = writeln!(out, "eq {} = 1", join(&vec![1.0; self.num_vars]));
        out.push_str("bounds y >= 0\n");
        out
    }
}

pub fn build_ce_polytope(game: &NormalFormGame) -> Result<LinearProgram> {
    build_ce_polytope_with_cap(game, DEFAULT_ROW_CAP)
}

pub fn build_ce_polytope_with_cap(game: &NormalFormGame, row_cap: usize) -> Result<LinearProgram> {
    let num_rows: usize = (0..game.num_players())
        .map(|i| game.num_actions(i) * (game.num_actions(i) - 1))
        .sum();
    if num_rows > row_cap {
        return Err(Error::SizeCap(format!(
            "{num_rows} deviation rows exceed the cap of {row_cap}"
        )));
    }
    let n = game.num_joint_actions();
    let mut rows = Vec::with_capacity(num_rows);
    let mut labels = Vec::with_capacity(num_rows);
    for player in 0..game.num_players() {
        let count = game.num_actions(player);
        let stride = game.stride(player);
        let costs = game.costs(player);
        for from in 0..count {
            for to in (0..count).filter(|&to| to != from) {
                let mut row = vec![0.0; n];
                for base in game.opponent_profiles(player) {
                    let col = base + from * stride;
                    row[col] = costs[col] - costs[base + to * stride];
                }
                rows.push(row);
                labels.push(RowLabel { player, from, to });
            }
        }
    }
    Ok(LinearProgram {
        num_vars: n,
        rows,
        labels,
        objective: None,
    })
}
