//! Closed-form entropy-regularized generalized Nash equilibrium.
//!
//! With total weight `L = sum_j lambda_j` and the log-partition
//! `log Z = logsumexp_a(-sum_j lambda_j c_j(a))`, player `i`'s measure is
//!
//! ```text
//! log alpha_i(a) = -lambda_i c_i(a) - (lambda_i / L) log Z
//! ```
//!
//! and the product is the softmax `y(a) = exp(-sum_j lambda_j c_j(a)) / Z`.
//! Everything is evaluated in the log domain; linear values are only
//! materialized at the end and may underflow to zero for large weights.

use serde::Serialize;
use serde_json::{json, Value};

use crate::equilibria::empirical_suboptimality;
use crate::error::{Error, Result};
use crate::game::{CorrelatedStrategy, Decomposition, NormalFormGame};

/// Mass tolerance used when turning the closed-form product into a strategy.
const SOLUTION_MASS_TOL: f64 = 1e-12;

/// The regularization weights used in the sweep experiments.
pub const LAMBDA_SWEEP: [f64; 6] = [0.1, 10.0, 30.0, 100.0, 1000.0, 1e4];

/// Per-player inverse temperatures, all strictly positive and finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct RegularizationWeights(Vec<f64>);

impl RegularizationWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("no regularization weights".into()));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "lambda[{i}] = {} must be positive and finite",
                weights[i]
            )));
        }
        Ok(Self(weights))
    }

    /// The same weight for every player.
    pub fn uniform(num_players: usize, lambda: f64) -> Result<Self> {
        Self::new(vec![lambda; num_players])
    }

    pub fn get(&self, player: usize) -> f64 {
        self.0[player]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub(crate) fn check_players(&self, num_players: usize) -> Result<()> {
        if self.0.len() != num_players {
            return Err(Error::Dimension(format!(
                "{} regularization weights for {num_players} players",
                self.0.len()
            )));
        }
        Ok(())
    }
}

/// Numerically stable `log(sum_k exp(v_k))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone)]
pub struct EntropySolution {
    pub weights: RegularizationWeights,
    pub decomposition: Decomposition,
    pub log_partition: f64,
    pub log_y: Vec<f64>,
    pub y: CorrelatedStrategy,
}

/// Solves the entropy-regularized lifted game in closed form.
pub fn solve_closed_form(
    game: &NormalFormGame,
    weights: &RegularizationWeights,
) -> Result<EntropySolution> {
    weights.check_players(game.num_players())?;
    let n = game.num_players();

    let mut exponent = vec![0.0; game.num_joint_actions()];
    for i in 0..n {
        let lambda = weights.get(i);
        for (e, c) in exponent.iter_mut().zip(game.costs(i)) {
            *e -= lambda * c;
        }
    }
    if let Some(k) = exponent.iter().position(|e| !e.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weighted cost at joint action {k} overflows"
        )));
    }

    // One exp per joint action serves both the partition function and y.
    let max = exponent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = exponent.iter().map(|e| (e - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    let log_partition = max + sum.ln();

    let total = weights.total();
    let log_measures: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let lambda = weights.get(i);
            let shift = lambda / total * log_partition;
            game.costs(i).iter().map(|c| -lambda * c - shift).collect()
        })
        .collect();
    exponent.iter_mut().for_each(|e| *e -= log_partition);
    let log_y = exponent;
    let y = CorrelatedStrategy::from_trusted(probs, SOLUTION_MASS_TOL);

    Ok(EntropySolution {
        weights: weights.clone(),
        decomposition: Decomposition::from_trusted_log(log_measures),
        log_partition,
        log_y,
        y,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonCertificate {
    /// `max_a log alpha_i(a) - min_a log alpha_i(a)` per player.
    pub epsilon: Vec<f64>,
    /// `epsilon_i / lambda_i` per player.
    pub bound: Vec<f64>,
    pub max_epsilon: f64,
    pub max_bound: f64,
    pub mean_bound: f64,
}

pub fn epsilon_certificate(
    d: &Decomposition,
    weights: &RegularizationWeights,
) -> Result<EpsilonCertificate> {
    weights.check_players(d.num_measures())?;
    d.require_fully_mixed()?;
    let epsilon: Vec<f64> = d
        .log_measures()
        .iter()
        .map(|m| {
            let (lo, hi) = m
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                });
            hi - lo
        })
        .collect();
    let bound: Vec<f64> = epsilon
        .iter()
        .zip(weights.as_slice())
        .map(|(e, w)| e / w)
        .collect();
    Ok(EpsilonCertificate {
        max_epsilon: epsilon.iter().copied().fold(0.0, f64::max),
        max_bound: bound.iter().copied().fold(0.0, f64::max),
        mean_bound: bound.iter().sum::<f64>() / bound.len() as f64,
        epsilon,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certification {
    pub empirical: f64,
    pub bound: f64,
    pub holds: bool,
    pub certificate: EpsilonCertificate,
}

/// Compares the measured swap-deviation gain of `product(d)` against the
/// bound `max_i epsilon_i / lambda_i`.
pub fn certify(
    game: &NormalFormGame,
    d: &Decomposition,
    weights: &RegularizationWeights,
    tol: f64,
) -> Result<Certification> {
    game.check_decomposition(d)?;
    let certificate = epsilon_certificate(d, weights)?;
    let y = d.to_correlated(crate::game::MASS_TOL)?;
    let empirical = empirical_suboptimality(game, &y)?;
    Ok(Certification {
        empirical,
        bound: certificate.max_bound,
        holds: empirical <= certificate.max_bound + tol,
        certificate,
    })
}

impl EntropySolution {
    pub fn certify(&self, game: &NormalFormGame, tol: f64) -> Result<Certification> {
        certify(game, &self.decomposition, &self.weights, tol)
    }

    pub fn to_json(&self, certification: Option<&Certification>) -> Value {
        let mut out = json!({
            "lambda": self.weights,
            "log_partition": self.log_partition,
            "y": self.y.probs(),
            "log_y": self.log_y,
            "log_alpha": self.decomposition.log_measures(),
        });
        if let Some(c) = certification {
            out["certificate"] = serde_json::to_value(c).expect("plain data");
        }
        out
    }
}
