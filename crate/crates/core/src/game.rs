//! Finite normal-form games, strategies and decompositions.
//!
//! Joint actions are addressed either as a tuple `(a_1, ..., a_N)` or as a
//! flat index in mixed radix with the last player varying fastest:
//! `flat = sum_k a_k * prod_{j > k} A_j`. For a bimatrix game this is plain
//! row-major order over the cost matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance on probability mass (`|sum - 1|`).
pub const MASS_TOL: f64 = 1e-9;

/// Upper bound on the number of joint actions a game may have.
pub const MAX_JOINT_ACTIONS: usize = 1_000_000;

/// A finite game in cost form: every player minimizes `cost(i, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    num_joint: usize,
    costs: Vec<Vec<f64>>,
}

/// On-disk representation of a game.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    num_players: usize,
    actions: Vec<usize>,
    costs: Vec<Vec<f64>>,
}

impl NormalFormGame {
    pub fn new(action_counts: Vec<usize>, costs: Vec<Vec<f64>>) -> Result<Self> {
        let n = action_counts.len();
        if n < 2 {
            return Err(Error::InvalidGame(format!(
                "need at least 2 players, got {n}"
            )));
        }
        if let Some(i) = action_counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidGame(format!("player {i} has no actions")));
        }
        let num_joint = action_counts
            .iter()
            .try_fold(1usize, |acc, &c| acc.checked_mul(c))
            .filter(|&total| total <= MAX_JOINT_ACTIONS)
            .ok_or_else(|| {
                Error::SizeCap(format!(
                    "joint action count exceeds {MAX_JOINT_ACTIONS} for actions {action_counts:?}"
                ))
            })?;
        if costs.len() != n {
            return Err(Error::InvalidGame(format!(
                "expected {n} cost arrays, found {}",
                costs.len()
            )));
        }
        for (i, c) in costs.iter().enumerate() {
            if c.len() != num_joint {
                return Err(Error::InvalidGame(format!(
                    "costs[{i}]: expected {num_joint} entries, found {}",
                    c.len()
                )));
            }
            if let Some(k) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidGame(format!("costs[{i}][{k}] is not finite")));
            }
        }
        let mut strides = vec![1usize; n];
        for k in (0..n - 1).rev() {
            strides[k] = strides[k + 1] * action_counts[k + 1];
        }
        Ok(Self {
            action_counts,
            strides,
            num_joint,
            costs,
        })
    }

    /// Two-player game from row-major cost matrices of shape `rows x cols`.
    pub fn bimatrix(rows: usize, cols: usize, p1: &[f64], p2: &[f64]) -> Result<Self> {
        Self::new(vec![rows, cols], vec![p1.to_vec(), p2.to_vec()])
    }

    /// Game where every player pays zero at every joint action.
    pub fn zero(action_counts: Vec<usize>) -> Result<Self> {
        let total: usize = action_counts.iter().product();
        let costs = vec![vec![0.0; total]; action_counts.len()];
        Self::new(action_counts, costs)
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn num_actions(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    /// Total number of joint actions `A = prod_i A_i`.
    pub fn num_joint_actions(&self) -> usize {
        self.num_joint
    }

    /// Distance in the flat index between consecutive actions of `player`.
    pub fn stride(&self, player: usize) -> usize {
        self.strides[player]
    }

    pub fn costs(&self, player: usize) -> &[f64] {
        &self.costs[player]
    }

    pub fn cost(&self, player: usize, flat: usize) -> f64 {
        self.costs[player][flat]
    }

    /// Action taken by `player` in the joint action `flat`.
    pub fn action_of(&self, flat: usize, player: usize) -> usize {
        (flat / self.strides[player]) % self.action_counts[player]
    }

    pub fn joint_index(&self, actions: &[usize]) -> Result<usize> {
        if actions.len() != self.num_players() {
            return Err(Error::Dimension(format!(
                "joint action has {} components, game has {} players",
                actions.len(),
                self.num_players()
            )));
        }
        let mut flat = 0;
        for (player, (&a, &count)) in actions.iter().zip(&self.action_counts).enumerate() {
            if a >= count {
                return Err(Error::ActionOutOfRange {
                    player,
                    action: a,
                    count,
                });
            }
            flat += a * self.strides[player];
        }
        Ok(flat)
    }

    pub fn joint_tuple(&self, flat: usize) -> Result<Vec<usize>> {
        if flat >= self.num_joint {
            return Err(Error::FlatIndexOutOfRange {
                index: flat,
                total: self.num_joint,
            });
        }
        Ok((0..self.num_players())
            .map(|k| self.action_of(flat, k))
            .collect())
    }

    /// Flat indices of all joint actions in which `player` plays action 0.
    ///
    /// Adding `a_i * stride(player)` to each yields the joint actions with
    /// `a_i` substituted, so this enumerates the opponent profiles `a_{-i}`.
    pub fn opponent_profiles(&self, player: usize) -> impl Iterator<Item = usize> + '_ {
        let stride = self.strides[player];
        let block = stride * self.action_counts[player];
        (0..self.num_joint)
            .step_by(block)
            .flat_map(move |start| start..start + stride)
    }

    /// `sum_a y(a) cost_i(a)`.
    pub fn expected_cost(&self, y: &CorrelatedStrategy, player: usize) -> Result<f64> {
        self.check_player(player)?;
        self.check_correlated(y)?;
        Ok(self.costs[player]
            .iter()
            .zip(y.probs())
            .map(|(c, p)| c * p)
            .sum())
    }

    /// Cost of `player` taking `action` while the others play `x`
    /// independently. Only the opponents' components of `x` are read.
    pub fn conditional_cost(&self, player: usize, action: usize, x: &JointStrategy) -> Result<f64> {
        self.check_player(player)?;
        self.check_joint(x)?;
        if action >= self.action_counts[player] {
            return Err(Error::ActionOutOfRange {
                player,
                action,
                count: self.action_counts[player],
            });
        }
        let offset = action * self.strides[player];
        let costs = &self.costs[player];
        Ok(self
            .opponent_profiles(player)
            .map(|base| {
                let flat = base + offset;
                let weight: f64 = (0..self.num_players())
                    .filter(|&j| j != player)
                    .map(|j| x.marginal(j)[self.action_of(flat, j)])
                    .product();
                weight * costs[flat]
            })
            .sum())
    }

    /// Product distribution `y(a) = prod_i x_i(a_i)`.
    pub fn induce_correlated(&self, x: &JointStrategy) -> Result<CorrelatedStrategy> {
        self.check_joint(x)?;
        let mut y = vec![1.0; self.num_joint];
        for (flat, p) in y.iter_mut().enumerate() {
            for j in 0..self.num_players() {
                *p *= x.marginal(j)[self.action_of(flat, j)];
            }
        }
        CorrelatedStrategy::new(y)
    }

    pub fn check_correlated(&self, y: &CorrelatedStrategy) -> Result<()> {
        if y.len() != self.num_joint {
            return Err(Error::Dimension(format!(
                "correlated strategy has {} entries, game has {} joint actions",
                y.len(),
                self.num_joint
            )));
        }
        Ok(())
    }

    pub fn check_joint(&self, x: &JointStrategy) -> Result<()> {
        if x.num_players() != self.num_players() {
            return Err(Error::Dimension(format!(
                "joint strategy has {} players, game has {}",
                x.num_players(),
                self.num_players()
            )));
        }
        for (i, &count) in self.action_counts.iter().enumerate() {
            if x.marginal(i).len() != count {
                return Err(Error::Dimension(format!(
                    "strategy of player {i} has {} entries, player has {count} actions",
                    x.marginal(i).len()
                )));
            }
        }
        Ok(())
    }

    pub fn check_decomposition(&self, d: &Decomposition) -> Result<()> {
        if d.num_measures() != self.num_players() || d.len() != self.num_joint {
            return Err(Error::Dimension(format!(
                "decomposition has {} measures of length {}, game needs {} of length {}",
                d.num_measures(),
                d.len(),
                self.num_players(),
                self.num_joint
            )));
        }
        Ok(())
    }

    fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.num_players() {
            return Err(Error::Dimension(format!(
                "player {player} out of range for {} players",
                self.num_players()
            )));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text)?;
        if file.num_players != file.actions.len() {
            return Err(Error::InvalidGame(format!(
                "num_players is {} but actions lists {} players",
                file.num_players,
                file.actions.len()
            )));
        }
        Self::new(file.actions, file.costs)
    }

    pub fn to_json_string(&self) -> String {
        let file = GameFile {
            num_players: self.num_players(),
            actions: self.action_counts.clone(),
            costs: self.costs.clone(),
        };
        serde_json::to_string(&file).expect("game serialization is infallible")
    }
}

fn check_simplex(v: &[f64], tol: f64, what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidStrategy(format!("{what} is empty")));
    }
    if let Some(k) = v.iter().position(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidStrategy(format!(
            "{what} entry {k} = {} is not a probability",
            v[k]
        )));
    }
    let mass: f64 = v.iter().sum();
    if (mass - 1.0).abs() > tol {
        return Err(Error::InvalidStrategy(format!(
            "{what} has mass {mass}, expected 1"
        )));
    }
    Ok(())
}

/// Independent mixed strategies, one simplex vector per player.
#[derive(Debug, Clone, PartialEq)]
pub struct JointStrategy {
    marginals: Vec<Vec<f64>>,
}

impl JointStrategy {
    pub fn new(marginals: Vec<Vec<f64>>) -> Result<Self> {
        for (i, x) in marginals.iter().enumerate() {
            check_simplex(x, MASS_TOL, &format!("strategy of player {i}"))?;
        }
        Ok(Self { marginals })
    }

    pub fn uniform(action_counts: &[usize]) -> Self {
        Self {
            marginals: action_counts
                .iter()
                .map(|&c| vec![1.0 / c as f64; c])
                .collect(),
        }
    }

    /// Every player plays `actions[i]` with certainty.
    pub fn pure(action_counts: &[usize], actions: &[usize]) -> Result<Self> {
        if actions.len() != action_counts.len() {
            return Err(Error::Dimension(format!(
                "{} actions for {} players",
                actions.len(),
                action_counts.len()
            )));
        }
        let mut marginals = Vec::with_capacity(actions.len());
        for (player, (&a, &count)) in actions.iter().zip(action_counts).enumerate() {
            if a >= count {
                return Err(Error::ActionOutOfRange {
                    player,
                    action: a,
                    count,
                });
            }
            let mut x = vec![0.0; count];
            x[a] = 1.0;
            marginals.push(x);
        }
        Ok(Self { marginals })
    }

    pub fn num_players(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginal(&self, player: usize) -> &[f64] {
        &self.marginals[player]
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.marginals
    }
}

/// A probability distribution over joint actions.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedStrategy {
    probs: Vec<f64>,
}

impl CorrelatedStrategy {
    /// For solver output that is a distribution by construction.
    pub(crate) fn from_trusted(probs: Vec<f64>, tol: f64) -> Self {
        debug_assert!(check_simplex(&probs, tol, "correlated strategy").is_ok());
        Self { probs }
    }

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, MASS_TOL)
    }

    pub fn with_tolerance(probs: Vec<f64>, tol: f64) -> Result<Self> {
        check_simplex(&probs, tol, "correlated strategy")?;
        Ok(Self { probs })
    }

    /// Rescales a nonnegative vector to unit mass. This is the only place
    /// where renormalization happens; constructors never do it silently.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if let Some(k) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidStrategy(format!(
                "weight {k} = {} is not a nonnegative number",
                weights[k]
            )));
        }
        let mass: f64 = weights.iter().sum();
        if mass <= 0.0 {
            return Err(Error::InvalidStrategy("weights have zero mass".into()));
        }
        Self::new(weights.into_iter().map(|w| w / mass).collect())
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            probs: vec![1.0 / len as f64; len],
        }
    }

    pub fn point_mass(len: usize, flat: usize) -> Result<Self> {
        if flat >= len {
            return Err(Error::FlatIndexOutOfRange {
                index: flat,
                total: len,
            });
        }
        let mut probs = vec![0.0; len];
        probs[flat] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

/// `N` unnormalized measures over joint actions whose element-wise product
/// is (ideally) a correlated strategy.
///
/// Measures are stored as natural logarithms so that strongly regularized
/// solutions, whose entries are far below the smallest positive `f64`, keep
/// full relative precision. A zero entry is stored as `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    log_measures: Vec<Vec<f64>>,
}

impl Decomposition {
    /// For solver output with finite, correctly shaped rows by construction.
    pub(crate) fn from_trusted_log(log_measures: Vec<Vec<f64>>) -> Self {
        debug_assert!(Self::from_log(log_measures.clone()).is_ok());
        Self { log_measures }
    }

    /// From linear-scale measures. Entries must be finite and nonnegative.
    pub fn new(measures: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(&measures)?;
        for (i, m) in measures.iter().enumerate() {
            if let Some(k) = m.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidStrategy(format!(
                    "measure {i} entry {k} = {} is not a nonnegative number",
                    m[k]
                )));
            }
        }
        Ok(Self {
            log_measures: measures
                .into_iter()
                .map(|m| m.into_iter().map(f64::ln).collect())
                .collect(),
        })
    }

    /// From log-scale measures. `-inf` encodes a zero entry; `+inf` and NaN
    /// are rejected.
    pub fn from_log(log_measures: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_shape(&log_measures)?;
        for (i, m) in log_measures.iter().enumerate() {
            if let Some(k) = m.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
                return Err(Error::InvalidStrategy(format!(
                    "log-measure {i} entry {k} = {} is invalid",
                    m[k]
                )));
            }
        }
        Ok(Self { log_measures })
    }

    /// `alpha_1 = y`, all other measures identically one.
    pub fn trivial(y: &CorrelatedStrategy, num_players: usize) -> Result<Self> {
        if num_players == 0 {
            return Err(Error::InvalidParameter("need at least one measure".into()));
        }
        let mut measures = vec![vec![1.0; y.len()]; num_players];
        measures[0] = y.probs().to_vec();
        Self::new(measures)
    }

    fn check_shape(measures: &[Vec<f64>]) -> Result<()> {
        let Some(first) = measures.first() else {
            return Err(Error::InvalidStrategy(
                "decomposition has no measures".into(),
            ));
        };
        if first.is_empty() {
            return Err(Error::InvalidStrategy("measures are empty".into()));
        }
        if let Some(i) = measures.iter().position(|m| m.len() != first.len()) {
            return Err(Error::Dimension(format!(
                "measure {i} has {} entries, measure 0 has {}",
                measures[i].len(),
                first.len()
            )));
        }
        Ok(())
    }

    pub fn num_measures(&self) -> usize {
        self.log_measures.len()
    }

    /// Number of joint actions each measure covers.
    pub fn len(&self) -> usize {
        self.log_measures[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn log_measure(&self, player: usize) -> &[f64] {
        &self.log_measures[player]
    }

    pub fn log_measures(&self) -> &[Vec<f64>] {
        &self.log_measures
    }

    /// Linear-scale measure of `player`; entries may underflow to zero.
    pub fn measure(&self, player: usize) -> Vec<f64> {
        self.log_measures[player].iter().map(|v| v.exp()).collect()
    }

    /// Log of the element-wise product, `sum_i log alpha_i(a)`.
    pub fn log_product(&self) -> Vec<f64> {
        let mut out = self.log_measures[0].clone();
        for m in &self.log_measures[1..] {
            for (o, v) in out.iter_mut().zip(m) {
                *o += v;
            }
        }
        out
    }

    /// Element-wise product `alpha_1 o ... o alpha_N`.
    pub fn product(&self) -> Vec<f64> {
        self.log_product().into_iter().map(f64::exp).collect()
    }

    /// Total mass of the product.
    pub fn mass(&self) -> f64 {
        self.product().iter().sum()
    }

    /// The product as a correlated strategy; fails unless its mass is one
    /// within `tol`.
    pub fn to_correlated(&self, tol: f64) -> Result<CorrelatedStrategy> {
        CorrelatedStrategy::with_tolerance(self.product(), tol)
    }

    /// First `(player, action)` with a zero measure entry, if any.
    pub fn first_zero(&self) -> Option<(usize, usize)> {
        self.log_measures.iter().enumerate().find_map(|(i, m)| {
            m.iter()
                .position(|v| *v == f64::NEG_INFINITY)
                .map(|a| (i, a))
        })
    }

    /// Every entry of every measure is strictly positive.
    pub fn is_fully_mixed(&self) -> bool {
        self.first_zero().is_none()
    }

    pub(crate) fn require_fully_mixed(&self) -> Result<()> {
        match self.first_zero() {
            Some((player, action)) => Err(Error::NotFullyMixed { player, action }),
            None => Ok(()),
        }
    }

    /// Scales measure `i` by `factor` and measure `j` by `1 / factor`,
    /// leaving the product unchanged.
    pub fn rescale_pair(&self, i: usize, j: usize, factor: f64) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidParameter(format!(
                "rescale needs two distinct measures, got {i} twice"
            )));
        }
        let n = self.num_measures();
        if i >= n || j >= n {
            return Err(Error::Dimension(format!(
                "measure index out of range for {n} measures"
            )));
        }
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rescale factor must be positive and finite, got {factor}"
            )));
        }
        let shift = factor.ln();
        let mut log_measures = self.log_measures.clone();
        log_measures[i].iter_mut().for_each(|v| *v += shift);
        log_measures[j].iter_mut().for_each(|v| *v -= shift);
        Ok(Self { log_measures })
    }
}
