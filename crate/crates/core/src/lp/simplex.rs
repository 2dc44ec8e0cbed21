//! Dense two-phase tableau simplex.
//!
//! Columns are `[y_0 .. y_{n-1} | s_0 .. s_{m-1} | t]` where `s_r` is the
//! slack of inequality row `r` and `t` a single artificial that relaxes every
//! inequality to `g_r . y - t <= 0`. Phase one starts at a simplex vertex and
//! minimizes `t`. Starting at `y = 0` instead would sit on a vertex where all
//! inequalities are active, and Bland's rule then wanders through a huge
//! degenerate face while the tableau loses precision.
//!
//! Entering columns follow the most negative reduced cost until 30 pivots in
//! a row fail to move, then Bland's rule takes over until one does, so
//! cycling is impossible. The tableau is rebuilt from the original rows
//! every few dozen pivots and once more before the point is read off.

use serde::Serialize;

use super::LinearProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    NumericFailure,
    IterationLimit,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::NumericFailure => "numeric-failure",
            Status::IterationLimit => "iteration-limit",
        }
    }

    pub fn has_point(&self) -> bool {
        matches!(self, Status::Optimal | Status::Feasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Smallest admissible pivot magnitude in the ratio test.
    pub pivot_tol: f64,
    /// Reduced costs above `-optimality_tol` count as nonnegative.
    pub optimality_tol: f64,
    /// Largest accepted constraint violation of a returned point.
    pub feasibility_tol: f64,
    /// Defaults to `50 * (rows + cols)` when unset.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            optimality_tol: 1e-10,
            feasibility_tol: 1e-8,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutcome {
    pub status: Status,
    pub y: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub pivots: usize,
    /// Max constraint violation of `y`, recomputed from the original rows.
    /// For infeasible outcomes, the optimal phase-one objective instead.
    pub residual: f64,
}

/// Pivots between rebuilds of the tableau from the original rows.
const REFACTOR_EVERY: usize = 24;

/// Consecutive degenerate pivots before switching to Bland's rule.
const STALL_LIMIT: usize = 30;

/// Ratios this close count as ties; steps this short count as degenerate.
const TIE_TOL: f64 = 1e-12;

struct Tableau {
    width: usize,
    original: Vec<f64>,
    data: Vec<f64>,
    cost: Vec<f64>,
    /// Current objective, kept so the cost row can be rebuilt too.
    objective: Vec<f64>,
    basis: Vec<usize>,
    since_refactor: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Limit,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn num_rows(&self) -> usize {
        self.basis.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row = self.data[r * w..(r + 1) * w].to_vec();
        for i in (0..self.num_rows()).filter(|&i| i != r) {
            let f = self.data[i * w + c];
            if f != 0.0 {
                for (v, pr) in self.data[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.data[i * w + c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (v, pr) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
        self.since_refactor += 1;
    }

    /// Recomputes the tableau as `B^-1 [A | b]` from the original rows,
    /// discarding the roundoff accumulated by successive pivots. Keeps the
    /// current tableau if the basis matrix looks singular.
    fn refactor(&mut self) {
        let w = self.width;
        let rows = self.num_rows();
        let mut m = self.original.clone();
        let mut assigned = vec![false; rows];
        let mut basis = vec![usize::MAX; rows];
        for &c in &self.basis {
            let Some(r) = (0..rows)
                .filter(|&r| !assigned[r])
                .max_by(|&a, &b| m[a * w + c].abs().total_cmp(&m[b * w + c].abs()))
            else {
                return;
            };
            let p = m[r * w + c];
            if p.abs() < 1e-13 {
                return;
            }
            for v in &mut m[r * w..(r + 1) * w] {
                *v /= p;
            }
            let pivot_row = m[r * w..(r + 1) * w].to_vec();
            for i in (0..rows).filter(|&i| i != r) {
                let f = m[i * w + c];
                if f != 0.0 {
                    for (v, pr) in m[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                        *v -= f * pr;
                    }
                    m[i * w + c] = 0.0;
                }
            }
            assigned[r] = true;
            basis[r] = c;
        }
        self.data = m;
        self.basis = basis;
        self.since_refactor = 0;
        let c = std::mem::take(&mut self.objective);
        self.price(&c);
    }

    /// Runs Bland's rule over columns `0..allowed` until optimal, or until
    /// column `stop` leaves the basis.
    fn run(
        &mut self,
        allowed: usize,
        stop: Option<usize>,
        opts: &SimplexOptions,
        limit: usize,
        iterations: &mut usize,
        pivots: &mut usize,
    ) -> Step {
        // Steepest reduced cost while pivots make progress; Bland's rule
        // once they stall, which rules out cycling on degenerate vertices.
        let mut stalled = 0;
        loop {
            if stop.is_some_and(|s| !self.basis.contains(&s)) {
                return Step::Optimal;
            }
            let candidates = (0..allowed).filter(|&j| self.cost[j] < -opts.optimality_tol);
            let enter = if stalled >= STALL_LIMIT {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| self.cost[a].total_cmp(&self.cost[b]))
            };
            let Some(enter) = enter else {
                return Step::Optimal;
            };
            if *iterations >= limit {
                return Step::Limit;
            }
            *iterations += 1;

            // Minimum-ratio test. Near-ties go to the largest pivot element,
            // or to the smallest basic index under Bland's rule.
            let bland = stalled >= STALL_LIMIT;
            let admissible: Vec<(usize, f64, f64)> = (0..self.num_rows())
                .filter_map(|i| {
                    let a = self.row(i)[enter];
                    (a > opts.pivot_tol).then(|| (i, self.rhs(i).max(0.0) / a, a))
                })
                .collect();
            let Some(step) = admissible
                .iter()
                .map(|&(_, ratio, _)| ratio)
                .min_by(f64::total_cmp)
            else {
                return Step::Unbounded;
            };
            let ties = admissible
                .iter()
                .filter(|&&(_, ratio, _)| ratio <= step + TIE_TOL * step.max(1.0));
            let r = if bland {
                ties.min_by_key(|&&(i, _, _)| self.basis[i])
                    .map(|&(i, _, _)| i)
            } else {
                ties.max_by(|x, y| x.2.total_cmp(&y.2)).map(|&(i, _, _)| i)
            }
            .expect("the minimum ratio row is always a tie");
            if step > TIE_TOL {
                stalled = 0;
            } else {
                stalled += 1;
            }
            self.pivot(r, enter);
            *pivots += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor();
            }
        }
    }

    /// Resets the cost row to `c` priced out against the current basis.
    fn price(&mut self, c: &[f64]) {
        self.objective = c.to_vec();
        self.cost.fill(0.0);
        self.cost[..c.len()].copy_from_slice(c);
        for i in 0..self.num_rows() {
            let cb = c.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                let row = self.row(i).to_vec();
                for (v, a) in self.cost.iter_mut().zip(row) {
                    *v -= cb * a;
                }
            }
        }
    }
}

pub(super) fn solve(
    lp: &LinearProgram,
    objective: Option<&[f64]>,
    opts: &SimplexOptions,
) -> SolveOutcome {
    let n = lp.num_vars();
    let m = lp.num_rows();
    let artificial = n + m;
    let width = n + m + 2;
    let rows = m + 1;
    let limit = opts.max_iterations.unwrap_or(50 * (rows + n));

    let mut data = vec![0.0; rows * width];
    for (r, g) in lp.rows().iter().enumerate() {
        data[r * width..r * width + n].copy_from_slice(g);
        data[r * width + n + r] = 1.0;
        data[r * width + artificial] = -1.0;
    }
    let eq = m * width;
    data[eq..eq + n].fill(1.0);
    data[eq + width - 1] = 1.0;

    let mut basis: Vec<usize> = (n..n + m).collect();
    basis.push(0);
    let mut t = Tableau {
        width,
        original: data.clone(),
        data,
        cost: vec![0.0; width],
        objective: Vec::new(),
        basis,
        since_refactor: 0,
    };

    // Start from the vertex y = e_0 and let t absorb the worst violation, so
    // every basic value is nonnegative and, generically, nonzero.
    let mut pivots = 0;
    t.pivot(m, 0);
    pivots += 1;
    if let Some(r) = (0..m)
        .filter(|&r| t.rhs(r) < 0.0)
        .min_by(|&a, &b| t.rhs(a).total_cmp(&t.rhs(b)))
    {
        t.pivot(r, artificial);
        pivots += 1;
    }

    let mut iterations = 0;
    let outcome = |status, iterations, pivots, residual| SolveOutcome {
        status,
        y: None,
        objective: None,
        iterations,
        pivots,
        residual,
    };

    let mut phase_one = vec![0.0; artificial + 1];
    phase_one[artificial] = 1.0;
    t.price(&phase_one);
    match t.run(
        artificial + 1,
        Some(artificial),
        opts,
        limit,
        &mut iterations,
        &mut pivots,
    ) {
        Step::Optimal => {}
        Step::Limit => return outcome(Status::IterationLimit, iterations, pivots, f64::NAN),
        Step::Unbounded => return outcome(Status::NumericFailure, iterations, pivots, f64::NAN),
    }
    let level = t
        .basis
        .iter()
        .position(|&b| b == artificial)
        .map_or(0.0, |r| t.rhs(r));
    if level > opts.feasibility_tol {
        return outcome(Status::Infeasible, iterations, pivots, level);
    }

    // Drive a zero-level artificial out of the basis when possible. If its
    // row has no usable entry the row is redundant and t stays at zero.
    if let Some(r) = t.basis.iter().position(|&b| b == artificial) {
        if let Some(c) = (0..artificial).find(|&j| t.row(r)[j].abs() > opts.pivot_tol) {
            t.pivot(r, c);
            pivots += 1;
        }
    }

    let status = match objective {
        None => Status::Feasible,
        Some(c) => {
            t.price(c);
            match t.run(artificial, None, opts, limit, &mut iterations, &mut pivots) {
                Step::Optimal => Status::Optimal,
                Step::Limit => {
                    return outcome(Status::IterationLimit, iterations, pivots, f64::NAN)
                }
                // The polytope is bounded, so this only happens through roundoff.
                Step::Unbounded => {
                    return outcome(Status::NumericFailure, iterations, pivots, f64::NAN)
                }
            }
        }
    };

    t.refactor();
    let mut y = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            y[b] = t.rhs(i);
        }
    }
    // Roundoff can leave basic values a hair below zero.
    for v in &mut y {
        if *v < 0.0 && *v >= -opts.feasibility_tol {
            *v = 0.0;
        }
    }
    let residual = lp.max_violation(&y);
    let status = if residual > opts.feasibility_tol {
        Status::NumericFailure
    } else {
        status
    };
    let value = objective.map(|c| c.iter().zip(&y).map(|(a, b)| a * b).sum());
    SolveOutcome {
        status,
        y: Some(y),
        objective: value,
        iterations,
        pivots,
        residual,
    }
}
