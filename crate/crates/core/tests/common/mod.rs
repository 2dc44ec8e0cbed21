#![allow(dead_code)]

use correq::experiment::{gen_random_game, RngSpec};
use correq::{LinearProgram, NormalFormGame};
use rand::Rng;

/// Bimatrix example with P1 = [[3,3],[2,4]], P2 = [[1,2],[1,0]].
pub fn g_star() -> NormalFormGame {
    NormalFormGame::bimatrix(2, 2, &[3., 3., 2., 4.], &[1., 2., 1., 0.]).unwrap()
}

/// Chicken in cost form; its CE polytope has nonempty interior.
pub fn chicken() -> NormalFormGame {
    NormalFormGame::bimatrix(2, 2, &[0., -7., -2., -6.], &[0., -2., -7., -6.]).unwrap()
}

pub fn random_game(actions: &[usize], seed: u64, stream: u64) -> NormalFormGame {
    gen_random_game(actions, &mut RngSpec::new(seed).stream(stream)).unwrap()
}

/// Random point of the simplex (flat Dirichlet).
pub fn random_simplex<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

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
                if f != 0.0 {
                    for k in col..n {
                        a[r][k] -= f * a[col][k];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum of `c^T y` over the polytope by enumerating every vertex.
///
/// Each vertex is the solution of the equality row together with `n - 1`
/// active constraints drawn from the deviation rows and `y >= 0`.
pub fn vertex_enumeration_min(lp: &LinearProgram, c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = lp.num_vars();
    let mut ineq: Vec<Vec<f64>> = lp.rows().to_vec();
    for k in 0..n {
        let mut row = vec![0.0; n];
        row[k] = -1.0;
        ineq.push(row);
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut chosen = Vec::with_capacity(n - 1);
    enumerate(&ineq, n - 1, 0, &mut chosen, &mut |active| {
        let mut a: Vec<Vec<f64>> = active.iter().map(|&k| ineq[k].clone()).collect();
        a.push(vec![1.0; n]);
        let mut b = vec![0.0; n];
        b[n - 1] = 1.0;
        if let Some(y) = solve_dense(a, b) {
            let feasible = ineq
                .iter()
                .all(|r| r.iter().zip(&y).map(|(g, v)| g * v).sum::<f64>() <= 1e-12);
            if feasible {
                let value: f64 = c.iter().zip(&y).map(|(a, b)| a * b).sum();
                if best.as_ref().map_or(true, |(v, _)| value < *v) {
                    best = Some((value, y));
                }
            }
        }
    });
    best
}

fn enumerate(
    rows: &[Vec<f64>],
    need: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if chosen.len() == need {
        visit(chosen);
        return;
    }
    for k in start..rows.len() {
        chosen.push(k);
        enumerate(rows, need, k + 1, chosen, visit);
        chosen.pop();
    }
}
