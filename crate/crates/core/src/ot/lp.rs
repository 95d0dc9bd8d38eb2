//! Exact transport by the transportation simplex method.
//!
//! Starts from the north-west corner basis and pivots on the current
//! spanning tree with u-v potentials. Entering and leaving cells follow
//! Bland's smallest-index rule, which rules out cycling on degenerate bases.

use std::collections::VecDeque;

use ndarray::Array2;

use crate::cost::CostMatrix;
use crate::error::{CotaError, Result};
use crate::measures::EmpiricalMeasure;

/// Largest `D·D'` accepted by [`lp_ot_oracle`].
pub const LP_ORACLE_CAP: usize = 400;

const REDUCED_COST_TOL: f64 = 1e-12;

/// Exact minimiser of `<C,P>` over `U(alpha, beta)` for small instances.
pub fn lp_ot_oracle(cost: &CostMatrix, alpha: &EmpiricalMeasure, beta: &EmpiricalMeasure) -> Result<Array2<f64>> {
    let (m, n) = cost.shape();
    if m * n > LP_ORACLE_CAP {
        return Err(CotaError::SizeExceeded(m * n));
    }
    if alpha.len() != n || beta.len() != m {
        return Err(CotaError::ShapeMismatch {
            expected: (m, n),
            got: (beta.len(), alpha.len()),
        });
    }
    Ok(transport_lp(cost.matrix(), beta.weights(), alpha.weights()))
}

/// Optimal transport cost between two measures; no size cap.
pub fn exact_transport_cost(cost: &Array2<f64>, rows: &[f64], cols: &[f64]) -> f64 {
    let p = transport_lp(cost, rows, cols);
    (&p * cost).sum()
}

/// Transportation simplex with supplies `rows` and demands `cols`.
pub(crate) fn transport_lp(cost: &Array2<f64>, rows: &[f64], cols: &[f64]) -> Array2<f64> {
    let (m, n) = cost.dim();
    let mut x = Array2::<f64>::zeros((m, n));
    let mut basic = Array2::<bool>::from_elem((m, n), false);

    // the two sides may differ in total by rounding; the last column absorbs it
    let mut r = rows.to_vec();
    let mut c = cols.to_vec();
    let (sr, sc): (f64, f64) = (r.iter().sum(), c.iter().sum());
    c[n - 1] += sr - sc;
    if c[n - 1] < 0.0 {
        c[n - 1] = 0.0;
    }
    let (mut i, mut j) = (0, 0);
    while i < m && j < n {
        let q = r[i].min(c[j]).max(0.0);
        x[(i, j)] = q;
        basic[(i, j)] = true;
        r[i] -= q;
        c[j] -= q;
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || r[i] <= c[j] {
            i += 1;
        } else {
            j += 1;
        }
    }

    let max_pivots = 50 * (m + n) * (m + n) + 1000;
    for _ in 0..max_pivots {
        let (u, v) = potentials(cost, &basic);
        let mut entering = None;
        'scan: for a in 0..m {
            for b in 0..n {
                if !basic[(a, b)] && cost[(a, b)] - u[a] - v[b] < -REDUCED_COST_TOL {
                    entering = Some((a, b));
                    break 'scan;
                }
            }
        }
        let Some((a, b)) = entering else { break };
        let path = tree_path(&basic, a, b);
        // odd positions along the path lose mass, even positions gain
        let mut theta = f64::INFINITY;
        let mut leaving = (usize::MAX, usize::MAX);
        for (k, &(pi, pj)) in path.iter().enumerate() {
            if k % 2 == 0 {
                let val = x[(pi, pj)];
                if val < theta || (val == theta && (pi, pj) < leaving) {
                    theta = val;
                    leaving = (pi, pj);
                }
            }
        }
        x[(a, b)] += theta;
        basic[(a, b)] = true;
        for (k, &(pi, pj)) in path.iter().enumerate() {
            if k % 2 == 0 {
                x[(pi, pj)] -= theta;
            } else {
                x[(pi, pj)] += theta;
            }
        }
        x[leaving] = 0.0;
        basic[leaving] = false;
    }
    x.mapv_inplace(|v| v.max(0.0));
    x
}

fn potentials(cost: &Array2<f64>, basic: &Array2<bool>) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = cost.dim();
    let mut u = vec![f64::NAN; m];
    let mut v = vec![f64::NAN; n];
    u[0] = 0.0;
    let mut queue = VecDeque::from([(true, 0usize)]);
    while let Some((is_row, k)) = queue.pop_front() {
        if is_row {
            for b in 0..n {
                if basic[(k, b)] && v[b].is_nan() {
                    v[b] = cost[(k, b)] - u[k];
                    queue.push_back((false, b));
                }
            }
        } else {
            for a in 0..m {
                if basic[(a, k)] && u[a].is_nan() {
                    u[a] = cost[(a, k)] - v[k];
                    queue.push_back((true, a));
                }
            }
        }
    }
    (u, v)
}

/// Basic cells on the tree path from row `a` to column `b`, starting at row `a`.
fn tree_path(basic: &Array2<bool>, a: usize, b: usize) -> Vec<(usize, usize)> {
    let (m, n) = basic.dim();
    // nodes: rows 0..m, columns m..m+n
    let mut prev = vec![usize::MAX; m + n];
    let mut seen = vec![false; m + n];
    seen[a] = true;
    let mut queue = VecDeque::from([a]);
    while let Some(node) = queue.pop_front() {
        if node == m + b {
            break;
        }
        if node < m {
            for col in 0..n {
                if basic[(node, col)] && !seen[m + col] {
                    seen[m + col] = true;
                    prev[m + col] = node;
                    queue.push_back(m + col);
                }
            }
        } else {
            let col = node - m;
            for row in 0..m {
                if basic[(row, col)] && !seen[row] {
                    seen[row] = true;
                    prev[row] = node;
                    queue.push_back(row);
                }
            }
        }
    }
    let mut cells = Vec::new();
    let mut node = m + b;
    while node != a {
        let p = prev[node];
        let cell = if node >= m { (p, node - m) } else { (node, p - m) };
        cells.push(cell);
        node = p;
    }
    // walked from column b back to row a; the cell next to b loses mass first
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_is_optimal() {
        let c = CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let h = EmpiricalMeasure::new(vec![0.5, 0.5]).unwrap();
        let p = lp_ot_oracle(&c, &h, &h).unwrap();
        assert_eq!(p, array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn anti_northwest_instance() {
        // north-west corner is the worst vertex here
        let c = CostMatrix::new(array![[9.0, 0.0], [0.0, 9.0]]).unwrap();
        let a = EmpiricalMeasure::new(vec![0.3, 0.7]).unwrap();
        let b = EmpiricalMeasure::new(vec![0.7, 0.3]).unwrap();
        let p = lp_ot_oracle(&c, &a, &b).unwrap();
        assert!((p[(0, 1)] - 0.7).abs() < 1e-12 && (p[(1, 0)] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn size_cap() {
        let c = CostMatrix::new(Array2::zeros((21, 20))).unwrap();
        let a = EmpiricalMeasure::uniform(20);
        let b = EmpiricalMeasure::uniform(21);
        assert_eq!(lp_ot_oracle(&c, &a, &b).unwrap_err(), CotaError::SizeExceeded(420));
    }
}
