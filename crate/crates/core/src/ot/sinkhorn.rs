//! Log-domain Sinkhorn scaling.

use ndarray::Array2;

use crate::cost::CostMatrix;
use crate::error::{CotaError, Result};
use crate::measures::EmpiricalMeasure;

pub(crate) fn log_sum_exp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Result of a KL projection onto a transport polytope.
#[derive(Debug, Clone)]
pub struct Projection {
    pub plan: Array2<f64>,
    pub iterations: usize,
    /// L1 violation of the row marginal; columns are exact.
    pub violation: f64,
    pub converged: bool,
}

/// KL projection of `exp(log_kernel)` onto `U(col_marginal, row_marginal)`
/// by alternating row and column scalings in the log domain. Entries of the
/// kernel may be `-inf`; zero-mass rows and columns stay zero.
pub fn project_log_kernel(log_kernel: &Array2<f64>, cols: &[f64], rows: &[f64], tol: f64, max_iter: usize) -> Projection {
    let (m, n) = log_kernel.dim();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let iterations = scale(log_kernel, cols, rows, &mut f, &mut g, tol, max_iter);
    finish(log_kernel, cols, rows, &f, &g, iterations, tol)
}

/// Entropic projection of `exp(-cost/ε)` with ε-scaling: ε starts at the
/// largest cost entry and halves down to `epsilon`, each stage warm-started
/// from the dual potentials of the previous one. Only the last stage is held
/// to `tol` and counts against `max_iter`.
pub fn project_cost(cost: &Array2<f64>, epsilon: f64, cols: &[f64], rows: &[f64], tol: f64, max_iter: usize) -> Projection {
    let (m, n) = cost.dim();
    let top = cost.iter().cloned().fold(0.0, f64::max);
    // potentials in cost units
    let mut pf = vec![0.0; m];
    let mut pg = vec![0.0; n];
    let mut eps = top.max(epsilon);
    loop {
        let last = eps <= epsilon * (1.0 + 1e-12);
        let e = if last { epsilon } else { eps };
        let log_k = cost.mapv(|c| -c / e);
        let mut f: Vec<f64> = pf.iter().map(|x| x / e).collect();
        let mut g: Vec<f64> = pg.iter().map(|x| x / e).collect();
        let (stage_tol, stage_iter) = if last { (tol, max_iter) } else { (tol.max(1e-4), STAGE_ITERS) };
        let iterations = scale(&log_k, cols, rows, &mut f, &mut g, stage_tol, stage_iter);
        if last {
            return finish(&log_k, cols, rows, &f, &g, iterations, tol);
        }
        pf = f.iter().map(|x| x * e).collect();
        pg = g.iter().map(|x| x * e).collect();
        eps = (eps * 0.5).max(epsilon);
    }
}

const STAGE_ITERS: usize = 200;

fn scale(log_kernel: &Array2<f64>, cols: &[f64], rows: &[f64], f: &mut [f64], g: &mut [f64], tol: f64, max_iter: usize) -> usize {
    let (m, n) = log_kernel.dim();
    let log_a: Vec<f64> = cols.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = rows.iter().map(|x| x.ln()).collect();
    for (j, gj) in g.iter_mut().enumerate() {
        if !(cols[j] > 0.0) {
            *gj = f64::NEG_INFINITY;
        } else if !gj.is_finite() {
            *gj = 0.0;
        }
    }
    let mut iterations = 0;
    while iterations < max_iter {
        // row pass; the LSE before the update gives the current row sums
        let mut err = 0.0;
        for i in 0..m {
            let row = log_kernel.row(i);
            let lse = log_sum_exp(row.iter().zip(g.iter()).map(|(k, gj)| k + gj));
            if iterations > 0 {
                let cur = if f[i] == f64::NEG_INFINITY { 0.0 } else { (f[i] + lse).exp() };
                err += (cur - rows[i]).abs();
            }
            f[i] = if rows[i] > 0.0 { log_b[i] - lse } else { f64::NEG_INFINITY };
        }
        if iterations > 0 && err <= tol {
            break;
        }
        for j in 0..n {
            let col = log_kernel.column(j);
            let lse = log_sum_exp(col.iter().zip(f.iter()).map(|(k, fi)| k + fi));
            g[j] = if cols[j] > 0.0 { log_a[j] - lse } else { f64::NEG_INFINITY };
        }
        iterations += 1;
    }
    iterations
}

fn finish(log_kernel: &Array2<f64>, cols: &[f64], rows: &[f64], f: &[f64], g: &[f64], iterations: usize, tol: f64) -> Projection {
    let (m, n) = log_kernel.dim();
    let mut plan = Array2::from_shape_fn((m, n), |(i, j)| {
        let x = log_kernel[(i, j)] + f[i] + g[j];
        if x.is_nan() { 0.0 } else { x.exp() }
    });
    let mut violation = marginal_violation(&plan, cols, rows);
    if violation > tol && violation <= ROUNDING_GATE {
        log::debug!("scaling stopped at L1 residual {violation:.2e} after {iterations} iterations; rounding");
        round_to_polytope(&mut plan, cols, rows);
        violation = marginal_violation(&plan, cols, rows);
    }
    Projection {
        plan,
        iterations,
        violation,
        converged: violation <= tol,
    }
}

/// Residual L1 violation below which an unfinished scaling is rounded onto
/// the polytope instead of being reported as unconverged.
pub const ROUNDING_GATE: f64 = 1e-2;

/// Rounding onto `U(cols, rows)` (Altschuler, Weed and Rigollet, 2017):
/// shrink overfull rows, then overfull columns, then add the rank-one
/// correction of the remaining deficits. Moves at most twice the violation.
pub fn round_to_polytope(plan: &mut Array2<f64>, cols: &[f64], rows: &[f64]) {
    for (mut r, &b) in plan.rows_mut().into_iter().zip(rows) {
        let s = r.sum();
        if s > b {
            r.mapv_inplace(|x| x * b / s);
        }
    }
    for (mut c, &a) in plan.columns_mut().into_iter().zip(cols) {
        let s = c.sum();
        if s > a {
            c.mapv_inplace(|x| x * a / s);
        }
    }
    let er: Vec<f64> = plan.rows().into_iter().zip(rows).map(|(r, &b)| (b - r.sum()).max(0.0)).collect();
    let ec: Vec<f64> = plan.columns().into_iter().zip(cols).map(|(c, &a)| (a - c.sum()).max(0.0)).collect();
    let total: f64 = er.iter().sum();
    if total > 0.0 {
        for ((i, j), x) in plan.indexed_iter_mut() {
            *x += er[i] * ec[j] / total;
        }
    }
}

/// Largest L1 marginal violation over the two sides.
pub fn marginal_violation(plan: &Array2<f64>, cols: &[f64], rows: &[f64]) -> f64 {
    let col_err: f64 = plan
        .columns()
        .into_iter()
        .zip(cols)
        .map(|(c, a)| (c.sum() - a).abs())
        .sum();
    let row_err: f64 = plan.rows().into_iter().zip(rows).map(|(r, b)| (r.sum() - b).abs()).sum();
    col_err.max(row_err)
}

fn check_marginals(cost: &CostMatrix, alpha: &EmpiricalMeasure, beta: &EmpiricalMeasure) -> Result<()> {
    let (m, n) = cost.shape();
    if alpha.len() != n || beta.len() != m {
        return Err(CotaError::ShapeMismatch {
            expected: (m, n),
            got: (beta.len(), alpha.len()),
        });
    }
    Ok(())
}

/// Entropic OT: minimises `<C,P> - ε H(P)` over plans with column marginal
/// `alpha` (base) and row marginal `beta` (abstracted).
pub fn sinkhorn(
    cost: &CostMatrix,
    alpha: &EmpiricalMeasure,
    beta: &EmpiricalMeasure,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Array2<f64>> {
    check_marginals(cost, alpha, beta)?;
    if !(epsilon > 0.0) {
        return Err(CotaError::InvalidConfig("epsilon must be positive".into()));
    }
    if alpha.weights().iter().sum::<f64>() <= 0.0 || beta.weights().iter().sum::<f64>() <= 0.0 {
        return Err(CotaError::ZeroMassMarginal);
    }
    let p = project_cost(cost.matrix(), epsilon, alpha.weights(), beta.weights(), tol, max_iter);
    if !p.converged {
        return Err(CotaError::NoConvergence(max_iter));
    }
    Ok(p.plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn m(w: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(w.to_vec()).unwrap()
    }

    #[test]
    fn constant_cost_gives_product() {
        let c = CostMatrix::new(Array2::from_elem((2, 3), 1.0)).unwrap();
        let a = m(&[0.2, 0.3, 0.5]);
        let b = m(&[0.4, 0.6]);
        let p = sinkhorn(&c, &a, &b, 0.1, 1e-12, 1000).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!((p[(i, j)] - b.weights()[i] * a.weights()[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_epsilon_is_near_diagonal() {
        let c = CostMatrix::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let h = m(&[0.5, 0.5]);
        let p = sinkhorn(&c, &h, &h, 0.01, 1e-9, 10_000).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-3 && (p[(1, 1)] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn point_mass_marginal() {
        let c = CostMatrix::new(array![[0.0, 3.0], [1.0, 2.0], [5.0, 0.5]]).unwrap();
        let a = m(&[0.0, 1.0]);
        let b = m(&[0.2, 0.3, 0.5]);
        let p = sinkhorn(&c, &a, &b, 0.05, 1e-10, 1000).unwrap();
        for i in 0..3 {
            assert_eq!(p[(i, 0)], 0.0);
            assert!((p[(i, 1)] - b.weights()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn rounding_restores_marginals() {
        let mut p = array![[0.3, 0.15], [0.1, 0.47]];
        let (a, b) = ([0.4, 0.6], [0.45, 0.55]);
        let before = p.clone();
        round_to_polytope(&mut p, &a, &b);
        assert!(marginal_violation(&p, &a, &b) < 1e-15);
        assert!((&p - &before).iter().map(|x| x.abs()).sum::<f64>() <= 2.0 * marginal_violation(&before, &a, &b) + 1e-15);
        assert!(p.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn bad_inputs() {
        let c = CostMatrix::new(Array2::zeros((2, 2))).unwrap();
        let h = m(&[0.5, 0.5]);
        assert!(matches!(sinkhorn(&c, &h, &h, 0.0, 1e-6, 10), Err(CotaError::InvalidConfig(_))));
        assert!(matches!(
            sinkhorn(&c, &m(&[1.0]), &h, 0.1, 1e-6, 10),
            Err(CotaError::ShapeMismatch { .. })
        ));
    }
}
