//! Fixed-support entropic Wasserstein barycenters.

use ndarray::Array2;

use super::sinkhorn::log_sum_exp;
use crate::cost::CostMatrix;
use crate::domain::DomainIndex;
use crate::error::{CotaError, Result};
use crate::measures::EmpiricalMeasure;

/// Barycenter of `measures` under `ground_cost` by iterative Bregman
/// projections in the log domain. `weights` must lie on the simplex.
pub fn wasserstein_barycenter(
    measures: &[EmpiricalMeasure],
    ground_cost: &CostMatrix,
    epsilon: f64,
    weights: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<EmpiricalMeasure> {
    if measures.is_empty() {
        return Err(CotaError::EmptyList);
    }
    if weights.len() != measures.len() {
        return Err(CotaError::LengthMismatch(weights.len(), measures.len()));
    }
    if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CotaError::InvalidWeights("barycenter weights must lie on the simplex".into()));
    }
    let n = measures[0].len();
    if ground_cost.shape() != (n, n) || measures.iter().any(|m| m.len() != n) {
        return Err(CotaError::DomainMismatch("barycenter inputs must share one domain".into()));
    }
    if !(epsilon > 0.0) {
        return Err(CotaError::InvalidConfig("epsilon must be positive".into()));
    }
    let log_k: Array2<f64> = ground_cost.matrix().mapv(|c| -c / epsilon);
    let apply = |w: &[f64]| -> Vec<f64> { (0..n).map(|i| log_sum_exp((0..n).map(|j| log_k[(i, j)] + w[j]))).collect() };
    let apply_t = |w: &[f64]| -> Vec<f64> { (0..n).map(|j| log_sum_exp((0..n).map(|i| log_k[(i, j)] + w[i]))).collect() };
    ibp(measures, weights, tol, max_iter, apply, apply_t)
}

/// Barycenter under the Hamming metric of `domain`. The kernel
/// `exp(-H(x, y)/ε)` factorises over variables, so it is applied one axis
/// at a time instead of as a dense `D × D` matrix.
pub fn hamming_barycenter(
    measures: &[EmpiricalMeasure],
    domain: &DomainIndex,
    epsilon: f64,
    weights: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<EmpiricalMeasure> {
    if measures.is_empty() {
        return Err(CotaError::EmptyList);
    }
    if weights.len() != measures.len() {
        return Err(CotaError::LengthMismatch(weights.len(), measures.len()));
    }
    if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CotaError::InvalidWeights("barycenter weights must lie on the simplex".into()));
    }
    let n = domain.size();
    if measures.iter().any(|m| m.len() != n) {
        return Err(CotaError::DomainMismatch("barycenter inputs must share one domain".into()));
    }
    if !(epsilon > 0.0) {
        return Err(CotaError::InvalidConfig("epsilon must be positive".into()));
    }
    // stride of variable v in the index is the product of later cardinalities
    let cards: Vec<usize> = (0..domain.num_vars()).map(|v| domain.cardinality(v)).collect();
    let mut strides = vec![1usize; cards.len()];
    for v in (0..cards.len().saturating_sub(1)).rev() {
        strides[v] = strides[v + 1] * cards[v + 1];
    }
    let off = -1.0 / epsilon;
    let apply = |w: &[f64]| -> Vec<f64> {
        let mut cur = w.to_vec();
        for (v, &card) in cards.iter().enumerate() {
            let st = strides[v];
            let mut next = vec![0.0; n];
            for (i, out) in next.iter_mut().enumerate() {
                let xv = (i / st) % card;
                let base = i - xv * st;
                *out = log_sum_exp((0..card).map(|y| cur[base + y * st] + if y == xv { 0.0 } else { off }));
            }
            cur = next;
        }
        cur
    };
    ibp(measures, weights, tol, max_iter, apply, apply)
}

/// Iterative Bregman projections with `apply(w) = log(K exp(w))` and
/// `apply_t(w) = log(Kᵀ exp(w))`.
fn ibp(
    measures: &[EmpiricalMeasure],
    weights: &[f64],
    tol: f64,
    max_iter: usize,
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_t: impl Fn(&[f64]) -> Vec<f64>,
) -> Result<EmpiricalMeasure> {
    let n = measures[0].len();
    let log_a: Vec<Vec<f64>> = measures.iter().map(|m| m.weights().iter().map(|w| w.ln()).collect()).collect();
    let k = measures.len();
    let mut log_u = vec![vec![0.0; n]; k];
    let mut log_kv = vec![vec![0.0; n]; k];
    let mut log_b = vec![0.0f64; n];
    for _ in 0..max_iter {
        for t in 0..k {
            let ktu = apply_t(&log_u[t]);
            let log_v: Vec<f64> = (0..n)
                .map(|j| if log_a[t][j] == f64::NEG_INFINITY { f64::NEG_INFINITY } else { log_a[t][j] - ktu[j] })
                .collect();
            log_kv[t] = apply(&log_v);
        }
        let new_b: Vec<f64> = (0..n)
            .map(|i| (0..k).map(|t| weights[t] * (log_u[t][i] + log_kv[t][i])).sum())
            .collect();
        for t in 0..k {
            for i in 0..n {
                log_u[t][i] = new_b[i] - log_kv[t][i];
            }
        }
        let change: f64 = new_b.iter().zip(&log_b).map(|(a, b)| (a.exp() - b.exp()).abs()).sum();
        log_b = new_b;
        if change <= tol {
            return EmpiricalMeasure::from_masses(log_b.iter().map(|x| x.exp()).collect());
        }
    }
    Err(CotaError::NoConvergence(max_iter))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq_index_cost(n: usize) -> CostMatrix {
        CostMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| (i as f64 - j as f64).powi(2))).unwrap()
    }

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let m = EmpiricalMeasure::new(vec![0.1, 0.6, 0.3]).unwrap();
        let b = wasserstein_barycenter(&[m.clone(), m.clone()], &sq_index_cost(3), 0.05, &[0.5, 0.5], 1e-12, 10_000).unwrap();
        assert!(m.total_variation(b.weights()) < 1e-6);
    }

    #[test]
    fn single_input_is_returned() {
        let m = EmpiricalMeasure::new(vec![0.25, 0.25, 0.5]).unwrap();
        let b = wasserstein_barycenter(std::slice::from_ref(&m), &sq_index_cost(3), 0.02, &[1.0], 1e-12, 10_000).unwrap();
        assert!(m.total_variation(b.weights()) < 1e-9);
    }

    #[test]
    fn separable_matches_dense() {
        let d = DomainIndex::new(
            vec!["A".into(), "B".into()],
            vec![vec!["0".into(), "1".into(), "2".into()], vec!["0".into(), "1".into()]],
            1000,
        )
        .unwrap();
        let g = crate::cost::self_hamming_cost(&d);
        let ms = [
            EmpiricalMeasure::new(vec![0.3, 0.1, 0.0, 0.2, 0.25, 0.15]).unwrap(),
            EmpiricalMeasure::new(vec![0.05, 0.05, 0.5, 0.1, 0.1, 0.2]).unwrap(),
        ];
        let a = wasserstein_barycenter(&ms, &g, 0.2, &[0.3, 0.7], 1e-12, 10_000).unwrap();
        let b = hamming_barycenter(&ms, &d, 0.2, &[0.3, 0.7], 1e-12, 10_000).unwrap();
        assert!(a.total_variation(b.weights()) < 1e-10);
    }

    #[test]
    fn rejects_bad_weights() {
        let m = EmpiricalMeasure::uniform(2);
        let c = sq_index_cost(2);
        assert!(matches!(
            wasserstein_barycenter(std::slice::from_ref(&m), &c, 0.1, &[0.5], 1e-9, 10),
            Err(CotaError::InvalidWeights(_))
        ));
        assert!(matches!(wasserstein_barycenter(&[], &c, 0.1, &[], 1e-9, 10), Err(CotaError::EmptyList)));
    }
}
