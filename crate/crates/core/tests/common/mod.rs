#![allow(dead_code)]

use cota::cost::CostMatrix;
use cota::datasets::{scenario, Scenario, ScenarioKind};
use cota::domain::{DomainIndex, DEFAULT_ENUMERATION_CAP};
use cota::measures::{exact_pairs, PairSet};
use cota::ot::{build_chain, project_log_kernel, ChainProblem};
use cota::poset::{maximal_chains, InterventionPoset, OmegaMap};
use cota::scm::Intervention;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn binary_domain(names: &[&str]) -> DomainIndex {
    DomainIndex::new(
        names.iter().map(|s| s.to_string()).collect(),
        names.iter().map(|_| vec!["0".to_string(), "1".to_string()]).collect(),
        DEFAULT_ENUMERATION_CAP,
    )
    .unwrap()
}

/// Three binary base variables, two abstracted; I = {∅, X1=0, (X1=0, X2=0)}
/// with the last two both sent to X1'=0.
pub fn three_to_two_cost() -> CostMatrix {
    let base = binary_domain(&["X1", "X2", "X3"]);
    let abs = binary_domain(&["X1'", "X2'"]);
    let poset = InterventionPoset::new(vec![
        Intervention::null(),
        Intervention::new([("X1", "0")]),
        Intervention::new([("X1", "0"), ("X2", "0")]),
    ])
    .unwrap();
    let abs_poset = InterventionPoset::new(vec![Intervention::null(), Intervention::new([("X1'", "0")])]).unwrap();
    cota::cost::omega_cost(&base, &abs, &poset, &abs_poset, &OmegaMap::new(vec![0, 1, 1])).unwrap()
}

pub fn shipped() -> Vec<Scenario> {
    [ScenarioKind::StcNp, ScenarioKind::StcP, ScenarioKind::Lucas, ScenarioKind::Ebm]
        .into_iter()
        .map(|k| scenario(k, 0).unwrap())
        .collect()
}

pub fn population_pairs(s: &Scenario) -> PairSet {
    exact_pairs(&s.base, &s.abs, &s.poset, &s.abs_poset, &s.omega).unwrap()
}

pub fn chain_problems(s: &Scenario, pairs: &PairSet) -> Vec<ChainProblem> {
    maximal_chains(&pairs.poset)
        .unwrap()
        .iter()
        .map(|c| build_chain(pairs, c, &s.base, &s.abs, 1e-8).unwrap())
        .collect()
}

/// A random plan with the given marginals (columns `alpha`, rows `beta`).
pub fn random_plan(alpha: &[f64], beta: &[f64], rng: &mut ChaCha8Rng) -> Array2<f64> {
    let lk = Array2::from_shape_fn((beta.len(), alpha.len()), |_| rng.random_range(-3.0..3.0));
    let p = project_log_kernel(&lk, alpha, beta, 1e-12, 10_000);
    assert!(p.converged);
    p.plan
}

pub fn random_plans(problem: &ChainProblem, rng: &mut ChaCha8Rng) -> Vec<Array2<f64>> {
    problem.alphas.iter().zip(&problem.betas).map(|(a, b)| random_plan(a, b, rng)).collect()
}

/// Central differences of `f` on every positive plan entry, with a step
/// relative to the entry.
pub fn fd_gradient(f: impl Fn(&[Array2<f64>]) -> f64, plans: &[Array2<f64>]) -> Vec<Array2<f64>> {
    let mut work = plans.to_vec();
    let mut out: Vec<Array2<f64>> = plans.iter().map(|p| Array2::zeros(p.dim())).collect();
    for n in 0..plans.len() {
        for idx in ndarray::indices(plans[n].dim()) {
            let x = plans[n][idx];
            if x <= 0.0 {
                continue;
            }
            let h = 1e-4 * x;
            work[n][idx] = x + h;
            let up = f(&work);
            work[n][idx] = x - h;
            let down = f(&work);
            work[n][idx] = x;
            out[n][idx] = (up - down) / (2.0 * h);
        }
    }
    out
}

/// `‖a − b‖ / ‖b‖` over entries where `mask` is positive.
pub fn relative_error(a: &[Array2<f64>], b: &[Array2<f64>], mask: &[Array2<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((x, y), m) in a.iter().zip(b).zip(mask) {
        for ((p, q), w) in x.iter().zip(y).zip(m) {
            if *w > 0.0 {
                num += (p - q).powi(2);
                den += q.powi(2);
            }
        }
    }
    num.sqrt() / den.sqrt().max(1e-12)
}

pub fn l1(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).mapv(f64::abs).sum()
}
