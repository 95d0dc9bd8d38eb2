//! Browser bindings for a few small computations. Every export returns a
//! JSON string; errors come back as `{"error": ..., "message": ...}`.

use cota::cost::{omega_cost, CostMatrix};
use cota::datasets::{scenario, ScenarioKind};
use cota::domain::{DomainIndex, DEFAULT_ENUMERATION_CAP};
use cota::eval::{loo_on, CostKind, ErrorMetric, MethodSpec};
use cota::measures::EmpiricalMeasure;
use cota::ot::{sinkhorn, CotaWeights, SolverConfig};
use cota::poset::{InterventionPoset, OmegaMap};
use cota::scm::Intervention;
use cota::CotaError;
use ndarray::Array2;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn wrap(r: Result<Value, CotaError>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({"error": e.kind(), "message": e.to_string()}).to_string(),
    }
}

fn binary(names: &[&str]) -> Result<DomainIndex, CotaError> {
    DomainIndex::new(
        names.iter().map(|s| s.to_string()).collect(),
        names.iter().map(|_| vec!["0".into(), "1".into()]).collect(),
        DEFAULT_ENUMERATION_CAP,
    )
}

/// ω-cost of three binary variables abstracted to two, where `do(X1=0)` and
/// `do(X1=0, X2=0)` both map to `do(X1'=0)`. With `merge` false the second
/// intervention maps to the null one instead.
pub fn omega_cost_example(merge: bool) -> Result<Value, CotaError> {
    let base = binary(&["X1", "X2", "X3"])?;
    let abs = binary(&["X1'", "X2'"])?;
    let poset = InterventionPoset::new(vec![
        Intervention::null(),
        Intervention::new([("X1", "0")]),
        Intervention::new([("X1", "0"), ("X2", "0")]),
    ])?;
    let abs_poset = InterventionPoset::new(vec![Intervention::null(), Intervention::new([("X1'", "0")])])?;
    let omega = OmegaMap::new(if merge { vec![0, 1, 1] } else { vec![0, 1, 0] });
    let c = omega_cost(&base, &abs, &poset, &abs_poset, &omega)?;
    Ok(json!({
        "rows": (0..abs.size()).map(|i| abs.state_label(i)).collect::<Vec<_>>(),
        "cols": (0..base.size()).map(|j| base.state_label(j)).collect::<Vec<_>>(),
        "matrix": rows(c.matrix()),
    }))
}

/// Entropic plan between two histograms on a line, with cost `|i - j|`.
pub fn line_plan(alpha: &[f64], beta: &[f64], epsilon: f64) -> Result<Value, CotaError> {
    let a = EmpiricalMeasure::from_masses(alpha.to_vec())?;
    let b = EmpiricalMeasure::from_masses(beta.to_vec())?;
    let cost = CostMatrix::new(Array2::from_shape_fn((b.len(), a.len()), |(i, j)| (i as f64 - j as f64).abs()))?;
    let plan = sinkhorn(&cost, &a, &b, epsilon, 1e-9, 100_000)?;
    Ok(json!({
        "plan": rows(&plan),
        "transport_cost": (&plan * cost.matrix()).sum(),
    }))
}

/// Learns τ on the smoking chain with the given weights and reports the
/// map plus its leave-one-out JSD.
pub fn learn_stc(variant: &str, kappa: f64, lambda: f64, mu: f64, n: usize, seed: u64) -> Result<Value, CotaError> {
    let kind = match variant {
        "stc_p" => ScenarioKind::StcP,
        _ => ScenarioKind::StcNp,
    };
    let s = scenario(kind, seed)?;
    let pairs = s.pairs(n, n, seed)?;
    let spec = MethodSpec::cota(CostKind::Omega, CotaWeights::from_ternary(kappa, lambda, mu)?, SolverConfig::default());
    let learned = cota::eval::learn(&s, &pairs, &spec)?;
    let report = loo_on(&s, std::slice::from_ref(&pairs), &spec, &[ErrorMetric::Jsd])?;
    let (bd, ad) = (s.base_domain(), s.abs_domain());
    Ok(json!({
        "scenario": s.name,
        "rows": (0..ad.size()).map(|i| ad.state_label(i)).collect::<Vec<_>>(),
        "cols": (0..bd.size()).map(|j| bd.state_label(j)).collect::<Vec<_>>(),
        "tau": rows(learned.tau.matrix()),
        "held_out": report[0].held_out,
        "errors": report[0].errors[0],
        "loo_jsd": report[0].mean,
    }))
}

#[wasm_bindgen(js_name = omegaCost)]
pub fn omega_cost_js(merge: bool) -> String {
    wrap(omega_cost_example(merge))
}

#[wasm_bindgen(js_name = linePlan)]
pub fn line_plan_js(alpha: Vec<f64>, beta: Vec<f64>, epsilon: f64) -> String {
    wrap(line_plan(&alpha, &beta, epsilon))
}

#[wasm_bindgen(js_name = learnStc)]
pub fn learn_stc_js(variant: &str, kappa: f64, lambda: f64, mu: f64, n: usize, seed: u64) -> String {
    wrap(learn_stc(variant, kappa, lambda, mu, n, seed))
}
