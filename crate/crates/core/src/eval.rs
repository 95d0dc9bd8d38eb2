//! Abstraction error, leave-one-pair-out evaluation, grid search and the
//! OT baselines.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::{aggregate, plan_to_map, pushforward, AggregationMode, StochasticMap};
use crate::cost::CostMatrix;
use crate::datasets::Scenario;
use crate::docalc::{bregman_div, ConstraintMode, DivergenceKind, ZSource};
use crate::error::{CotaError, Result};
use crate::measures::{EmpiricalMeasure, PairSet};
use crate::ot::{
    build_chain, exact_transport_cost, hamming_barycenter, sinkhorn, solve_cota, CotaWeights, SolveReport,
    SolverConfig,
};
use crate::poset::{maximal_chains, InterventionPoset};
use crate::rng::derive_seed;

/// Entropic scale of the two barycenter computations of the Bary baseline.
pub const BARYCENTER_EPSILON: f64 = 0.05;

/// Baseline Sinkhorn runs get this many times the solver's projection budget;
/// near-degenerate Hamming instances need it at the default ε.
pub const BASELINE_ITER_FACTOR: usize = 10;

/// `𝒟` of the abstraction error.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorMetric {
    /// Jensen-Shannon divergence, base 2.
    Jsd,
    /// Exact 1-Wasserstein distance under a ground cost on the abstracted domain.
    Wass(CostMatrix),
}

impl ErrorMetric {
    pub fn name(&self) -> &'static str {
        match self {
            ErrorMetric::Jsd => "JSD",
            ErrorMetric::Wass(_) => "WASS",
        }
    }

    pub fn distance(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        match self {
            ErrorMetric::Jsd => bregman_div(DivergenceKind::Jsd, p, q),
            ErrorMetric::Wass(ground) => {
                if ground.shape() != (p.len(), p.len()) || q.len() != p.len() {
                    return Err(CotaError::DomainMismatch(format!(
                        "ground metric is {:?}, measures have {} and {} states",
                        ground.shape(),
                        p.len(),
                        q.len()
                    )));
                }
                Ok(exact_transport_cost(ground.matrix(), p, q).max(0.0))
            }
        }
    }
}

/// `e(τ) = Σ_ι q(ι) 𝒟(τ_# α_ι, β_ι)`.
pub fn abstraction_error(tau: &StochasticMap, pairs: &PairSet, metric: &ErrorMetric, q: &[f64]) -> Result<f64> {
    if q.len() != pairs.len() {
        return Err(CotaError::LengthMismatch(q.len(), pairs.len()));
    }
    if q.iter().any(|&w| w < 0.0) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CotaError::InvalidWeights("intervention weights must lie on the simplex".into()));
    }
    if tau.shape() != (pairs.abs_domain.size(), pairs.base_domain.size()) {
        return Err(CotaError::DomainMismatch(format!(
            "map is {:?}, pairs are {}x{}",
            tau.shape(),
            pairs.abs_domain.size(),
            pairs.base_domain.size()
        )));
    }
    let mut e = 0.0;
    for (p, &w) in pairs.pairs.iter().zip(q) {
        if w > 0.0 {
            let pushed = pushforward(tau, &p.base)?;
            e += w * metric.distance(pushed.weights(), p.abs.weights())?;
        }
    }
    Ok(e)
}

/// Uniform `q` over `n` interventions.
pub fn uniform_q(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cota,
    Pwise,
    Map,
    Bary,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cota" => Ok(Method::Cota),
            "pwise" => Ok(Method::Pwise),
            "map" => Ok(Method::Map),
            "bary" => Ok(Method::Bary),
            _ => Err(CotaError::InvalidConfig(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    #[default]
    Omega,
    Hamming,
}

impl CostKind {
    pub fn label(self) -> &'static str {
        match self {
            CostKind::Omega => "c_omega",
            CostKind::Hamming => "c_H",
        }
    }
}

/// Everything needed to turn a pair set into a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub method: Method,
    pub cost: CostKind,
    pub weights: CotaWeights,
    pub aggregation: AggregationMode,
    pub solver: SolverConfig,
}

impl MethodSpec {
    pub fn cota(cost: CostKind, weights: CotaWeights, solver: SolverConfig) -> Self {
        Self {
            method: Method::Cota,
            cost,
            weights,
            aggregation: AggregationMode::PlanAverage,
            solver,
        }
    }

    pub fn baseline(method: Method, cost: CostKind, solver: SolverConfig) -> Self {
        Self {
            method,
            cost,
            weights: CotaWeights {
                kappa: 1.0,
                lambda: 0.0,
                lambda_abs: 0.0,
                mu: 0.0,
            },
            aggregation: match method {
                Method::Map => AggregationMode::MapAverage,
                _ => AggregationMode::PlanAverage,
            },
            solver,
        }
    }

    /// Table label, e.g. `COTA(P)`, `Pwise`.
    pub fn label(&self) -> String {
        match self.method {
            Method::Cota => self.aggregation.label().to_string(),
            Method::Pwise => "Pwise".into(),
            Method::Map => "Map".into(),
            Method::Bary => "Bary".into(),
        }
    }

    pub fn divergence_label(&self) -> &'static str {
        match self.method {
            Method::Cota => match self.solver.divergence {
                DivergenceKind::Fro => "FRO",
                DivergenceKind::Jsd => "JSD",
            },
            _ => "-",
        }
    }
}

/// A learned map with the plans it came from.
#[derive(Debug, Clone)]
pub struct Learned {
    pub tau: StochasticMap,
    pub plans: Vec<Array2<f64>>,
    pub reports: Vec<SolveReport>,
}

pub fn cost_for(scenario: &Scenario, pairs: &PairSet, kind: CostKind) -> Result<CostMatrix> {
    match kind {
        CostKind::Omega => crate::cost::omega_cost(
            &pairs.base_domain,
            &pairs.abs_domain,
            &pairs.poset,
            &pairs.abs_poset,
            &pairs.omega,
        ),
        CostKind::Hamming => scenario.hamming_cost(),
    }
}

/// Learns `τ` from `pairs`. The ω-cost is built from the interventions in
/// `pairs`, so held-out interventions do not leak into it.
pub fn learn(scenario: &Scenario, pairs: &PairSet, spec: &MethodSpec) -> Result<Learned> {
    if pairs.is_empty() {
        return Err(CotaError::EmptyList);
    }
    let cost = cost_for(scenario, pairs, spec.cost)?;
    let cfg = &spec.solver;
    let baseline_iters = cfg.max_sinkhorn_iters * BASELINE_ITER_FACTOR;
    match spec.method {
        Method::Cota => {
            let chains = maximal_chains(&pairs.poset)?;
            let solved = chains
                .par_iter()
                .map(|chain| {
                    let problem = build_chain(pairs, chain, &scenario.base, &scenario.abs, cfg.smoothing)?;
                    solve_cota(&problem, &cost, &spec.weights, cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut plans = Vec::new();
            let mut reports = Vec::new();
            for (p, r) in solved {
                plans.extend(p);
                reports.push(r);
            }
            Ok(Learned {
                tau: aggregate(&plans, spec.aggregation)?,
                plans,
                reports,
            })
        }
        Method::Pwise | Method::Map => {
            let plans = pairs
                .pairs
                .iter()
                .map(|p| sinkhorn(&cost, &p.base, &p.abs, cfg.epsilon, cfg.marginal_tol, baseline_iters))
                .collect::<Result<Vec<_>>>()?;
            let mode = if spec.method == Method::Map {
                AggregationMode::MapAverage
            } else {
                AggregationMode::PlanAverage
            };
            Ok(Learned {
                tau: aggregate(&plans, mode)?,
                plans,
                reports: Vec::new(),
            })
        }
        Method::Bary => {
            let n = pairs.len();
            let w = uniform_q(n);
            let bases: Vec<EmpiricalMeasure> = pairs.pairs.iter().map(|p| p.base.clone()).collect();
            let abss: Vec<EmpiricalMeasure> = pairs.pairs.iter().map(|p| p.abs.clone()).collect();
            let tol = cfg.marginal_tol;
            let alpha = hamming_barycenter(&bases, &pairs.base_domain, BARYCENTER_EPSILON, &w, tol, baseline_iters)?;
            let beta = hamming_barycenter(&abss, &pairs.abs_domain, BARYCENTER_EPSILON, &w, tol, baseline_iters)?;
            let plan = sinkhorn(&cost, &alpha, &beta, cfg.epsilon, cfg.marginal_tol, baseline_iters)?;
            Ok(Learned {
                tau: plan_to_map(&plan),
                plans: vec![plan],
                reports: Vec::new(),
            })
        }
    }
}

/// Sampling and repetition settings of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LooConfig {
    pub n_base: usize,
    pub n_abs: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for LooConfig {
    fn default() -> Self {
        Self {
            n_base: 1000,
            n_abs: 1000,
            repetitions: 10,
            seed: 0,
        }
    }
}

/// One pair set per repetition, repetition `r` seeded with `derive_seed(seed, [r])`.
pub fn repetition_pairs(scenario: &Scenario, loo: &LooConfig) -> Result<Vec<PairSet>> {
    if loo.repetitions == 0 {
        return Err(CotaError::InvalidConfig("repetitions must be at least 1".into()));
    }
    (0..loo.repetitions)
        .into_par_iter()
        .map(|r| scenario.pairs(loo.n_base, loo.n_abs, derive_seed(loo.seed, &[r as u64])))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub divergence: String,
    pub cost: String,
    pub metric: String,
    /// Held-out intervention labels, in poset order.
    pub held_out: Vec<String>,
    /// `errors[r][h]`: repetition `r`, held-out intervention `h`.
    pub errors: Vec<Vec<f64>>,
    /// Mean over held-out interventions, per repetition.
    pub per_repetition: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub repetitions: usize,
    /// Half-width of the normal 95% interval on the mean.
    pub ci95: f64,
    pub spec: MethodSpec,
}

/// `(mean, sample std, 1.96·std/√n)`; std is 0 for a single value.
pub fn summarize(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std, 1.96 * std / n.sqrt())
}

/// Non-null interventions, the ones held out in turn.
pub fn held_out_indices(poset: &InterventionPoset) -> Vec<usize> {
    (0..poset.len()).filter(|&k| !poset.get(k).is_null()).collect()
}

/// Leave-one-pair-out on precomputed repetition pair sets; one report per metric.
pub fn loo_on(scenario: &Scenario, reps: &[PairSet], spec: &MethodSpec, metrics: &[ErrorMetric]) -> Result<Vec<EvalReport>> {
    let first = reps.first().ok_or(CotaError::EmptyList)?;
    if first.len() < 2 {
        return Err(CotaError::InsufficientPairs(first.len()));
    }
    let held = held_out_indices(&first.poset);
    if held.is_empty() {
        return Err(CotaError::InsufficientPairs(first.len()));
    }
    let jobs: Vec<(usize, usize)> = (0..reps.len()).flat_map(|r| held.iter().map(move |&h| (r, h))).collect();
    let scores = jobs
        .par_iter()
        .map(|&(r, h)| {
            let pairs = &reps[r];
            let keep: Vec<usize> = (0..pairs.len()).filter(|&k| k != h).collect();
            let train = pairs.restrict(&keep)?;
            let learned = learn(scenario, &train, spec)?;
            let target = &pairs.pairs[h];
            let pushed = pushforward(&learned.tau, &target.base)?;
            metrics
                .iter()
                .map(|m| m.distance(pushed.weights(), target.abs.weights()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let nh = held.len();
    Ok(metrics
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let errors: Vec<Vec<f64>> = (0..reps.len())
                .map(|r| (0..nh).map(|h| scores[r * nh + h][mi]).collect())
                .collect();
            let per_repetition: Vec<f64> = errors.iter().map(|e| e.iter().sum::<f64>() / nh as f64).collect();
            let (mean, std, ci95) = summarize(&per_repetition);
            EvalReport {
                method: spec.label(),
                divergence: spec.divergence_label().into(),
                cost: spec.cost.label().into(),
                metric: m.name().into(),
                held_out: held.iter().map(|&h| first.poset.get(h).to_string()).collect(),
                errors,
                per_repetition,
                mean,
                std,
                repetitions: reps.len(),
                ci95,
                spec: *spec,
            }
        })
        .collect())
}

pub fn loo_evaluate(scenario: &Scenario, spec: &MethodSpec, metrics: &[ErrorMetric], loo: &LooConfig) -> Result<Vec<EvalReport>> {
    if scenario.poset.len() < 2 {
        return Err(CotaError::InsufficientPairs(scenario.poset.len()));
    }
    let reps = repetition_pairs(scenario, loo)?;
    loo_on(scenario, &reps, spec, metrics)
}

/// All `(κ, λ, μ)` on the simplex lattice with spacing `step`.
pub fn ternary_grid(step: f64) -> Result<Vec<CotaWeights>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(CotaError::InvalidConfig(format!("grid step {step} outside (0, 1]")));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64) * step - 1.0).abs() > 1e-9 {
        return Err(CotaError::InvalidConfig(format!("grid step {step} does not divide 1")));
    }
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            let k = n - i - j;
            out.push(CotaWeights::from_ternary(i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub weights: CotaWeights,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub points: Vec<GridPoint>,
    pub best: usize,
}

impl GridResult {
    pub fn best_point(&self) -> &GridPoint {
        &self.points[self.best]
    }

    /// `kappa,lambda,mu,error,std`, with `lambda = λ + λ'`.
    pub fn write_surface_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["kappa", "lambda", "mu", "error", "std"])?;
        for p in &self.points {
            w.write_record([
                fmt_num(p.weights.kappa),
                fmt_num(p.weights.lambda_total()),
                fmt_num(p.weights.mu),
                fmt_num(p.mean),
                fmt_num(p.std),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Mean LOO error of `metric` at every grid point; ties go to the earliest point.
pub fn grid_search(
    scenario: &Scenario,
    reps: &[PairSet],
    template: &MethodSpec,
    grid: &[CotaWeights],
    metric: &ErrorMetric,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(CotaError::EmptyList);
    }
    let points = grid
        .par_iter()
        .map(|w| {
            let spec = MethodSpec { weights: *w, ..*template };
            let r = loo_on(scenario, reps, &spec, std::slice::from_ref(metric))?.remove(0);
            Ok(GridPoint {
                weights: *w,
                mean: r.mean,
                std: r.std,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.mean < points[best].mean {
            best = i;
        }
    }
    Ok(GridResult { points, best })
}

/// Shortest round-tripping decimal form, so reruns give identical bytes.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// Header of the results table.
pub const TABLE_HEADER: [&str; 10] = [
    "method", "mode", "divergence", "cost", "metric", "mean", "std", "ci95", "repetitions", "weights",
];

pub fn write_table_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TABLE_HEADER)?;
    for r in reports {
        let mode = match r.spec.method {
            crate::eval::Method::Cota => match r.spec.solver.mode {
                ConstraintMode::Exact => "exact",
                ConstraintMode::Approx => "approx",
            },
            _ => "-",
        };
        let z = match (r.spec.method, r.spec.solver.z_source) {
            (Method::Cota, ZSource::Analytic) => "analytic",
            _ => "",
        };
        let ws = r.spec.weights;
        w.write_record([
            r.method.clone(),
            if z.is_empty() { mode.to_string() } else { format!("{mode}/{z}") },
            r.divergence.clone(),
            r.cost.clone(),
            r.metric.clone(),
            fmt_num(r.mean),
            fmt_num(r.std),
            fmt_num(r.ci95),
            r.repetitions.to_string(),
            format!("{}/{}/{}/{}", fmt_num(ws.kappa), fmt_num(ws.lambda), fmt_num(ws.lambda_abs), fmt_num(ws.mu)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Dense plan dump with a header of base state indices.
pub fn write_plan_csv(path: &Path, plan: &Array2<f64>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let header: Vec<String> = (0..plan.ncols()).map(|j| j.to_string()).collect();
    writeln!(f, "{}", header.join(","))?;
    for row in plan.rows() {
        let r: Vec<String> = row.iter().map(|&x| fmt_num(x)).collect();
        writeln!(f, "{}", r.join(","))?;
    }
    f.flush()?;
    Ok(())
}
