//! The joint objective over the plans of one maximal chain and its solver.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::entropy;
use super::sinkhorn::{marginal_violation, project_cost, project_log_kernel};
use crate::cost::CostMatrix;
use crate::docalc::{
    analytic_normalizing_vectors, compatibility_index_sets, link_terms, normalizing_vectors, ConstraintMode,
    DivergenceKind, IndexSets, NormalizingVectors, ZSource, DEFAULT_SMOOTHING,
};
use crate::error::{CotaError, Result};
use crate::measures::PairSet;
use crate::scm::DiscreteScm;

const WEIGHT_TOL: f64 = 1e-9;
// accepted objective increase per outer step, covering projection error
const DESCENT_SLACK: f64 = 1e-9;
const MAX_HALVINGS: usize = 40;
// the Lipschitz bound is loose when Z has near-zero entries, so accepted
// steps are lengthened and the halving search pulls them back
const STEP_GROWTH: f64 = 2.0;

/// Convex combination `(κ, λ, λ', μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CotaWeights {
    pub kappa: f64,
    pub lambda: f64,
    pub lambda_abs: f64,
    pub mu: f64,
}

impl CotaWeights {
    pub fn new(kappa: f64, lambda: f64, lambda_abs: f64, mu: f64) -> Result<Self> {
        let w = Self {
            kappa,
            lambda,
            lambda_abs,
            mu,
        };
        w.validate()?;
        Ok(w)
    }

    /// A ternary grid point `(κ, λ, μ)` with `λ` split evenly between the
    /// base and abstracted constraint terms.
    pub fn from_ternary(kappa: f64, lambda: f64, mu: f64) -> Result<Self> {
        Self::new(kappa, lambda / 2.0, lambda / 2.0, mu)
    }

    /// Rescales nonnegative weights onto the simplex.
    pub fn normalized(kappa: f64, lambda: f64, lambda_abs: f64, mu: f64) -> Result<Self> {
        let s = kappa + lambda + lambda_abs + mu;
        if !(s > 0.0) {
            return Err(CotaError::InvalidWeights("weights sum to zero".into()));
        }
        Self::new(kappa / s, lambda / s, lambda_abs / s, mu / s)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.kappa, self.lambda, self.lambda_abs, self.mu];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(CotaError::InvalidWeights(format!("negative or non-finite weight in {all:?}")));
        }
        let s: f64 = all.iter().sum();
        if (s - 1.0).abs() > WEIGHT_TOL {
            return Err(CotaError::InvalidWeights(format!("weights sum to {s}, not 1")));
        }
        Ok(())
    }

    pub fn lambda_total(&self) -> f64 {
        self.lambda + self.lambda_abs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_outer_iters: usize,
    pub max_sinkhorn_iters: usize,
    /// Initial step size is `step_scale / L` for a Lipschitz estimate `L`.
    pub step_scale: f64,
    pub marginal_tol: f64,
    pub objective_tol: f64,
    /// Entropic scale of the baselines, and the entropy floor of COTA
    /// relative to the non-entropic weight.
    pub epsilon: f64,
    pub mode: ConstraintMode,
    pub z_source: ZSource,
    pub divergence: DivergenceKind,
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iters: 500,
            max_sinkhorn_iters: 1000,
            step_scale: 0.5,
            marginal_tol: 1e-6,
            objective_tol: 1e-8,
            epsilon: 5e-3,
            mode: ConstraintMode::Exact,
            z_source: ZSource::Plan,
            divergence: DivergenceKind::Fro,
            smoothing: DEFAULT_SMOOTHING,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iters == 0 || self.max_sinkhorn_iters == 0 {
            return Err(CotaError::InvalidConfig("iteration limits must be at least 1".into()));
        }
        for (name, v) in [
            ("marginal_tol", self.marginal_tol),
            ("objective_tol", self.objective_tol),
            ("epsilon", self.epsilon),
            ("step_scale", self.step_scale),
            ("smoothing", self.smoothing),
        ] {
            if !(v > 0.0) {
                return Err(CotaError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Entropy weight actually used by [`solve_cota`].
    pub fn effective_mu(&self, w: &CotaWeights) -> f64 {
        w.mu.max(self.epsilon * (w.kappa + w.lambda_total()))
    }
}

/// One consecutive pair `(ι_n, ι_{n+1})` of a chain.
#[derive(Debug, Clone)]
pub struct ChainLink {
    pub sets: IndexSets,
    pub analytic_z: NormalizingVectors,
}

/// Marginals and link data for the plans of one maximal chain.
#[derive(Debug, Clone)]
pub struct ChainProblem {
    /// Pair indices of the chain, bottom-up.
    pub members: Vec<usize>,
    /// Base marginals (plan columns).
    pub alphas: Vec<Vec<f64>>,
    /// Abstracted marginals (plan rows).
    pub betas: Vec<Vec<f64>>,
    pub links: Vec<ChainLink>,
}

impl ChainProblem {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn build_chain(
    pairs: &PairSet,
    chain: &[usize],
    base: &DiscreteScm,
    abs: &DiscreteScm,
    smoothing: f64,
) -> Result<ChainProblem> {
    if chain.is_empty() {
        return Err(CotaError::EmptyList);
    }
    let mut links = Vec::with_capacity(chain.len().saturating_sub(1));
    for w in chain.windows(2) {
        let (a, b) = (&pairs.pairs[w[0]], &pairs.pairs[w[1]]);
        let sets = compatibility_index_sets(
            &pairs.base_domain,
            &pairs.abs_domain,
            base.dag(),
            abs.dag(),
            &a.intervention,
            &b.intervention,
            &a.abs_intervention,
            &b.abs_intervention,
        )
        .map_err(|e| match e {
            CotaError::NotComparable(..) => CotaError::NotComparable(w[0], w[1]),
            e => e,
        })?;
        let analytic_z = analytic_normalizing_vectors(base, abs, &pairs.base_domain, &pairs.abs_domain, &sets, smoothing)?;
        links.push(ChainLink { sets, analytic_z });
    }
    Ok(ChainProblem {
        members: chain.to_vec(),
        alphas: chain.iter().map(|&k| pairs.pairs[k].base.weights().to_vec()).collect(),
        betas: chain.iter().map(|&k| pairs.pairs[k].abs.weights().to_vec()).collect(),
        links,
    })
}

/// `β αᵀ`.
pub fn product_coupling(alpha: &[f64], beta: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((beta.len(), alpha.len()), |(i, j)| beta[i] * alpha[j])
}

/// Normalising vectors of every link, from the plans or from the models.
pub fn chain_z(plans: &[Array2<f64>], problem: &ChainProblem, source: ZSource, smoothing: f64) -> Result<Vec<NormalizingVectors>> {
    problem
        .links
        .iter()
        .enumerate()
        .map(|(n, link)| match source {
            ZSource::Plan => normalizing_vectors(&plans[n], &link.sets, smoothing),
            ZSource::Analytic => Ok(link.analytic_z.clone()),
        })
        .collect()
}

/// Unweighted sums of the objective's terms and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub total: f64,
    pub transport: f64,
    pub delta: f64,
    pub delta_abs: f64,
    pub entropy: f64,
}

fn check_plans(plans: &[Array2<f64>], problem: &ChainProblem, cost: &CostMatrix) -> Result<()> {
    if plans.len() != problem.len() {
        return Err(CotaError::LengthMismatch(plans.len(), problem.len()));
    }
    for p in plans {
        if p.dim() != cost.shape() {
            return Err(CotaError::ShapeMismatch {
                expected: cost.shape(),
                got: p.dim(),
            });
        }
    }
    Ok(())
}

fn constraint_weight(mode: ConstraintMode, w: &CotaWeights) -> (f64, f64) {
    match mode {
        ConstraintMode::Exact => (w.lambda, w.lambda_abs),
        ConstraintMode::Approx => (w.lambda_total(), 0.0),
    }
}

/// `Σ_n κ<C,P_n> - μ H(P_n)` plus `λ δ + λ' δ'` over consecutive links. In
/// approx mode the single element-wise term carries weight `λ + λ'`.
pub fn cota_objective(
    plans: &[Array2<f64>],
    problem: &ChainProblem,
    cost: &CostMatrix,
    w: &CotaWeights,
    mode: ConstraintMode,
    kind: DivergenceKind,
    zs: &[NormalizingVectors],
) -> Result<ObjectiveTerms> {
    check_plans(plans, problem, cost)?;
    let mut t = ObjectiveTerms::default();
    for p in plans {
        t.transport += (p * cost.matrix()).sum();
        t.entropy += entropy(p);
    }
    for (n, link) in problem.links.iter().enumerate() {
        let e = link_terms(mode, kind, &plans[n], &plans[n + 1], &zs[n], &link.sets, 0.0, 0.0)?;
        t.delta += e.delta;
        t.delta_abs += e.delta_abs;
    }
    let (l, la) = constraint_weight(mode, w);
    t.total = w.kappa * t.transport + l * t.delta + la * t.delta_abs - w.mu * t.entropy;
    Ok(t)
}

fn constraint_gradient(
    plans: &[Array2<f64>],
    problem: &ChainProblem,
    w: &CotaWeights,
    mode: ConstraintMode,
    kind: DivergenceKind,
    zs: &[NormalizingVectors],
) -> Result<Vec<Array2<f64>>> {
    let mut grads: Vec<Array2<f64>> = plans.iter().map(|p| Array2::zeros(p.dim())).collect();
    let (l, la) = constraint_weight(mode, w);
    if l == 0.0 && la == 0.0 {
        return Ok(grads);
    }
    for (n, link) in problem.links.iter().enumerate() {
        let e = link_terms(mode, kind, &plans[n], &plans[n + 1], &zs[n], &link.sets, l, la)?;
        grads[n] += &e.grad_iota;
        grads[n + 1] += &e.grad_eta;
    }
    Ok(grads)
}

/// Partial derivatives of [`cota_objective`] with `Z` frozen.
pub fn cota_gradient(
    plans: &[Array2<f64>],
    problem: &ChainProblem,
    cost: &CostMatrix,
    w: &CotaWeights,
    mode: ConstraintMode,
    kind: DivergenceKind,
    zs: &[NormalizingVectors],
) -> Result<Vec<Array2<f64>>> {
    check_plans(plans, problem, cost)?;
    let mut grads = constraint_gradient(plans, problem, w, mode, kind, zs)?;
    for (g, p) in grads.iter_mut().zip(plans) {
        ndarray::Zip::from(g).and(p).and(cost.matrix()).for_each(|g, &p, &c| {
            *g += w.kappa * c;
            if w.mu > 0.0 {
                *g += w.mu * p.ln();
            }
        });
    }
    Ok(grads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective: f64,
    pub terms: ObjectiveTerms,
    /// Objective after initialisation and after every accepted outer step.
    pub trace: Vec<f64>,
    pub outer_iters: usize,
    pub step_halvings: usize,
    pub max_marginal_violation: f64,
    pub converged: bool,
    /// Entropy weight used in the solve.
    pub mu_effective: f64,
}

fn lipschitz_estimate(problem: &ChainProblem, kind: DivergenceKind, mode: ConstraintMode, zs: &[NormalizingVectors]) -> f64 {
    // plan entries are bounded by the largest marginal weight
    let p_max = problem
        .alphas
        .iter()
        .chain(&problem.betas)
        .flat_map(|v| v.iter())
        .cloned()
        .fold(0.0, f64::max)
        .max(1e-12);
    let z_min = zs
        .iter()
        .flat_map(|z| z.z_base.iter().chain(&z.z_abs))
        .cloned()
        .fold(1.0, f64::min);
    let per_link = match (kind, mode) {
        (DivergenceKind::Fro, _) => 2.0 * (1.0 / (z_min * z_min) + 1.0),
        (DivergenceKind::Jsd, _) => 2.0 / (std::f64::consts::LN_2 * z_min),
    };
    // each plan sits in at most two links
    2.0 * per_link * p_max
}

/// Minimises the objective of one chain by composite mirror descent: the
/// transport and entropy terms are handled exactly, the constraint term is
/// linearised, and each plan is projected back onto its transport polytope
/// by Sinkhorn scaling. The entropy weight is floored at
/// `cfg.epsilon · (κ + λ + λ')`.
///
/// In exact mode the constraint terms depend on plan marginals only, so
/// their gradients are constant along rows or columns and vanish under the
/// projection; a single step with unbounded step size is then exact.
pub fn solve_cota(
    problem: &ChainProblem,
    cost: &CostMatrix,
    w: &CotaWeights,
    cfg: &SolverConfig,
) -> Result<(Vec<Array2<f64>>, SolveReport)> {
    w.validate()?;
    cfg.validate()?;
    if problem.is_empty() {
        return Err(CotaError::EmptyList);
    }
    let mu = cfg.effective_mu(w);
    let w_eff = CotaWeights { mu, ..*w };
    let kappa_c = cost.matrix().mapv(|c| w.kappa * c);
    let mut plans: Vec<Array2<f64>> = problem
        .alphas
        .iter()
        .zip(&problem.betas)
        .map(|(a, b)| product_coupling(a, b))
        .collect();
    check_plans(&plans, problem, cost)?;
    let zs = chain_z(&plans, problem, cfg.z_source, cfg.smoothing)?;
    let objective = |plans: &[Array2<f64>]| cota_objective(plans, problem, cost, &w_eff, cfg.mode, cfg.divergence, &zs);
    let mut terms = objective(&plans)?;
    let mut trace = vec![terms.total];
    let mut converged;
    let mut outer_iters = 0;
    let mut halvings = 0;

    let project_all = |logs: Vec<Array2<f64>>| -> (Vec<Array2<f64>>, bool) {
        let mut ok = true;
        let out = logs
            .iter()
            .enumerate()
            .map(|(n, lk)| {
                let p = project_log_kernel(lk, &problem.alphas[n], &problem.betas[n], cfg.marginal_tol, cfg.max_sinkhorn_iters);
                ok &= p.converged;
                p.plan
            })
            .collect();
        (out, ok)
    };

    if cfg.mode == ConstraintMode::Exact || w.lambda_total() == 0.0 {
        let mut ok = true;
        plans = (0..problem.len())
            .map(|n| {
                let p = project_cost(&kappa_c, mu, &problem.alphas[n], &problem.betas[n], cfg.marginal_tol, cfg.max_sinkhorn_iters);
                ok &= p.converged;
                p.plan
            })
            .collect();
        terms = objective(&plans)?;
        trace.push(terms.total);
        outer_iters = 1;
        converged = ok;
    } else {
        let mut step = cfg.step_scale / (w.lambda_total() * lipschitz_estimate(problem, cfg.divergence, cfg.mode, &zs));
        converged = false;
        let mut projections_ok = true;
        while outer_iters < cfg.max_outer_iters {
            let grads = constraint_gradient(&plans, problem, &w_eff, cfg.mode, cfg.divergence, &zs)?;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let logs: Vec<Array2<f64>> = plans
                    .iter()
                    .zip(&grads)
                    .map(|(p, g)| {
                        let mut lk = Array2::zeros(p.dim());
                        ndarray::Zip::from(&mut lk).and(p).and(g).and(&kappa_c).for_each(|l, &p, &g, &kc| {
                            *l = if p > 0.0 {
                                (p.ln() - step * (kc + g)) / (1.0 + step * mu)
                            } else {
                                f64::NEG_INFINITY
                            };
                        });
                        lk
                    })
                    .collect();
                let (cand, ok) = project_all(logs);
                let t = objective(&cand)?;
                if t.total <= terms.total + DESCENT_SLACK {
                    accepted = Some((cand, t, ok));
                    break;
                }
                step *= 0.5;
                halvings += 1;
            }
            let Some((cand, t, ok)) = accepted else {
                // no descent at any step size: the iterate is stationary
                converged = projections_ok;
                break;
            };
            outer_iters += 1;
            step *= STEP_GROWTH;
            projections_ok = ok;
            let decrease = terms.total - t.total;
            plans = cand;
            terms = t;
            trace.push(terms.total);
            if decrease < cfg.objective_tol {
                converged = projections_ok;
                break;
            }
        }
    }
    let max_marginal_violation = plans
        .iter()
        .enumerate()
        .map(|(n, p)| marginal_violation(p, &problem.alphas[n], &problem.betas[n]))
        .fold(0.0, f64::max);
    let report = SolveReport {
        objective: terms.total,
        terms,
        trace,
        outer_iters,
        step_halvings: halvings,
        max_marginal_violation,
        converged: converged && max_marginal_violation <= cfg.marginal_tol,
        mu_effective: mu,
    };
    log::debug!(
        "chain of {}: objective {:.6e}, {} outer iterations, {} halvings, violation {:.1e}, converged {}",
        problem.len(),
        report.objective,
        report.outer_iters,
        report.step_halvings,
        report.max_marginal_violation,
        report.converged
    );
    if !report.converged {
        log::warn!("chain of {} did not converge in {} outer iterations", problem.len(), report.outer_iters);
    }
    Ok((plans, report))
}
