//! do-calculus constraint terms between comparable plans.
//!
//! For `ι ⪯ η` the truncated factorisation relates the base marginal of
//! `P^η` to the base marginal of `P^ι` rescaled by a normalising vector `Z^η`
//! (and likewise on the abstracted side). This module builds the index sets
//! that express `Z` as plan-mass ratios, computes `Z` either from a plan or
//! from the model CPTs, and evaluates the divergence terms and their
//! gradients.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::domain::DomainIndex;
use crate::error::{CotaError, Result};
use crate::poset::poset_leq;
use crate::scm::{CausalDag, DiscreteScm, Intervention};

pub const DEFAULT_SMOOTHING: f64 = 1e-8;

// gradient-only floor for log terms at zero entries
const LOG_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    /// Squared Euclidean distance on raw vectors.
    #[default]
    Fro,
    /// Base-2 Jensen-Shannon divergence after renormalising to the simplex.
    Jsd,
}

impl DivergenceKind {
    pub fn name(self) -> &'static str {
        match self {
            DivergenceKind::Fro => "FRO",
            DivergenceKind::Jsd => "JSD",
        }
    }
}

/// How the constraint between two plans is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintMode {
    /// Separate terms on base and abstracted marginals.
    #[default]
    Exact,
    /// One element-wise term with the normaliser `min(Z_j, Z'_i)`.
    Approx,
}

/// Where normalising vectors come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZSource {
    /// Ratios of plan mass, recomputed from the current `P^ι`.
    #[default]
    Plan,
    /// Products of model CPT entries.
    Analytic,
}

pub fn bregman_div(kind: DivergenceKind, u: &[f64], v: &[f64]) -> Result<f64> {
    check_pair(u, v)?;
    Ok(div_value(kind, u, v))
}

/// Divergence value and its gradients with respect to both arguments.
pub fn bregman_div_grad(kind: DivergenceKind, u: &[f64], v: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_pair(u, v)?;
    Ok(div_value_grad(kind, u, v))
}

fn check_pair(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(CotaError::LengthMismatch(u.len(), v.len()));
    }
    if u.is_empty() {
        return Err(CotaError::EmptyVector);
    }
    Ok(())
}

// A zero-mass vector has no direction; it is read as uniform.
fn normalised(u: &[f64]) -> (Vec<f64>, f64) {
    let s: f64 = u.iter().sum();
    if s > 0.0 {
        (u.iter().map(|x| x / s).collect(), s)
    } else {
        (vec![1.0 / u.len() as f64; u.len()], 0.0)
    }
}

fn jsd_normalised(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            acc += 0.5 * a * (a / m).ln();
        }
        if b > 0.0 {
            acc += 0.5 * b * (b / m).ln();
        }
    }
    (acc / std::f64::consts::LN_2).clamp(0.0, 1.0)
}

fn div_value(kind: DivergenceKind, u: &[f64], v: &[f64]) -> f64 {
    match kind {
        DivergenceKind::Fro => u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum(),
        DivergenceKind::Jsd => {
            let (p, _) = normalised(u);
            let (q, _) = normalised(v);
            jsd_normalised(&p, &q)
        }
    }
}

fn div_value_grad(kind: DivergenceKind, u: &[f64], v: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    match kind {
        DivergenceKind::Fro => {
            let gu: Vec<f64> = u.iter().zip(v).map(|(a, b)| 2.0 * (a - b)).collect();
            let gv = gu.iter().map(|g| -g).collect();
            (div_value(kind, u, v), gu, gv)
        }
        DivergenceKind::Jsd => {
            let (p, su) = normalised(u);
            let (q, sv) = normalised(v);
            let val = jsd_normalised(&p, &q);
            let half_log2 = |a: f64, b: f64| {
                let m = 0.5 * (a + b);
                if m <= 0.0 {
                    0.0
                } else {
                    0.5 * (a.max(LOG_FLOOR) / m).ln() / std::f64::consts::LN_2
                }
            };
            let gp: Vec<f64> = p.iter().zip(&q).map(|(&a, &b)| half_log2(a, b)).collect();
            let gq: Vec<f64> = q.iter().zip(&p).map(|(&b, &a)| half_log2(b, a)).collect();
            (val, chain_normalisation(&gp, &p, su), chain_normalisation(&gq, &q, sv))
        }
    }
}

// d f(u/S) / du_l = (g_l - <g, p>) / S
fn chain_normalisation(g: &[f64], p: &[f64], s: f64) -> Vec<f64> {
    if s <= 0.0 {
        return vec![0.0; g.len()];
    }
    let dot: f64 = g.iter().zip(p).map(|(a, b)| a * b).sum();
    g.iter().map(|gl| (gl - dot) / s).collect()
}

/// Index sets for one comparable pair `ι ⪯ η`, on both sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSets {
    /// Base columns compatible with `η`.
    pub c_set: Vec<usize>,
    /// Abstracted rows compatible with `ω(η)`.
    pub c_abs_set: Vec<usize>,
    /// Base variables of `PA_B`, the parents of `η`'s targets outside them.
    pub pa_base: Vec<usize>,
    pub pa_abs: Vec<usize>,
    /// Parent configuration `ρ` of every base column, as an index into `o_sets`.
    pub base_groups: Vec<usize>,
    pub abs_groups: Vec<usize>,
    pub o_sets: Vec<Vec<usize>>,
    pub o_abs_sets: Vec<Vec<usize>>,
    pub omega_sets: Vec<Vec<usize>>,
    pub omega_abs_sets: Vec<Vec<usize>>,
    /// Assignments of `η` not already made by `ι`: (variable, value).
    pub new_base: Vec<(usize, usize)>,
    pub new_abs: Vec<(usize, usize)>,
}

struct Side {
    c: Vec<usize>,
    pa: Vec<usize>,
    groups: Vec<usize>,
    o: Vec<Vec<usize>>,
    omega: Vec<Vec<usize>>,
    new: Vec<(usize, usize)>,
}

fn build_side(domain: &DomainIndex, dag: &CausalDag, iota: &Intervention, eta: &Intervention) -> Result<Side> {
    let ri = iota.resolve(domain)?;
    let re = eta.resolve(domain)?;
    let targets: Vec<usize> = re.variables().collect();
    let mut pa: Vec<usize> = Vec::new();
    for &t in &targets {
        let name = &domain.names()[t];
        let dv = dag
            .var_index(name)
            .ok_or_else(|| CotaError::UnknownVariable(name.clone()))?;
        for &p in dag.parents(dv) {
            let pname = &dag.variables()[p].name;
            let pd = domain
                .var_index(pname)
                .ok_or_else(|| CotaError::UnknownVariable(pname.clone()))?;
            if !targets.contains(&pd) && !pa.contains(&pd) {
                pa.push(pd);
            }
        }
    }
    pa.sort_unstable();
    let n_groups: usize = pa.iter().map(|&v| domain.cardinality(v)).product();
    let groups: Vec<usize> = (0..domain.size())
        .map(|j| pa.iter().fold(0, |acc, &v| acc * domain.cardinality(v) + domain.value_at(j, v)))
        .collect();
    let c: Vec<usize> = (0..domain.size()).filter(|&j| re.compatible_state(domain, j)).collect();
    let mut o = vec![Vec::new(); n_groups];
    let mut omega = vec![Vec::new(); n_groups];
    for j in 0..domain.size() {
        o[groups[j]].push(j);
    }
    for &j in &c {
        omega[groups[j]].push(j);
    }
    let new = re
        .0
        .iter()
        .copied()
        .filter(|&(v, _)| ri.value_of(v).is_none())
        .collect();
    Ok(Side {
        c,
        pa,
        groups,
        o,
        omega,
        new,
    })
}

/// Builds the sets for `ι ⪯ η` with abstracted images `ι' = ω(ι)`, `η' = ω(η)`.
#[allow(clippy::too_many_arguments)]
pub fn compatibility_index_sets(
    base_domain: &DomainIndex,
    abs_domain: &DomainIndex,
    base_dag: &CausalDag,
    abs_dag: &CausalDag,
    iota: &Intervention,
    eta: &Intervention,
    abs_iota: &Intervention,
    abs_eta: &Intervention,
) -> Result<IndexSets> {
    if !poset_leq(iota, eta) || !poset_leq(abs_iota, abs_eta) {
        return Err(CotaError::NotComparable(0, 1));
    }
    let b = build_side(base_domain, base_dag, iota, eta)?;
    let a = build_side(abs_domain, abs_dag, abs_iota, abs_eta)?;
    Ok(IndexSets {
        c_set: b.c,
        c_abs_set: a.c,
        pa_base: b.pa,
        pa_abs: a.pa,
        base_groups: b.groups,
        abs_groups: a.groups,
        o_sets: b.o,
        o_abs_sets: a.o,
        omega_sets: b.omega,
        omega_abs_sets: a.omega,
        new_base: b.new,
        new_abs: a.new,
    })
}

/// `Z^η` per base column and `Z^{ω(η)}` per abstracted row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizingVectors {
    pub z_base: Vec<f64>,
    pub z_abs: Vec<f64>,
}

impl NormalizingVectors {
    pub fn ones(d_abs: usize, d_base: usize) -> Self {
        Self {
            z_base: vec![1.0; d_base],
            z_abs: vec![1.0; d_abs],
        }
    }
}

fn check_shape(p: &Array2<f64>, sets: &IndexSets) -> Result<()> {
    let expected = (sets.abs_groups.len(), sets.base_groups.len());
    if p.dim() != expected {
        return Err(CotaError::ShapeMismatch {
            expected,
            got: p.dim(),
        });
    }
    Ok(())
}

fn ratio_vector(marginal: &[f64], groups: &[usize], o: &[Vec<usize>], omega: &[Vec<usize>], smoothing: f64) -> Vec<f64> {
    let z_group: Vec<f64> = o
        .iter()
        .zip(omega)
        .map(|(os, ws)| {
            let den = os.iter().map(|&j| marginal[j]).sum::<f64>().max(smoothing);
            let num = ws.iter().map(|&j| marginal[j]).sum::<f64>().max(smoothing);
            num / den
        })
        .collect();
    groups.iter().map(|&g| z_group[g]).collect()
}

/// `Z` as ratios of `P^ι` mass over the `Ω` and `O` sets of each parent
/// configuration. Numerators and denominators are floored at `smoothing`.
pub fn normalizing_vectors(p_iota: &Array2<f64>, sets: &IndexSets, smoothing: f64) -> Result<NormalizingVectors> {
    check_shape(p_iota, sets)?;
    let col = p_iota.sum_axis(Axis(0)).to_vec();
    let row = p_iota.sum_axis(Axis(1)).to_vec();
    Ok(NormalizingVectors {
        z_base: ratio_vector(&col, &sets.base_groups, &sets.o_sets, &sets.omega_sets, smoothing),
        z_abs: ratio_vector(&row, &sets.abs_groups, &sets.o_abs_sets, &sets.omega_abs_sets, smoothing),
    })
}

fn cpt_product(scm: &DiscreteScm, domain: &DomainIndex, new: &[(usize, usize)], idx: usize) -> Result<f64> {
    let x = domain.assignment(idx);
    let mut z = 1.0;
    for &(v, val) in new {
        let name = &domain.names()[v];
        let sv = scm
            .dag()
            .var_index(name)
            .ok_or_else(|| CotaError::UnknownVariable(name.clone()))?;
        let row = scm.parent_row(sv, &x);
        z *= scm.cpt(sv).rows()[row][val];
    }
    Ok(z)
}

/// `Z` from the models: the product over newly intervened variables of
/// `P(B_i = b_i | PA(B_i))` evaluated at each compatible state. Entries
/// outside the compatible set are 1.
pub fn analytic_normalizing_vectors(
    base: &DiscreteScm,
    abs: &DiscreteScm,
    base_domain: &DomainIndex,
    abs_domain: &DomainIndex,
    sets: &IndexSets,
    smoothing: f64,
) -> Result<NormalizingVectors> {
    let mut z_base = vec![1.0; base_domain.size()];
    for &j in &sets.c_set {
        z_base[j] = cpt_product(base, base_domain, &sets.new_base, j)?.max(smoothing);
    }
    let mut z_abs = vec![1.0; abs_domain.size()];
    for &i in &sets.c_abs_set {
        z_abs[i] = cpt_product(abs, abs_domain, &sets.new_abs, i)?.max(smoothing);
    }
    Ok(NormalizingVectors { z_base, z_abs })
}

fn check_plans(p_iota: &Array2<f64>, p_eta: &Array2<f64>, sets: &IndexSets) -> Result<()> {
    check_shape(p_iota, sets)?;
    check_shape(p_eta, sets)
}

/// `δ = d(m_η|C, (m_ι / Z)|C)` on base marginals.
pub fn delta_base(
    p_iota: &Array2<f64>,
    p_eta: &Array2<f64>,
    z: &NormalizingVectors,
    kind: DivergenceKind,
    sets: &IndexSets,
) -> Result<f64> {
    check_plans(p_iota, p_eta, sets)?;
    let (u, v) = marginal_args(p_iota, p_eta, &z.z_base, &sets.c_set, Axis(0));
    Ok(div_value(kind, &u, &v))
}

/// `δ' = d(r_η|C', (r_ι / Z')|C')` on abstracted marginals.
pub fn delta_abs(
    p_iota: &Array2<f64>,
    p_eta: &Array2<f64>,
    z: &NormalizingVectors,
    kind: DivergenceKind,
    sets: &IndexSets,
) -> Result<f64> {
    check_plans(p_iota, p_eta, sets)?;
    let (u, v) = marginal_args(p_iota, p_eta, &z.z_abs, &sets.c_abs_set, Axis(1));
    Ok(div_value(kind, &u, &v))
}

/// Element-wise term `d(P^ι / min(Z_j, Z'_i), P^η)` over the entries with
/// `x_j ∼ η` and `x'_i ∼ ω(η)`.
pub fn delta_approx(
    p_iota: &Array2<f64>,
    p_eta: &Array2<f64>,
    z: &NormalizingVectors,
    kind: DivergenceKind,
    sets: &IndexSets,
) -> Result<f64> {
    check_plans(p_iota, p_eta, sets)?;
    let (u, v, _) = approx_args(p_iota, p_eta, z, sets);
    Ok(div_value(kind, &u, &v))
}

fn marginal_args(p_iota: &Array2<f64>, p_eta: &Array2<f64>, z: &[f64], sel: &[usize], axis: Axis) -> (Vec<f64>, Vec<f64>) {
    let m_eta = p_eta.sum_axis(axis);
    let m_iota = p_iota.sum_axis(axis);
    let u = sel.iter().map(|&k| m_eta[k]).collect();
    let v = sel.iter().map(|&k| m_iota[k] / z[k]).collect();
    (u, v)
}

/// `(row, column, φ)` of one element-wise term.
type Cell = (usize, usize, f64);

fn approx_args(
    p_iota: &Array2<f64>,
    p_eta: &Array2<f64>,
    z: &NormalizingVectors,
    sets: &IndexSets,
) -> (Vec<f64>, Vec<f64>, Vec<Cell>) {
    let n = sets.c_abs_set.len() * sets.c_set.len();
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n);
    for &i in &sets.c_abs_set {
        for &j in &sets.c_set {
            let phi = z.z_base[j].min(z.z_abs[i]);
            u.push(p_iota[(i, j)] / phi);
            v.push(p_eta[(i, j)]);
            cells.push((i, j, phi));
        }
    }
    (u, v, cells)
}

/// Constraint values of one chain link and the gradient of
/// `λ·δ + λ'·δ'` (exact) or `(λ + λ')·δ_approx` (approx) with `Z` frozen.
#[derive(Debug, Clone)]
pub struct LinkEval {
    pub delta: f64,
    pub delta_abs: f64,
    pub grad_iota: Array2<f64>,
    pub grad_eta: Array2<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn link_terms(
    mode: ConstraintMode,
    kind: DivergenceKind,
    p_iota: &Array2<f64>,
    p_eta: &Array2<f64>,
    z: &NormalizingVectors,
    sets: &IndexSets,
    lambda: f64,
    lambda_abs: f64,
) -> Result<LinkEval> {
    check_plans(p_iota, p_eta, sets)?;
    let dim = p_iota.dim();
    let mut grad_iota = Array2::zeros(dim);
    let mut grad_eta = Array2::zeros(dim);
    match mode {
        ConstraintMode::Exact => {
            let (u, v) = marginal_args(p_iota, p_eta, &z.z_base, &sets.c_set, Axis(0));
            let (delta, gu, gv) = div_value_grad(kind, &u, &v);
            for (k, &j) in sets.c_set.iter().enumerate() {
                grad_eta.column_mut(j).fill(lambda * gu[k]);
                grad_iota.column_mut(j).fill(lambda * gv[k] / z.z_base[j]);
            }
            let (u, v) = marginal_args(p_iota, p_eta, &z.z_abs, &sets.c_abs_set, Axis(1));
            let (delta_abs, gu, gv) = div_value_grad(kind, &u, &v);
            for (k, &i) in sets.c_abs_set.iter().enumerate() {
                grad_eta.row_mut(i).mapv_inplace(|g| g + lambda_abs * gu[k]);
                grad_iota.row_mut(i).mapv_inplace(|g| g + lambda_abs * gv[k] / z.z_abs[i]);
            }
            Ok(LinkEval {
                delta,
                delta_abs,
                grad_iota,
                grad_eta,
            })
        }
        ConstraintMode::Approx => {
            let (u, v, cells) = approx_args(p_iota, p_eta, z, sets);
            let (delta, gu, gv) = div_value_grad(kind, &u, &v);
            let w = lambda + lambda_abs;
            for (k, &(i, j, phi)) in cells.iter().enumerate() {
                grad_iota[(i, j)] = w * gu[k] / phi;
                grad_eta[(i, j)] = w * gv[k];
            }
            Ok(LinkEval {
                delta,
                delta_abs: 0.0,
                grad_iota,
                grad_eta,
            })
        }
    }
}

/// JSON dump of index sets and normalising vectors for debugging runs.
pub fn diagnostic_json(sets: &IndexSets, z: &NormalizingVectors) -> Result<String> {
    Ok(serde_json::to_string_pretty(&serde_json::json!({
        "index_sets": sets,
        "normalizing_vectors": z,
    }))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DEFAULT_ENUMERATION_CAP;
    use crate::scm::VariableSpec;
    use ndarray::array;

    #[test]
    fn divergence_examples() {
        assert!((bregman_div(DivergenceKind::Fro, &[0.6, 0.4], &[0.5, 0.5]).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(bregman_div(DivergenceKind::Jsd, &[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((bregman_div(DivergenceKind::Jsd, &[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(
            bregman_div(DivergenceKind::Fro, &[1.0], &[1.0, 2.0]).unwrap_err(),
            CotaError::LengthMismatch(1, 2)
        );
        assert_eq!(bregman_div(DivergenceKind::Jsd, &[], &[]).unwrap_err(), CotaError::EmptyVector);
    }

    #[test]
    fn jsd_is_scale_free() {
        let a = bregman_div(DivergenceKind::Jsd, &[0.2, 0.8], &[0.5, 0.5]).unwrap();
        let b = bregman_div(DivergenceKind::Jsd, &[2.0, 8.0], &[0.05, 0.05]).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    fn single_binary() -> (DomainIndex, CausalDag) {
        let dag = CausalDag::new(vec![VariableSpec::binary("A")], vec![vec![]]).unwrap();
        let d = dag.domain_index(DEFAULT_ENUMERATION_CAP).unwrap();
        (d, dag)
    }

    #[test]
    fn parentless_target_gives_constant_z() {
        let (d, dag) = single_binary();
        let eta = Intervention::new([("A", "1")]);
        let sets = compatibility_index_sets(&d, &d, &dag, &dag, &Intervention::null(), &eta, &Intervention::null(), &eta).unwrap();
        assert_eq!(sets.o_sets, vec![vec![0, 1]]);
        assert_eq!(sets.c_set, vec![1]);
        assert_eq!(sets.omega_sets, vec![sets.c_set.clone()]);
        let p = array![[0.25, 0.25], [0.25, 0.25]];
        let z = normalizing_vectors(&p, &sets, DEFAULT_SMOOTHING).unwrap();
        assert_eq!(z.z_base, vec![0.5, 0.5]);
        assert_eq!(z.z_abs, vec![0.5, 0.5]);
    }

    #[test]
    fn zero_denominator_is_neutral() {
        let (d, dag) = single_binary();
        let eta = Intervention::new([("A", "1")]);
        let sets = compatibility_index_sets(&d, &d, &dag, &dag, &Intervention::null(), &eta, &Intervention::null(), &eta).unwrap();
        let z = normalizing_vectors(&Array2::zeros((2, 2)), &sets, DEFAULT_SMOOTHING).unwrap();
        assert_eq!(z.z_base, vec![1.0, 1.0]);
    }

    #[test]
    fn null_eta_compatible_everywhere() {
        let (d, dag) = single_binary();
        let n = Intervention::null();
        let sets = compatibility_index_sets(&d, &d, &dag, &dag, &n, &n, &n, &n).unwrap();
        assert_eq!(sets.c_set, vec![0, 1]);
        let p = array![[0.1, 0.2], [0.3, 0.4]];
        let z = NormalizingVectors::ones(2, 2);
        assert_eq!(delta_base(&p, &p, &z, DivergenceKind::Fro, &sets).unwrap(), 0.0);
        assert_eq!(delta_abs(&p, &p, &z, DivergenceKind::Jsd, &sets).unwrap(), 0.0);
        assert_eq!(delta_approx(&p, &p, &z, DivergenceKind::Fro, &sets).unwrap(), 0.0);
    }

    #[test]
    fn incomparable_pair_rejected() {
        let (d, dag) = single_binary();
        let a0 = Intervention::new([("A", "0")]);
        let a1 = Intervention::new([("A", "1")]);
        assert!(matches!(
            compatibility_index_sets(&d, &d, &dag, &dag, &a0, &a1, &a0, &a1),
            Err(CotaError::NotComparable(..))
        ));
    }

    #[test]
    fn approx_uses_min_normaliser() {
        let (d, dag) = single_binary();
        let n = Intervention::null();
        let sets = compatibility_index_sets(&d, &d, &dag, &dag, &n, &n, &n, &n).unwrap();
        let z = NormalizingVectors {
            z_base: vec![0.5, 0.5],
            z_abs: vec![1.0, 1.0],
        };
        let p = array![[0.1, 0.2], [0.3, 0.4]];
        let doubled = p.mapv(|x| 2.0 * x);
        assert!(delta_approx(&p, &doubled, &z, DivergenceKind::Fro, &sets).unwrap() < 1e-30);
    }

    #[test]
    fn shape_checked() {
        let (d, dag) = single_binary();
        let n = Intervention::null();
        let sets = compatibility_index_sets(&d, &d, &dag, &dag, &n, &n, &n, &n).unwrap();
        assert!(matches!(
            normalizing_vectors(&Array2::zeros((3, 2)), &sets, DEFAULT_SMOOTHING),
            Err(CotaError::ShapeMismatch { .. })
        ));
    }
}
