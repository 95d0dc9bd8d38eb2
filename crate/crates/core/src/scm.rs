//! Discrete structural causal models.
//!
//! Exogenous noise is not materialised: each variable carries a conditional
//! probability table (CPT) over its own domain, one row per parent
//! configuration. Interventions replace a variable's CPT with a point mass
//! and drop its parents.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Assignment, DomainIndex, DEFAULT_ENUMERATION_CAP};
use crate::error::{CotaError, Result};

const CPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub domain: Vec<String>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, domain: &[&str]) -> Self {
        Self {
            name: name.into(),
            domain: domain.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::new(name, &["0", "1"])
    }
}

/// Name/label resolution shared by DAGs and domain indices.
pub trait VariableLookup {
    fn lookup_var(&self, name: &str) -> Option<usize>;
    fn lookup_value(&self, var: usize, label: &str) -> Option<usize>;
}

impl VariableLookup for DomainIndex {
    fn lookup_var(&self, name: &str) -> Option<usize> {
        self.var_index(name)
    }
    fn lookup_value(&self, var: usize, label: &str) -> Option<usize> {
        self.labels(var).iter().position(|l| l == label)
    }
}

/// Checks that parent references resolve and that the graph is acyclic.
pub fn validate_dag(variables: &[VariableSpec], parents: &[Vec<String>]) -> Result<()> {
    if variables.len() != parents.len() {
        return Err(CotaError::LengthMismatch(variables.len(), parents.len()));
    }
    let idx = |name: &str| variables.iter().position(|v| v.name == name);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); variables.len()];
    for (child, ps) in parents.iter().enumerate() {
        for p in ps {
            let pi = idx(p).ok_or_else(|| CotaError::UnknownParent {
                child: variables[child].name.clone(),
                parent: p.clone(),
            })?;
            adj[pi].push(child);
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; variables.len()];
    let mut stack: Vec<usize> = Vec::new();
    fn dfs(
        u: usize,
        adj: &[Vec<usize>],
        state: &mut [u8],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        state[u] = 1;
        stack.push(u);
        for &w in &adj[u] {
            if state[w] == 1 {
                let start = stack.iter().position(|&s| s == w).unwrap();
                let mut cyc = stack[start..].to_vec();
                cyc.push(w);
                return Some(cyc);
            }
            if state[w] == 0 {
                if let Some(c) = dfs(w, adj, state, stack) {
                    return Some(c);
                }
            }
        }
        stack.pop();
        state[u] = 2;
        None
    }
    for u in 0..variables.len() {
        if state[u] == 0 {
            if let Some(cyc) = dfs(u, &adj, &mut state, &mut stack) {
                return Err(CotaError::CycleDetected(
                    cyc.into_iter().map(|i| variables[i].name.clone()).collect(),
                ));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDag {
    variables: Vec<VariableSpec>,
    parents: Vec<Vec<usize>>,
    topo: Vec<usize>,
}

impl CausalDag {
    pub fn new(variables: Vec<VariableSpec>, parents: Vec<Vec<String>>) -> Result<Self> {
        validate_dag(&variables, &parents)?;
        for v in &variables {
            if v.domain.is_empty() {
                return Err(CotaError::InvalidModel(format!("variable `{}` has an empty domain", v.name)));
            }
            for (i, a) in v.domain.iter().enumerate() {
                if v.domain[..i].contains(a) {
                    return Err(CotaError::InvalidModel(format!(
                        "variable `{}` repeats domain value `{a}`",
                        v.name
                    )));
                }
            }
            if variables.iter().filter(|w| w.name == v.name).count() > 1 {
                return Err(CotaError::InvalidModel(format!("duplicate variable `{}`", v.name)));
            }
        }
        let mut pidx = Vec::with_capacity(parents.len());
        for (c, ps) in parents.iter().enumerate() {
            let mut row: Vec<usize> = Vec::with_capacity(ps.len());
            for p in ps {
                let i = variables.iter().position(|v| &v.name == p).unwrap();
                if row.contains(&i) {
                    return Err(CotaError::InvalidModel(format!(
                        "variable `{}` lists parent `{p}` twice",
                        variables[c].name
                    )));
                }
                row.push(i);
            }
            pidx.push(row);
        }
        let topo = topological_order(&pidx);
        Ok(Self {
            variables,
            parents: pidx,
            topo,
        })
    }

    /// Builds a DAG from `(parent, child)` name pairs.
    pub fn from_edges(variables: Vec<VariableSpec>, edges: &[(&str, &str)]) -> Result<Self> {
        let mut parents: Vec<Vec<String>> = vec![Vec::new(); variables.len()];
        for (p, c) in edges {
            let ci = variables
                .iter()
                .position(|v| v.name == *c)
                .ok_or_else(|| CotaError::UnknownVariable(c.to_string()))?;
            parents[ci].push(p.to_string());
        }
        Self::new(variables, parents)
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn cardinality(&self, v: usize) -> usize {
        self.variables[v].domain.len()
    }

    pub fn domain_index(&self, cap: usize) -> Result<DomainIndex> {
        DomainIndex::new(
            self.variables.iter().map(|v| v.name.clone()).collect(),
            self.variables.iter().map(|v| v.domain.clone()).collect(),
            cap,
        )
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push((self.variables[p].name.clone(), self.variables[c].name.clone()));
            }
        }
        out
    }
}

impl VariableLookup for CausalDag {
    fn lookup_var(&self, name: &str) -> Option<usize> {
        self.var_index(name)
    }
    fn lookup_value(&self, var: usize, label: &str) -> Option<usize> {
        self.variables[var].domain.iter().position(|l| l == label)
    }
}

fn topological_order(parents: &[Vec<usize>]) -> Vec<usize> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(c);
        }
    }
    // smallest ready index first, so the order is a pure function of the graph
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&v) = ready.iter().next() {
        ready.remove(&v);
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    order
}

/// `do(A = a)`: a map from variable name to value label. Empty is the null
/// intervention.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Intervention {
    assignments: BTreeMap<String, String>,
}

impl Intervention {
    pub fn null() -> Self {
        Self::default()
    }

    pub fn new<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Self {
        Self {
            assignments: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    pub fn is_null(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn assignments(&self) -> &BTreeMap<String, String> {
        &self.assignments
    }

    pub fn get(&self, var: &str) -> Option<&str> {
        self.assignments.get(var).map(|s| s.as_str())
    }

    /// Resolves names and labels to `(variable, value)` indices.
    pub fn resolve(&self, lookup: &impl VariableLookup) -> Result<ResolvedIntervention> {
        let mut out = Vec::with_capacity(self.assignments.len());
        for (name, label) in &self.assignments {
            let v = lookup
                .lookup_var(name)
                .ok_or_else(|| CotaError::UnknownVariable(name.clone()))?;
            let x = lookup
                .lookup_value(v, label)
                .ok_or_else(|| CotaError::ValueOutOfDomain {
                    variable: name.clone(),
                    value: label.clone(),
                })?;
            out.push((v, x));
        }
        out.sort_unstable();
        Ok(ResolvedIntervention(out))
    }
}

impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.assignments.is_empty() {
            return write!(f, "do()");
        }
        let body: Vec<String> = self
            .assignments
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        write!(f, "do({})", body.join(","))
    }
}

/// Intervention in index form, sorted by variable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolvedIntervention(pub Vec<(usize, usize)>);

impl ResolvedIntervention {
    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    pub fn value_of(&self, var: usize) -> Option<usize> {
        self.0.iter().find(|&&(v, _)| v == var).map(|&(_, x)| x)
    }

    pub fn compatible(&self, x: &[usize]) -> bool {
        self.0.iter().all(|&(v, val)| x[v] == val)
    }

    /// Compatibility of the state at `idx` in `domain`.
    pub fn compatible_state(&self, domain: &DomainIndex, idx: usize) -> bool {
        self.0.iter().all(|&(v, val)| domain.value_at(idx, v) == val)
    }
}

/// `x ∼ ι`: the full assignment agrees with every value the intervention sets.
pub fn is_compatible(x: &[usize], iota: &ResolvedIntervention) -> bool {
    iota.compatible(x)
}

/// Conditional probability table: `rows[r][k]` is `P(X = k | parents = r)`
/// where `r` is the mixed-radix index of the parent values (first parent
/// most significant).
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn point_mass(card: usize, value: usize) -> Self {
        let mut row = vec![0.0; card];
        row[value] = 1.0;
        Self { rows: vec![row] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteScm {
    dag: CausalDag,
    cpts: Vec<Cpt>,
}

impl DiscreteScm {
    pub fn new(dag: CausalDag, cpts: Vec<Cpt>) -> Result<Self> {
        if cpts.len() != dag.num_vars() {
            return Err(CotaError::LengthMismatch(dag.num_vars(), cpts.len()));
        }
        for (v, cpt) in cpts.iter().enumerate() {
            let name = &dag.variables()[v].name;
            let expected_rows: usize = dag.parents(v).iter().map(|&p| dag.cardinality(p)).product();
            if cpt.rows.len() != expected_rows {
                return Err(CotaError::InvalidModel(format!(
                    "CPT of `{name}` has {} rows, expected {expected_rows}",
                    cpt.rows.len()
                )));
            }
            for (r, row) in cpt.rows.iter().enumerate() {
                if row.len() != dag.cardinality(v) {
                    return Err(CotaError::InvalidModel(format!(
                        "CPT row {r} of `{name}` has {} entries, expected {}",
                        row.len(),
                        dag.cardinality(v)
                    )));
                }
                if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                    return Err(CotaError::InvalidModel(format!(
                        "CPT row {r} of `{name}` has a negative or non-finite entry"
                    )));
                }
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > CPT_TOL {
                    return Err(CotaError::InvalidModel(format!(
                        "CPT row {r} of `{name}` sums to {s}"
                    )));
                }
            }
        }
        Ok(Self { dag, cpts })
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn cpt(&self, v: usize) -> &Cpt {
        &self.cpts[v]
    }

    pub fn domain_index(&self) -> Result<DomainIndex> {
        self.dag.domain_index(DEFAULT_ENUMERATION_CAP)
    }

    /// Row of `v`'s CPT selected by the parent values in `x`.
    pub fn parent_row(&self, v: usize, x: &[usize]) -> usize {
        let mut r = 0;
        for &p in self.dag.parents(v) {
            r = r * self.dag.cardinality(p) + x[p];
        }
        r
    }

    /// `P(X_v = x_v | PA(X_v) = x_PA)`.
    pub fn cond_prob(&self, v: usize, x: &[usize]) -> f64 {
        self.cpts[v].rows[self.parent_row(v, x)][x[v]]
    }

    /// The mutilated model `M_ι`.
    pub fn apply_do(&self, iota: &Intervention) -> Result<DiscreteScm> {
        let r = iota.resolve(&self.dag)?;
        Ok(self.apply_resolved(&r))
    }

    fn apply_resolved(&self, r: &ResolvedIntervention) -> DiscreteScm {
        let mut dag = self.dag.clone();
        let mut cpts = self.cpts.clone();
        for &(v, x) in &r.0 {
            dag.parents[v].clear();
            cpts[v] = Cpt::point_mass(dag.cardinality(v), x);
        }
        dag.topo = topological_order(&dag.parents);
        DiscreteScm { dag, cpts }
    }

    pub fn exact_distribution(&self, iota: &Intervention) -> Result<Distribution> {
        self.exact_distribution_capped(iota, DEFAULT_ENUMERATION_CAP)
    }

    /// Post-intervention joint by enumerating every state of the mutilated model.
    pub fn exact_distribution_capped(&self, iota: &Intervention, cap: usize) -> Result<Distribution> {
        let domain = self.dag.domain_index(cap)?;
        let m = self.apply_do(iota)?;
        let probs = (0..domain.size())
            .map(|i| {
                let x = domain.assignment(i);
                (0..m.dag.num_vars()).map(|v| m.cond_prob(v, &x)).product()
            })
            .collect();
        Ok(Distribution { domain, probs })
    }

    /// `n` ancestral samples from `M_ι`, driven by a ChaCha8 stream seeded
    /// with `seed`.
    pub fn sample(&self, iota: &Intervention, n: usize, seed: u64) -> Result<Vec<Assignment>> {
        let m = self.apply_do(iota)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = m.dag.num_vars();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let mut x = vec![0usize; k];
            for &v in m.dag.topological_order() {
                let row = &m.cpts[v].rows[m.parent_row(v, &x)];
                let u: f64 = rng.random();
                x[v] = inverse_cdf(row, u);
            }
            out.push(x);
        }
        Ok(out)
    }
}

fn inverse_cdf(row: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap above the last cumulative sum
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// A probability vector over an enumerated joint domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub domain: DomainIndex,
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn prob_of(&self, x: &[usize]) -> f64 {
        self.domain.index_of(x).map(|i| self.probs[i]).unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn stc() -> DiscreteScm {
        let dag = CausalDag::from_edges(
            vec![VariableSpec::binary("S"), VariableSpec::binary("T"), VariableSpec::binary("C")],
            &[("S", "T"), ("T", "C")],
        )
        .unwrap();
        DiscreteScm::new(
            dag,
            vec![
                Cpt::new(vec![vec![0.5, 0.5]]),
                Cpt::new(vec![vec![0.8, 0.2], vec![0.2, 0.8]]),
                Cpt::new(vec![vec![0.9, 0.1], vec![0.3, 0.7]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn chain_is_valid() {
        let vars = vec![VariableSpec::binary("S"), VariableSpec::binary("T"), VariableSpec::binary("C")];
        let parents = vec![vec![], vec!["S".into()], vec!["T".into()]];
        assert!(validate_dag(&vars, &parents).is_ok());
    }

    #[test]
    fn single_node_is_valid() {
        assert!(validate_dag(&[VariableSpec::binary("X")], &[vec![]]).is_ok());
    }

    #[test]
    fn two_cycle_is_rejected() {
        let vars = vec![VariableSpec::binary("A"), VariableSpec::binary("B")];
        let parents = vec![vec!["B".into()], vec!["A".into()]];
        match validate_dag(&vars, &parents) {
            Err(CotaError::CycleDetected(c)) => {
                assert_eq!(c.first(), c.last());
                assert!(c.contains(&"A".to_string()) && c.contains(&"B".to_string()));
            }
            other => panic!("expected a cycle, got {other:?}"),
        }
    }

    #[test]
    fn unknown_parent_is_rejected() {
        let vars = vec![VariableSpec::binary("A")];
        let err = validate_dag(&vars, &[vec!["Z".into()]]).unwrap_err();
        assert_eq!(
            err,
            CotaError::UnknownParent {
                child: "A".into(),
                parent: "Z".into()
            }
        );
    }

    #[test]
    fn do_makes_point_mass_and_cuts_parents() {
        let m = stc().apply_do(&Intervention::new([("T", "1")])).unwrap();
        assert!(m.dag().parents(1).is_empty());
        assert_eq!(m.cpt(1).rows(), &[vec![0.0, 1.0]]);
        assert_eq!(m.cpt(2), stc().cpt(2));
    }

    #[test]
    fn null_do_is_identity() {
        assert_eq!(stc().apply_do(&Intervention::null()).unwrap(), stc());
    }

    #[test]
    fn composite_do() {
        let m = stc().apply_do(&Intervention::new([("S", "0"), ("T", "1")])).unwrap();
        assert_eq!(m.cpt(0).rows(), &[vec![1.0, 0.0]]);
        assert_eq!(m.cpt(1).rows(), &[vec![0.0, 1.0]]);
    }

    #[test]
    fn do_rejects_bad_targets() {
        assert_eq!(
            stc().apply_do(&Intervention::new([("Q", "1")])).unwrap_err(),
            CotaError::UnknownVariable("Q".into())
        );
        assert!(matches!(
            stc().apply_do(&Intervention::new([("S", "7")])),
            Err(CotaError::ValueOutOfDomain { .. })
        ));
    }

    #[test]
    fn fully_determined_do_is_point_mass() {
        let d = stc()
            .exact_distribution(&Intervention::new([("S", "1"), ("T", "0"), ("C", "1")]))
            .unwrap();
        assert_eq!(d.prob_of(&[1, 0, 1]), 1.0);
        assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compatibility() {
        let d = stc().dag().clone();
        let t1 = Intervention::new([("T", "1")]).resolve(&d).unwrap();
        assert!(is_compatible(&[1, 1, 0], &t1));
        assert!(is_compatible(&[0, 0, 1], &Intervention::null().resolve(&d).unwrap()));
        let s1 = Intervention::new([("S", "1")]).resolve(&d).unwrap();
        assert!(!is_compatible(&[0, 1, 1], &s1));
    }

    #[test]
    fn sampling_respects_do_and_seed() {
        let m = stc();
        let a = m.sample(&Intervention::new([("S", "1")]), 100, 7).unwrap();
        assert_eq!(a.len(), 100);
        assert!(a.iter().all(|x| x[0] == 1));
        let b = m.sample(&Intervention::new([("S", "1")]), 100, 7).unwrap();
        assert_eq!(a, b);
        let c = m.sample(&Intervention::new([("S", "1")]), 100, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn topological_order_respects_edges() {
        let dag = CausalDag::from_edges(
            vec![VariableSpec::binary("C"), VariableSpec::binary("T"), VariableSpec::binary("S")],
            &[("S", "T"), ("T", "C")],
        )
        .unwrap();
        assert_eq!(dag.topological_order(), &[2, 1, 0]);
    }
}
