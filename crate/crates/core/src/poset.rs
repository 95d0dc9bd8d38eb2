//! Intervention posets, their maximal chains, and the ω map between them.

use serde::{Deserialize, Serialize};

use crate::error::{CotaError, Result};
use crate::scm::Intervention;

/// Default cap on the number of interventions accepted by [`maximal_chains`].
pub const DEFAULT_POSET_CAP: usize = 64;

/// `ι ⪯ η` iff every assignment of `ι` also appears in `η`.
pub fn poset_leq(iota: &Intervention, eta: &Intervention) -> bool {
    iota.assignments()
        .iter()
        .all(|(k, v)| eta.get(k) == Some(v.as_str()))
}

/// A finite set of interventions ordered by containment. Always holds `∅`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterventionPoset {
    interventions: Vec<Intervention>,
}

impl InterventionPoset {
    pub fn new(interventions: Vec<Intervention>) -> Result<Self> {
        for (i, a) in interventions.iter().enumerate() {
            if interventions[..i].contains(a) {
                return Err(CotaError::InvalidModel(format!("intervention {a} listed twice")));
            }
        }
        if !interventions.iter().any(|i| i.is_null()) {
            return Err(CotaError::InvalidModel("intervention set must contain the null intervention".into()));
        }
        Ok(Self { interventions })
    }

    /// Like [`InterventionPoset::new`] but without requiring `∅`; used for
    /// training subsets in leave-one-out runs.
    pub fn subset(interventions: Vec<Intervention>) -> Result<Self> {
        for (i, a) in interventions.iter().enumerate() {
            if interventions[..i].contains(a) {
                return Err(CotaError::InvalidModel(format!("intervention {a} listed twice")));
            }
        }
        Ok(Self { interventions })
    }

    pub fn len(&self) -> usize {
        self.interventions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interventions.is_empty()
    }

    pub fn get(&self, i: usize) -> &Intervention {
        &self.interventions[i]
    }

    pub fn interventions(&self) -> &[Intervention] {
        &self.interventions
    }

    pub fn position(&self, iota: &Intervention) -> Option<usize> {
        self.interventions.iter().position(|x| x == iota)
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        poset_leq(&self.interventions[a], &self.interventions[b])
    }
}

/// All maximal chains, each listed bottom-up as indices into the poset.
///
/// A maximal chain of a finite poset is a path in the Hasse diagram from a
/// minimal element to a maximal one, so the chains are enumerated by DFS over
/// covering relations. Output order is deterministic.
pub fn maximal_chains(poset: &InterventionPoset) -> Result<Vec<Vec<usize>>> {
    maximal_chains_capped(poset, DEFAULT_POSET_CAP)
}

pub fn maximal_chains_capped(poset: &InterventionPoset, cap: usize) -> Result<Vec<Vec<usize>>> {
    let n = poset.len();
    if n > cap {
        return Err(CotaError::PosetTooLarge { size: n, cap });
    }
    let lt = |a: usize, b: usize| a != b && poset.leq(a, b);
    // covers[a] = elements b with a < b and nothing strictly between
    let covers: Vec<Vec<usize>> = (0..n)
        .map(|a| {
            (0..n)
                .filter(|&b| lt(a, b) && !(0..n).any(|c| lt(a, c) && lt(c, b)))
                .collect()
        })
        .collect();
    let minimal: Vec<usize> = (0..n).filter(|&b| !(0..n).any(|a| lt(a, b))).collect();
    let mut chains = Vec::new();
    let mut path = Vec::new();
    fn walk(a: usize, covers: &[Vec<usize>], path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        path.push(a);
        if covers[a].is_empty() {
            out.push(path.clone());
        } else {
            for &b in &covers[a] {
                walk(b, covers, path, out);
            }
        }
        path.pop();
    }
    for m in minimal {
        walk(m, &covers, &mut path, &mut chains);
    }
    Ok(chains)
}

/// ω: base intervention index → abstracted intervention index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaMap {
    mapping: Vec<Option<usize>>,
}

impl OmegaMap {
    pub fn new(mapping: Vec<usize>) -> Self {
        Self {
            mapping: mapping.into_iter().map(Some).collect(),
        }
    }

    /// A possibly partial map, for loading files that may miss entries.
    pub fn partial(mapping: Vec<Option<usize>>) -> Self {
        Self { mapping }
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect())
    }

    pub fn image(&self, base: usize) -> usize {
        self.mapping[base].expect("omega validated as total")
    }

    pub fn try_image(&self, base: usize) -> Option<usize> {
        self.mapping.get(base).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// Restriction to the base interventions in `keep` (in that order).
    pub fn restrict(&self, keep: &[usize]) -> Self {
        Self {
            mapping: keep.iter().map(|&i| self.mapping[i]).collect(),
        }
    }
}

/// Checks that ω is total, surjective and order-preserving.
pub fn validate_omega(omega: &OmegaMap, base: &InterventionPoset, abs: &InterventionPoset) -> Result<()> {
    if omega.len() < base.len() {
        return Err(CotaError::NotTotal(omega.len()));
    }
    for i in 0..base.len() {
        match omega.try_image(i) {
            Some(j) if j < abs.len() => {}
            _ => return Err(CotaError::NotTotal(i)),
        }
    }
    for j in 0..abs.len() {
        if !(0..base.len()).any(|i| omega.image(i) == j) {
            return Err(CotaError::NotSurjective(j));
        }
    }
    for a in 0..base.len() {
        for b in 0..base.len() {
            if a != b && base.leq(a, b) && !abs.leq(omega.image(a), omega.image(b)) {
                return Err(CotaError::NotOrderPreserving(a, b));
            }
        }
    }
    Ok(())
}
