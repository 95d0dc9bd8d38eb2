//! Transport cost matrices between an abstracted domain (rows) and a base
//! domain (columns).

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::domain::DomainIndex;
use crate::error::{CotaError, Result};
use crate::poset::{InterventionPoset, OmegaMap};
use crate::scm::ResolvedIntervention;

/// Dense nonnegative cost, shape `D' × D`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    matrix: Array2<f64>,
}

impl CostMatrix {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if matrix.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(CotaError::InvalidModel("cost entries must be finite and nonnegative".into()));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.dim()
    }

    pub fn max(&self) -> f64 {
        self.matrix.iter().cloned().fold(0.0, f64::max)
    }

    /// Dense CSV with a header row of base-domain indices; no row labels.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record((0..self.matrix.ncols()).map(|j| j.to_string()))?;
        for row in self.matrix.rows() {
            w.write_record(row.iter().map(|c| format!("{c}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let ncols = rdr.headers()?.len();
        let mut data = Vec::new();
        let mut nrows = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != ncols {
                return Err(CotaError::SchemaMismatch(format!(
                    "cost row {nrows} has {} fields, header has {ncols}",
                    rec.len()
                )));
            }
            for f in rec.iter() {
                data.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| CotaError::SchemaMismatch(format!("cost row {nrows}: {e}")))?,
                );
            }
            nrows += 1;
        }
        let m = Array2::from_shape_vec((nrows, ncols), data)
            .map_err(|e| CotaError::SchemaMismatch(e.to_string()))?;
        Self::new(m)
    }
}

/// `c_ω(x, x') = |I| − #{ι ∈ I : x ∼ ι ∧ x' ∼ ω(ι)}`.
pub fn omega_cost(
    base_domain: &DomainIndex,
    abs_domain: &DomainIndex,
    poset: &InterventionPoset,
    abs_poset: &InterventionPoset,
    omega: &OmegaMap,
) -> Result<CostMatrix> {
    let n = poset.len();
    let mut base_hits: Vec<Vec<bool>> = Vec::with_capacity(n);
    let mut abs_hits: Vec<Vec<bool>> = Vec::with_capacity(n);
    for k in 0..n {
        let r = poset.get(k).resolve(base_domain)?;
        base_hits.push((0..base_domain.size()).map(|j| r.compatible_state(base_domain, j)).collect());
        let rp = abs_poset.get(omega.image(k)).resolve(abs_domain)?;
        abs_hits.push((0..abs_domain.size()).map(|i| rp.compatible_state(abs_domain, i)).collect());
    }
    let m = Array2::from_shape_fn((abs_domain.size(), base_domain.size()), |(i, j)| {
        let hits = (0..n).filter(|&k| base_hits[k][j] && abs_hits[k][i]).count();
        (n - hits) as f64
    });
    CostMatrix::new(m)
}

/// How an abstracted variable reads its comparison value off a base state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignmentRule {
    /// The first aligned base variable's value.
    #[default]
    Designated,
    /// The most frequent value label among the aligned base variables; ties
    /// go to the earliest aligned variable.
    Majority,
}

/// Abstracted variable name → aligned base variable names.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HammingAlignment {
    pub map: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub rule: AlignmentRule,
}

impl HammingAlignment {
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, Vec<&'a str>)>) -> Self {
        Self {
            map: pairs
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.into_iter().map(String::from).collect()))
                .collect(),
            rule: AlignmentRule::Designated,
        }
    }

    pub fn with_rule(mut self, rule: AlignmentRule) -> Self {
        self.rule = rule;
        self
    }
}

/// Hamming cost between tuples of unequal dimension: one unit per abstracted
/// variable whose label differs from the label read off the aligned base
/// variables.
pub fn hamming_cost(base_domain: &DomainIndex, abs_domain: &DomainIndex, alignment: &HammingAlignment) -> Result<CostMatrix> {
    let mut aligned: Vec<Vec<usize>> = Vec::with_capacity(abs_domain.num_vars());
    for name in abs_domain.names() {
        let bases = alignment
            .map
            .get(name)
            .ok_or_else(|| CotaError::InvalidAlignment(format!("abstracted variable `{name}` is not aligned")))?;
        if bases.is_empty() {
            return Err(CotaError::InvalidAlignment(format!("`{name}` aligned to no base variable")));
        }
        let mut idx = Vec::with_capacity(bases.len());
        for b in bases {
            idx.push(
                base_domain
                    .var_index(b)
                    .ok_or_else(|| CotaError::InvalidAlignment(format!("unknown base variable `{b}`")))?,
            );
        }
        aligned.push(idx);
    }
    for k in alignment.map.keys() {
        if abs_domain.var_index(k).is_none() {
            return Err(CotaError::InvalidAlignment(format!("unknown abstracted variable `{k}`")));
        }
    }
    let base_label = |j: usize, vars: &[usize]| -> String {
        match alignment.rule {
            AlignmentRule::Designated => base_domain.labels(vars[0])[base_domain.value_at(j, vars[0])].clone(),
            AlignmentRule::Majority => {
                let labels: Vec<&String> = vars
                    .iter()
                    .map(|&b| &base_domain.labels(b)[base_domain.value_at(j, b)])
                    .collect();
                let mut best = labels[0];
                let mut best_count = 0;
                for l in &labels {
                    let c = labels.iter().filter(|m| *m == l).count();
                    if c > best_count {
                        best = l;
                        best_count = c;
                    }
                }
                best.clone()
            }
        }
    };
    let base_labels: Vec<Vec<String>> = (0..base_domain.size())
        .map(|j| aligned.iter().map(|vars| base_label(j, vars)).collect())
        .collect();
    let m = Array2::from_shape_fn((abs_domain.size(), base_domain.size()), |(i, j)| {
        (0..abs_domain.num_vars())
            .filter(|&v| abs_domain.labels(v)[abs_domain.value_at(i, v)] != base_labels[j][v])
            .count() as f64
    });
    CostMatrix::new(m)
}

/// Hamming distance between states of one domain; used as the ground metric
/// for barycenters and the Wasserstein error.
pub fn self_hamming_cost(domain: &DomainIndex) -> CostMatrix {
    let m = Array2::from_shape_fn((domain.size(), domain.size()), |(i, j)| {
        (0..domain.num_vars())
            .filter(|&v| domain.value_at(i, v) != domain.value_at(j, v))
            .count() as f64
    });
    CostMatrix { matrix: m }
}

/// Ground metric for binned numeric variables: sum over variables of the
/// absolute difference in value index. Matches Hamming on binary domains.
pub fn self_index_cost(domain: &DomainIndex) -> CostMatrix {
    let m = Array2::from_shape_fn((domain.size(), domain.size()), |(i, j)| {
        (0..domain.num_vars())
            .map(|v| (domain.value_at(i, v) as f64 - domain.value_at(j, v) as f64).abs())
            .sum()
    });
    CostMatrix { matrix: m }
}

/// Compatibility vector of an intervention over a domain.
pub fn compatibility_mask(domain: &DomainIndex, r: &ResolvedIntervention) -> Vec<bool> {
    (0..domain.size()).map(|i| r.compatible_state(domain, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DEFAULT_ENUMERATION_CAP;
    use crate::scm::Intervention;

    fn binary(names: &[&str]) -> DomainIndex {
        DomainIndex::new(
            names.iter().map(|s| s.to_string()).collect(),
            names.iter().map(|_| vec!["0".into(), "1".into()]).collect(),
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap()
    }

    #[test]
    fn null_only_set_costs_nothing() {
        let b = binary(&["A", "B"]);
        let a = binary(&["A2"]);
        let p = InterventionPoset::new(vec![Intervention::null()]).unwrap();
        let c = omega_cost(&b, &a, &p, &p, &OmegaMap::identity(1)).unwrap();
        assert!(c.matrix().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hamming_stc() {
        let b = binary(&["S", "T", "C"]);
        let a = binary(&["S'", "C'"]);
        let al = HammingAlignment::new([("S'", vec!["S"]), ("C'", vec!["C"])]);
        let c = hamming_cost(&b, &a, &al).unwrap();
        // x = (1,0,0) is column 4; x' = (1,0) is row 2, (0,1) is row 1
        assert_eq!(c.matrix()[(2, 4)], 0.0);
        assert_eq!(c.matrix()[(1, 4)], 2.0);
    }

    #[test]
    fn hamming_rejects_bad_alignment() {
        let b = binary(&["S", "T", "C"]);
        let a = binary(&["S'", "C'"]);
        let missing = HammingAlignment::new([("S'", vec!["S"])]);
        assert!(matches!(hamming_cost(&b, &a, &missing), Err(CotaError::InvalidAlignment(_))));
        let unknown = HammingAlignment::new([("S'", vec!["S"]), ("C'", vec!["Q"])]);
        assert!(matches!(hamming_cost(&b, &a, &unknown), Err(CotaError::InvalidAlignment(_))));
        let empty = HammingAlignment::new([("S'", vec!["S"]), ("C'", vec![])]);
        assert!(matches!(hamming_cost(&b, &a, &empty), Err(CotaError::InvalidAlignment(_))));
    }

    #[test]
    fn majority_rule() {
        let b = binary(&["M1", "M2", "M3"]);
        let a = binary(&["M"]);
        let al = HammingAlignment::new([("M", vec!["M1", "M2", "M3"])]).with_rule(AlignmentRule::Majority);
        let c = hamming_cost(&b, &a, &al).unwrap();
        // state 011: majority label 1
        assert_eq!(c.matrix()[(1, 3)], 0.0);
        assert_eq!(c.matrix()[(0, 3)], 1.0);
        let d = hamming_cost(&b, &a, &al.clone().with_rule(AlignmentRule::Designated)).unwrap();
        assert_eq!(d.matrix()[(0, 3)], 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let c = CostMatrix::new(ndarray::array![[0.0, 1.5], [2.0, 3.0]]).unwrap();
        c.write_csv(&p).unwrap();
        assert_eq!(CostMatrix::read_csv(&p).unwrap(), c);
    }

    #[test]
    fn negative_cost_rejected() {
        assert!(CostMatrix::new(ndarray::array![[-1.0]]).is_err());
    }
}
