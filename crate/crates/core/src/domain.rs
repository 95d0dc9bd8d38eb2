//! Enumeration of a model's full joint domain.
//!
//! States are ordered lexicographically: variable order first, then the
//! declared order of each variable's domain. The last variable varies
//! fastest, so for three binary variables index 1 is `(0, 0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{CotaError, Result};

/// Default cap on the number of enumerated joint states.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// A full assignment: one value index per variable.
pub type Assignment = Vec<usize>;

/// Bijection between `0..size` and the full assignments of a variable list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainIndex {
    names: Vec<String>,
    labels: Vec<Vec<String>>,
    strides: Vec<usize>,
    size: usize,
}

impl DomainIndex {
    pub fn new(names: Vec<String>, labels: Vec<Vec<String>>, cap: usize) -> Result<Self> {
        if names.len() != labels.len() {
            return Err(CotaError::LengthMismatch(names.len(), labels.len()));
        }
        let mut size: u128 = 1;
        for l in &labels {
            size = size.saturating_mul(l.len() as u128);
        }
        if size > cap as u128 {
            return Err(CotaError::DomainTooLarge { size, cap });
        }
        let mut strides = vec![1usize; labels.len()];
        for v in (0..labels.len().saturating_sub(1)).rev() {
            strides[v] = strides[v + 1] * labels[v + 1].len();
        }
        Ok(Self {
            names,
            labels,
            strides,
            size: size as usize,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn labels(&self, var: usize) -> &[String] {
        &self.labels[var]
    }

    pub fn cardinality(&self, var: usize) -> usize {
        self.labels[var].len()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn index_of(&self, a: &[usize]) -> Option<usize> {
        if a.len() != self.names.len() {
            return None;
        }
        let mut idx = 0;
        for (v, &x) in a.iter().enumerate() {
            if x >= self.labels[v].len() {
                return None;
            }
            idx += x * self.strides[v];
        }
        Some(idx)
    }

    pub fn assignment(&self, idx: usize) -> Assignment {
        (0..self.names.len())
            .map(|v| (idx / self.strides[v]) % self.labels[v].len())
            .collect()
    }

    /// Value index of variable `var` in state `idx`, without allocating.
    pub fn value_at(&self, idx: usize, var: usize) -> usize {
        (idx / self.strides[var]) % self.labels[var].len()
    }

    pub fn iter(&self) -> impl Iterator<Item = Assignment> + '_ {
        (0..self.size).map(move |i| self.assignment(i))
    }

    /// Compact label such as `010`, or `S=0,T=1,C=0` when any label is wider
    /// than one character.
    pub fn state_label(&self, idx: usize) -> String {
        let a = self.assignment(idx);
        let short = self.labels.iter().all(|l| l.iter().all(|s| s.chars().count() == 1));
        if short {
            a.iter()
                .enumerate()
                .map(|(v, &x)| self.labels[v][x].as_str())
                .collect()
        } else {
            a.iter()
                .enumerate()
                .map(|(v, &x)| format!("{}={}", self.names[v], self.labels[v][x]))
                .collect::<Vec<_>>()
                .join(",")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(names: &[&str]) -> DomainIndex {
        DomainIndex::new(
            names.iter().map(|s| s.to_string()).collect(),
            names.iter().map(|_| vec!["0".into(), "1".into()]).collect(),
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap()
    }

    #[test]
    fn stc_enumeration_is_lexicographic() {
        let d = binary(&["S", "T", "C"]);
        assert_eq!(d.size(), 8);
        assert_eq!(d.assignment(0), vec![0, 0, 0]);
        assert_eq!(d.assignment(1), vec![0, 0, 1]);
        assert_eq!(d.assignment(6), vec![1, 1, 0]);
        assert_eq!(d.state_label(3), "011");
        for i in 0..8 {
            assert_eq!(d.index_of(&d.assignment(i)), Some(i));
        }
    }

    #[test]
    fn single_binary_variable() {
        let d = binary(&["X"]);
        assert_eq!(d.iter().collect::<Vec<_>>(), vec![vec![0], vec![1]]);
    }

    #[test]
    fn lucas_sized_domain() {
        let d = binary(&["AN", "SM", "GE", "PP", "LC", "FA", "CO", "AL"]);
        assert_eq!(d.size(), 256);
    }

    #[test]
    fn cap_is_enforced() {
        let names: Vec<String> = (0..21).map(|i| format!("X{i}")).collect();
        let labels = names.iter().map(|_| vec!["0".into(), "1".into()]).collect();
        let err = DomainIndex::new(names, labels, DEFAULT_ENUMERATION_CAP).unwrap_err();
        assert!(matches!(err, CotaError::DomainTooLarge { size: 2097152, .. }));
    }

    #[test]
    fn out_of_range_assignment_has_no_index() {
        let d = binary(&["A", "B"]);
        assert_eq!(d.index_of(&[0, 2]), None);
        assert_eq!(d.index_of(&[0]), None);
    }
}
