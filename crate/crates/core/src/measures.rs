//! Empirical measures on enumerated domains and the pair set `Π_ω(I)`.
//!
//! Every measure of one model lives on the model's full enumerated domain,
//! unobserved states included, so all transport plans share the shape
//! `D' × D` whatever the intervention.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::domain::DomainIndex;
use crate::domain::Assignment;
use crate::error::{CotaError, Result};
use crate::poset::{validate_omega, InterventionPoset, OmegaMap};
use crate::rng::derive_seed;
use crate::scm::{DiscreteScm, Intervention};

const SIMPLEX_TOL: f64 = 1e-9;

/// Probability vector over a full enumerated domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(CotaError::EmptyVector);
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(CotaError::InvalidModel("measure has a negative or non-finite weight".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(CotaError::InvalidModel(format!("measure sums to {s}")));
        }
        Ok(Self { weights })
    }

    /// Normalises nonnegative masses onto the simplex.
    pub fn from_masses(mut masses: Vec<f64>) -> Result<Self> {
        let s: f64 = masses.iter().sum();
        if !(s > 0.0) {
            return Err(CotaError::ZeroMassMarginal);
        }
        masses.iter_mut().for_each(|w| *w /= s);
        Self::new(masses)
    }

    pub fn point_mass(len: usize, at: usize) -> Self {
        let mut w = vec![0.0; len];
        w[at] = 1.0;
        Self { weights: w }
    }

    pub fn uniform(len: usize) -> Self {
        Self {
            weights: vec![1.0 / len as f64; len],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_variation(&self, other: &[f64]) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Relative frequencies of `samples` over the whole of `domain`.
pub fn empirical_from_samples(samples: &[Assignment], domain: &DomainIndex) -> Result<EmpiricalMeasure> {
    if samples.is_empty() {
        return Err(CotaError::EmptyVector);
    }
    let mut counts = vec![0usize; domain.size()];
    for (k, s) in samples.iter().enumerate() {
        let i = domain.index_of(s).ok_or(CotaError::SampleOutOfDomain(k))?;
        counts[i] += 1;
    }
    let n = samples.len() as f64;
    Ok(EmpiricalMeasure {
        weights: counts.into_iter().map(|c| c as f64 / n).collect(),
    })
}

/// `π_ι`: the base measure under `ι` and the abstracted measure under `ω(ι)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionPair {
    pub intervention: Intervention,
    pub abs_intervention: Intervention,
    pub base: EmpiricalMeasure,
    pub abs: EmpiricalMeasure,
}

/// `Π_ω(I)`, one pair per base intervention, in poset order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    pub base_domain: DomainIndex,
    pub abs_domain: DomainIndex,
    pub poset: InterventionPoset,
    pub abs_poset: InterventionPoset,
    pub omega: OmegaMap,
    pub pairs: Vec<DistributionPair>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair_for(&self, iota: &Intervention) -> Option<&DistributionPair> {
        self.pairs.iter().find(|p| &p.intervention == iota)
    }

    /// The pair set restricted to the base interventions in `keep`.
    pub fn restrict(&self, keep: &[usize]) -> Result<PairSet> {
        let poset = InterventionPoset::subset(keep.iter().map(|&i| self.poset.get(i).clone()).collect())?;
        Ok(PairSet {
            base_domain: self.base_domain.clone(),
            abs_domain: self.abs_domain.clone(),
            poset,
            abs_poset: self.abs_poset.clone(),
            omega: self.omega.restrict(keep),
            pairs: keep.iter().map(|&i| self.pairs[i].clone()).collect(),
        })
    }

    /// Writes `pair_<k>_<base|abs>.csv` (state index, state label, weight)
    /// for every pair plus `manifest.json`.
    pub fn export(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = Vec::new();
        for (k, p) in self.pairs.iter().enumerate() {
            for (side, m, dom) in [("base", &p.base, &self.base_domain), ("abs", &p.abs, &self.abs_domain)] {
                let name = format!("pair_{k}_{side}.csv");
                let mut w = csv::Writer::from_path(dir.join(&name))?;
                w.write_record(["index", "state", "weight"])?;
                for (i, x) in m.weights().iter().enumerate() {
                    w.write_record([i.to_string(), dom.state_label(i), format!("{x:.17e}")])?;
                }
                w.flush()?;
            }
            manifest.push(serde_json::json!({
                "pair": k,
                "base_intervention": p.intervention,
                "abs_intervention": p.abs_intervention,
                "base_file": format!("pair_{k}_base.csv"),
                "abs_file": format!("pair_{k}_abs.csv"),
            }));
        }
        let doc = serde_json::json!({
            "base_variables": self.base_domain.names(),
            "abs_variables": self.abs_domain.names(),
            "pairs": manifest,
        });
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }
}

/// Samples every pair of `Π_ω(I)`. The seed of pair `k` and side `s`
/// (0 = base, 1 = abstracted) is `derive_seed(seed, [k, s])`.
#[allow(clippy::too_many_arguments)]
pub fn build_pairs(
    base: &DiscreteScm,
    abs: &DiscreteScm,
    poset: &InterventionPoset,
    abs_poset: &InterventionPoset,
    omega: &OmegaMap,
    n_base: usize,
    n_abs: usize,
    seed: u64,
) -> Result<PairSet> {
    validate_omega(omega, poset, abs_poset)?;
    if n_base == 0 || n_abs == 0 {
        return Err(CotaError::InvalidConfig("sample sizes must be at least 1".into()));
    }
    let base_domain = base.domain_index()?;
    let abs_domain = abs.domain_index()?;
    let pairs = (0..poset.len())
        .into_par_iter()
        .map(|k| {
            let iota = poset.get(k);
            let eta = abs_poset.get(omega.image(k));
            let xs = base.sample(iota, n_base, derive_seed(seed, &[k as u64, 0]))?;
            let ys = abs.sample(eta, n_abs, derive_seed(seed, &[k as u64, 1]))?;
            Ok(DistributionPair {
                intervention: iota.clone(),
                abs_intervention: eta.clone(),
                base: empirical_from_samples(&xs, &base_domain)?,
                abs: empirical_from_samples(&ys, &abs_domain)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairSet {
        base_domain,
        abs_domain,
        poset: poset.clone(),
        abs_poset: abs_poset.clone(),
        omega: omega.clone(),
        pairs,
    })
}

/// Pairs built from the exact interventional distributions (no sampling).
pub fn exact_pairs(
    base: &DiscreteScm,
    abs: &DiscreteScm,
    poset: &InterventionPoset,
    abs_poset: &InterventionPoset,
    omega: &OmegaMap,
) -> Result<PairSet> {
    validate_omega(omega, poset, abs_poset)?;
    let base_domain = base.domain_index()?;
    let abs_domain = abs.domain_index()?;
    let mut pairs = Vec::with_capacity(poset.len());
    for k in 0..poset.len() {
        let iota = poset.get(k);
        let eta = abs_poset.get(omega.image(k));
        pairs.push(DistributionPair {
            intervention: iota.clone(),
            abs_intervention: eta.clone(),
            base: EmpiricalMeasure::from_masses(base.exact_distribution(iota)?.probs)?,
            abs: EmpiricalMeasure::from_masses(abs.exact_distribution(eta)?.probs)?,
        });
    }
    Ok(PairSet {
        base_domain,
        abs_domain,
        poset: poset.clone(),
        abs_poset: abs_poset.clone(),
        omega: omega.clone(),
        pairs,
    })
}

/// Reads a samples CSV: header of variable names (any order, all required),
/// one row per sample, values given as domain labels.
pub fn read_samples_csv(path: &Path, domain: &DomainIndex) -> Result<Vec<Assignment>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let mut cols = Vec::with_capacity(domain.num_vars());
    for name in domain.names() {
        let c = header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CotaError::MissingColumn(name.clone()))?;
        cols.push(c);
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut x = Vec::with_capacity(cols.len());
        for (v, &c) in cols.iter().enumerate() {
            let label = rec.get(c).map(str::trim).unwrap_or("");
            let val = domain
                .labels(v)
                .iter()
                .position(|l| l == label)
                .ok_or(CotaError::SampleOutOfDomain(k))?;
            x.push(val);
        }
        out.push(x);
    }
    Ok(out)
}

pub fn write_samples_csv(path: &Path, samples: &[Assignment], domain: &DomainIndex) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(domain.names())?;
    for x in samples {
        w.write_record(x.iter().enumerate().map(|(v, &i)| domain.labels(v)[i].as_str()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DEFAULT_ENUMERATION_CAP;

    fn bin1() -> DomainIndex {
        DomainIndex::new(vec!["X".into()], vec![vec!["0".into(), "1".into()]], DEFAULT_ENUMERATION_CAP).unwrap()
    }

    #[test]
    fn counting() {
        let m = empirical_from_samples(&[vec![0], vec![0], vec![1], vec![1]], &bin1()).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn identical_samples_give_point_mass() {
        let m = empirical_from_samples(&vec![vec![1]; 9], &bin1()).unwrap();
        assert_eq!(m.weights(), &[0.0, 1.0]);
    }

    #[test]
    fn out_of_domain_sample() {
        assert_eq!(
            empirical_from_samples(&[vec![0], vec![2]], &bin1()).unwrap_err(),
            CotaError::SampleOutOfDomain(1)
        );
    }

    #[test]
    fn measure_invariants() {
        assert!(EmpiricalMeasure::new(vec![0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure::new(vec![-0.5, 1.5]).is_err());
        assert!(EmpiricalMeasure::new(vec![]).is_err());
        assert_eq!(EmpiricalMeasure::from_masses(vec![0.0, 0.0]).unwrap_err(), CotaError::ZeroMassMarginal);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let samples = vec![vec![0], vec![1], vec![1]];
        write_samples_csv(&path, &samples, &bin1()).unwrap();
        assert_eq!(read_samples_csv(&path, &bin1()).unwrap(), samples);
    }

    #[test]
    fn csv_rejects_unknown_value() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "X\n0\n5\n").unwrap();
        assert_eq!(read_samples_csv(&path, &bin1()).unwrap_err(), CotaError::SampleOutOfDomain(1));
        fs::write(&path, "Y\n0\n").unwrap();
        assert_eq!(read_samples_csv(&path, &bin1()).unwrap_err(), CotaError::MissingColumn("X".into()));
    }
}
