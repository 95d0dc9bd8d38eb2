//! Shipped scenarios: STC (two variants), LUCAS, and EBM.
//!
//! STC and LUCAS pairs are sampled from the models. EBM pairs are read off
//! data rows grouped by comma gap, so the EBM models are only fitted
//! summaries used for validation, export and analytic normalisers.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use crate::cost::{hamming_cost, omega_cost, self_hamming_cost, self_index_cost, CostMatrix, HammingAlignment};
use crate::domain::{Assignment, DomainIndex};
use crate::error::{CotaError, Result};
use crate::measures::{build_pairs, empirical_from_samples, DistributionPair, PairSet};
use crate::poset::{maximal_chains, validate_omega, InterventionPoset, OmegaMap};
use crate::rng::derive_seed;
use crate::scm::{CausalDag, Cpt, DiscreteScm, Intervention, VariableSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    StcNp,
    StcP,
    Lucas,
    Ebm,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::StcNp => "stc_np",
            ScenarioKind::StcP => "stc_p",
            ScenarioKind::Lucas => "lucas",
            ScenarioKind::Ebm => "ebm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stc_np" => Ok(ScenarioKind::StcNp),
            "stc_p" => Ok(ScenarioKind::StcP),
            "lucas" => Ok(ScenarioKind::Lucas),
            "ebm" => Ok(ScenarioKind::Ebm),
            _ => Err(CotaError::InvalidConfig(format!("unknown scenario `{s}`"))),
        }
    }
}

/// Ground metric on the abstracted domain for the Wasserstein error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundMetric {
    #[default]
    Hamming,
    BinIndex,
}

impl GroundMetric {
    pub fn cost(self, domain: &DomainIndex) -> CostMatrix {
        match self {
            GroundMetric::Hamming => self_hamming_cost(domain),
            GroundMetric::BinIndex => self_index_cost(domain),
        }
    }
}

/// Where the interventional pairs come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSource {
    /// Ancestral sampling from the two models.
    Models,
    /// Rows of observed data; pair `k` uses the rows compatible with the
    /// `k`-th intervention on each side.
    Data { base_rows: Vec<Assignment>, abs_rows: Vec<Assignment> },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub base: DiscreteScm,
    pub abs: DiscreteScm,
    pub poset: InterventionPoset,
    pub abs_poset: InterventionPoset,
    pub omega: OmegaMap,
    pub alignment: HammingAlignment,
    pub ground_metric: GroundMetric,
    pub source: PairSource,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        base: DiscreteScm,
        abs: DiscreteScm,
        poset: InterventionPoset,
        abs_poset: InterventionPoset,
        omega: OmegaMap,
        alignment: HammingAlignment,
    ) -> Result<Self> {
        let base_domain = base.domain_index()?;
        let abs_domain = abs.domain_index()?;
        for iota in poset.interventions() {
            iota.resolve(&base_domain)?;
        }
        for eta in abs_poset.interventions() {
            eta.resolve(&abs_domain)?;
        }
        validate_omega(&omega, &poset, &abs_poset)?;
        maximal_chains(&poset)?;
        Ok(Self {
            name: name.into(),
            base,
            abs,
            poset,
            abs_poset,
            omega,
            alignment,
            ground_metric: GroundMetric::Hamming,
            source: PairSource::Models,
        })
    }

    pub fn base_domain(&self) -> DomainIndex {
        self.base.domain_index().expect("validated at construction")
    }

    pub fn abs_domain(&self) -> DomainIndex {
        self.abs.domain_index().expect("validated at construction")
    }

    pub fn omega_cost(&self) -> Result<CostMatrix> {
        omega_cost(&self.base_domain(), &self.abs_domain(), &self.poset, &self.abs_poset, &self.omega)
    }

    pub fn hamming_cost(&self) -> Result<CostMatrix> {
        hamming_cost(&self.base_domain(), &self.abs_domain(), &self.alignment)
    }

    /// One pair set. Model scenarios draw `n_base`/`n_abs` samples per
    /// intervention; data scenarios bootstrap each row group to its own size.
    pub fn pairs(&self, n_base: usize, n_abs: usize, seed: u64) -> Result<PairSet> {
        match &self.source {
            PairSource::Models => build_pairs(
                &self.base,
                &self.abs,
                &self.poset,
                &self.abs_poset,
                &self.omega,
                n_base,
                n_abs,
                seed,
            ),
            PairSource::Data { base_rows, abs_rows } => self.data_pairs(base_rows, abs_rows, seed),
        }
    }

    fn data_pairs(&self, base_rows: &[Assignment], abs_rows: &[Assignment], seed: u64) -> Result<PairSet> {
        let base_domain = self.base_domain();
        let abs_domain = self.abs_domain();
        let mut pairs = Vec::with_capacity(self.poset.len());
        for k in 0..self.poset.len() {
            let iota = self.poset.get(k);
            let eta = self.abs_poset.get(self.omega.image(k));
            let ri = iota.resolve(&base_domain)?;
            let re = eta.resolve(&abs_domain)?;
            let xs: Vec<&Assignment> = base_rows.iter().filter(|x| ri.compatible(x)).collect();
            let ys: Vec<&Assignment> = abs_rows.iter().filter(|y| re.compatible(y)).collect();
            if xs.is_empty() {
                return Err(CotaError::EmptyClass(iota.to_string()));
            }
            if ys.is_empty() {
                return Err(CotaError::EmptyClass(eta.to_string()));
            }
            let xs = bootstrap(&xs, derive_seed(seed, &[k as u64, 0]));
            let ys = bootstrap(&ys, derive_seed(seed, &[k as u64, 1]));
            pairs.push(DistributionPair {
                intervention: iota.clone(),
                abs_intervention: eta.clone(),
                base: empirical_from_samples(&xs, &base_domain)?,
                abs: empirical_from_samples(&ys, &abs_domain)?,
            });
        }
        Ok(PairSet {
            base_domain,
            abs_domain,
            poset: self.poset.clone(),
            abs_poset: self.abs_poset.clone(),
            omega: self.omega.clone(),
            pairs,
        })
    }
}

fn bootstrap(rows: &[&Assignment], seed: u64) -> Vec<Assignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..rows.len()).map(|_| rows[rng.random_range(0..rows.len())].clone()).collect()
}

fn iv(pairs: &[(&str, &str)]) -> Intervention {
    Intervention::new(pairs.iter().copied())
}

/// `[1-p, p]` rows for a binary variable.
fn bern(ps: &[f64]) -> Cpt {
    Cpt::new(ps.iter().map(|&p| vec![1.0 - p, p]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StcVariant {
    Np,
    P,
}

/// Smoking → Tar → Cancer abstracted to Smoking' → Cancer'.
///
/// The abstracted CPT of C' is the base CPT of C marginalised over T, so the
/// observational and S-interventional distributions agree exactly.
pub fn build_stc(variant: StcVariant) -> Result<Scenario> {
    let base = DiscreteScm::new(
        CausalDag::from_edges(
            vec![VariableSpec::binary("S"), VariableSpec::binary("T"), VariableSpec::binary("C")],
            &[("S", "T"), ("T", "C")],
        )?,
        vec![bern(&[0.5]), bern(&[0.2, 0.8]), bern(&[0.1, 0.7])],
    )?;
    let abs = DiscreteScm::new(
        CausalDag::from_edges(vec![VariableSpec::binary("S'"), VariableSpec::binary("C'")], &[("S'", "C'")])?,
        vec![bern(&[0.5]), bern(&[0.22, 0.58])],
    )?;
    let alignment = HammingAlignment::new([("S'", vec!["S"]), ("C'", vec!["C"])]);
    match variant {
        StcVariant::Np => Scenario::new(
            "stc_np",
            base,
            abs,
            InterventionPoset::new(vec![
                Intervention::null(),
                iv(&[("S", "0")]),
                iv(&[("S", "1")]),
                iv(&[("S", "0"), ("T", "1")]),
                iv(&[("S", "1"), ("T", "1")]),
            ])?,
            InterventionPoset::new(vec![Intervention::null(), iv(&[("S'", "0")]), iv(&[("S'", "1")])])?,
            OmegaMap::new(vec![0, 1, 2, 1, 2]),
            alignment,
        ),
        StcVariant::P => Scenario::new(
            "stc_p",
            base,
            abs,
            InterventionPoset::new(vec![Intervention::null(), iv(&[("T", "0")]), iv(&[("T", "1")])])?,
            InterventionPoset::new(vec![Intervention::null(), iv(&[("C'", "0")]), iv(&[("C'", "1")])])?,
            OmegaMap::new(vec![0, 1, 2]),
            alignment,
        ),
    }
}

/// Eight-variable lung cancer model abstracted to Environment', LC', Genetics'.
pub fn build_lucas() -> Result<Scenario> {
    let names = ["AN", "SM", "GE", "PP", "LC", "FA", "CO", "AL"];
    let base = DiscreteScm::new(
        CausalDag::from_edges(
            names.iter().map(|n| VariableSpec::binary(*n)).collect(),
            &[
                ("AN", "SM"),
                ("PP", "SM"),
                ("SM", "LC"),
                ("GE", "LC"),
                ("LC", "FA"),
                ("LC", "CO"),
                ("AL", "CO"),
            ],
        )?,
        vec![
            bern(&[0.4]),
            bern(&[0.2, 0.6, 0.7, 0.9]),
            bern(&[0.5]),
            bern(&[0.35]),
            bern(&[0.1, 0.25, 0.55, 0.8]),
            bern(&[0.2, 0.7]),
            bern(&[0.1, 0.4, 0.6, 0.9]),
            bern(&[0.3]),
        ],
    )?;
    let abs = DiscreteScm::new(
        CausalDag::from_edges(
            vec![VariableSpec::binary("EN'"), VariableSpec::binary("LC'"), VariableSpec::binary("GE'")],
            &[("EN'", "LC'"), ("GE'", "LC'")],
        )?,
        vec![bern(&[0.5]), bern(&[0.1, 0.25, 0.55, 0.8]), bern(&[0.5])],
    )?;
    Scenario::new(
        "lucas",
        base,
        abs,
        InterventionPoset::new(vec![
            Intervention::null(),
            iv(&[("AN", "0")]),
            iv(&[("GE", "1")]),
            iv(&[("AL", "0")]),
            iv(&[("AN", "0"), ("PP", "0")]),
            iv(&[("AN", "0"), ("PP", "0"), ("SM", "0")]),
            iv(&[("AN", "0"), ("PP", "0"), ("SM", "1")]),
        ])?,
        InterventionPoset::new(vec![
            Intervention::null(),
            iv(&[("EN'", "0")]),
            iv(&[("GE'", "0")]),
            iv(&[("GE'", "1")]),
        ])?,
        OmegaMap::new(vec![0, 1, 3, 2, 1, 1, 1]),
        HammingAlignment::new([("EN'", vec!["SM", "AN", "PP"]), ("LC'", vec!["LC"]), ("GE'", vec!["GE"])]),
    )
}

/// Base comma-gap settings of the WMG campaign.
pub const WMG_COMMA_GAPS: [u32; 4] = [75, 110, 180, 200];
/// Comma-gap settings of the LRCS campaign.
pub const LRCS_COMMA_GAPS: [u32; 3] = [75, 100, 200];

/// ω on comma-gap settings.
pub fn ebm_omega_gap(cg: u32) -> Option<u32> {
    match cg {
        75 => Some(75),
        110 => Some(100),
        180 | 200 => Some(200),
        _ => None,
    }
}

/// Equal-width bins on `[lo, hi]`; values outside are clamped to the end bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Binning {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(CotaError::InvalidConfig(format!("bad binning [{lo}, {hi}] x {bins}")));
        }
        Ok(Self { lo, hi, bins })
    }

    /// Covers every value; a degenerate range is widened by one unit.
    pub fn covering(values: impl IntoIterator<Item = f64>, bins: usize) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Err(CotaError::EmptyList);
        }
        if hi <= lo {
            lo -= 0.5;
            hi += 0.5;
        }
        Self::new(lo, hi, bins)
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let b = ((x - self.lo) / self.width()).floor();
        if b < 0.0 {
            0
        } else {
            (b as usize).min(self.bins - 1)
        }
    }

    pub fn midpoint(&self, b: usize) -> f64 {
        self.lo + (b as f64 + 0.5) * self.width()
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.bins).map(|b| b.to_string()).collect()
    }
}

/// One LRCS measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrcsRow {
    pub comma_gap: f64,
    pub ml: f64,
}

/// One WMG measurement at two positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WmgRow {
    pub comma_gap: f64,
    pub ml1: f64,
    pub ml2: f64,
}

/// Raw EBM tables together with the binnings used to discretise them.
#[derive(Debug, Clone, PartialEq)]
pub struct EbmData {
    pub lrcs: Vec<LrcsRow>,
    pub wmg: Vec<WmgRow>,
    pub base_bins: Binning,
    pub abs_bins: Binning,
}

fn gap_value(x: f64, allowed: &[u32], table: &str, row: usize) -> Result<u32> {
    allowed
        .iter()
        .copied()
        .find(|&g| (x - g as f64).abs() < 1e-6)
        .ok_or_else(|| CotaError::SchemaMismatch(format!("{table} row {row}: comma_gap {x} is not one of {allowed:?}")))
}

fn read_table(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(CotaError::EmptyFile(path.display().to_string()));
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == *c)
                .ok_or_else(|| CotaError::SchemaMismatch(format!("{}: missing column `{c}`", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CotaError::SchemaMismatch(format!("{}: {e}", path.display())))?;
        let row = idx
            .iter()
            .map(|&i| {
                let f = rec.get(i).unwrap_or("").trim();
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| CotaError::SchemaMismatch(format!("{} row {}: bad number `{f}`", path.display(), r + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(row);
    }
    if out.is_empty() {
        return Err(CotaError::EmptyFile(path.display().to_string()));
    }
    Ok(out)
}

impl EbmData {
    /// Builds the data set with `bins` equal-width bins: the base bins cover
    /// both WMG positions, the abstracted bins cover the LRCS outcome.
    pub fn new(lrcs: Vec<LrcsRow>, wmg: Vec<WmgRow>, bins: usize) -> Result<Self> {
        if lrcs.is_empty() {
            return Err(CotaError::EmptyFile("LRCS table".into()));
        }
        if wmg.is_empty() {
            return Err(CotaError::EmptyFile("WMG table".into()));
        }
        for (r, row) in lrcs.iter().enumerate() {
            gap_value(row.comma_gap, &LRCS_COMMA_GAPS, "lrcs", r + 1)?;
        }
        for (r, row) in wmg.iter().enumerate() {
            gap_value(row.comma_gap, &WMG_COMMA_GAPS, "wmg", r + 1)?;
        }
        let base_bins = Binning::covering(wmg.iter().flat_map(|r| [r.ml1, r.ml2]), bins)?;
        let abs_bins = Binning::covering(lrcs.iter().map(|r| r.ml), bins)?;
        Ok(Self {
            lrcs,
            wmg,
            base_bins,
            abs_bins,
        })
    }

    /// Reads `comma_gap,ml` (LRCS) and `comma_gap,ml1,ml2` (WMG) tables.
    pub fn read_csv(lrcs: &Path, wmg: &Path, bins: usize) -> Result<Self> {
        let l = read_table(lrcs, &["comma_gap", "ml"])?
            .into_iter()
            .map(|v| LrcsRow { comma_gap: v[0], ml: v[1] })
            .collect();
        let w = read_table(wmg, &["comma_gap", "ml1", "ml2"])?
            .into_iter()
            .map(|v| WmgRow {
                comma_gap: v[0],
                ml1: v[1],
                ml2: v[2],
            })
            .collect();
        Self::new(l, w, bins)
    }

    pub fn write_csv(&self, lrcs: &Path, wmg: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(lrcs)?;
        w.write_record(["comma_gap", "ml"])?;
        for r in &self.lrcs {
            w.write_record([format!("{}", r.comma_gap), format!("{}", r.ml)])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(wmg)?;
        w.write_record(["comma_gap", "ml1", "ml2"])?;
        for r in &self.wmg {
            w.write_record([format!("{}", r.comma_gap), format!("{}", r.ml1), format!("{}", r.ml2)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Discretised WMG rows over `(CG, ML1, ML2)`.
    pub fn base_rows(&self) -> Vec<Assignment> {
        self.wmg
            .iter()
            .map(|r| {
                let g = WMG_COMMA_GAPS.iter().position(|&g| (r.comma_gap - g as f64).abs() < 1e-6).unwrap();
                vec![g, self.base_bins.bin_of(r.ml1), self.base_bins.bin_of(r.ml2)]
            })
            .collect()
    }

    /// Discretised LRCS rows over `(CG', ML')`.
    pub fn abs_rows(&self) -> Vec<Assignment> {
        self.lrcs
            .iter()
            .map(|r| {
                let g = LRCS_COMMA_GAPS.iter().position(|&g| (r.comma_gap - g as f64).abs() < 1e-6).unwrap();
                vec![g, self.abs_bins.bin_of(r.ml)]
            })
            .collect()
    }
}

/// Parameters of the synthetic EBM stand-in. Mass loading follows
/// `a + b·cg + c·cg²` plus Gaussian noise in both labs; WMG adds a small
/// position offset between ML1 and ML2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEbm {
    pub lrcs_per_gap: usize,
    pub wmg_per_gap: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub lrcs_noise: f64,
    pub wmg_noise: f64,
    pub position_offset: f64,
}

impl Default for SyntheticEbm {
    fn default() -> Self {
        Self {
            lrcs_per_gap: 8,
            wmg_per_gap: 60,
            a: 10.0,
            b: 0.12,
            c: -0.0002,
            lrcs_noise: 2.5,
            wmg_noise: 1.0,
            position_offset: 0.4,
        }
    }
}

impl SyntheticEbm {
    pub fn mean(&self, cg: f64) -> f64 {
        self.a + self.b * cg + self.c * cg * cg
    }

    pub fn generate(&self, bins: usize, seed: u64) -> Result<EbmData> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ln = Normal::new(0.0, self.lrcs_noise).map_err(|e| CotaError::InvalidConfig(e.to_string()))?;
        let wn = Normal::new(0.0, self.wmg_noise).map_err(|e| CotaError::InvalidConfig(e.to_string()))?;
        let mut lrcs = Vec::new();
        for &g in &LRCS_COMMA_GAPS {
            for _ in 0..self.lrcs_per_gap {
                let cg = g as f64;
                lrcs.push(LrcsRow {
                    comma_gap: cg,
                    ml: self.mean(cg) + ln.sample(&mut rng),
                });
            }
        }
        let mut wmg = Vec::new();
        for &g in &WMG_COMMA_GAPS {
            for _ in 0..self.wmg_per_gap {
                let cg = g as f64;
                let m = self.mean(cg);
                wmg.push(WmgRow {
                    comma_gap: cg,
                    ml1: m + wn.sample(&mut rng),
                    ml2: m + self.position_offset + wn.sample(&mut rng),
                });
            }
        }
        EbmData::new(lrcs, wmg, bins)
    }
}

/// Maximum-likelihood CPTs from complete discrete rows; parent
/// configurations without data get a uniform row.
pub fn fit_scm(dag: CausalDag, rows: &[Assignment]) -> Result<DiscreteScm> {
    let mut cpts = Vec::with_capacity(dag.num_vars());
    for v in 0..dag.num_vars() {
        let parents = dag.parents(v);
        let n_rows: usize = parents.iter().map(|&p| dag.cardinality(p)).product();
        let card = dag.cardinality(v);
        let mut counts = vec![vec![0.0; card]; n_rows];
        for x in rows {
            let r = parents.iter().fold(0, |acc, &p| acc * dag.cardinality(p) + x[p]);
            counts[r][x[v]] += 1.0;
        }
        let table = counts
            .into_iter()
            .map(|row| {
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.into_iter().map(|c| c / s).collect()
                } else {
                    vec![1.0 / card as f64; card]
                }
            })
            .collect();
        cpts.push(Cpt::new(table));
    }
    DiscreteScm::new(dag, cpts)
}

/// EBM scenario from the data: WMG `CG → {ML1, ML2}` abstracted to LRCS
/// `CG' → ML'`.
pub fn load_ebm(data: &EbmData) -> Result<Scenario> {
    let gaps = |g: &[u32]| g.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    let base_gaps = gaps(&WMG_COMMA_GAPS);
    let abs_gaps = gaps(&LRCS_COMMA_GAPS);
    let base_bins = data.base_bins.labels();
    let abs_bins = data.abs_bins.labels();
    let var = |name: &str, d: &[String]| VariableSpec {
        name: name.into(),
        domain: d.to_vec(),
    };
    let base_dag = CausalDag::from_edges(
        vec![var("CG", &base_gaps), var("ML1", &base_bins), var("ML2", &base_bins)],
        &[("CG", "ML1"), ("CG", "ML2")],
    )?;
    let abs_dag = CausalDag::from_edges(vec![var("CG'", &abs_gaps), var("ML'", &abs_bins)], &[("CG'", "ML'")])?;
    let base_rows = data.base_rows();
    let abs_rows = data.abs_rows();
    let base = fit_scm(base_dag, &base_rows)?;
    let abs = fit_scm(abs_dag, &abs_rows)?;
    let mut poset = vec![Intervention::null()];
    let mut omega = vec![0];
    for &g in &WMG_COMMA_GAPS {
        poset.push(iv(&[("CG", &g.to_string())]));
        let image = ebm_omega_gap(g).unwrap();
        omega.push(1 + LRCS_COMMA_GAPS.iter().position(|&x| x == image).unwrap());
    }
    let mut abs_poset = vec![Intervention::null()];
    for &g in &LRCS_COMMA_GAPS {
        abs_poset.push(iv(&[("CG'", &g.to_string())]));
    }
    let mut s = Scenario::new(
        "ebm",
        base,
        abs,
        InterventionPoset::new(poset)?,
        InterventionPoset::new(abs_poset)?,
        OmegaMap::new(omega),
        HammingAlignment::new([("CG'", vec!["CG"]), ("ML'", vec!["ML1", "ML2"])]),
    )?;
    s.ground_metric = GroundMetric::BinIndex;
    s.source = PairSource::Data { base_rows, abs_rows };
    Ok(s)
}

/// The scenario named by `kind`; EBM uses the synthetic stand-in.
pub fn scenario(kind: ScenarioKind, seed: u64) -> Result<Scenario> {
    match kind {
        ScenarioKind::StcNp => build_stc(StcVariant::Np),
        ScenarioKind::StcP => build_stc(StcVariant::P),
        ScenarioKind::Lucas => build_lucas(),
        ScenarioKind::Ebm => load_ebm(&SyntheticEbm::default().generate(5, seed)?),
    }
}

/// Base model used as its own abstraction with identity ω.
pub fn identity_scenario(s: &Scenario) -> Result<Scenario> {
    let names: Vec<String> = s.base.dag().variables().iter().map(|v| v.name.clone()).collect();
    let alignment = HammingAlignment {
        map: names.iter().map(|n| (n.clone(), vec![n.clone()])).collect::<BTreeMap<_, _>>(),
        rule: Default::default(),
    };
    Scenario::new(
        format!("{}_identity", s.name),
        s.base.clone(),
        s.base.clone(),
        s.poset.clone(),
        s.poset.clone(),
        OmegaMap::identity(s.poset.len()),
        alignment,
    )
}
