//! Experiment configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::abstraction::AggregationMode;
use crate::datasets::{load_ebm, scenario, EbmData, Scenario, ScenarioKind, SyntheticEbm};
use crate::error::{CotaError, Result};
use crate::eval::{ternary_grid, CostKind, ErrorMetric, LooConfig, Method, MethodSpec};
use crate::model_file::load_scenario;
use crate::ot::{CotaWeights, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Jsd,
    Wass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Shipped scenario, used unless both model files are given.
    pub scenario: ScenarioKind,
    pub base_model: Option<PathBuf>,
    pub abs_model: Option<PathBuf>,
    pub lrcs_csv: Option<PathBuf>,
    pub wmg_csv: Option<PathBuf>,
    /// Use the synthetic EBM stand-in even when CSVs are configured.
    pub synthetic: bool,
    pub bins: usize,
    pub n_base: usize,
    pub n_abs: usize,
    pub repetitions: usize,
    pub seed: u64,
    /// `(κ, λ, λ', μ)` for a single COTA run.
    pub weights: [f64; 4],
    /// When set, COTA runs over the ternary grid with this step.
    pub grid_step: Option<f64>,
    pub solver: SolverConfig,
    pub metrics: Vec<MetricName>,
    pub aggregation: AggregationMode,
    pub costs: Vec<CostKind>,
    pub methods: Vec<Method>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::StcNp,
            base_model: None,
            abs_model: None,
            lrcs_csv: None,
            wmg_csv: None,
            synthetic: false,
            bins: 5,
            n_base: 1000,
            n_abs: 1000,
            repetitions: 10,
            seed: 0,
            weights: [0.2, 0.25, 0.25, 0.3],
            grid_step: None,
            solver: SolverConfig::default(),
            metrics: vec![MetricName::Jsd, MetricName::Wass],
            aggregation: AggregationMode::PlanAverage,
            costs: vec![CostKind::Omega, CostKind::Hamming],
            methods: vec![Method::Cota, Method::Pwise, Method::Map, Method::Bary],
            out: PathBuf::from("out"),
            jobs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            CotaError::InvalidConfig(format!("{}:{}: {e}", path.display(), e.line()))
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.cota_weights()?;
        if self.repetitions == 0 || self.n_base == 0 || self.n_abs == 0 {
            return Err(CotaError::InvalidConfig("sample sizes and repetitions must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(CotaError::InvalidConfig("bins must be at least 1".into()));
        }
        if let Some(step) = self.grid_step {
            ternary_grid(step)?;
        }
        if self.base_model.is_some() != self.abs_model.is_some() {
            return Err(CotaError::InvalidConfig("base_model and abs_model go together".into()));
        }
        if self.lrcs_csv.is_some() != self.wmg_csv.is_some() {
            return Err(CotaError::InvalidConfig("lrcs_csv and wmg_csv go together".into()));
        }
        for p in [&self.base_model, &self.abs_model, &self.lrcs_csv, &self.wmg_csv].into_iter().flatten() {
            let needed = !self.synthetic || self.base_model.as_ref() == Some(p) || self.abs_model.as_ref() == Some(p);
            if needed && !p.exists() {
                return Err(CotaError::Io(format!("{}: no such file", p.display())));
            }
        }
        if self.metrics.is_empty() || self.costs.is_empty() || self.methods.is_empty() {
            return Err(CotaError::InvalidConfig("metrics, costs and methods must be non-empty".into()));
        }
        Ok(())
    }

    pub fn cota_weights(&self) -> Result<CotaWeights> {
        let [k, l, la, m] = self.weights;
        CotaWeights::new(k, l, la, m)
    }

    pub fn loo(&self) -> LooConfig {
        LooConfig {
            n_base: self.n_base,
            n_abs: self.n_abs,
            repetitions: self.repetitions,
            seed: self.seed,
        }
    }

    /// EBM tables: the configured CSVs, or the synthetic stand-in.
    pub fn ebm_data(&self) -> Result<EbmData> {
        match (&self.lrcs_csv, &self.wmg_csv, self.synthetic) {
            (Some(l), Some(w), false) => EbmData::read_csv(l, w, self.bins),
            _ => SyntheticEbm::default().generate(self.bins, self.seed),
        }
    }

    pub fn build_scenario(&self) -> Result<Scenario> {
        if let (Some(b), Some(a)) = (&self.base_model, &self.abs_model) {
            return load_scenario(b, a).map_err(|e| e.error);
        }
        match self.scenario {
            ScenarioKind::Ebm => load_ebm(&self.ebm_data()?),
            kind => scenario(kind, self.seed),
        }
    }

    pub fn error_metrics(&self, s: &Scenario) -> Result<Vec<ErrorMetric>> {
        let abs_domain = s.abs_domain();
        Ok(self
            .metrics
            .iter()
            .map(|m| match m {
                MetricName::Jsd => ErrorMetric::Jsd,
                MetricName::Wass => ErrorMetric::Wass(s.ground_metric.cost(&abs_domain)),
            })
            .collect())
    }

    /// Method specs in table order: COTA first, then baselines, each per cost.
    pub fn method_specs(&self) -> Result<Vec<MethodSpec>> {
        let w = self.cota_weights()?;
        let mut out = Vec::new();
        for &m in &self.methods {
            for &c in &self.costs {
                let mut spec = match m {
                    Method::Cota => MethodSpec::cota(c, w, self.solver),
                    _ => MethodSpec::baseline(m, c, self.solver),
                };
                if m == Method::Cota {
                    spec.aggregation = self.aggregation;
                }
                out.push(spec);
            }
        }
        Ok(out)
    }
}
