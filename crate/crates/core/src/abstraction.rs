//! Stochastic abstraction maps extracted from transport plans.

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::domain::DomainIndex;
use crate::error::{CotaError, Result};
use crate::measures::EmpiricalMeasure;

const COLUMN_TOL: f64 = 1e-9;

/// `τ`: column `j` is a distribution over abstracted states given base state `x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMap {
    matrix: Array2<f64>,
}

impl StochasticMap {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if matrix.iter().any(|&x| !(x >= 0.0)) {
            return Err(CotaError::InvalidModel("stochastic map has a negative entry".into()));
        }
        for (j, col) in matrix.columns().into_iter().enumerate() {
            let s = col.sum();
            if (s - 1.0).abs() > COLUMN_TOL {
                return Err(CotaError::InvalidModel(format!("column {j} of the map sums to {s}")));
            }
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: Array2::eye(n),
        }
    }

    pub fn uniform(d_abs: usize, d_base: usize) -> Self {
        Self {
            matrix: Array2::from_elem((d_abs, d_base), 1.0 / d_abs as f64),
        }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.dim()
    }

    /// CSV with one row per base state and one column per abstracted state.
    pub fn write_csv(&self, path: &Path, base: &DomainIndex, abs: &DomainIndex) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["base_state".to_string()];
        header.extend((0..abs.size()).map(|i| abs.state_label(i)));
        w.write_record(&header)?;
        for j in 0..base.size() {
            let mut rec = vec![base.state_label(j)];
            rec.extend(self.matrix.column(j).iter().map(|x| format!("{x:.17e}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Map of the averaged plan.
    #[default]
    PlanAverage,
    /// Average of the per-plan maps.
    MapAverage,
}

impl AggregationMode {
    pub fn label(self) -> &'static str {
        match self {
            AggregationMode::PlanAverage => "COTA(P)",
            AggregationMode::MapAverage => "COTA(tau)",
        }
    }
}

/// Column normalisation; columns without mass become uniform.
pub fn plan_to_map(plan: &Array2<f64>) -> StochasticMap {
    let d_abs = plan.nrows();
    let mut m = plan.clone();
    for mut col in m.columns_mut() {
        let s = col.sum();
        if s > 0.0 {
            col.mapv_inplace(|x| x / s);
        } else {
            col.fill(1.0 / d_abs as f64);
        }
    }
    StochasticMap { matrix: m }
}

pub fn aggregate(plans: &[Array2<f64>], mode: AggregationMode) -> Result<StochasticMap> {
    let first = plans.first().ok_or(CotaError::EmptyList)?;
    for p in plans {
        if p.dim() != first.dim() {
            return Err(CotaError::ShapeMismatch {
                expected: first.dim(),
                got: p.dim(),
            });
        }
    }
    let k = plans.len() as f64;
    let mut acc = Array2::<f64>::zeros(first.dim());
    match mode {
        AggregationMode::PlanAverage => {
            for p in plans {
                acc += p;
            }
            acc /= k;
            Ok(plan_to_map(&acc))
        }
        AggregationMode::MapAverage => {
            for p in plans {
                acc += plan_to_map(p).matrix();
            }
            acc /= k;
            StochasticMap::new(acc)
        }
    }
}

/// `τ_# m`: the abstracted measure obtained by pushing `m` through `τ`.
pub fn pushforward(tau: &StochasticMap, m: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
    if tau.matrix.ncols() != m.len() {
        return Err(CotaError::DomainMismatch(format!(
            "map has {} base states, measure has {}",
            tau.matrix.ncols(),
            m.len()
        )));
    }
    let v = tau.matrix.dot(&ndarray::ArrayView1::from(m.weights()));
    EmpiricalMeasure::from_masses(v.to_vec())
}

/// Column sums, for diagnostics.
pub fn column_mass(plan: &Array2<f64>) -> Vec<f64> {
    plan.sum_axis(Axis(0)).to_vec()
}
