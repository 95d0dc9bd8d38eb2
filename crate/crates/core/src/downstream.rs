//! Regression with abstracted data: fit mass loading against comma gap on
//! LRCS rows alone, or augmented with WMG rows mapped through τ.

use std::path::Path;

use serde::Serialize;

use crate::abstraction::StochasticMap;
use crate::datasets::{ebm_omega_gap, load_ebm, EbmData, LRCS_COMMA_GAPS, WMG_COMMA_GAPS};
use crate::error::{CotaError, Result};
use crate::eval::{fmt_num, learn, summarize, MethodSpec};

/// Reference `(mean, std)` MSE for COTA, tasks 1 to 3.
pub const REFERENCE_COTA: [(f64, f64); 3] = [(1.40, 1.39), (0.19, 0.04), (0.80, 0.55)];
/// Reference values for the α-abstraction learner, which is not reimplemented here.
pub const REFERENCE_ALPHA: [(f64, f64); 3] = [(1.86, 1.75), (0.22, 0.26), (1.22, 0.95)];

/// One regression sample; `class` is the LRCS comma gap it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub class: u32,
    pub cg: f64,
    pub ml: f64,
}

/// Ordinary least squares `y = a + b x`. A constant `x` gives `b = 0`.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(CotaError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(CotaError::EmptyVector);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 1e-12 { sxy / sxx } else { 0.0 };
    Ok((my - b * mx, b))
}

fn fit(train: &[Sample]) -> Result<(f64, f64)> {
    let xs: Vec<f64> = train.iter().map(|s| s.cg).collect();
    let ys: Vec<f64> = train.iter().map(|s| s.ml).collect();
    ols(&xs, &ys)
}

fn mse(model: (f64, f64), test: &[Sample]) -> f64 {
    test.iter().map(|s| (model.0 + model.1 * s.cg - s.ml).powi(2)).sum::<f64>() / test.len() as f64
}

pub fn lrcs_samples(data: &EbmData) -> Vec<Sample> {
    data.lrcs
        .iter()
        .map(|r| Sample {
            class: r.comma_gap.round() as u32,
            cg: r.comma_gap,
            ml: r.ml,
        })
        .collect()
}

/// WMG rows pushed through τ: each row becomes the τ-expectation of the
/// abstracted comma gap and of the abstracted mass-loading bin midpoint.
/// Its class is the ω-image of its comma gap.
pub fn abstract_wmg(data: &EbmData, tau: &StochasticMap) -> Result<Vec<Sample>> {
    let n_bins_abs = data.abs_bins.bins;
    let n_bins_base = data.base_bins.bins;
    let expected = (LRCS_COMMA_GAPS.len() * n_bins_abs, WMG_COMMA_GAPS.len() * n_bins_base * n_bins_base);
    if tau.shape() != expected {
        return Err(CotaError::ShapeMismatch {
            expected,
            got: tau.shape(),
        });
    }
    let m = tau.matrix();
    let base_rows = data.base_rows();
    let mut out = Vec::with_capacity(base_rows.len());
    for (row, x) in data.wmg.iter().zip(&base_rows) {
        let col = (x[0] * n_bins_base + x[1]) * n_bins_base + x[2];
        let (mut cg, mut ml) = (0.0, 0.0);
        for r in 0..expected.0 {
            let p = m[(r, col)];
            cg += p * LRCS_COMMA_GAPS[r / n_bins_abs] as f64;
            ml += p * data.abs_bins.midpoint(r % n_bins_abs);
        }
        let class = ebm_omega_gap(row.comma_gap.round() as u32)
            .ok_or_else(|| CotaError::SchemaMismatch(format!("comma_gap {} has no abstracted image", row.comma_gap)))?;
        out.push(Sample { class, cg, ml });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskResult {
    pub task: usize,
    pub train: &'static str,
    pub test: &'static str,
    /// MSE per held-out class, in `LRCS_COMMA_GAPS` order.
    pub per_class: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

const TASKS: [(&str, &str); 3] = [
    ("LRCS[CG!=k]", "LRCS[CG=k]"),
    ("LRCS[CG!=k]+WMG", "LRCS[CG=k]"),
    ("LRCS[CG!=k]+WMG[CG!=k]", "LRCS[CG=k]+WMG[CG=k]"),
];

/// The three extrapolation tasks, each averaged over held-out classes.
pub fn downstream_regression(lrcs: &[Sample], wmg: &[Sample]) -> Result<[TaskResult; 3]> {
    let mut per = [Vec::new(), Vec::new(), Vec::new()];
    for &k in &LRCS_COMMA_GAPS {
        let lr_in: Vec<Sample> = lrcs.iter().filter(|s| s.class != k).copied().collect();
        let lr_out: Vec<Sample> = lrcs.iter().filter(|s| s.class == k).copied().collect();
        let wm_in: Vec<Sample> = wmg.iter().filter(|s| s.class != k).copied().collect();
        let wm_out: Vec<Sample> = wmg.iter().filter(|s| s.class == k).copied().collect();
        if lr_out.is_empty() {
            return Err(CotaError::EmptyClass(format!("LRCS comma_gap {k}")));
        }
        if lr_in.is_empty() {
            return Err(CotaError::EmptyClass(format!("LRCS comma_gap != {k}")));
        }
        per[0].push(mse(fit(&lr_in)?, &lr_out));
        let aug: Vec<Sample> = lr_in.iter().chain(wmg).copied().collect();
        per[1].push(mse(fit(&aug)?, &lr_out));
        let aug3: Vec<Sample> = lr_in.iter().chain(&wm_in).copied().collect();
        let test3: Vec<Sample> = lr_out.iter().chain(&wm_out).copied().collect();
        per[2].push(mse(fit(&aug3)?, &test3));
    }
    let mk = |t: usize, v: Vec<f64>| {
        let (mean, std, _) = summarize(&v);
        TaskResult {
            task: t + 1,
            train: TASKS[t].0,
            test: TASKS[t].1,
            per_class: v,
            mean,
            std,
        }
    };
    let [a, b, c] = per;
    Ok([mk(0, a), mk(1, b), mk(2, c)])
}

/// Learns τ on all EBM intervention pairs with `spec`, then runs the tasks.
pub fn run_downstream(data: &EbmData, spec: &MethodSpec, n: usize, seed: u64) -> Result<([TaskResult; 3], StochasticMap)> {
    let scenario = load_ebm(data)?;
    let pairs = scenario.pairs(n, n, seed)?;
    let learned = learn(&scenario, &pairs, spec)?;
    let wmg = abstract_wmg(data, &learned.tau)?;
    Ok((downstream_regression(&lrcs_samples(data), &wmg)?, learned.tau))
}

pub const DOWNSTREAM_HEADER: [&str; 7] = ["task", "train", "test", "mse_mean", "mse_std", "reference_cota", "reference_alpha"];

pub fn write_downstream_csv(path: &Path, rows: &[TaskResult; 3]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(DOWNSTREAM_HEADER)?;
    for (t, r) in rows.iter().enumerate() {
        let reference = |x: (f64, f64)| format!("{}+-{}", x.0, x.1);
        w.write_record([
            r.task.to_string(),
            r.train.to_string(),
            r.test.to_string(),
            fmt_num(r.mean),
            fmt_num(r.std),
            reference(REFERENCE_COTA[t]),
            reference(REFERENCE_ALPHA[t]),
        ])?;
    }
    w.flush()?;
    Ok(())
}
