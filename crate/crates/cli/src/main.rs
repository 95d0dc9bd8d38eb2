use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::json;

use cota::config::ExperimentConfig;
use cota::datasets::{Scenario, ScenarioKind};
use cota::docalc::ConstraintMode;
use cota::downstream::{run_downstream, write_downstream_csv};
use cota::eval::{
    grid_search, learn, loo_on, repetition_pairs, ternary_grid, write_plan_csv, write_table_csv, EvalReport, Method,
    MethodSpec,
};
use cota::model_file::{export_scenario, load_scenario, ModelFile, ModelFileError};
use cota::poset::maximal_chains;
use cota::CotaError;

#[derive(Parser)]
#[command(name = "cota", version, about = "Learn causal abstraction maps with constrained optimal transport")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// stc_np, stc_p, lucas or ebm.
    #[arg(long, global = true)]
    scenario: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for chains, grid points and repetitions.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use the synthetic EBM stand-in.
    #[arg(long, global = true)]
    synthetic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check models and ω; exit 0 iff everything is valid.
    Validate {
        /// Base model JSON (carries ω when an abstracted model is given).
        #[arg(long)]
        base: Option<PathBuf>,
        /// Abstracted model JSON.
        #[arg(long)]
        abs: Option<PathBuf>,
    },
    /// Export a scenario's models and sample its interventional pairs.
    Generate,
    /// Learn τ with every configured method and evaluate it leave-one-out.
    Run {
        /// Grid-search COTA weights over the ternary lattice with this step.
        #[arg(long)]
        grid: Option<f64>,
        /// exact or approx.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        repetitions: Option<usize>,
        /// Samples per intervention on both sides.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Regression with τ-abstracted WMG rows.
    Downstream {
        #[arg(long)]
        lrcs: Option<PathBuf>,
        #[arg(long)]
        wmg: Option<PathBuf>,
    },
}

/// An error on its way to stderr.
struct Failure {
    kind: String,
    message: String,
    code: u8,
    path: Option<String>,
    line: Option<usize>,
}

fn exit_code(e: &CotaError) -> u8 {
    match e {
        CotaError::NoConvergence(_) => 3,
        CotaError::Io(_) | CotaError::EmptyFile(_) => 4,
        _ => 2,
    }
}

impl From<CotaError> for Failure {
    fn from(e: CotaError) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
            code: exit_code(&e),
            path: None,
            line: None,
        }
    }
}

impl From<ModelFileError> for Failure {
    fn from(e: ModelFileError) -> Self {
        Self {
            kind: e.error.kind().to_string(),
            message: e.to_string(),
            code: exit_code(&e.error),
            path: Some(e.path),
            line: e.line,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        CotaError::from(e).into()
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn resolve_config(c: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::read(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = &c.scenario {
        cfg.scenario = ScenarioKind::parse(s)?;
        cfg.base_model = None;
        cfg.abs_model = None;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(j) = c.jobs {
        cfg.jobs = Some(j);
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if c.synthetic {
        cfg.synthetic = true;
    }
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn scenario_summary(s: &Scenario) -> Result<serde_json::Value, Failure> {
    Ok(json!({
        "status": "ok",
        "scenario": s.name,
        "base_states": s.base_domain().size(),
        "abs_states": s.abs_domain().size(),
        "interventions": s.poset.len(),
        "abs_interventions": s.abs_poset.len(),
        "maximal_chains": maximal_chains(&s.poset)?.len(),
    }))
}

fn cmd_validate(c: &Common, base: Option<PathBuf>, abs: Option<PathBuf>) -> CmdResult {
    match (base, abs) {
        (Some(b), Some(a)) => print_json(&scenario_summary(&load_scenario(&b, &a)?)?),
        (Some(m), None) | (None, Some(m)) => {
            let (_, scm, poset) = ModelFile::read(&m)?;
            print_json(&json!({
                "status": "ok",
                "model": m.display().to_string(),
                "variables": scm.dag().num_vars(),
                "interventions": poset.len(),
            }));
        }
        (None, None) => {
            let cfg = resolve_config(c)?;
            cfg.validate()?;
            print_json(&scenario_summary(&cfg.build_scenario()?)?);
        }
    }
    Ok(())
}

fn cmd_generate(c: &Common) -> CmdResult {
    let cfg = resolve_config(c)?;
    cfg.validate()?;
    let s = cfg.build_scenario()?;
    std::fs::create_dir_all(&cfg.out)?;
    export_scenario(&s, &cfg.out.join("model"))?;
    if s.name == "ebm" {
        cfg.ebm_data()?.write_csv(&cfg.out.join("lrcs.csv"), &cfg.out.join("wmg.csv"))?;
    }
    let pairs = s.pairs(cfg.n_base, cfg.n_abs, cfg.seed)?;
    pairs.export(&cfg.out.join("pairs"))?;
    info!("wrote {} pairs to {}", pairs.len(), cfg.out.display());
    Ok(())
}

fn slug(spec: &MethodSpec) -> String {
    let m = match spec.method {
        Method::Cota => "cota",
        Method::Pwise => "pwise",
        Method::Map => "map",
        Method::Bary => "bary",
    };
    format!("{m}_{}", spec.cost.label())
}

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<(), Failure> {
    std::fs::write(path, serde_json::to_string_pretty(v).map_err(CotaError::from)? + "\n")?;
    Ok(())
}

fn cmd_run(c: &Common, grid: Option<f64>, mode: Option<String>, reps: Option<usize>, n: Option<usize>) -> CmdResult {
    let mut cfg = resolve_config(c)?;
    if grid.is_some() {
        cfg.grid_step = grid;
    }
    if let Some(m) = mode {
        cfg.solver.mode = match m.as_str() {
            "exact" => ConstraintMode::Exact,
            "approx" => ConstraintMode::Approx,
            _ => return Err(CotaError::InvalidConfig(format!("unknown mode `{m}`")).into()),
        };
    }
    if let Some(r) = reps {
        cfg.repetitions = r;
    }
    if let Some(n) = n {
        cfg.n_base = n;
        cfg.n_abs = n;
    }
    cfg.validate()?;
    let s = cfg.build_scenario()?;
    let metrics = cfg.error_metrics(&s)?;
    let mut specs = cfg.method_specs()?;
    std::fs::create_dir_all(&cfg.out)?;
    write_json(&cfg.out.join("config.json"), &cfg)?;

    let t = Instant::now();
    let rep_pairs = repetition_pairs(&s, &cfg.loo())?;
    if let Some(step) = cfg.grid_step {
        let lattice = ternary_grid(step)?;
        for spec in specs.iter_mut().filter(|s| s.method == Method::Cota) {
            let g = grid_search(&s, &rep_pairs, spec, &lattice, &metrics[0])?;
            g.write_surface_csv(&cfg.out.join(format!("surface_{}.csv", spec.cost.label())))?;
            spec.weights = g.best_point().weights;
            info!("grid {}: best {:?} at {:?} ({:.1}s)", slug(spec), g.best_point().mean, spec.weights, t.elapsed().as_secs_f64());
        }
    }

    let (bd, ad) = (s.base_domain(), s.abs_domain());
    let mut reports: Vec<EvalReport> = Vec::new();
    for spec in &specs {
        let name = slug(spec);
        let learned = learn(&s, &rep_pairs[0], spec)?;
        learned.tau.write_csv(&cfg.out.join(format!("tau_{name}.csv")), &bd, &ad)?;
        let plan_dir = cfg.out.join(format!("plans_{name}"));
        std::fs::create_dir_all(&plan_dir)?;
        for (i, p) in learned.plans.iter().enumerate() {
            write_plan_csv(&plan_dir.join(format!("plan_{i}.csv")), p)?;
        }
        if spec.method == Method::Cota {
            write_json(&cfg.out.join(format!("solve_report_{name}.json")), &learned.reports)?;
        }
        reports.extend(loo_on(&s, &rep_pairs, spec, &metrics)?);
        info!("{name} done ({:.1}s)", t.elapsed().as_secs_f64());
    }
    write_table_csv(&cfg.out.join("results.csv"), &reports)?;
    write_json(&cfg.out.join("results.json"), &reports)?;
    Ok(())
}

fn cmd_downstream(c: &Common, lrcs: Option<PathBuf>, wmg: Option<PathBuf>) -> CmdResult {
    let mut cfg = resolve_config(c)?;
    if lrcs.is_some() || wmg.is_some() {
        cfg.lrcs_csv = lrcs;
        cfg.wmg_csv = wmg;
    }
    if !cfg.synthetic && cfg.lrcs_csv.is_none() {
        return Err(CotaError::InvalidConfig("downstream needs --lrcs and --wmg, or --synthetic".into()).into());
    }
    cfg.validate()?;
    let data = cfg.ebm_data()?;
    let spec = MethodSpec {
        aggregation: cfg.aggregation,
        ..MethodSpec::cota(cfg.costs[0], cfg.cota_weights()?, cfg.solver)
    };
    let (rows, tau) = run_downstream(&data, &spec, cfg.n_base, cfg.seed)?;
    std::fs::create_dir_all(&cfg.out)?;
    write_downstream_csv(&cfg.out.join("downstream.csv"), &rows)?;
    let s = cota::datasets::load_ebm(&data)?;
    tau.write_csv(&cfg.out.join("tau_downstream.csv"), &s.base_domain(), &s.abs_domain())?;
    for r in &rows {
        info!("task {}: {:?} +- {:?}", r.task, r.mean, r.std);
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COTA_LOG", "error")).init();
    let cli = Cli::parse();
    let jobs = match &cli.common.config {
        Some(p) => ExperimentConfig::read(p).ok().and_then(|c| c.jobs),
        None => None,
    };
    if let Some(j) = cli.common.jobs.or(jobs) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    let res = match cli.command {
        Command::Validate { base, abs } => cmd_validate(&cli.common, base, abs),
        Command::Generate => cmd_generate(&cli.common),
        Command::Run { grid, mode, repetitions, n } => cmd_run(&cli.common, grid, mode, repetitions, n),
        Command::Downstream { lrcs, wmg } => cmd_downstream(&cli.common, lrcs, wmg),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let mut v = json!({"error": f.kind, "message": f.message});
            if let Some(p) = f.path {
                v["path"] = json!(p);
            }
            if let Some(l) = f.line {
                v["line"] = json!(l);
            }
            eprintln!("{v}");
            ExitCode::from(f.code)
        }
    }
}
