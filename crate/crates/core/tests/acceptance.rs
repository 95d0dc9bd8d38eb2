//! Acceptance suite. Prints one PASS/FAIL line per criterion and never
//! fails the build on a FAIL; errors inside a check count as FAIL.

mod common;

use std::time::{Duration, Instant};

use cota::datasets::{identity_scenario, scenario, ScenarioKind, SyntheticEbm};
use cota::docalc::{ConstraintMode, DivergenceKind};
use cota::downstream::run_downstream;
use cota::eval::{
    grid_search, learn, loo_on, repetition_pairs, ternary_grid, write_table_csv, CostKind, ErrorMetric, GridResult,
    LooConfig, Method, MethodSpec,
};
use cota::measures::EmpiricalMeasure;
use cota::ot::{
    chain_z, cota_gradient, cota_objective, exact_transport_cost, lp_ot_oracle, marginal_violation, sinkhorn,
    solve_cota, ChainProblem, CotaWeights, SolverConfig,
};
use cota::cost::CostMatrix;
use cota::docalc::ZSource;
use cota::measures::PairSet;
use cota::scm::Intervention;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn c1_golden() -> Check {
    let t = Instant::now();
    let c = three_to_two_cost();
    let m = c.matrix();
    // reference columns 000, 001, 010, 011, 110, 111
    let cols = [0, 1, 2, 3, 6, 7];
    let expected = [[0.0, 0.0, 1.0, 1.0, 2.0, 2.0], [0.0, 0.0, 1.0, 1.0, 2.0, 2.0], [2.0; 6], [2.0; 6]];
    let mut ok = m.dim() == (4, 8);
    for (r, row) in expected.iter().enumerate() {
        for (k, &j) in cols.iter().enumerate() {
            ok &= m[(r, j)] == row[k];
        }
    }
    // the remaining X1=1 columns, 100 and 101, cost the same
    ok &= (0..4).all(|r| m[(r, 4)] == 2.0 && m[(r, 5)] == 2.0);
    let secs = t.elapsed().as_secs_f64();
    Ok((ok && secs < 1.0, format!("4x6 reference block matches exactly: {ok}; {secs:.3} s")))
}

struct StcRuns {
    reps: Vec<PairSet>,
    exact_omega: GridResult,
    exact_h: GridResult,
    approx_omega: GridResult,
    pwise_h: f64,
    bary_omega: f64,
    elapsed_table: Duration,
}

fn cota_template(mode: ConstraintMode, cost: CostKind) -> MethodSpec {
    let cfg = SolverConfig {
        mode,
        divergence: DivergenceKind::Fro,
        z_source: ZSource::Plan,
        ..SolverConfig::default()
    };
    MethodSpec::cota(cost, CotaWeights::new(1.0, 0.0, 0.0, 0.0).unwrap(), cfg)
}

fn stc_runs() -> Result<StcRuns, String> {
    let t = Instant::now();
    let s = scenario(ScenarioKind::StcNp, 0).map_err(err)?;
    let reps = repetition_pairs(&s, &LooConfig::default()).map_err(err)?;
    let grid = ternary_grid(0.1).map_err(err)?;
    let jsd = ErrorMetric::Jsd;
    let exact_omega = grid_search(&s, &reps, &cota_template(ConstraintMode::Exact, CostKind::Omega), &grid, &jsd).map_err(err)?;
    let exact_h = grid_search(&s, &reps, &cota_template(ConstraintMode::Exact, CostKind::Hamming), &grid, &jsd).map_err(err)?;
    let cfg = SolverConfig::default();
    let one = |m, c| -> Result<f64, String> {
        Ok(loo_on(&s, &reps, &MethodSpec::baseline(m, c, cfg), &[ErrorMetric::Jsd]).map_err(err)?[0].mean)
    };
    let pwise_h = one(Method::Pwise, CostKind::Hamming)?;
    let bary_omega = one(Method::Bary, CostKind::Omega)?;
    let elapsed_table = t.elapsed();
    let approx_omega = grid_search(&s, &reps, &cota_template(ConstraintMode::Approx, CostKind::Omega), &grid, &jsd).map_err(err)?;
    Ok(StcRuns {
        reps,
        exact_omega,
        exact_h,
        approx_omega,
        pwise_h,
        bary_omega,
        elapsed_table,
    })
}

fn c2_table(r: &StcRuns) -> Check {
    let best = r.exact_omega.best_point().mean;
    let best_h = r.exact_h.best_point().mean;
    let a = best <= 0.03;
    let b = best < r.pwise_h && best < r.bary_omega;
    let c = best <= best_h;
    let fast = r.elapsed_table.as_secs_f64() <= 600.0;
    Ok((
        a && b && c && fast,
        format!(
            "COTA-FRO-c_omega {best:.4} (<= 0.03: {a}); Pwise-c_H {:.4}, Bary-c_omega {:.4} (below both: {b}); COTA-c_H {best_h:.4} (omega <= H: {c}); {:.1} s",
            r.pwise_h,
            r.bary_omega,
            r.elapsed_table.as_secs_f64()
        ),
    ))
}

fn lambda_benefit(g: &GridResult) -> (bool, String) {
    let best = g.best_point();
    let lam0 = g
        .points
        .iter()
        .filter(|p| p.weights.lambda_total() == 0.0)
        .map(|p| p.mean)
        .fold(f64::INFINITY, f64::min);
    let has_lambda = best.weights.lambda_total() > 0.0;
    let margin = lam0 >= 1.2 * best.mean;
    (
        has_lambda && margin,
        format!(
            "argmin {:.4} at (k,l,m)=({:.1},{:.1},{:.1}); best lambda=0 point {lam0:.4} ({:+.1}%)",
            best.mean,
            best.weights.kappa,
            best.weights.lambda_total(),
            best.weights.mu,
            100.0 * (lam0 / best.mean - 1.0)
        ),
    )
}

fn c3_lambda(r: &StcRuns) -> Check {
    let (ok, exact) = lambda_benefit(&r.exact_omega);
    let (_, approx) = lambda_benefit(&r.approx_omega);
    Ok((ok, format!("exact surface: {exact} [approx surface, not scored: {approx}]")))
}

fn single_chain(alpha: &[f64], beta: &[f64]) -> ChainProblem {
    ChainProblem {
        members: vec![0],
        alphas: vec![alpha.to_vec()],
        betas: vec![beta.to_vec()],
        links: Vec::new(),
    }
}

fn c4_oracle(r: &StcRuns) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mu0 = 0.05;
    let w = CotaWeights::normalized(1.0, 0.0, 0.0, mu0).map_err(err)?;
    let cfg = SolverConfig {
        marginal_tol: 1e-10,
        max_sinkhorn_iters: 100_000,
        ..SolverConfig::default()
    };
    let mut worst_rel: f64 = 0.0;
    let mut worst_plan: f64 = 0.0;
    for _ in 0..20 {
        let cost = CostMatrix::new(Array2::from_shape_fn((3, 3), |_| rng.random_range(0.0..1.0))).map_err(err)?;
        let mut draw = || EmpiricalMeasure::from_masses((0..3).map(|_| rng.random_range(0.05..1.0)).collect());
        let (a, b) = (draw().map_err(err)?, draw().map_err(err)?);
        let lp = lp_ot_oracle(&cost, &a, &b).map_err(err)?;
        let lp_cost = (&lp * cost.matrix()).sum();
        let sk = sinkhorn(&cost, &a, &b, 1e-3, 1e-9, 100_000).map_err(err)?;
        let sk_cost = (&sk * cost.matrix()).sum();
        worst_rel = worst_rel.max((sk_cost - lp_cost).abs() / lp_cost.max(1e-12));
        let reference = sinkhorn(&cost, &a, &b, mu0, 1e-10, 100_000).map_err(err)?;
        let (plans, _) = solve_cota(&single_chain(a.weights(), b.weights()), &cost, &w, &cfg).map_err(err)?;
        worst_plan = worst_plan.max(l1(&plans[0], &reference));
    }
    // the same degeneration on the STC_np chains
    let s = scenario(ScenarioKind::StcNp, 0).map_err(err)?;
    let pairs = &r.reps[0];
    let cost = cota::eval::cost_for(&s, pairs, CostKind::Omega).map_err(err)?;
    for problem in chain_problems(&s, pairs) {
        let (plans, _) = solve_cota(&problem, &cost, &w, &cfg).map_err(err)?;
        for (n, &k) in problem.members.iter().enumerate() {
            let p = &pairs.pairs[k];
            let reference = sinkhorn(&cost, &p.base, &p.abs, mu0, 1e-10, 100_000).map_err(err)?;
            worst_plan = worst_plan.max(l1(&plans[n], &reference));
        }
    }
    let exact = exact_transport_cost(&Array2::eye(2), &[0.5, 0.5], &[0.5, 0.5]);
    Ok((
        worst_rel <= 0.01 && worst_plan <= 1e-4 && exact == 0.0,
        format!("worst sinkhorn/LP cost gap {:.3}%; worst COTA vs per-pair sinkhorn L1 {worst_plan:.2e}", 100.0 * worst_rel),
    ))
}

fn c5_gformula() -> Check {
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for kind in [ScenarioKind::StcNp, ScenarioKind::StcP, ScenarioKind::Lucas] {
        let s = scenario(kind, 0).map_err(err)?;
        for (scm, poset) in [(&s.base, &s.poset), (&s.abs, &s.abs_poset)] {
            let obs = scm.exact_distribution(&Intervention::null()).map_err(err)?;
            let dom = &obs.domain;
            for iota in poset.interventions() {
                let dist = scm.exact_distribution(iota).map_err(err)?;
                let r = iota.resolve(scm.dag()).map_err(err)?;
                for (i, x) in dom.iter().enumerate() {
                    let got = dist.probs[i];
                    let want = if r.compatible(&x) {
                        let denom: f64 = r.variables().map(|v| scm.cond_prob(v, &x)).product();
                        obs.probs[i] / denom
                    } else {
                        0.0
                    };
                    worst = worst.max((got - want).abs());
                    checked += 1;
                }
            }
        }
    }
    Ok((worst <= 1e-9, format!("{checked} state checks, worst deviation {worst:.2e}")))
}

fn c6_convexity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_violation: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    let mut tuples = 0usize;
    for s in shipped() {
        let pairs = population_pairs(&s);
        let cost = s.hamming_cost().map_err(err)?;
        for problem in chain_problems(&s, &pairs) {
            let start = random_plans(&problem, &mut rng);
            let zs = chain_z(&start, &problem, ZSource::Plan, 1e-8).map_err(err)?;
            for k in 0..100 {
                let mode = if k % 2 == 0 { ConstraintMode::Exact } else { ConstraintMode::Approx };
                let kind = if k % 4 < 2 { DivergenceKind::Fro } else { DivergenceKind::Jsd };
                let p = random_plans(&problem, &mut rng);
                let q = random_plans(&problem, &mut rng);
                let t: f64 = rng.random_range(0.05..0.95);
                let mid: Vec<Array2<f64>> = p.iter().zip(&q).map(|(a, b)| a * t + b * (1.0 - t)).collect();
                for w in [CotaWeights::new(0.4, 0.3, 0.3, 0.0).unwrap(), CotaWeights::new(0.3, 0.3, 0.3, 0.1).unwrap()] {
                    let f = |x: &[Array2<f64>]| cota_objective(x, &problem, &cost, &w, mode, kind, &zs).map(|o| o.total);
                    let chord = t * f(&p).map_err(err)? + (1.0 - t) * f(&q).map_err(err)?;
                    let gap = chord - f(&mid).map_err(err)?;
                    worst_violation = worst_violation.max(-gap);
                    if w.mu > 0.0 {
                        min_gap = min_gap.min(gap);
                    }
                }
                tuples += 1;
            }
        }
    }
    Ok((
        worst_violation <= 1e-8 && min_gap > 0.0,
        format!("{tuples} tuples over all chains; worst chord violation {worst_violation:.2e}; smallest strict gap at mu=0.1 {min_gap:.2e}"),
    ))
}

fn c7_gradient() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let scenarios = [scenario(ScenarioKind::StcNp, 0).map_err(err)?, scenario(ScenarioKind::StcP, 0).map_err(err)?];
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let s = &scenarios[k % 2];
        let pairs = population_pairs(s);
        let problems = chain_problems(s, &pairs);
        let problem = &problems[k % problems.len()];
        let cost = s.hamming_cost().map_err(err)?;
        let mode = if k < 25 { ConstraintMode::Exact } else { ConstraintMode::Approx };
        let kind = if k % 4 < 2 { DivergenceKind::Fro } else { DivergenceKind::Jsd };
        let plans = random_plans(problem, &mut rng);
        let zs = chain_z(&plans, problem, ZSource::Plan, 1e-8).map_err(err)?;
        let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.05..1.0));
        let w = CotaWeights::normalized(raw[0], raw[1], raw[2], raw[3]).map_err(err)?;
        let analytic = cota_gradient(&plans, problem, &cost, &w, mode, kind, &zs).map_err(err)?;
        let fd = fd_gradient(|x| cota_objective(x, problem, &cost, &w, mode, kind, &zs).unwrap().total, &plans);
        worst = worst.max(relative_error(&analytic, &fd, &plans));
    }
    Ok((worst < 1e-4, format!("50 points (25 exact, 25 approx), worst relative error {worst:.2e}")))
}

fn c8_feasibility() -> Check {
    let mut worst: f64 = 0.0;
    let mut plans = 0usize;
    for s in shipped() {
        let pairs = s.pairs(500, 500, 8).map_err(err)?;
        let mut specs = Vec::new();
        for mode in [ConstraintMode::Exact, ConstraintMode::Approx] {
            let cfg = SolverConfig { mode, ..SolverConfig::default() };
            specs.push(MethodSpec::cota(CostKind::Omega, CotaWeights::from_ternary(0.6, 0.3, 0.1).unwrap(), cfg));
        }
        specs.push(MethodSpec::baseline(Method::Pwise, CostKind::Hamming, SolverConfig::default()));
        for spec in &specs {
            let learned = learn(&s, &pairs, spec).map_err(err)?;
            let members: Vec<usize> = if spec.method == Method::Cota {
                cota::poset::maximal_chains(&pairs.poset).map_err(err)?.concat()
            } else {
                (0..pairs.len()).collect()
            };
            for (p, &k) in learned.plans.iter().zip(&members) {
                let pr = &pairs.pairs[k];
                worst = worst.max(marginal_violation(p, pr.base.weights(), pr.abs.weights()));
                plans += 1;
            }
        }
    }
    let run = |threads: usize| -> Result<Vec<u8>, String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(err)?;
        pool.install(|| {
            let s = scenario(ScenarioKind::StcNp, 0).map_err(err)?;
            let loo = LooConfig {
                repetitions: 2,
                n_base: 300,
                n_abs: 300,
                seed: 11,
            };
            let reps = repetition_pairs(&s, &loo).map_err(err)?;
            let mut reports = Vec::new();
            for spec in [
                MethodSpec::cota(CostKind::Omega, CotaWeights::from_ternary(0.8, 0.2, 0.0).unwrap(), SolverConfig::default()),
                MethodSpec::baseline(Method::Bary, CostKind::Omega, SolverConfig::default()),
            ] {
                reports.extend(loo_on(&s, &reps, &spec, &[ErrorMetric::Jsd]).map_err(err)?);
            }
            let dir = tempfile::tempdir().map_err(err)?;
            let path = dir.path().join("t.csv");
            write_table_csv(&path, &reports).map_err(err)?;
            std::fs::read(&path).map_err(err)
        })
    };
    let identical = run(1)? == run(4)?;
    Ok((
        worst <= 1e-6 && identical,
        format!("{plans} plans, worst L1 marginal violation {worst:.2e}; result CSV byte-identical across reruns (1 and 4 threads): {identical}"),
    ))
}

fn c9_identity() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in [ScenarioKind::StcNp, ScenarioKind::StcP] {
        let s = identity_scenario(&scenario(kind, 0).map_err(err)?).map_err(err)?;
        let loo = LooConfig {
            n_base: 10_000,
            n_abs: 10_000,
            repetitions: 3,
            seed: 9,
        };
        let reps = repetition_pairs(&s, &loo).map_err(err)?;
        let cfg = SolverConfig::default();
        let specs = [
            MethodSpec::cota(CostKind::Hamming, CotaWeights::from_ternary(0.8, 0.2, 0.0).unwrap(), cfg),
            MethodSpec::cota(CostKind::Hamming, CotaWeights::from_ternary(0.8, 0.2, 0.0).unwrap(), SolverConfig { mode: ConstraintMode::Approx, ..cfg }),
            MethodSpec::baseline(Method::Pwise, CostKind::Hamming, cfg),
            MethodSpec::baseline(Method::Map, CostKind::Hamming, cfg),
            MethodSpec::baseline(Method::Bary, CostKind::Hamming, cfg),
        ];
        let mut parts = Vec::new();
        for spec in &specs {
            let m = loo_on(&s, &reps, spec, &[ErrorMetric::Jsd]).map_err(err)?[0].mean;
            ok &= m < 0.01;
            let tag = match (spec.method, spec.solver.mode) {
                (Method::Cota, ConstraintMode::Approx) => "COTA-approx".to_string(),
                _ => spec.label(),
            };
            parts.push(format!("{tag} {m:.4}"));
        }
        lines.push(format!("{}: {}", kind.name(), parts.join(", ")));
    }
    Ok((ok, lines.join("; ")))
}

fn c10_approx(r: &StcRuns) -> Check {
    let corner = |g: &GridResult, k: f64, m: f64| {
        g.points
            .iter()
            .find(|p| p.weights.kappa == k && p.weights.mu == m && p.weights.lambda_total() == 0.0)
            .map(|p| p.mean)
            .unwrap_or(f64::NAN)
    };
    let beats = |g: &GridResult| {
        let b = g.best_point().mean;
        (b < corner(g, 1.0, 0.0) && b < corner(g, 0.0, 1.0), b, corner(g, 1.0, 0.0), corner(g, 0.0, 1.0))
    };
    let (ex_ok, ex, ex_k, ex_m) = beats(&r.exact_omega);
    let (ap_ok, ap, ap_k, ap_m) = beats(&r.approx_omega);
    let parity = ap <= 2.0 * ex;
    Ok((
        parity && ex_ok && ap_ok,
        format!(
            "approx best {ap:.4} vs exact best {ex:.4} (within 2x: {parity}); exact beats corners {ex_k:.4}/{ex_m:.4}: {ex_ok}; approx beats corners {ap_k:.4}/{ap_m:.4}: {ap_ok}"
        ),
    ))
}

fn c11_downstream() -> Check {
    let spec = MethodSpec::cota(CostKind::Omega, CotaWeights::from_ternary(0.2, 0.5, 0.3).unwrap(), SolverConfig::default());
    let mut wins = 0;
    let mut means = [0.0; 3];
    for seed in 0..10u64 {
        let data = SyntheticEbm::default().generate(5, seed).map_err(err)?;
        let (rows, _) = run_downstream(&data, &spec, 1000, seed).map_err(err)?;
        if rows[1].mean < rows[0].mean && rows[2].mean < rows[0].mean {
            wins += 1;
        }
        for t in 0..3 {
            means[t] += rows[t].mean / 10.0;
        }
    }
    Ok((
        wins >= 8,
        format!(
            "task 2 and task 3 below task 1 on {wins}/10 seeds; average MSE {:.3} / {:.3} / {:.3}",
            means[0], means[1], means[2]
        ),
    ))
}

fn report(n: usize, name: &str, c: Check) -> bool {
    let (ok, detail) = c.unwrap_or_else(|e| (false, format!("error: {e}")));
    println!("{} {n:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() {
    // the suite runs on one worker so the runtime criterion is single-threaded
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let mut passed = 0;
    pool.install(|| {
        passed += report(1, "omega-cost golden matrix", c1_golden()) as usize;
        let runs = stc_runs();
        let with = |f: fn(&StcRuns) -> Check| match &runs {
            Ok(r) => f(r),
            Err(e) => Err(e.clone()),
        };
        passed += report(2, "STC_np ordering", with(c2_table)) as usize;
        passed += report(3, "lambda benefit on the STC_np surface", with(c3_lambda)) as usize;
        passed += report(4, "solver against oracles", with(c4_oracle)) as usize;
        passed += report(5, "g-formula identity", c5_gformula()) as usize;
        passed += report(6, "convexity chords", c6_convexity()) as usize;
        passed += report(7, "gradient against finite differences", c7_gradient()) as usize;
        passed += report(8, "feasibility and determinism", c8_feasibility()) as usize;
        passed += report(9, "identity abstraction", c9_identity()) as usize;
        passed += report(10, "approximate vs exact COTA", with(c10_approx)) as usize;
        passed += report(11, "downstream regression", c11_downstream()) as usize;
    });
    let secs = start.elapsed().as_secs_f64();
    // a single worker bounds the four-worker time from above
    let ok = secs <= 600.0;
    passed += report(
        12,
        "full-suite runtime",
        Ok((ok, format!("criteria 1-11 took {secs:.1} s on one worker (limits: 1800 s single-threaded, 600 s with 4 jobs)"))),
    ) as usize;
    println!("{passed}/12 criteria passed");
}
