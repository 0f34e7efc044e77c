use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use hetcache::config::parse_config;
use hetcache::model::{bps_to_nats, nats_to_bps, to_per_macro_cell, NetworkConfig};
use hetcache::report::Method;
use hetcache::sim::SimOptions;
use hetcache::tradeoff::{
    evaluate_ase, optimal_density_under_budget, solve_eta_for_target, sweep, BudgetOptions, Evaluation, SolveOptions,
    SweepSpec,
};
use hetcache::Error;

use crate::manifest::RunManifest;
use crate::output::{emit, num, opt, Table};
use crate::{AseArgs, OptimalArgs, SimArgs, TradeoffArgs, ValidateArgs};

pub const EXIT_CHECK: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

/// Closed-form tolerance vs the integral.
pub const CLOSED_TOLERANCE: f64 = 0.05;
/// Monte Carlo tolerance vs the integral.
pub const MC_TOLERANCE: f64 = 0.10;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn config(e: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_CONFIG,
            error: e.into(),
        }
    }

    fn numeric(e: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            error: e.into(),
        }
    }

    fn io(e: anyhow::Error) -> Self {
        Self {
            code: EXIT_CHECK,
            error: e,
        }
    }

    /// Configuration-type library errors map to the config exit code.
    fn from_lib(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::Units(_) => Self::config(e),
            _ => Self::numeric(e),
        }
    }
}

type CmdResult = Result<(), Failure>;

/// User-unit value, model-unit value and outcome of one sweep point.
type Point = (Option<f64>, f64, Result<Evaluation, String>);

fn load(path: &Path) -> Result<NetworkConfig, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::config)?;
    let (cfg, warnings) = parse_config(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(Failure::config)?;
    for w in warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(cfg)
}

fn sim_options(a: &SimArgs) -> SimOptions {
    SimOptions {
        drops: a.drops,
        seed: a.seed,
        expected_macros: a.expected_macros,
        ..SimOptions::default()
    }
}

fn check_method(method: Method, config: &NetworkConfig) -> Result<(), Failure> {
    if method == Method::ClosedForm && !config.equal_pathloss() {
        return Err(Failure::config(anyhow!(
            "closed_form needs a common pathloss exponent in both tiers"
        )));
    }
    Ok(())
}

pub fn ase(a: &AseArgs, argv: &[String]) -> CmdResult {
    let mut cfg = load(&a.config)?;
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    check_method(a.method, &cfg)?;
    let sim = sim_options(&a.sim);
    let mut manifest = RunManifest::new("ase", argv, &cfg).with_method(a.method);
    if a.method == Method::MonteCarlo {
        manifest = manifest.with_seed(sim.seed);
    }

    let (label, points): (&str, Vec<Point>) = match &a.sweep {
        None => {
            let r = evaluate_ase(&cfg, a.method, &sim).map_err(|e| e.to_string());
            ("none", vec![(None, f64::NAN, r)])
        }
        Some(s) => {
            let user = s.grid.grid().values().map_err(Failure::from_lib)?;
            let mut grid = s.grid.grid();
            grid.lo = s.name.to_model(grid.lo, &cfg);
            grid.hi = s.name.to_model(grid.hi, &cfg);
            let spec = SweepSpec {
                var: s.name.var(),
                grid,
                config: cfg.clone(),
                method: a.method,
                sim,
            };
            let rows = sweep(&spec).map_err(Failure::from_lib)?;
            let pts = user
                .into_iter()
                .zip(rows)
                .map(|(u, r)| (Some(u), r.x, r.result))
                .collect();
            (s.name.label(), pts)
        }
    };

    let mut table = Table::new(&[
        "swept_value",
        "ase_bps_hz_m2",
        "ase_nats_hz_m2",
        "method",
        "stderr",
        "swept_value_si",
        "swept_var",
        "ase_bps_hz_per_macro_cell",
        "status",
    ])
    .map_err(Failure::io)?;
    let mut failed = 0;
    for (user, si, result) in &points {
        let (ase, se, status) = match result {
            Ok(e) => (Some(e.ase), e.std_error, "ok".to_string()),
            Err(msg) => {
                failed += 1;
                log::error!("{label} = {}: {msg}", opt(*user));
                (None, None, format!("error: {msg}"))
            }
        };
        table
            .row(&[
                opt(*user),
                opt(ase.map(nats_to_bps)),
                opt(ase),
                a.method.to_string(),
                opt(se.map(nats_to_bps)),
                if si.is_nan() { String::new() } else { num(*si) },
                label.to_string(),
                opt(ase.map(|x| to_per_macro_cell(nats_to_bps(x)))),
                status,
            ])
            .map_err(Failure::io)?;
    }
    emit(a.out.as_deref(), &manifest, &table.into_body().map_err(Failure::io)?).map_err(Failure::io)?;
    if failed > 0 {
        return Err(Failure::numeric(anyhow!("{failed} of {} points failed", points.len())));
    }
    Ok(())
}

pub fn tradeoff(a: &TradeoffArgs, argv: &[String]) -> CmdResult {
    let cfg = load(&a.config)?.with_mode(hetcache::model::Mode::Cached);
    cfg.catalog().map_err(Failure::from_lib)?;
    check_method(a.method, &cfg)?;
    let target_bps = match (a.target_ase, a.target_per_cell) {
        (Some(t), _) => t,
        (None, Some(c)) => hetcache::model::per_macro_cell(c),
        (None, None) => unreachable!("clap requires one target"),
    };
    if target_bps.is_nan() || target_bps <= 0.0 {
        return Err(Failure::config(anyhow!("target ASE must be positive")));
    }
    let target = bps_to_nats(target_bps);
    let densities = a.density_grid.grid().values().map_err(Failure::from_lib)?;
    let opts = SolveOptions {
        method: a.method,
        sim: sim_options(&a.sim),
        ..SolveOptions::default()
    };
    let mut manifest = RunManifest::new("tradeoff", argv, &cfg).with_method(a.method);
    if a.method == Method::MonteCarlo {
        manifest = manifest.with_seed(opts.sim.seed);
    }
    let files = cfg.catalog().map_err(Failure::from_lib)?.files as f64;

    let mut table = Table::new(&[
        "lambda2_per_m2",
        "eta",
        "iterations",
        "residual",
        "status",
        "lambda2_per_macro_cell",
        "cache_files",
        "integral_gap",
    ])
    .map_err(Failure::io)?;
    let mut numeric_failures = 0;
    for d in densities {
        let l2 = hetcache::model::per_macro_cell(d);
        let row = match solve_eta_for_target(target, &cfg.clone().with_tier2_density(l2), &opts) {
            Ok(s) => {
                let gap = s.verification.map(|v| v.rel_gap);
                let status = if s.verification.is_some_and(|v| v.flagged) {
                    "flagged"
                } else {
                    "ok"
                };
                vec![
                    num(l2),
                    num(s.x),
                    s.iterations.to_string(),
                    num(s.residual),
                    status.into(),
                    num(d),
                    num(s.x * files),
                    opt(gap),
                ]
            }
            Err(e) => {
                let status = match e {
                    Error::NoSolution { .. } => "no_solution",
                    _ => {
                        numeric_failures += 1;
                        "error"
                    }
                };
                log::warn!("λ2 = {d} per macro cell: {e}");
                vec![
                    num(l2),
                    String::new(),
                    String::new(),
                    String::new(),
                    status.into(),
                    num(d),
                    String::new(),
                    String::new(),
                ]
            }
        };
        table.row(&row).map_err(Failure::io)?;
    }
    emit(a.out.as_deref(), &manifest, &table.into_body().map_err(Failure::io)?).map_err(Failure::io)?;
    if numeric_failures > 0 {
        return Err(Failure::numeric(anyhow!("{numeric_failures} densities failed")));
    }
    Ok(())
}

fn delta_tag(delta: f64) -> String {
    format!("{delta}").replace('.', "p")
}

pub fn optimal_density(a: &OptimalArgs, argv: &[String]) -> CmdResult {
    let cfg = load(&a.config)?.with_mode(hetcache::model::Mode::Cached);
    cfg.catalog().map_err(Failure::from_lib)?;
    check_method(a.method, &cfg)?;
    let budget = match (a.budget, a.budget_per_m2) {
        (Some(b), _) => hetcache::model::per_macro_cell(b),
        (None, Some(b)) => b,
        (None, None) => unreachable!("clap requires one budget"),
    };
    if a.delta_list.is_empty() {
        return Err(Failure::config(anyhow!("delta list is empty")));
    }
    let opts = BudgetOptions {
        method: a.method,
        scan_points: a.points,
        sim: sim_options(&a.sim),
        ..BudgetOptions::default()
    };
    let mut manifest = RunManifest::new("optimal-density", argv, &cfg).with_method(a.method);
    if a.method == Method::MonteCarlo {
        manifest = manifest.with_seed(opts.sim.seed);
    }

    let mut summary = Table::new(&[
        "delta",
        "lambda2_per_m2",
        "lambda2_per_macro_cell",
        "eta",
        "ase_bps_hz_m2",
        "ase_bps_hz_per_macro_cell",
        "status",
    ])
    .map_err(Failure::io)?;
    let mut curves = Vec::new();
    for &delta in &a.delta_list {
        let c = cfg.clone().with_skew(delta);
        let opt = optimal_density_under_budget(budget, &c, a.range.per_m2(), &opts).map_err(Failure::from_lib)?;
        let mut curve = Table::new(&[
            "lambda2_per_m2",
            "lambda2_per_macro_cell",
            "eta",
            "ase_bps_hz_m2",
            "ase_bps_hz_per_macro_cell",
        ])
        .map_err(Failure::io)?;
        for p in &opt.curve {
            curve
                .row(&[
                    num(p.lambda2),
                    num(to_per_macro_cell(p.lambda2)),
                    num(p.eta),
                    num(nats_to_bps(p.ase)),
                    num(to_per_macro_cell(nats_to_bps(p.ase))),
                ])
                .map_err(Failure::io)?;
        }
        curves.push((delta, curve.into_body().map_err(Failure::io)?));
        summary
            .row(&[
                num(delta),
                num(opt.lambda2),
                num(to_per_macro_cell(opt.lambda2)),
                num(opt.eta),
                num(nats_to_bps(opt.ase)),
                num(to_per_macro_cell(nats_to_bps(opt.ase))),
                if opt.interior { "interior" } else { "boundary" }.into(),
            ])
            .map_err(Failure::io)?;
    }
    let mut outputs = vec![a.out_dir.join("summary.csv")];
    outputs.extend(
        curves
            .iter()
            .map(|(d, _)| a.out_dir.join(format!("curve_delta_{}.csv", delta_tag(*d)))),
    );
    manifest.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    emit(Some(&outputs[0]), &manifest, &summary.into_body().map_err(Failure::io)?).map_err(Failure::io)?;
    for (path, (_, body)) in outputs[1..].iter().zip(&curves) {
        emit(Some(path), &manifest, body).map_err(Failure::io)?;
    }
    Ok(())
}

struct Check {
    method: Method,
    ase: Option<f64>,
    std_error: Option<f64>,
    gap: Option<f64>,
    tolerance: Option<f64>,
    status: String,
}

pub fn validate(a: &ValidateArgs, argv: &[String]) -> CmdResult {
    let mut cfg = load(&a.config)?;
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    let sim = sim_options(&a.sim);
    let manifest = RunManifest::new("validate", argv, &cfg).with_seed(sim.seed);
    let reference = evaluate_ase(&cfg, Method::Integral, &sim)
        .map_err(Failure::from_lib)?
        .ase;

    let mut checks = vec![Check {
        method: Method::Integral,
        ase: Some(reference),
        std_error: None,
        gap: None,
        tolerance: None,
        status: "reference".into(),
    }];
    for (method, tol) in [
        (Method::ClosedForm, CLOSED_TOLERANCE),
        (Method::MonteCarlo, MC_TOLERANCE),
    ] {
        if method == Method::ClosedForm && !cfg.equal_pathloss() {
            checks.push(Check {
                method,
                ase: None,
                std_error: None,
                gap: None,
                tolerance: Some(tol),
                status: "skipped".into(),
            });
            continue;
        }
        let check = match evaluate_ase(&cfg, method, &sim) {
            Ok(e) => {
                let gap = if reference > 0.0 {
                    (e.ase - reference) / reference
                } else {
                    e.ase - reference
                };
                Check {
                    method,
                    ase: Some(e.ase),
                    std_error: e.std_error,
                    gap: Some(gap),
                    tolerance: Some(tol),
                    status: if gap.abs() <= tol { "pass" } else { "fail" }.into(),
                }
            }
            Err(e) => Check {
                method,
                ase: None,
                std_error: None,
                gap: None,
                tolerance: Some(tol),
                status: format!("error: {e}"),
            },
        };
        checks.push(check);
    }

    println!("mode: {:?}", cfg.mode);
    println!(
        "{:<12} {:>16} {:>14} {:>10} {:>8}  status",
        "method", "ase_bps_hz_m2", "per_macro_cell", "gap", "tol"
    );
    for c in &checks {
        println!(
            "{:<12} {:>16} {:>14} {:>10} {:>8}  {}",
            c.method.to_string(),
            c.ase.map(|x| format!("{:.6e}", nats_to_bps(x))).unwrap_or_default(),
            c.ase
                .map(|x| format!("{:.4}", to_per_macro_cell(nats_to_bps(x))))
                .unwrap_or_default(),
            c.gap.map(|g| format!("{:+.2}%", 100.0 * g)).unwrap_or_default(),
            c.tolerance.map(|t| format!("{:.0}%", 100.0 * t)).unwrap_or_default(),
            c.status
        );
    }
    if a.out.is_some() {
        let mut table = Table::new(&[
            "method",
            "ase_bps_hz_m2",
            "ase_nats_hz_m2",
            "stderr",
            "rel_gap",
            "tolerance",
            "status",
        ])
        .map_err(Failure::io)?;
        for c in &checks {
            table
                .row(&[
                    c.method.to_string(),
                    opt(c.ase.map(nats_to_bps)),
                    opt(c.ase),
                    opt(c.std_error.map(nats_to_bps)),
                    opt(c.gap),
                    opt(c.tolerance),
                    c.status.clone(),
                ])
                .map_err(Failure::io)?;
        }
        emit(a.out.as_deref(), &manifest, &table.into_body().map_err(Failure::io)?).map_err(Failure::io)?;
    }
    let failed = checks
        .iter()
        .filter(|c| c.status != "pass" && c.status != "reference" && c.status != "skipped")
        .count();
    if failed > 0 {
        return Err(Failure {
            code: EXIT_CHECK,
            error: anyhow!("{failed} method(s) outside tolerance"),
        });
    }
    Ok(())
}
