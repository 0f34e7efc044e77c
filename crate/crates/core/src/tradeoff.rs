//! Density and cache-capacity experiments: ASE sweeps, bisection for the
//! density or cache size that reaches a target ASE, and the best helper
//! density under a fixed cache budget per unit area.

use rayon::prelude::*;
use serde::Serialize;

use crate::cached::ase_cached;
use crate::conventional::ase_conventional;
use crate::error::{Error, Result};
use crate::model::{Mode, NetworkConfig};
use crate::report::Method;
use crate::sim::{estimate, SimOptions};

/// Relative gap between the solver method and the integral above which a
/// solution is flagged.
pub const VERIFY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    /// Tier-2 density in BSs per m².
    Lambda2,
    /// Cache size as a fraction of the catalog.
    Eta,
    /// Backhaul capacity in nats/s/Hz.
    Backhaul,
    /// Zipf exponent.
    Skew,
}

impl SweepVar {
    /// Copy of `config` with this variable set to `x`.
    pub fn apply(self, config: &NetworkConfig, x: f64) -> NetworkConfig {
        let c = config.clone();
        match self {
            SweepVar::Lambda2 => c.with_tier2_density(x),
            SweepVar::Eta => c.with_eta(x),
            SweepVar::Backhaul => c.with_backhaul(x),
            SweepVar::Skew => c.with_skew(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn linear(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            lo,
            hi,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(lo: f64, hi: f64, points: usize) -> Self {
        Self {
            lo,
            hi,
            points,
            spacing: Spacing::Log,
        }
    }

    /// Grid values; a single point is `lo`.
    pub fn values(&self) -> Result<Vec<f64>> {
        let bad = |m: &str| {
            Err(Error::InvalidConfig(format!(
                "grid {}..{} ({} points): {m}",
                self.lo, self.hi, self.points
            )))
        };
        if self.points == 0 {
            return bad("needs at least one point");
        }
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return bad("bounds must be finite");
        }
        if self.points == 1 {
            return Ok(vec![self.lo]);
        }
        if !(self.hi > self.lo) {
            return bad("must be strictly increasing");
        }
        if self.spacing == Spacing::Log && !(self.lo > 0.0) {
            return bad("log spacing needs positive bounds");
        }
        let n = self.points - 1;
        let v = (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                match self.spacing {
                    Spacing::Linear => self.lo + t * (self.hi - self.lo),
                    Spacing::Log => (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp(),
                }
            })
            .collect::<Vec<_>>();
        // pin the end points against rounding
        let mut v = v;
        v[0] = self.lo;
        v[n] = self.hi;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    /// nats/s/Hz/m².
    pub ase: f64,
    pub std_error: Option<f64>,
}

/// ASE of `config` in its own mode. Closed forms are evaluated on the
/// noiseless projection of the configuration.
pub fn evaluate_ase(config: &NetworkConfig, method: Method, sim: &SimOptions) -> Result<Evaluation> {
    match method {
        Method::MonteCarlo => {
            let est = estimate(config, sim)?;
            Ok(Evaluation {
                ase: est.ase.mean,
                std_error: Some(est.ase.std_error),
            })
        }
        _ => {
            let noiseless;
            let cfg = if method == Method::ClosedForm {
                noiseless = config.noiseless();
                &noiseless
            } else {
                config
            };
            let report = match cfg.mode {
                Mode::Conventional => ase_conventional(cfg, method)?,
                Mode::Cached => ase_cached(cfg, method)?,
            };
            Ok(Evaluation {
                ase: report.ase,
                std_error: None,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub grid: Grid,
    pub config: NetworkConfig,
    pub method: Method,
    pub sim: SimOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub x: f64,
    pub method: Method,
    pub result: std::result::Result<Evaluation, String>,
}

/// Evaluate every grid point in parallel; a failing point is recorded and
/// the sweep continues.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let xs = spec.grid.values()?;
    Ok(xs
        .par_iter()
        .map(|&x| {
            let cfg = spec.var.apply(&spec.config, x);
            let result = evaluate_ase(&cfg, spec.method, &spec.sim).map_err(|e| {
                log::warn!("{:?} = {x}: {e}", spec.var);
                e.to_string()
            });
            SweepRow {
                x,
                method: spec.method,
                result,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub method: Method,
    /// Stop when |ASE − target| ≤ rel_tol · target.
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Points of the monotonicity pre-scan.
    pub prescan: usize,
    /// Re-evaluate the solution with the integral path.
    pub verify: bool,
    pub sim: SimOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::ClosedForm,
            rel_tol: 1e-4,
            max_iterations: 60,
            prescan: 8,
            verify: true,
            sim: SimOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub integral_ase: f64,
    pub rel_gap: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Solution {
    /// Solved variable: η or λ_2 (per m²).
    pub x: f64,
    pub ase: f64,
    pub target: f64,
    pub iterations: usize,
    /// Final bracket in the solved variable.
    pub bracket: (f64, f64),
    /// |ASE − target| / target.
    pub residual: f64,
    /// Whether the pre-scan found the ASE increasing.
    pub monotone: bool,
    pub verification: Option<Verification>,
}

struct Root {
    u: f64,
    value: f64,
    iterations: usize,
    bracket: (f64, f64),
    monotone: bool,
}

/// Root of f(u) = target on [lo, hi] for f assumed increasing, in the
/// coordinate `u`; the pre-scan narrows to the first crossing when it is not.
fn solve_increasing(
    f: &dyn Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    target: f64,
    opts: &SolveOptions,
) -> Result<Root> {
    let tol = opts.rel_tol * target.abs();
    let n = opts.prescan.max(2);
    let us: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = us.iter().map(|&u| f(u)).collect::<Result<_>>()?;
    let monotone = vals.windows(2).all(|w| w[1] >= w[0]);
    let (f_lo, f_hi) = (vals[0], vals[n - 1]);
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (f_hi - target).abs() <= tol {
        return Ok(Root {
            u: hi,
            value: f_hi,
            iterations: 0,
            bracket: (hi, hi),
            monotone,
        });
    }
    if (f_lo - target).abs() <= tol {
        return Ok(Root {
            u: lo,
            value: f_lo,
            iterations: 0,
            bracket: (lo, lo),
            monotone,
        });
    }
    if !(target > f_lo && target <= max) {
        return Err(Error::NoSolution {
            target,
            low: f_lo,
            high: max,
        });
    }
    if !monotone {
        log::warn!("objective is not monotone on the pre-scan; refining the first crossing");
    }
    let i = vals.iter().position(|&v| v >= target).expect("target ≤ max");
    let (mut a, mut b) = (us[i - 1], us[i]);
    if (vals[i] - target).abs() <= tol {
        return Ok(Root {
            u: b,
            value: vals[i],
            iterations: 0,
            bracket: (a, b),
            monotone,
        });
    }
    for it in 1..=opts.max_iterations {
        let m = 0.5 * (a + b);
        let v = f(m)?;
        if (v - target).abs() <= tol {
            return Ok(Root {
                u: m,
                value: v,
                iterations: it,
                bracket: (a, b),
                monotone,
            });
        }
        if v < target {
            a = m;
        } else {
            b = m;
        }
        if b - a <= f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            return Ok(Root {
                u: m,
                value: v,
                iterations: it,
                bracket: (a, b),
                monotone,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "bisection",
        iterations: opts.max_iterations,
        partial: 0.5 * (a + b),
    })
}

fn verify(config: &NetworkConfig, ase: f64, opts: &SolveOptions) -> Result<Option<Verification>> {
    if !opts.verify || opts.method == Method::Integral {
        return Ok(None);
    }
    let integral = evaluate_ase(config, Method::Integral, &opts.sim)?.ase;
    let rel_gap = (ase - integral) / integral;
    let flagged = rel_gap.abs() > VERIFY_TOLERANCE;
    if flagged {
        log::warn!("solver method differs from the integral by {:.1}%", 100.0 * rel_gap);
    }
    Ok(Some(Verification {
        integral_ase: integral,
        rel_gap,
        flagged,
    }))
}

/// Cache size η ∈ [0, 1] at which the cached network reaches `target`
/// (nats/s/Hz/m²), at the tier-2 density of `config`.
pub fn solve_eta_for_target(target: f64, config: &NetworkConfig, opts: &SolveOptions) -> Result<Solution> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidConfig(format!("target ASE {target} must be positive")));
    }
    let base = config.clone().with_mode(Mode::Cached);
    base.catalog()?;
    let f = |eta: f64| evaluate_ase(&base.clone().with_eta(eta), opts.method, &opts.sim).map(|e| e.ase);
    let root = solve_increasing(&f, 0.0, 1.0, target, opts)?;
    let verification = verify(&base.clone().with_eta(root.u), root.value, opts)?;
    Ok(Solution {
        x: root.u,
        ase: root.value,
        target,
        iterations: root.iterations,
        bracket: root.bracket,
        residual: (root.value - target).abs() / target,
        monotone: root.monotone,
        verification,
    })
}

/// Tier-2 density in [lo, hi] (per m²) at which `config` reaches `target`;
/// bisection in log density.
pub fn solve_density_for_target(
    target: f64,
    config: &NetworkConfig,
    range: (f64, f64),
    opts: &SolveOptions,
) -> Result<Solution> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidConfig(format!("target ASE {target} must be positive")));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "density range {lo}..{hi} must be positive and increasing"
        )));
    }
    let f = |u: f64| evaluate_ase(&config.clone().with_tier2_density(u.exp()), opts.method, &opts.sim).map(|e| e.ase);
    let root = solve_increasing(&f, lo.ln(), hi.ln(), target, opts)?;
    let lambda2 = root.u.exp();
    let verification = verify(&config.clone().with_tier2_density(lambda2), root.value, opts)?;
    Ok(Solution {
        x: lambda2,
        ase: root.value,
        target,
        iterations: root.iterations,
        bracket: (root.bracket.0.exp(), root.bracket.1.exp()),
        residual: (root.value - target).abs() / target,
        monotone: root.monotone,
        verification,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetOptions {
    pub method: Method,
    /// Log-spaced scan points over the density range.
    pub scan_points: usize,
    /// Golden-section stop width in ln λ_2.
    pub log_tol: f64,
    pub max_iterations: usize,
    pub sim: SimOptions,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self {
            method: Method::ClosedForm,
            scan_points: 41,
            log_tol: 1e-4,
            max_iterations: 100,
            sim: SimOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub lambda2: f64,
    pub eta: f64,
    pub ase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetOptimum {
    pub lambda2: f64,
    pub eta: f64,
    pub ase: f64,
    /// False when the maximum sits on the range boundary or the curve is flat.
    pub interior: bool,
    pub iterations: usize,
    pub curve: Vec<CurvePoint>,
}

/// Cache fraction per helper when `budget` files per m² are spread over
/// density `lambda2`.
pub fn budget_eta(budget: f64, lambda2: f64, files: u64) -> f64 {
    let n = files as f64;
    (budget / lambda2).clamp(0.0, n) / n
}

/// Helper density in [lo, hi] maximizing the cached ASE when the total
/// cache per unit area λ_2 N_c is fixed at `budget`.
pub fn optimal_density_under_budget(
    budget: f64,
    config: &NetworkConfig,
    range: (f64, f64),
    opts: &BudgetOptions,
) -> Result<BudgetOptimum> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidConfig(format!("cache budget {budget} must be positive")));
    }
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "density range {lo}..{hi} must be positive and increasing"
        )));
    }
    if opts.scan_points < 3 {
        return Err(Error::InvalidConfig("budget scan needs at least 3 points".into()));
    }
    let base = config.clone().with_mode(Mode::Cached);
    let files = base.catalog()?.files;
    let point = |lambda2: f64| -> Result<CurvePoint> {
        let eta = budget_eta(budget, lambda2, files);
        let cfg = base.clone().with_tier2_density(lambda2).with_eta(eta);
        Ok(CurvePoint {
            lambda2,
            eta,
            ase: evaluate_ase(&cfg, opts.method, &opts.sim)?.ase,
        })
    };
    let grid = Grid::log(lo, hi, opts.scan_points).values()?;
    let curve: Vec<CurvePoint> = grid.par_iter().map(|&l| point(l)).collect::<Result<_>>()?;
    let (best, _) =
        curve.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, p)| if p.ase > bv { (i, p.ase) } else { (bi, bv) },
        );
    let min = curve.iter().map(|p| p.ase).fold(f64::INFINITY, f64::min);
    let flat = curve[best].ase - min <= 1e-9 * curve[best].ase.abs();
    if best == 0 || best == curve.len() - 1 || flat {
        log::warn!("budget optimum lies on the range boundary");
        let p = curve[best];
        return Ok(BudgetOptimum {
            lambda2: p.lambda2,
            eta: p.eta,
            ase: p.ase,
            interior: false,
            iterations: 0,
            curve,
        });
    }

    // golden section on ln λ_2 over the neighbouring scan cells
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = curve[best - 1].lambda2.ln();
    let mut b = curve[best + 1].lambda2.ln();
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = point(c.exp())?;
    let mut fd = point(d.exp())?;
    let mut iterations = 0;
    while b - a > opts.log_tol && iterations < opts.max_iterations {
        iterations += 1;
        if fc.ase >= fd.ase {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = point(c.exp())?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = point(d.exp())?;
        }
    }
    let mut opt = if fc.ase >= fd.ase { fc } else { fd };
    if curve[best].ase > opt.ase {
        opt = curve[best];
    }
    Ok(BudgetOptimum {
        lambda2: opt.lambda2,
        eta: opt.eta,
        ase: opt.ase,
        interior: true,
        iterations,
        curve,
    })
}
