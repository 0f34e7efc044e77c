use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::cached::CachedRates;
use crate::error::{Error, Result};
use crate::geometry::TierStats;
use crate::model::{nats_to_bps, to_per_macro_cell, Mode};

/// How a rate or ASE value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Numerical evaluation of the exact integrals (the reference).
    Integral,
    /// Closed-form approximation; interference-limited, equal exponents.
    ClosedForm,
    /// Simulation of PPP drops.
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Integral, Method::ClosedForm, Method::MonteCarlo];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Integral => "integral",
            Method::ClosedForm => "closed_form",
            Method::MonteCarlo => "monte_carlo",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "integral" | "numerical" => Ok(Method::Integral),
            "closed_form" | "closed" => Ok(Method::ClosedForm),
            "monte_carlo" | "mc" | "simulation" => Ok(Method::MonteCarlo),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// Per-tier rates and the resulting area spectral efficiency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub mode: Mode,
    pub method: Method,
    pub stats: TierStats,
    /// Mean rate of a scheduled user of each tier, nats/s/Hz.
    pub mean_rate: [f64; 2],
    /// Mean sum rate of an active BS of each tier, nats/s/Hz.
    pub cell_throughput: [f64; 2],
    /// nats/s/Hz/m².
    pub ase: f64,
    pub std_error: Option<f64>,
    pub cached: Option<CachedRates>,
}

impl RateReport {
    /// ASE in bps/Hz/m².
    pub fn ase_bps(&self) -> f64 {
        nats_to_bps(self.ase)
    }

    /// ASE in bps/Hz per macro-cell area (500²π m²).
    pub fn ase_bps_per_macro_cell(&self) -> f64 {
        to_per_macro_cell(self.ase_bps())
    }
}

pub(crate) fn analytic_only(method: Method) -> Result<()> {
    if method == Method::MonteCarlo {
        Err(Error::Precondition(
            "Monte Carlo estimates come from sim::estimate, not the analytic path".into(),
        ))
    } else {
        Ok(())
    }
}
