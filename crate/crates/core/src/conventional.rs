//! Mean rates and ASE of the conventional network: macro BSs plus pico BSs
//! whose users are capped by the backhaul capacity.
//!
//! These functions ignore `config.mode`, so a cached configuration can be
//! evaluated as if its helpers were backhaul-limited picos.

use crate::approx::max_power_rate_closed;
use crate::error::{Error, Result};
use crate::geometry::{tier_stats, TierStats};
use crate::kernel::max_power_rate;
use crate::model::{Mode, NetworkConfig, Tier};
use crate::report::{analytic_only, Method, RateReport};

fn backhaul_cap(config: &NetworkConfig) -> Result<f64> {
    let c = config.backhaul;
    if c.is_finite() && c >= 0.0 {
        Ok(c)
    } else {
        Err(Error::InvalidConfig(format!(
            "backhaul capacity {c} must be finite and non-negative"
        )))
    }
}

fn macro_rate(config: &NetworkConfig, stats: &TierStats, method: Method) -> Result<f64> {
    analytic_only(method)?;
    match method {
        Method::ClosedForm => max_power_rate_closed(config, Tier::Macro, stats.active, None),
        _ => Ok(max_power_rate(config, Tier::Macro, stats.association[0], stats.active, None)?.value),
    }
}

fn pico_rate(config: &NetworkConfig, stats: &TierStats, method: Method) -> Result<f64> {
    analytic_only(method)?;
    let cap = backhaul_cap(config)?;
    if stats.association[1] <= 0.0 {
        return Ok(0.0);
    }
    match method {
        Method::ClosedForm => max_power_rate_closed(config, Tier::Small, stats.active, Some(cap)),
        _ => Ok(max_power_rate(config, Tier::Small, stats.association[1], stats.active, Some(cap))?.value),
    }
}

/// Mean rate of a pico user, never above the backhaul capacity.
pub fn mean_rate_pico_integral(config: &NetworkConfig) -> Result<f64> {
    pico_rate(config, &tier_stats(config)?, Method::Integral)
}

/// Mean rate of a macro user.
pub fn mean_rate_macro_integral(config: &NetworkConfig) -> Result<f64> {
    macro_rate(config, &tier_stats(config)?, Method::Integral)
}

/// Closed-form pico rate; requires zero noise and equal exponents.
pub fn mean_rate_pico_closed(config: &NetworkConfig) -> Result<f64> {
    pico_rate(config, &tier_stats(config)?, Method::ClosedForm)
}

/// Closed-form macro rate; requires zero noise and equal exponents.
pub fn mean_rate_macro_closed(config: &NetworkConfig) -> Result<f64> {
    macro_rate(config, &tier_stats(config)?, Method::ClosedForm)
}

/// ASE = p_a,1 λ_1 M_1 R̄_1 + p_a,2 λ_2 R̄_2.
pub fn ase_conventional(config: &NetworkConfig, method: Method) -> Result<RateReport> {
    analytic_only(method)?;
    let stats = tier_stats(config)?;
    let r1 = if stats.active[0] > 0.0 {
        macro_rate(config, &stats, method)?
    } else {
        0.0
    };
    let r2 = if stats.active[1] > 0.0 {
        pico_rate(config, &stats, method)?
    } else {
        0.0
    };
    let m1 = config.tiers[0].antennas as f64;
    let cell_throughput = [m1 * r1, r2];
    let ase = Tier::ALL
        .iter()
        .map(|&t| stats.active_density(config, t) * cell_throughput[t.index()])
        .sum();
    Ok(RateReport {
        mode: Mode::Conventional,
        method,
        stats,
        mean_rate: [r1, r2],
        cell_throughput,
        ase,
        std_error: None,
        cached: None,
    })
}
