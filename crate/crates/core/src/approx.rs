//! Closed-form rate approximations for the interference-limited network
//! with a common pathloss exponent.
//!
//! The x-integral is split at ln 2: below it Z_j is replaced by its linear
//! form, above it by its exponential form, and both pieces integrate to
//! logarithms.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::geometry::distance_weight;
use crate::model::{NetworkConfig, Tier};
use crate::specfun::high_coefficient;

/// ln(1+y)/y with the removable point y = 0 filled in.
pub fn log1p_ratio(y: f64) -> f64 {
    if y.abs() < 1e-8 {
        1.0 - 0.5 * y
    } else {
        y.ln_1p() / y
    }
}

fn common_alpha(config: &NetworkConfig) -> Result<f64> {
    if config.noise_power != 0.0 {
        return Err(Error::Precondition(
            "closed forms assume an interference-limited network (zero noise)".into(),
        ));
    }
    if !config.equal_pathloss() {
        return Err(Error::Precondition(
            "closed forms assume a common pathloss exponent".into(),
        ));
    }
    Ok(config.tiers[0].alpha)
}

/// Weighted sums over tiers for serving tier k, all in units of π λ P̂^(2/α).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSums {
    /// Σ λ_j P̂_j^(2/α)
    pub total: f64,
    /// Σ p_a,j λ_j P̂_j^(2/α)
    pub active: f64,
    /// Σ (1 − p_a,j) λ_j P̂_j^(2/α)
    pub idle: f64,
    /// Σ p_a,j λ_j P̂_j^(2/α) ℳ_j
    pub weighted_active: f64,
}

impl ClosedFormSums {
    pub fn new(config: &NetworkConfig, k: Tier, active: [f64; 2]) -> Self {
        let mut s = Self {
            total: 0.0,
            active: 0.0,
            idle: 0.0,
            weighted_active: 0.0,
        };
        for j in Tier::ALL {
            let w = distance_weight(config, j, k);
            let a = active[j.index()];
            s.total += w;
            s.active += a * w;
            s.idle += (1.0 - a) * w;
            s.weighted_active += a * w * high_coefficient(j, k, config);
        }
        s
    }
}

/// ∫_0^c dx / (1 + g x) = c·ln(1 + gc)/(gc).
fn low_piece(c: f64, g: f64) -> f64 {
    c * log1p_ratio(g * c)
}

/// ∫_{ln 2}^∞ num / (idle + weighted e^(2x/α)) dx.
fn high_piece(alpha: f64, numerator: f64, idle: f64, weighted: f64) -> Result<f64> {
    if !(weighted > 0.0) {
        return Err(Error::Domain {
            func: "closed-form rate",
            detail: "no active interferers: noiseless rate is unbounded".into(),
        });
    }
    let q = 4f64.powf(-1.0 / alpha);
    Ok(0.5 * alpha * numerator * q / weighted * log1p_ratio(idle * q / weighted))
}

/// Closed-form mean rate of a max-power-associated user of tier `k`. With
/// a cap the linear small-x form is used over the whole range [0, cap];
/// without a cap the split at ln 2 applies.
pub fn max_power_rate_closed(config: &NetworkConfig, k: Tier, active: [f64; 2], cap: Option<f64>) -> Result<f64> {
    let alpha = common_alpha(config)?;
    let s = ClosedFormSums::new(config, k, active);
    let mk = config.tier(k).antennas as f64;
    // 1/𝒞_1 · 2M_k/(α−2)
    let slope = 2.0 * mk / (alpha - 2.0) * s.active / s.total;
    match cap {
        Some(c) => Ok(low_piece(c.max(0.0), slope)),
        None => Ok(low_piece(LN_2, slope) + high_piece(alpha, s.total, s.idle, s.weighted_active)?),
    }
}

/// Closed-form mean rate of a cache-miss user (nearest-macro association,
/// helpers interfering from anywhere).
pub fn miss_rate_closed(config: &NetworkConfig, active: [f64; 2]) -> Result<f64> {
    let alpha = common_alpha(config)?;
    let macro_weight = distance_weight(config, Tier::Macro, Tier::Macro);
    let m1 = config.tiers[0].antennas as f64;
    let low = low_piece(LN_2, 2.0 * active[0] * m1 / (alpha - 2.0));
    let weighted = Tier::ALL
        .iter()
        .map(|&j| {
            active[j.index()] * distance_weight(config, j, Tier::Macro) * high_coefficient(j, Tier::Macro, config)
        })
        .sum();
    let idle = (1.0 - active[0]) * macro_weight;
    Ok(low + high_piece(alpha, macro_weight, idle, weighted)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::tier_stats;

    fn cfg() -> NetworkConfig {
        NetworkConfig::table_one().noiseless()
    }

    #[test]
    fn ratio_is_stable_near_zero() {
        assert_eq!(log1p_ratio(0.0), 1.0);
        assert!((log1p_ratio(1e-9) - (1e-9f64).ln_1p() / 1e-9).abs() < 1e-15);
        assert!((log1p_ratio(1.0) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn rejects_noise_and_unequal_exponents() {
        let noisy = NetworkConfig::table_one();
        assert!(matches!(
            max_power_rate_closed(&noisy, Tier::Macro, [1.0, 1.0], None),
            Err(Error::Precondition(_))
        ));
        let mut c = cfg();
        c.tiers[1].alpha = 4.0;
        assert!(miss_rate_closed(&c, [1.0, 1.0]).is_err());
    }

    #[test]
    fn capped_form() {
        let c = cfg();
        assert_eq!(
            max_power_rate_closed(&c, Tier::Small, [0.9, 0.8], Some(0.0)).unwrap(),
            0.0
        );
        // full activity: 𝒞_1 = 1
        let cap = c.backhaul;
        let got = max_power_rate_closed(&c, Tier::Small, [1.0, 1.0], Some(cap)).unwrap();
        let expected = (3.7 - 2.0) / 2.0 * (1.0 + 2.0 * cap / (3.7 - 2.0)).ln();
        assert!((got - expected).abs() < 1e-15);
        assert!(got <= cap);
    }

    #[test]
    fn full_activity_limit_is_finite() {
        let c = cfg().with_tier2_density(0.0);
        let got = max_power_rate_closed(&c, Tier::Macro, [1.0, 0.0], None).unwrap();
        let m = high_coefficient(Tier::Macro, Tier::Macro, &c);
        let low = (3.7 - 2.0) / 8.0 * (1.0 + 8.0 / 1.7 * LN_2).ln();
        let high = 1.85 * 4f64.powf(-1.0 / 3.7) / m;
        assert!((got - low - high).abs() < 1e-14);
    }

    #[test]
    fn table_one_macro_value() {
        let c = cfg();
        let s = tier_stats(&c).unwrap();
        let r1 = max_power_rate_closed(&c, Tier::Macro, s.active, None).unwrap();
        let r2 = max_power_rate_closed(&c, Tier::Small, s.active, Some(c.backhaul)).unwrap();
        assert!(r1 > r2);
    }

    #[test]
    fn miss_low_piece_tends_to_ln2() {
        let c = cfg();
        let small = low_piece(LN_2, 2.0 * 1e-9 * 4.0 / 1.7);
        assert!((small - LN_2).abs() < 1e-8);
        assert!(miss_rate_closed(&c, [1e-9, 0.5]).unwrap().is_finite());
    }
}
