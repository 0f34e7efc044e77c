//! Numerical mean-rate integrals.
//!
//! Every mean rate in the model has the form
//!
//! ```text
//! R = (πλ_k/𝒫) ∫_0^cap dx ∫_0^∞ dv exp(−n(eˣ−1) v^(α_k/2) − Σ_j c_j(x) v^(α_k/α_j))
//! ```
//!
//! where v = r² is the squared serving distance, n = M_kσ²/P_k and c_j(x)
//! carries the interference from tier j. The v-integral is done exactly when
//! the exponents are all 1 and there is no noise, numerically otherwise.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::distance_weight;
use crate::model::{normalize, NetworkConfig, Tier};
use crate::quadrature::{integrate, integrate_to_infinity, Tolerance};
use crate::specfun::{interference_moment, z_function};

/// Outer integrand is truncated where it drops below this fraction of its
/// value at x = 0.
pub const TAIL_FRACTION: f64 = 1e-12;
/// Largest SINR threshold (in nats) the truncation search may reach.
pub const MAX_UPPER_LIMIT: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateIntegral {
    pub value: f64,
    /// Upper limit of the x-integral actually used.
    pub upper_limit: f64,
    /// Estimate of the neglected tail beyond `upper_limit`.
    pub tail_bound: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
enum Interference {
    /// Interferers outside the max-power exclusion disk.
    Excluded {
        weight: f64,
        active: f64,
        alpha: f64,
        antennas: u32,
        antenna_ratio: f64,
        exponent: f64,
    },
    /// Interferers anywhere in the plane; `weight` multiplies (eˣ−1)^(2/α).
    Unbounded { weight: f64, alpha: f64, exponent: f64 },
}

impl Interference {
    fn coefficient(&self, x: f64) -> Result<f64> {
        match *self {
            Interference::Excluded {
                weight,
                active,
                alpha,
                antennas,
                antenna_ratio,
                ..
            } => {
                let z = if active > 0.0 {
                    z_function(x, alpha, antennas, antenna_ratio)?
                } else {
                    0.0
                };
                Ok(weight * (1.0 + active * z))
            }
            Interference::Unbounded { weight, alpha, .. } => Ok(weight * x.exp_m1().powf(2.0 / alpha)),
        }
    }

    fn exponent(&self) -> f64 {
        match *self {
            Interference::Excluded { exponent, .. } | Interference::Unbounded { exponent, .. } => exponent,
        }
    }
}

struct Kernel {
    prefactor: f64,
    noise: f64,
    noise_exponent: f64,
    terms: Vec<Interference>,
    evaluations: std::cell::Cell<usize>,
}

impl Kernel {
    fn inner(&self, x: f64) -> Result<f64> {
        let mut coeffs = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let c = t.coefficient(x)?;
            if c > 0.0 {
                coeffs.push((c, t.exponent()));
            }
        }
        let noise = self.noise * x.exp_m1();
        let linear: f64 = coeffs.iter().filter(|(_, e)| *e == 1.0).map(|(c, _)| c).sum();
        if noise == 0.0 && coeffs.iter().all(|(_, e)| *e == 1.0) {
            if linear <= 0.0 {
                return Err(Error::Domain {
                    func: "rate kernel",
                    detail: "no interference and no noise: rate is unbounded".into(),
                });
            }
            return Ok(1.0 / linear);
        }
        let total: f64 = coeffs.iter().map(|(c, _)| c).sum();
        let scale = if total > 0.0 {
            1.0 / total
        } else {
            noise.powf(-1.0 / self.noise_exponent)
        };
        let est = integrate_to_infinity(
            |v| {
                let mut s = noise * v.powf(self.noise_exponent);
                for &(c, e) in &coeffs {
                    s += if e == 1.0 { c * v } else { c * v.powf(e) };
                }
                Ok((-s).exp())
            },
            0.0,
            scale,
            &Tolerance::default().with_rel(1e-10).with_abs(0.0),
        )?;
        self.evaluations.set(self.evaluations.get() + est.evaluations);
        Ok(est.value)
    }

    fn integrand(&self, x: f64) -> Result<f64> {
        self.evaluations.set(self.evaluations.get() + 1);
        Ok(self.prefactor * self.inner(x)?)
    }

    fn integrate(&self, cap: Option<f64>) -> Result<RateIntegral> {
        let tol = Tolerance::default().with_abs(0.0);
        let (upper, tail) = match cap {
            Some(c) if c <= 0.0 => {
                return Ok(RateIntegral {
                    value: 0.0,
                    upper_limit: 0.0,
                    tail_bound: 0.0,
                    error: 0.0,
                    evaluations: 0,
                })
            }
            Some(c) => (c, 0.0),
            None => {
                let f0 = self.integrand(0.0)?;
                let mut x = 4.0;
                let mut fx = self.integrand(x)?;
                while fx > TAIL_FRACTION * f0 {
                    x *= 2.0;
                    if x > MAX_UPPER_LIMIT {
                        return Err(Error::NonConvergence {
                            what: "rate integrand tail",
                            iterations: (x.log2() - 1.0) as usize,
                            partial: fx,
                        });
                    }
                    fx = self.integrand(x)?;
                }
                // the integrand decays at least like e^(−2x/α)
                let alpha_max = self.terms.iter().fold(2.0f64, |m, t| match *t {
                    Interference::Excluded { alpha, .. } | Interference::Unbounded { alpha, .. } => m.max(alpha),
                });
                (x, fx * alpha_max / 2.0)
            }
        };
        let est = integrate(|x| self.integrand(x), 0.0, upper, &tol)?;
        Ok(RateIntegral {
            value: est.value,
            upper_limit: upper,
            tail_bound: tail,
            error: est.error,
            evaluations: self.evaluations.get(),
        })
    }
}

fn noise_coefficient(config: &NetworkConfig, k: Tier) -> f64 {
    let p = config.tier(k);
    p.antennas as f64 * config.noise_power / p.power
}

/// Mean rate of a user attached to tier `k` by max received power.
/// `association` is the probability used to normalize the serving-distance
/// law (𝒫_k, or 𝒫_h,k for cache-hit users); `active` holds p_a,j per tier;
/// `cap` bounds the rate (backhaul), `None` for no cap.
pub fn max_power_rate(
    config: &NetworkConfig,
    k: Tier,
    association: f64,
    active: [f64; 2],
    cap: Option<f64>,
) -> Result<RateIntegral> {
    if !(association > 0.0) {
        return Err(Error::Precondition(format!(
            "association probability of {k} is {association}; rate undefined"
        )));
    }
    let n = normalize(config, k);
    let ak = config.tier(k).alpha;
    let terms = Tier::ALL
        .iter()
        .filter(|&&j| config.tier(j).density > 0.0)
        .map(|&j| {
            let p = config.tier(j);
            Interference::Excluded {
                weight: distance_weight(config, j, k),
                active: active[j.index()],
                alpha: p.alpha,
                antennas: p.antennas,
                antenna_ratio: n.antennas(j),
                exponent: ak / p.alpha,
            }
        })
        .collect();
    Kernel {
        prefactor: PI * config.tier(k).density / association,
        noise: noise_coefficient(config, k),
        noise_exponent: ak / 2.0,
        terms,
        evaluations: Default::default(),
    }
    .integrate(cap)
}

/// Mean rate of a cache-miss user served by its nearest macro BS, with
/// active helpers interfering from anywhere.
pub fn miss_rate(config: &NetworkConfig, active: [f64; 2]) -> Result<RateIntegral> {
    let m = config.tier(Tier::Macro);
    let h = config.tier(Tier::Small);
    let n = normalize(config, Tier::Macro);
    let mut terms = vec![Interference::Excluded {
        weight: PI * m.density,
        active: active[0],
        alpha: m.alpha,
        antennas: m.antennas,
        antenna_ratio: 1.0,
        exponent: 1.0,
    }];
    let helper_density = active[1] * h.density;
    if helper_density > 0.0 {
        let d = 2.0 / h.alpha;
        terms.push(Interference::Unbounded {
            weight: PI
                * helper_density
                * interference_moment(h.alpha, h.antennas)
                * (n.power(Tier::Small) / n.antennas(Tier::Small)).powf(d),
            alpha: h.alpha,
            exponent: m.alpha / h.alpha,
        });
    }
    Kernel {
        prefactor: PI * m.density,
        noise: noise_coefficient(config, Tier::Macro),
        noise_exponent: m.alpha / 2.0,
        terms,
        evaluations: Default::default(),
    }
    .integrate(None)
}
