//! Tier association, serving distance, BS activity and the Laplace
//! transform of PPP interference.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{normalize, NetworkConfig, Tier};
use crate::quadrature::{integrate_to_infinity, Tolerance};
use crate::specfun::{hyp2f1, interference_moment};

/// Shape parameter of the gamma approximation to the Voronoi cell area.
pub const CELL_AREA_SHAPE: f64 = 3.5;

/// π λ_j P̂_j^(2/α_j) for interferer tier `j` relative to serving tier `k`.
pub fn distance_weight(config: &NetworkConfig, j: Tier, k: Tier) -> f64 {
    let n = normalize(config, k);
    let p = config.tier(j);
    PI * p.density * n.power(j).powf(2.0 / p.alpha)
}

/// Exponent 2/α̂_j = 2α_k/α_j applied to r in the association kernel.
fn radial_exponent(config: &NetworkConfig, j: Tier, k: Tier) -> f64 {
    2.0 * config.tier(k).alpha / config.tier(j).alpha
}

/// Probability that the typical user is associated with tier `k`, by
/// quadrature of the max-received-power kernel.
pub fn association_prob(config: &NetworkConfig, k: Tier) -> Result<f64> {
    let lk = config.tier(k).density;
    if lk <= 0.0 {
        return Ok(0.0);
    }
    let j = k.other();
    let w = distance_weight(config, j, k);
    if w == 0.0 {
        return Ok(1.0);
    }
    let e = config.tier(k).alpha / config.tier(j).alpha;
    // u = π λ_k r²
    let est = integrate_to_infinity(
        |u| Ok((-u - w * (u / (PI * lk)).powf(e)).exp()),
        0.0,
        1.0,
        &Tolerance::default().with_rel(1e-12),
    )?;
    Ok(est.value.clamp(0.0, 1.0))
}

/// λ_k / Σ_j λ_j P̂_j^(2/α), valid for equal pathloss exponents.
pub fn association_prob_closed(config: &NetworkConfig, k: Tier) -> Result<f64> {
    if !config.equal_pathloss() {
        return Err(Error::Precondition(
            "closed association ratio needs equal pathloss exponents".into(),
        ));
    }
    let total: f64 = Tier::ALL.iter().map(|&j| distance_weight(config, j, k)).sum();
    Ok(PI * config.tier(k).density / total)
}

/// Association probabilities of both tiers; uses the exact ratio when the
/// exponents are equal and quadrature otherwise.
pub fn association_probs(config: &NetworkConfig) -> Result<[f64; 2]> {
    if config.equal_pathloss() {
        Ok([
            association_prob_closed(config, Tier::Macro)?,
            association_prob_closed(config, Tier::Small)?,
        ])
    } else {
        let p1 = association_prob(config, Tier::Macro)?;
        Ok([p1, association_prob(config, Tier::Small)?])
    }
}

/// Density of the distance to the serving BS for a user attached to tier `k`.
pub fn serving_distance_pdf(config: &NetworkConfig, k: Tier, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain {
            func: "serving_distance_pdf",
            detail: format!("r = {r} must be non-negative"),
        });
    }
    let assoc = association_probs(config)?[k.index()];
    if assoc <= 0.0 {
        return Err(Error::Precondition(format!("no users associate with {k}")));
    }
    let exponent: f64 = Tier::ALL
        .iter()
        .map(|&j| distance_weight(config, j, k) * r.powf(radial_exponent(config, j, k)))
        .sum();
    Ok(2.0 * PI * config.tier(k).density / assoc * r * (-exponent).exp())
}

/// Probability that a tier-`k` BS has at least one user, from the gamma
/// cell-area approximation. `association` is the share of users on tier `k`.
pub fn active_prob(config: &NetworkConfig, k: Tier, association: f64) -> f64 {
    let lk = config.tier(k).density;
    if lk <= 0.0 || association <= 0.0 || config.user_density <= 0.0 {
        return 0.0;
    }
    let load = association * config.user_density / (CELL_AREA_SHAPE * lk);
    (1.0 - (1.0 + load).powf(-CELL_AREA_SHAPE)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TierStats {
    pub association: [f64; 2],
    pub active: [f64; 2],
}

impl TierStats {
    pub fn from_association(config: &NetworkConfig, association: [f64; 2]) -> Self {
        Self {
            association,
            active: [
                active_prob(config, Tier::Macro, association[0]),
                active_prob(config, Tier::Small, association[1]),
            ],
        }
    }

    pub fn association(&self, t: Tier) -> f64 {
        self.association[t.index()]
    }

    pub fn active(&self, t: Tier) -> f64 {
        self.active[t.index()]
    }

    /// p_a,k λ_k.
    pub fn active_density(&self, config: &NetworkConfig, t: Tier) -> f64 {
        self.active(t) * config.tier(t).density
    }
}

/// Association and activity when every user picks the strongest BS.
pub fn tier_stats(config: &NetworkConfig) -> Result<TierStats> {
    Ok(TierStats::from_association(config, association_probs(config)?))
}

/// Interference from tier `interferer` at a user served by tier `serving`
/// at distance `distance`, with no interferer closer than `exclusion`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceQuery {
    pub s: f64,
    pub serving: Tier,
    pub interferer: Tier,
    pub distance: f64,
    pub exclusion: f64,
    /// p_a,j of the interfering tier.
    pub active_prob: f64,
}

impl LaplaceQuery {
    /// Exclusion radius P̂_j^(1/α_j) r^(α_k/α_j) implied by max-power association.
    pub fn max_power(
        config: &NetworkConfig,
        serving: Tier,
        interferer: Tier,
        r: f64,
        s: f64,
        active_prob: f64,
    ) -> Self {
        let n = normalize(config, serving);
        let aj = config.tier(interferer).alpha;
        let exclusion = n.power(interferer).powf(1.0 / aj) * r.powf(config.tier(serving).alpha / aj);
        Self {
            s,
            serving,
            interferer,
            distance: r,
            exclusion,
            active_prob,
        }
    }
}

/// E[exp(−s I_j)] for a thinned PPP of Gamma(M_j, 1/M_j)-faded interferers
/// outside the exclusion disk.
pub fn laplace_interference(query: &LaplaceQuery, config: &NetworkConfig) -> Result<f64> {
    let q = query;
    if !(q.s >= 0.0) || !(q.exclusion >= 0.0) {
        return Err(Error::Domain {
            func: "laplace_interference",
            detail: format!("s = {}, r0 = {} must be non-negative", q.s, q.exclusion),
        });
    }
    let p = config.tier(q.interferer);
    let density = q.active_prob * p.density;
    if q.s == 0.0 || density == 0.0 {
        return Ok(1.0);
    }
    if q.exclusion == 0.0 {
        return Ok(unbounded_laplace(q.s, density, p.power, p.antennas, p.alpha));
    }
    let m = p.antennas as f64;
    let d = 2.0 / p.alpha;
    let z = -q.s * p.power * q.exclusion.powf(-p.alpha) / m;
    let mut excess = hyp2f1(-d, m, 1.0 - d, z)? - 1.0;
    if excess < 0.0 && excess > -1e-14 {
        excess = 0.0;
    }
    Ok((-PI * density * q.exclusion * q.exclusion * excess).exp())
}

fn unbounded_laplace(s: f64, density: f64, power: f64, antennas: u32, alpha: f64) -> f64 {
    let m = antennas as f64;
    (-PI * density * interference_moment(alpha, antennas) * (s * power / m).powf(2.0 / alpha)).exp()
}

/// Laplace transform seen by a cache-miss user served by its nearest macro BS
/// at distance `r`: macro interferers lie beyond `r`, helpers anywhere.
pub fn laplace_interference_cachemiss(
    s: f64,
    j: Tier,
    r: f64,
    config: &NetworkConfig,
    active_prob: f64,
) -> Result<f64> {
    if !(s >= 0.0) || !(r >= 0.0) {
        return Err(Error::Domain {
            func: "laplace_interference_cachemiss",
            detail: format!("s = {s}, r = {r} must be non-negative"),
        });
    }
    let exclusion = match j {
        Tier::Macro => r,
        Tier::Small => 0.0,
    };
    laplace_interference(
        &LaplaceQuery {
            s,
            serving: Tier::Macro,
            interferer: j,
            distance: r,
            exclusion,
            active_prob,
        },
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::per_macro_cell;
    use crate::quadrature::integrate;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn single_tier_association() {
        let cfg = NetworkConfig::table_one().with_tier2_density(0.0);
        assert_eq!(association_prob(&cfg, Tier::Macro).unwrap(), 1.0);
        assert_eq!(association_prob(&cfg, Tier::Small).unwrap(), 0.0);
        assert_eq!(association_probs(&cfg).unwrap(), [1.0, 0.0]);
    }

    #[test]
    fn equal_power_association_is_density_ratio() {
        let mut cfg = NetworkConfig::table_one().with_tier2_density(per_macro_cell(3.0));
        cfg.tiers[1].power = cfg.tiers[0].power;
        assert!(rel(association_prob(&cfg, Tier::Macro).unwrap(), 0.25) < 1e-10);
        assert!(rel(association_prob_closed(&cfg, Tier::Macro).unwrap(), 0.25) < 1e-15);
    }

    #[test]
    fn table_one_association() {
        let cfg = NetworkConfig::table_one();
        let expected = 1.0 / (1.0 + 50.0 * 10f64.powf(-5.0 * (2.0 / 3.7) / 2.0));
        assert!(rel(expected, 0.309_935_357_079_767_3) < 1e-14);
        let closed = association_prob_closed(&cfg, Tier::Macro).unwrap();
        assert!(rel(closed, expected) < 1e-14);
        assert!(rel(association_prob(&cfg, Tier::Macro).unwrap(), expected) < 1e-9);
        let p = association_probs(&cfg).unwrap();
        assert!((p[0] + p[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unequal_exponents_sum_to_one() {
        let mut cfg = NetworkConfig::table_one();
        cfg.tiers[1].alpha = 4.2;
        let p1 = association_prob(&cfg, Tier::Macro).unwrap();
        let p2 = association_prob(&cfg, Tier::Small).unwrap();
        assert!((p1 + p2 - 1.0).abs() < 1e-9, "{p1} + {p2}");
        assert!(association_prob_closed(&cfg, Tier::Macro).is_err());
    }

    #[test]
    fn serving_distance_pdf_normalizes() {
        for alpha2 in [3.7, 4.5] {
            let mut cfg = NetworkConfig::table_one();
            cfg.tiers[1].alpha = alpha2;
            for k in Tier::ALL {
                let est =
                    integrate_to_infinity(|r| serving_distance_pdf(&cfg, k, r), 0.0, 100.0, &Tolerance::default())
                        .unwrap();
                assert!((est.value - 1.0).abs() < 1e-6, "{k}: {}", est.value);
            }
        }
    }

    #[test]
    fn single_tier_distance_is_rayleigh() {
        let cfg = NetworkConfig::table_one().with_tier2_density(0.0);
        let l = cfg.tiers[0].density;
        for r in [10.0, 100.0, 500.0] {
            let expected = 2.0 * PI * l * r * (-l * PI * r * r).exp();
            assert!(rel(serving_distance_pdf(&cfg, Tier::Macro, r).unwrap(), expected) < 1e-14);
        }
    }

    #[test]
    fn active_probability() {
        let mut cfg = NetworkConfig::table_one();
        cfg.tiers[1].density = cfg.user_density / 10.0;
        let p = active_prob(&cfg, Tier::Small, 0.5);
        assert!(rel(p, 1.0 - (1.0 + 5.0 / 3.5f64).powf(-3.5)) < 1e-15);
        assert!(rel(p, 0.955_200_629_119_382_6) < 1e-14);

        cfg.user_density = 0.0;
        assert_eq!(active_prob(&cfg, Tier::Small, 0.5), 0.0);
        cfg.user_density = 1e6;
        assert!(active_prob(&cfg, Tier::Macro, 1.0) > 1.0 - 1e-12);
    }

    #[test]
    fn active_probability_monotone() {
        let cfg = NetworkConfig::table_one();
        let mut prev = 0.0;
        for i in 1..50 {
            let mut c = cfg.clone();
            c.user_density = cfg.user_density * i as f64 / 10.0;
            let p = active_prob(&c, Tier::Small, 0.6);
            assert!(p > prev);
            prev = p;
        }
        // higher λ_k at fixed 𝒫_k λ_u
        let mut prev = 1.0;
        for i in 1..50 {
            let c = cfg.clone().with_tier2_density(per_macro_cell(i as f64 * 5.0));
            let p = active_prob(&c, Tier::Small, 0.6);
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn laplace_trivial_cases() {
        let cfg = NetworkConfig::table_one();
        let q = LaplaceQuery::max_power(&cfg, Tier::Macro, Tier::Small, 200.0, 0.0, 1.0);
        assert_eq!(laplace_interference(&q, &cfg).unwrap(), 1.0);
        let empty = cfg.clone().with_tier2_density(0.0);
        let q = LaplaceQuery::max_power(&empty, Tier::Macro, Tier::Small, 200.0, 1e10, 1.0);
        assert_eq!(laplace_interference(&q, &empty).unwrap(), 1.0);
        assert_eq!(
            laplace_interference_cachemiss(0.0, Tier::Small, 100.0, &cfg, 1.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn max_power_exclusion_radius() {
        let cfg = NetworkConfig::table_one();
        let q = LaplaceQuery::max_power(&cfg, Tier::Macro, Tier::Macro, 200.0, 1.0, 1.0);
        assert_eq!(q.exclusion, 200.0);
        let q = LaplaceQuery::max_power(&cfg, Tier::Macro, Tier::Small, 200.0, 1.0, 1.0);
        let expected = 10f64.powf(-2.5).powf(1.0 / 3.7) * 200.0;
        assert!(rel(q.exclusion, expected) < 1e-14);
    }

    #[test]
    fn laplace_monotone_and_bounded() {
        let cfg = NetworkConfig::table_one();
        let mut prev = 1.0;
        for i in 0..25 {
            let s = 10f64.powf(5.0 + 0.25 * i as f64);
            let q = LaplaceQuery::max_power(&cfg, Tier::Macro, Tier::Macro, 200.0, s, 0.9);
            let l = laplace_interference(&q, &cfg).unwrap();
            assert!(l > 0.0 && l <= prev, "s={s}");
            prev = l;
        }
        let mut prev = 1.0;
        for n in [1.0, 5.0, 20.0, 80.0] {
            let c = cfg.clone().with_tier2_density(per_macro_cell(n));
            let q = LaplaceQuery::max_power(&c, Tier::Macro, Tier::Small, 200.0, 1e10, 0.8);
            let l = laplace_interference(&q, &c).unwrap();
            assert!(l <= prev);
            prev = l;
        }
    }

    #[test]
    fn cachemiss_limit_matches_small_exclusion() {
        let cfg = NetworkConfig::table_one();
        for s in [1e8, 1e10, 1e12] {
            let closed = laplace_interference_cachemiss(s, Tier::Small, 150.0, &cfg, 0.7).unwrap();
            let q = LaplaceQuery {
                s,
                serving: Tier::Macro,
                interferer: Tier::Small,
                distance: 150.0,
                exclusion: 1e-6,
                active_prob: 0.7,
            };
            let near = laplace_interference(&q, &cfg).unwrap();
            assert!(rel(near, closed) < 1e-4, "s={s}: {near} vs {closed}");
        }
    }

    #[test]
    fn cachemiss_single_antenna_constant() {
        let cfg = NetworkConfig::table_one();
        let d = 2.0 / 3.7;
        let s = 1e10;
        let p = cfg.tiers[1].power;
        let coeff = PI * d / (PI * d).sin();
        let expected = (-PI * cfg.tiers[1].density * coeff * (s * p).powf(d)).exp();
        let got = laplace_interference_cachemiss(s, Tier::Small, 100.0, &cfg, 1.0).unwrap();
        assert!(rel(got, expected) < 1e-12);
    }

    #[test]
    fn laplace_matches_pgfl_quadrature() {
        // exp(−2π p λ ∫_{r0}^∞ (1 − (1 + sP v^{−α}/M)^{−M}) v dv)
        let cfg = NetworkConfig::table_one();
        for (j, r, s) in [
            (Tier::Macro, 200.0, 1e10),
            (Tier::Small, 300.0, 1e11),
            (Tier::Macro, 50.0, 1e7),
        ] {
            let q = LaplaceQuery::max_power(&cfg, Tier::Macro, j, r, s, 0.8);
            let p = cfg.tier(j);
            let m = p.antennas as f64;
            let est = integrate_to_infinity(
                |v| Ok(-(-m * (s * p.power * v.powf(-p.alpha) / m).ln_1p()).exp_m1() * v),
                q.exclusion,
                q.exclusion.max(1.0),
                &Tolerance::default().with_rel(1e-10),
            )
            .unwrap();
            let expected = (-2.0 * PI * 0.8 * p.density * est.value).exp();
            assert!(rel(laplace_interference(&q, &cfg).unwrap(), expected) < 1e-7);
        }
    }

    #[test]
    fn indefinite_integral_identity() {
        // d/dv [v(1 − ₂F₁(−2/α, M; 1−2/α; −c v^{−α/2}))] = 1 − (1 + c v^{−α/2})^{−M}
        for &(alpha, m) in &[(3.7, 4u32), (3.7, 1), (4.0, 2), (2.5, 3)] {
            for &c in &[0.1, 1.0, 30.0] {
                for &v in &[0.3, 1.0, 4.0, 25.0] {
                    let d = 2.0 / alpha;
                    let g = |v: f64| v * (1.0 - hyp2f1(-d, m as f64, 1.0 - d, -c * v.powf(-alpha / 2.0)).unwrap());
                    let h = 1e-5 * v;
                    let fd = (g(v + h) - g(v - h)) / (2.0 * h);
                    let exact = 1.0 - (1.0 + c * v.powf(-alpha / 2.0)).powf(-(m as f64));
                    assert!(
                        (fd - exact).abs() < 1e-6 * exact.abs().max(1e-3),
                        "α={alpha} M={m} c={c} v={v}"
                    );
                }
            }
        }
    }

    #[test]
    fn pdf_integral_form_is_consistent() {
        let cfg = NetworkConfig::table_one();
        let total = integrate(
            |r| serving_distance_pdf(&cfg, Tier::Small, r),
            0.0,
            5000.0,
            &Tolerance::default(),
        )
        .unwrap()
        .value;
        assert!((total - 1.0).abs() < 1e-6);
    }
}
