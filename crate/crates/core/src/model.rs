//! Network parameters, derived normalized quantities and unit handling.
//!
//! All rates inside the crate are in nats/s/Hz; powers are watts and
//! densities are nodes per m². Conversions to bps/Hz, dBm and the
//! "per macro cell" density idiom happen at the edges.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Area of a disk of radius 500 m; densities are often quoted as `n / (500²π)`.
pub const MACRO_CELL_AREA: f64 = 500.0 * 500.0 * PI;

/// Thermal noise power spectral density in dBm/Hz.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub const DEFAULT_NOISE_FIGURE_DB: f64 = 9.0;

/// Convert a density expressed in nodes per macro-cell area to nodes per m².
pub fn per_macro_cell(n: f64) -> f64 {
    n / MACRO_CELL_AREA
}

/// Inverse of [`per_macro_cell`].
pub fn to_per_macro_cell(density: f64) -> f64 {
    density * MACRO_CELL_AREA
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Thermal noise over `bandwidth_hz` plus a receiver noise figure, in watts.
pub fn thermal_noise_watts(bandwidth_hz: f64, figure_db: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + figure_db)
}

/// The two tiers of the network. `Macro` is tier 1, `Small` is tier 2
/// (pico BSs in the conventional network, helper nodes in the cached one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Macro,
    Small,
}

impl Tier {
    pub const ALL: [Tier; 2] = [Tier::Macro, Tier::Small];

    pub fn index(self) -> usize {
        match self {
            Tier::Macro => 0,
            Tier::Small => 1,
        }
    }

    pub fn other(self) -> Tier {
        match self {
            Tier::Macro => Tier::Small,
            Tier::Small => Tier::Macro,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tier::Macro => write!(f, "tier 1 (macro)"),
            Tier::Small => write!(f, "tier 2 (small cell)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Tier 2 are pico BSs with a finite-capacity backhaul.
    #[default]
    Conventional,
    /// Tier 2 are helper nodes with a cache and no backhaul.
    Cached,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Conventional => write!(f, "conventional"),
            Mode::Cached => write!(f, "cached"),
        }
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(Mode::Conventional),
            "cached" => Ok(Mode::Cached),
            other => Err(Error::InvalidConfig(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierParams {
    /// Nodes per m².
    pub density: f64,
    /// Transmit power in watts.
    pub power: f64,
    pub antennas: u32,
    pub alpha: f64,
}

/// Zipf-popular content catalog and per-helper cache size.
///
/// `cache_files` is kept as a real number so that solvers can treat the
/// normalized capacity η = N_c / N_f as continuous. A fractional cache holds
/// the first `floor(N_c)` files plus that fraction of the next one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZipfCatalog {
    pub files: u64,
    pub skew: f64,
    pub cache_files: f64,
}

impl ZipfCatalog {
    pub fn new(files: u64, skew: f64, cache_files: f64) -> Self {
        Self {
            files,
            skew,
            cache_files,
        }
    }

    pub fn with_eta(files: u64, skew: f64, eta: f64) -> Self {
        Self::new(files, skew, eta * files as f64)
    }

    pub fn eta(&self) -> f64 {
        self.cache_files / self.files as f64
    }

    /// Σ_{n=1}^{N_f} n^{-δ}, memoized per (N_f, δ).
    pub fn normalizer(&self) -> f64 {
        static CACHE: OnceLock<Mutex<HashMap<(u64, u64), f64>>> = OnceLock::new();
        let key = (self.files, self.skew.to_bits());
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(&h) = cache.lock().expect("zipf cache poisoned").get(&key) {
            return h;
        }
        let h = zipf_partial_sum(self.files, self.skew);
        cache.lock().expect("zipf cache poisoned").insert(key, h);
        h
    }

    /// Request probability of the `f`-th most popular file (1-based).
    pub fn request_probability(&self, f: u64) -> f64 {
        if f == 0 || f > self.files {
            return 0.0;
        }
        (f as f64).powf(-self.skew) / self.normalizer()
    }

    /// Total request probability of the first `n` files; linear in the
    /// fractional part of `n`.
    pub fn top_mass(&self, n: f64) -> f64 {
        let n = n.clamp(0.0, self.files as f64);
        let whole = n.floor() as u64;
        if whole >= self.files {
            return 1.0;
        }
        let frac = n - whole as f64;
        let partial = zipf_partial_sum(whole, self.skew) + frac * ((whole + 1) as f64).powf(-self.skew);
        (partial / self.normalizer()).min(1.0)
    }
}

fn zipf_partial_sum(n: u64, skew: f64) -> f64 {
    // smallest terms first
    (1..=n).rev().map(|k| (k as f64).powf(-skew)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub tiers: [TierParams; 2],
    /// Users per m².
    pub user_density: f64,
    /// Receiver noise power in watts; zero for the interference-limited case.
    pub noise_power: f64,
    /// Pico backhaul capacity in nats/s/Hz. Ignored in cached mode.
    pub backhaul: f64,
    /// Transmission bandwidth in Hz, used only for unit conversions.
    pub bandwidth: f64,
    pub mode: Mode,
    pub catalog: Option<ZipfCatalog>,
}

impl NetworkConfig {
    /// The reference scenario: λ_1 = 1/(500²π), λ_u = 50/(500²π), α = 3.7,
    /// 46/21 dBm, M_1 = 4, W = 20 MHz, 10 Mbps backhaul, N_f = 10⁵, δ = 0.8,
    /// η = 1%, λ_2 = 50λ_1, thermal noise with a 9 dB noise figure.
    pub fn table_one() -> Self {
        let bandwidth = 20e6;
        Self {
            tiers: [
                TierParams {
                    density: per_macro_cell(1.0),
                    power: dbm_to_watts(46.0),
                    antennas: 4,
                    alpha: 3.7,
                },
                TierParams {
                    density: per_macro_cell(50.0),
                    power: dbm_to_watts(21.0),
                    antennas: 1,
                    alpha: 3.7,
                },
            ],
            user_density: per_macro_cell(50.0),
            noise_power: thermal_noise_watts(bandwidth, DEFAULT_NOISE_FIGURE_DB),
            backhaul: bps_to_nats(10e6 / bandwidth),
            bandwidth,
            mode: Mode::Conventional,
            catalog: Some(ZipfCatalog::with_eta(100_000, 0.8, 0.01)),
        }
    }

    pub fn tier(&self, t: Tier) -> &TierParams {
        &self.tiers[t.index()]
    }

    pub fn tier_mut(&mut self, t: Tier) -> &mut TierParams {
        &mut self.tiers[t.index()]
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_tier2_density(mut self, density: f64) -> Self {
        self.tiers[1].density = density;
        self
    }

    pub fn with_backhaul(mut self, nats: f64) -> Self {
        self.backhaul = nats;
        self
    }

    pub fn with_noise_power(mut self, watts: f64) -> Self {
        self.noise_power = watts;
        self
    }

    /// Same network with thermal noise removed.
    pub fn noiseless(&self) -> Self {
        self.clone().with_noise_power(0.0)
    }

    /// Replace the cache size, keeping the catalog's file count and skew.
    pub fn with_eta(mut self, eta: f64) -> Self {
        let cat = self.catalog.unwrap_or(ZipfCatalog::with_eta(100_000, 0.8, 0.0));
        self.catalog = Some(ZipfCatalog::with_eta(cat.files, cat.skew, eta));
        self
    }

    pub fn with_cache_files(mut self, n: f64) -> Self {
        let cat = self.catalog.unwrap_or(ZipfCatalog::new(100_000, 0.8, 0.0));
        self.catalog = Some(ZipfCatalog::new(cat.files, cat.skew, n));
        self
    }

    pub fn with_skew(mut self, skew: f64) -> Self {
        let cat = self.catalog.unwrap_or(ZipfCatalog::new(100_000, skew, 0.0));
        self.catalog = Some(ZipfCatalog { skew, ..cat });
        self
    }

    pub fn equal_pathloss(&self) -> bool {
        self.tiers[0].alpha == self.tiers[1].alpha
    }

    /// Catalog required by cached-mode computations.
    pub fn catalog(&self) -> Result<&ZipfCatalog> {
        self.catalog
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("cached mode requires a catalog".into()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Vec<String>> {
        if self.is_valid() {
            Ok(self.warnings)
        } else {
            Err(Error::InvalidConfig(self.violations.join("; ")))
        }
    }
}

/// Check every model restriction. A density of zero for tier 2 is allowed
/// (single-tier degenerate network).
pub fn validate(config: &NetworkConfig) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut bad = |msg: String| report.violations.push(msg);

    for t in Tier::ALL {
        let p = config.tier(t);
        let name = match t {
            Tier::Macro => "tier-1",
            Tier::Small => "tier-2",
        };
        if !(p.density.is_finite() && p.density >= 0.0) {
            bad(format!("{name} density must be finite and non-negative"));
        }
        if !(p.power.is_finite() && p.power > 0.0) {
            bad(format!("{name} transmit power must be positive"));
        }
        if p.antennas < 1 {
            bad(format!("{name} antennas must be at least 1"));
        }
        if !(p.alpha.is_finite() && p.alpha > 2.0) {
            bad(format!("{name} pathloss exponent must exceed 2"));
        }
    }
    if config.tiers[0].density <= 0.0 {
        bad("tier-1 density must be positive".into());
    }
    if config.tiers[1].antennas != 1 {
        bad("tier-2 antennas must equal 1".into());
    }
    if !(config.user_density.is_finite() && config.user_density >= 0.0) {
        bad("user density must be finite and non-negative".into());
    }
    if !(config.noise_power.is_finite() && config.noise_power >= 0.0) {
        bad("noise power must be finite and non-negative".into());
    }
    if !(config.bandwidth.is_finite() && config.bandwidth > 0.0) {
        bad("bandwidth must be positive".into());
    }
    if config.mode == Mode::Conventional && !(config.backhaul.is_finite() && config.backhaul >= 0.0) {
        bad("backhaul capacity must be finite and non-negative".into());
    }
    match (&config.catalog, config.mode) {
        (None, Mode::Cached) => bad("cached mode requires a catalog".into()),
        (Some(cat), _) => {
            if cat.files == 0 {
                bad("catalog size must be positive".into());
            }
            if !(cat.skew.is_finite() && cat.skew >= 0.0) {
                bad("Zipf skew must be non-negative".into());
            }
            if !(cat.cache_files >= 0.0 && cat.cache_files <= cat.files as f64) {
                bad("cache size must lie in [0, catalog size]".into());
            }
        }
        (None, Mode::Conventional) => {}
    }

    let m1 = config.tiers[0].antennas as f64;
    if config.user_density < m1 * config.tiers[0].density {
        report.warnings.push(format!(
            "user density {:.3e}/m² is below M_1·λ_1 = {:.3e}/m²; macro BSs may not fill all {} streams",
            config.user_density,
            m1 * config.tiers[0].density,
            config.tiers[0].antennas
        ));
    }
    report
}

/// Antenna, power and pathloss ratios of each tier relative to a serving tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedParams {
    pub serving: Tier,
    pub antennas: [f64; 2],
    pub power: [f64; 2],
    pub alpha: [f64; 2],
}

impl NormalizedParams {
    pub fn antennas(&self, t: Tier) -> f64 {
        self.antennas[t.index()]
    }

    pub fn power(&self, t: Tier) -> f64 {
        self.power[t.index()]
    }

    pub fn alpha(&self, t: Tier) -> f64 {
        self.alpha[t.index()]
    }
}

pub fn normalize(config: &NetworkConfig, serving: Tier) -> NormalizedParams {
    let k = config.tier(serving);
    let ratio =
        |f: fn(&TierParams) -> f64| Tier::ALL.map(|t| if t == serving { 1.0 } else { f(config.tier(t)) / f(k) });
    NormalizedParams {
        serving,
        antennas: ratio(|p| p.antennas as f64),
        power: ratio(|p| p.power),
        alpha: ratio(|p| p.alpha),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateUnit {
    /// nats/s/Hz
    NatsPerHz,
    /// bps/Hz
    BitsPerHz,
    /// bps, requires a bandwidth
    BitsPerSecond,
}

impl FromStr for RateUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats/s/Hz" | "nats" => Ok(RateUnit::NatsPerHz),
            "bps/Hz" | "bits/s/Hz" => Ok(RateUnit::BitsPerHz),
            "bps" | "bits/s" => Ok(RateUnit::BitsPerSecond),
            other => Err(Error::Units(format!("unknown rate unit '{other}'"))),
        }
    }
}

pub fn nats_to_bps(nats: f64) -> f64 {
    nats / LN_2
}

pub fn bps_to_nats(bps: f64) -> f64 {
    bps * LN_2
}

/// Convert a rate between units. `bandwidth_hz` is needed whenever
/// absolute bit rates are involved.
pub fn convert_rate_units(value: f64, from: RateUnit, to: RateUnit, bandwidth_hz: Option<f64>) -> Result<f64> {
    let need_bw = || {
        bandwidth_hz
            .filter(|w| *w > 0.0 && w.is_finite())
            .ok_or_else(|| Error::Units(format!("conversion {from:?} -> {to:?} needs a positive bandwidth")))
    };
    let nats = match from {
        RateUnit::NatsPerHz => value,
        RateUnit::BitsPerHz => bps_to_nats(value),
        RateUnit::BitsPerSecond => bps_to_nats(value / need_bw()?),
    };
    Ok(match to {
        RateUnit::NatsPerHz => nats,
        RateUnit::BitsPerHz => nats_to_bps(nats),
        RateUnit::BitsPerSecond => nats_to_bps(nats) * need_bw()?,
    })
}
