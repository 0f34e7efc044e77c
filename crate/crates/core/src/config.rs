//! JSON configuration file schema.
//!
//! ```json
//! {
//!   "mode": "conventional",
//!   "tier1": { "density_per_macro_cell": 1, "power_dbm": 46, "antennas": 4, "alpha": 3.7 },
//!   "tier2": { "density_per_macro_cell": 50, "power_dbm": 21, "antennas": 1, "alpha": 3.7 },
//!   "user_density_per_macro_cell": 50,
//!   "backhaul_mbps": 10,
//!   "bandwidth_mhz": 20,
//!   "noise": { "enabled": true, "figure_db": 9 },
//!   "catalog": { "size": 100000, "skew": 0.8, "eta": 0.01 }
//! }
//! ```
//!
//! Densities take either `*_per_macro_cell` (nodes per 500²π m²) or
//! `*_per_m2`. The catalog takes either `cache_files` or `eta`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    bps_to_nats, dbm_to_watts, nats_to_bps, per_macro_cell, thermal_noise_watts, to_per_macro_cell, validate,
    watts_to_dbm, Mode, NetworkConfig, TierParams, ZipfCatalog, DEFAULT_NOISE_FIGURE_DB,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_per_macro_cell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_per_m2: Option<f64>,
    pub power_dbm: f64,
    pub antennas: u32,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseFile {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_figure")]
    pub figure_db: f64,
    /// Overrides the thermal-noise computation when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
}

impl Default for NoiseFile {
    fn default() -> Self {
        Self {
            enabled: true,
            figure_db: DEFAULT_NOISE_FIGURE_DB,
            power_dbm: None,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_figure() -> f64 {
    DEFAULT_NOISE_FIGURE_DB
}

fn default_bandwidth() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogFile {
    pub size: u64,
    pub skew: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_files: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub mode: Mode,
    pub tier1: TierFile,
    pub tier2: TierFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_density_per_macro_cell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_density_per_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backhaul_mbps: Option<f64>,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_mhz: f64,
    #[serde(default)]
    pub noise: NoiseFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogFile>,
}

fn pick_density(what: &str, per_cell: Option<f64>, per_m2: Option<f64>) -> Result<f64> {
    match (per_cell, per_m2) {
        (Some(n), None) => Ok(per_macro_cell(n)),
        (None, Some(d)) => Ok(d),
        (Some(_), Some(_)) => Err(Error::InvalidConfig(format!(
            "{what}: give only one of density_per_macro_cell / density_per_m2"
        ))),
        (None, None) => Err(Error::InvalidConfig(format!("{what}: density is missing"))),
    }
}

impl TierFile {
    fn to_params(&self, what: &str) -> Result<TierParams> {
        Ok(TierParams {
            density: pick_density(what, self.density_per_macro_cell, self.density_per_m2)?,
            power: dbm_to_watts(self.power_dbm),
            antennas: self.antennas,
            alpha: self.alpha,
        })
    }

    fn from_params(p: &TierParams) -> Self {
        Self {
            density_per_macro_cell: Some(to_per_macro_cell(p.density)),
            density_per_m2: None,
            power_dbm: watts_to_dbm(p.power),
            antennas: p.antennas,
            alpha: p.alpha,
        }
    }
}

impl ConfigFile {
    /// Convert to a [`NetworkConfig`]; does not run [`validate`].
    pub fn to_config(&self) -> Result<NetworkConfig> {
        let bandwidth = self.bandwidth_mhz * 1e6;
        let noise_power = match (self.noise.enabled, self.noise.power_dbm) {
            (false, _) => 0.0,
            (true, Some(dbm)) => dbm_to_watts(dbm),
            (true, None) => thermal_noise_watts(bandwidth, self.noise.figure_db),
        };
        let user_density = pick_density("users", self.user_density_per_macro_cell, self.user_density_per_m2)?;
        let catalog = match &self.catalog {
            None => None,
            Some(c) => Some(match (c.cache_files, c.eta) {
                (Some(n), None) => ZipfCatalog::new(c.size, c.skew, n),
                (None, Some(eta)) => ZipfCatalog::with_eta(c.size, c.skew, eta),
                (None, None) => ZipfCatalog::new(c.size, c.skew, 0.0),
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidConfig(
                        "catalog: give only one of cache_files / eta".into(),
                    ))
                }
            }),
        };
        Ok(NetworkConfig {
            tiers: [self.tier1.to_params("tier1")?, self.tier2.to_params("tier2")?],
            user_density,
            noise_power,
            backhaul: bps_to_nats(self.backhaul_mbps.unwrap_or(0.0) * 1e6 / bandwidth),
            bandwidth,
            mode: self.mode,
            catalog,
        })
    }

    pub fn from_config(cfg: &NetworkConfig) -> Self {
        Self {
            mode: cfg.mode,
            tier1: TierFile::from_params(&cfg.tiers[0]),
            tier2: TierFile::from_params(&cfg.tiers[1]),
            user_density_per_macro_cell: Some(to_per_macro_cell(cfg.user_density)),
            user_density_per_m2: None,
            backhaul_mbps: Some(nats_to_bps(cfg.backhaul) * cfg.bandwidth / 1e6),
            bandwidth_mhz: cfg.bandwidth / 1e6,
            noise: if cfg.noise_power > 0.0 {
                NoiseFile {
                    enabled: true,
                    figure_db: DEFAULT_NOISE_FIGURE_DB,
                    power_dbm: Some(watts_to_dbm(cfg.noise_power)),
                }
            } else {
                NoiseFile {
                    enabled: false,
                    ..NoiseFile::default()
                }
            },
            catalog: cfg.catalog.map(|c| CatalogFile {
                size: c.files,
                skew: c.skew,
                cache_files: Some(c.cache_files),
                eta: None,
            }),
        }
    }
}

/// Parse and validate a JSON config. Returns the config and any warnings.
pub fn parse_config(json: &str) -> Result<(NetworkConfig, Vec<String>)> {
    let file: ConfigFile = serde_json::from_str(json).map_err(|e| Error::InvalidConfig(format!("JSON: {e}")))?;
    let cfg = file.to_config()?;
    let mut warnings = validate(&cfg).into_result()?;
    if file.backhaul_mbps.is_none() && cfg.mode == Mode::Conventional {
        warnings.push("backhaul_mbps not set; pico users are capped at 0".into());
    }
    Ok((cfg, warnings))
}
