//! Parsing of sweep, grid and range arguments.

use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use hetcache::model::{bps_to_nats, per_macro_cell, Mode, NetworkConfig};
use hetcache::report::Method;
use hetcache::tradeoff::{Grid, Spacing, SweepVar};

pub fn parse_mode(s: &str) -> Result<Mode, String> {
    match s.to_ascii_lowercase().as_str() {
        "conventional" | "conv" => Ok(Mode::Conventional),
        "cached" | "cache" => Ok(Mode::Cached),
        other => Err(format!("unknown mode '{other}' (conventional | cached)")),
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: hetcache::Error| e.to_string())
}

/// lo:hi:n[:log], in the user-facing unit of the swept variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridArg {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl FromStr for GridArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let spacing = match parts.len() {
            3 => Spacing::Linear,
            4 if parts[3] == "log" => Spacing::Log,
            4 if parts[3] == "lin" => Spacing::Linear,
            _ => bail!("grid '{s}' must be lo:hi:n or lo:hi:n:log"),
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .with_context(|| format!("'{t}' is not a number"))
        };
        Ok(Self {
            lo: num(parts[0])?,
            hi: num(parts[1])?,
            points: parts[2]
                .trim()
                .parse()
                .with_context(|| format!("'{}' is not a point count", parts[2]))?,
            spacing,
        })
    }
}

impl GridArg {
    pub fn grid(&self) -> Grid {
        Grid {
            lo: self.lo,
            hi: self.hi,
            points: self.points,
            spacing: self.spacing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepName {
    Lambda2,
    Eta,
    Backhaul,
    Skew,
}

impl SweepName {
    pub fn label(self) -> &'static str {
        match self {
            SweepName::Lambda2 => "lambda2",
            SweepName::Eta => "eta",
            SweepName::Backhaul => "backhaul",
            SweepName::Skew => "skew",
        }
    }

    pub fn var(self) -> SweepVar {
        match self {
            SweepName::Lambda2 => SweepVar::Lambda2,
            SweepName::Eta => SweepVar::Eta,
            SweepName::Backhaul => SweepVar::Backhaul,
            SweepName::Skew => SweepVar::Skew,
        }
    }

    /// User unit → model unit: per-macro-cell density → per m²,
    /// Mbps → nats/s/Hz.
    pub fn to_model(self, x: f64, config: &NetworkConfig) -> f64 {
        match self {
            SweepName::Lambda2 => per_macro_cell(x),
            SweepName::Backhaul => bps_to_nats(x * 1e6 / config.bandwidth),
            SweepName::Eta | SweepName::Skew => x,
        }
    }
}

/// var=lo:hi:n[:log].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepArg {
    pub name: SweepName,
    pub grid: GridArg,
}

impl FromStr for SweepArg {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (var, grid) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("sweep '{s}' must be var=lo:hi:n[:log]"))?;
        let name = match var.trim().to_ascii_lowercase().as_str() {
            "lambda2" | "density" => SweepName::Lambda2,
            "eta" => SweepName::Eta,
            "backhaul" | "c_bh" => SweepName::Backhaul,
            "skew" | "delta" => SweepName::Skew,
            other => bail!("unknown sweep variable '{other}' (lambda2 | eta | backhaul | skew)"),
        };
        Ok(Self {
            name,
            grid: grid.parse()?,
        })
    }
}

/// lo:hi helper density range per macro cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRange {
    pub lo: f64,
    pub hi: f64,
}

impl FromStr for DensityRange {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("range '{s}' must be lo:hi"))?;
        Ok(Self {
            lo: lo.trim().parse().with_context(|| format!("'{lo}' is not a number"))?,
            hi: hi.trim().parse().with_context(|| format!("'{hi}' is not a number"))?,
        })
    }
}

impl DensityRange {
    pub fn per_m2(&self) -> (f64, f64) {
        (per_macro_cell(self.lo), per_macro_cell(self.hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parses() {
        let s: SweepArg = "lambda2=1:100:30:log".parse().unwrap();
        assert_eq!(s.name, SweepName::Lambda2);
        assert_eq!(s.grid.points, 30);
        assert_eq!(s.grid.spacing, Spacing::Log);
        let s: SweepArg = "eta=0:1:5".parse().unwrap();
        assert_eq!(s.grid.spacing, Spacing::Linear);
        assert!("foo=1:2:3".parse::<SweepArg>().is_err());
        assert!("eta=1:2".parse::<SweepArg>().is_err());
        assert!("eta".parse::<SweepArg>().is_err());
    }

    #[test]
    fn units_convert() {
        let cfg = NetworkConfig::table_one();
        assert!((SweepName::Backhaul.to_model(10.0, &cfg) - cfg.backhaul).abs() < 1e-15);
        assert_eq!(SweepName::Eta.to_model(0.3, &cfg), 0.3);
    }

    #[test]
    fn range_parses() {
        let r: DensityRange = "1:1e4".parse().unwrap();
        assert_eq!((r.lo, r.hi), (1.0, 1e4));
        assert!("3".parse::<DensityRange>().is_err());
    }
}
