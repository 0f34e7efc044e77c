//! Run manifest written as the first comment line of every CSV.

use serde::Serialize;
use sha2::{Digest, Sha256};

use hetcache::config::ConfigFile;
use hetcache::model::NetworkConfig;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub method: Option<String>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str, args: &[String], config: &NetworkConfig) -> Self {
        let canonical = serde_json::to_vec(&ConfigFile::from_config(config)).expect("config serializes");
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            args: args.to_vec(),
            config_hash: sha256_hex(&canonical),
            seed: None,
            method: None,
            outputs: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_method(mut self, method: impl ToString) -> Self {
        self.method = Some(method.to_string());
        self
    }

    /// Hash of everything but the timestamp.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("manifest serializes"))
    }

    pub fn comment_line(&self) -> String {
        format!(
            "# {} {} manifest={} config={} command={} seed={} method={} generated={}",
            self.tool,
            self.version,
            self.hash(),
            self.config_hash,
            self.command,
            self.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
            self.method.as_deref().unwrap_or("-"),
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_config_and_args() {
        let cfg = NetworkConfig::table_one();
        let a = RunManifest::new("ase", &["x".into()], &cfg);
        let b = RunManifest::new("ase", &["x".into()], &cfg);
        assert_eq!(a.hash(), b.hash());
        let c = RunManifest::new("ase", &["y".into()], &cfg);
        assert_ne!(a.hash(), c.hash());
        let d = RunManifest::new("ase", &["x".into()], &cfg.clone().with_backhaul(1.0));
        assert_ne!(a.config_hash, d.config_hash);
        assert!(a.comment_line().starts_with("# hetcache-cli "));
        assert_eq!(a.hash().len(), 64);
    }
}
