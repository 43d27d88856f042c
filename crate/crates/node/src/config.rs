//! Node configuration: a TOML file with environment overrides.
//!
//! | key                      | env                            | default          |
//! |--------------------------|--------------------------------|------------------|
//! | `bind`                   | `CERTCHAIN_BIND`               | `127.0.0.1:8080` |
//! | `block_interval_ms`      | `CERTCHAIN_BLOCK_INTERVAL_MS`  | `3000`           |
//! | `free_bandwidth_per_day` | `CERTCHAIN_FREE_BANDWIDTH`     | `5000`           |
//! | `sun_per_byte`           | `CERTCHAIN_SUN_PER_BYTE`       | `1000`           |
//! | `max_block_txs`          | `CERTCHAIN_MAX_BLOCK_TXS`      | `10000`          |
//! | `data_dir`               | `CERTCHAIN_DATA_DIR`           | `./certchain-data` |
//! | `admin_keystore`         | `CERTCHAIN_ADMIN_KEYSTORE`     | `<data_dir>/admin.json` |
//! | `cors_origin`            | `CERTCHAIN_CORS_ORIGIN`        | any origin       |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use certchain_core::ledger::{FeeSchedule, DEFAULT_BLOCK_INTERVAL_MS, DEFAULT_MAX_BLOCK_TXS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("environment variable {name}: {reason}")]
    Env { name: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    pub bind: String,
    pub block_interval_ms: u64,
    pub free_bandwidth_per_day: u64,
    pub sun_per_byte: u64,
    pub max_block_txs: usize,
    pub data_dir: PathBuf,
    pub admin_keystore: Option<PathBuf>,
    pub cors_origin: Option<String>,
}

impl Default for NodeConfig {
    fn default() -> Self {
        let fees = FeeSchedule::default();
        Self {
            bind: "127.0.0.1:8080".into(),
            block_interval_ms: DEFAULT_BLOCK_INTERVAL_MS,
            free_bandwidth_per_day: fees.free_bandwidth_per_day,
            sun_per_byte: fees.sun_per_byte,
            max_block_txs: DEFAULT_MAX_BLOCK_TXS,
            data_dir: PathBuf::from("./certchain-data"),
            admin_keystore: None,
            cors_origin: None,
        }
    }
}

impl NodeConfig {
    /// Reads `path` (if given) and applies `CERTCHAIN_*` overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.to_owned(),
                    source,
                })?;
                toml::from_str(&text)?
            }
            None => NodeConfig::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(name: &'static str, v: String) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::Env {
                name,
                reason: format!("`{v}` is not a number"),
            })
        }
        if let Some(v) = get("CERTCHAIN_BIND") {
            self.bind = v;
        }
        if let Some(v) = get("CERTCHAIN_BLOCK_INTERVAL_MS") {
            self.block_interval_ms = num("CERTCHAIN_BLOCK_INTERVAL_MS", v)?;
        }
        if let Some(v) = get("CERTCHAIN_FREE_BANDWIDTH") {
            self.free_bandwidth_per_day = num("CERTCHAIN_FREE_BANDWIDTH", v)?;
        }
        if let Some(v) = get("CERTCHAIN_SUN_PER_BYTE") {
            self.sun_per_byte = num("CERTCHAIN_SUN_PER_BYTE", v)?;
        }
        if let Some(v) = get("CERTCHAIN_MAX_BLOCK_TXS") {
            self.max_block_txs = num("CERTCHAIN_MAX_BLOCK_TXS", v)?;
        }
        if let Some(v) = get("CERTCHAIN_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = get("CERTCHAIN_ADMIN_KEYSTORE") {
            self.admin_keystore = Some(v.into());
        }
        if let Some(v) = get("CERTCHAIN_CORS_ORIGIN") {
            self.cors_origin = Some(v);
        }
        if self.block_interval_ms == 0 {
            return Err(ConfigError::Env {
                name: "CERTCHAIN_BLOCK_INTERVAL_MS",
                reason: "block interval must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn fees(&self) -> FeeSchedule {
        FeeSchedule {
            free_bandwidth_per_day: self.free_bandwidth_per_day,
            sun_per_byte: self.sun_per_byte,
        }
    }

    pub fn admin_keystore_path(&self) -> PathBuf {
        self.admin_keystore
            .clone()
            .unwrap_or_else(|| self.data_dir.join("admin.json"))
    }
}
