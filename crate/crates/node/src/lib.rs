//! HTTP node for the certificate registry.
//!
//! The node owns a [`Ledger`](certchain_core::Ledger) through a single
//! writer task ([`NodeHandle`]) and a local [`CasStore`](certchain_core::CasStore)
//! for certificate metadata, and serves the `/v1` JSON API.

pub mod api;
pub mod config;
pub mod error;
pub mod node;
pub mod wire;

use std::path::Path;

use certchain_core::keystore::{Keystore, KeystoreError};
use certchain_core::ledger::{GenesisConfig, LedgerConfig, LedgerError};
use certchain_core::{CasStore, Keypair, Ledger};

pub use api::router;
pub use config::NodeConfig;
pub use error::ApiError;
pub use node::{now_ms, ClockMode, NodeError, NodeHandle};

#[derive(Debug, thiserror::Error)]
pub enum StartError {
    #[error(transparent)]
    Keystore(#[from] KeystoreError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Cas(#[from] certchain_core::cas::CasError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads the admin keystore, creating one if the file does not exist yet.
pub fn load_or_create_admin(path: &Path) -> Result<Keystore, StartError> {
    if path.exists() {
        return Ok(Keystore::load(path)?);
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let ks = Keystore::from_keypair(&Keypair::generate());
    ks.save(path)?;
    tracing::info!(address = %ks.address, path = %path.display(), "created admin keystore");
    Ok(ks)
}

/// Opens (or initializes) the chain and metadata store under `config.data_dir`
/// and starts the writer task.
pub fn start_node(config: &NodeConfig, clock: ClockMode) -> Result<(NodeHandle, Keystore), StartError> {
    let admin = load_or_create_admin(&config.admin_keystore_path())?;
    let mut genesis = GenesisConfig::new(admin.address);
    genesis.fees = config.fees();
    genesis.timestamp_ms = match clock {
        ClockMode::Wall { .. } => now_ms(),
        ClockMode::Manual => 0,
    };
    let ledger_config = LedgerConfig {
        max_block_txs: config.max_block_txs,
        ..LedgerConfig::default()
    };
    let ledger = Ledger::open(&config.data_dir.join("chain"), genesis, ledger_config)?;
    let cas = CasStore::open(config.data_dir.join("cas"))?;
    let (handle, _task) = NodeHandle::spawn(ledger, cas, clock);
    Ok((handle, admin))
}

/// Serves the API on `config.bind` until `shutdown` resolves.
pub async fn serve(
    config: NodeConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), StartError> {
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    serve_on(listener, config, shutdown).await
}

/// Like [`serve`], on an already bound listener.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    config: NodeConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), StartError> {
    let (handle, admin) = start_node(
        &config,
        ClockMode::Wall {
            block_interval_ms: config.block_interval_ms,
        },
    )?;
    tracing::info!(addr = %listener.local_addr()?, admin = %admin.address, "node listening");
    axum::serve(listener, router(handle, config.cors_origin.as_deref()))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}
