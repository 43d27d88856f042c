//! Latency and cost measurement: a batch of registrations with uniformly
//! distributed arrival times is pushed through the node's command queue,
//! and each transaction's inclusion and confirmation latency is read back
//! from the block timestamps.

use std::path::PathBuf;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use certchain_core::cas::CasError;
use certchain_core::ledger::{
    sign_transaction, GenesisConfig, LedgerConfig, LedgerError, ReceiptStatus, TxId, CONFIRMATION_DEPTH,
};
use certchain_core::{CasStore, CertificateData, ContractCall, Keypair, Ledger, MetadataDocument};
use certchain_node::{now_ms, ClockMode, NodeError, NodeHandle};

use crate::table::Table;

/// Registrations per issuer. Keeps every issuer inside the daily free
/// bandwidth quota.
pub const TXS_PER_ISSUER: usize = 10;
/// Granted to the admin at genesis to pay for authorizing many issuers.
pub const ADMIN_SETUP_BALANCE_SUN: u64 = 1_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchClock {
    /// Blocks are produced at exact multiples of the interval on a simulated clock.
    Logical,
    /// The node's own timer produces blocks in real time.
    Wall,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_txs: usize,
    pub block_interval_ms: u64,
    pub clock: BenchClock,
    pub seed: u64,
    /// Persist the chain and metadata here instead of a temporary directory.
    pub data_dir: Option<PathBuf>,
    /// Arrival offsets (ms) from the start of the measured window. Drawn
    /// uniformly over the window when absent.
    pub arrivals: Option<Vec<u64>>,
}

impl BenchConfig {
    pub fn new(n_txs: usize, block_interval_ms: u64, clock: BenchClock, seed: u64) -> Self {
        Self {
            n_txs,
            block_interval_ms,
            clock,
            seed,
            data_dir: None,
            arrivals: None,
        }
    }

    /// Length of the arrival window: one block interval per
    /// [`TXS_PER_ISSUER`] transactions, at least ten intervals.
    pub fn window_ms(&self) -> u64 {
        let intervals = self.n_txs.div_ceil(TXS_PER_ISSUER).max(10) as u64;
        intervals * self.block_interval_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub clock: BenchClock,
    pub seed: u64,
    pub n_txs: usize,
    pub block_interval_ms: u64,
    pub confirmation_depth: u64,
    pub issuers: usize,
    pub window_ms: u64,
    pub succeeded: usize,
    pub mean_inclusion_ms: f64,
    pub p50_inclusion_ms: u64,
    pub p95_inclusion_ms: u64,
    pub min_inclusion_ms: u64,
    pub max_inclusion_ms: u64,
    pub mean_confirmation_ms: f64,
    pub min_confirmation_ms: u64,
    pub max_confirmation_ms: u64,
    /// Fees paid by the measured registrations.
    pub total_fees_sun: u64,
    /// Fees paid by the admin while authorizing issuers before the window.
    pub setup_fees_sun: u64,
    pub chain_height: u64,
    pub chain_head: String,
}

impl LatencyReport {
    pub fn to_text(&self) -> String {
        let mut t = Table::new(["Metric", "Value"]);
        let rows = [
            ("clock", json!(self.clock).as_str().unwrap_or_default().to_owned()),
            ("transactions", self.n_txs.to_string()),
            ("succeeded", self.succeeded.to_string()),
            ("issuers", self.issuers.to_string()),
            ("block interval (ms)", self.block_interval_ms.to_string()),
            ("confirmation depth", self.confirmation_depth.to_string()),
            ("inclusion mean (ms)", format!("{:.1}", self.mean_inclusion_ms)),
            ("inclusion p50 (ms)", self.p50_inclusion_ms.to_string()),
            ("inclusion p95 (ms)", self.p95_inclusion_ms.to_string()),
            (
                "inclusion min/max (ms)",
                format!("{} / {}", self.min_inclusion_ms, self.max_inclusion_ms),
            ),
            ("confirmation mean (ms)", format!("{:.1}", self.mean_confirmation_ms)),
            (
                "confirmation min/max (ms)",
                format!("{} / {}", self.min_confirmation_ms, self.max_confirmation_ms),
            ),
            ("total fees (sun)", self.total_fees_sun.to_string()),
            ("setup fees (sun)", self.setup_fees_sun.to_string()),
            ("chain height", self.chain_height.to_string()),
            ("chain head", self.chain_head.clone()),
        ];
        for (k, v) in &rows {
            t.row([k, v.as_str()]);
        }
        t.render()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("benchmark needs at least one transaction")]
    Empty,
    #[error("block interval must be positive")]
    ZeroInterval,
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Cas(#[from] CasError),
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("issuer setup failed: {0}")]
    Setup(String),
}

/// Blocking entry point; builds its own runtime.
pub fn run_latency_bench(config: &BenchConfig) -> Result<LatencyReport, BenchError> {
    tokio::runtime::Builder::new_current_thread()
        .enable_time()
        .build()?
        .block_on(latency_bench(config))
}

struct Arrival {
    at_ms: u64,
    txid: TxId,
    tx: certchain_core::Transaction,
}

pub async fn latency_bench(config: &BenchConfig) -> Result<LatencyReport, BenchError> {
    if config.n_txs == 0 {
        return Err(BenchError::Empty);
    }
    if config.block_interval_ms == 0 {
        return Err(BenchError::ZeroInterval);
    }
    let interval = config.block_interval_ms;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let admin = Keypair::from_seed(rng.gen());
    let n_issuers = config.n_txs.div_ceil(TXS_PER_ISSUER);
    let issuers: Vec<Keypair> = (0..n_issuers).map(|_| Keypair::from_seed(rng.gen())).collect();

    let tmp = tempfile::tempdir()?;
    let root = config.data_dir.clone().unwrap_or_else(|| tmp.path().to_path_buf());
    let mut genesis = GenesisConfig::new(admin.address());
    genesis.balances.push((admin.address(), ADMIN_SETUP_BALANCE_SUN));
    let (clock, genesis_time) = match config.clock {
        BenchClock::Logical => (ClockMode::Manual, 0),
        BenchClock::Wall => (
            ClockMode::Wall {
                block_interval_ms: interval,
            },
            now_ms(),
        ),
    };
    genesis.timestamp_ms = genesis_time;
    let ledger = match &config.data_dir {
        Some(dir) => Ledger::open(&dir.join("chain"), genesis, LedgerConfig::default())?,
        None => Ledger::new(genesis, LedgerConfig::default()),
    };
    let cas = CasStore::open(root.join("cas"))?;
    let (node, _task) = NodeHandle::spawn(ledger, cas, clock);

    // authorize every issuer before the window opens
    let mut setup = Vec::new();
    let admin_nonce = node.read(|l| l.next_nonce(&admin.address()));
    for (i, issuer) in issuers.iter().enumerate() {
        let call = ContractCall::AuthorizeIssuer {
            issuer: issuer.address(),
        };
        let tx = sign_transaction(&admin, call, admin_nonce + i as u64, genesis_time);
        setup.push(node.submit(tx).await?);
    }
    let window_start = match config.clock {
        BenchClock::Logical => {
            let head = node.read(|l| l.chain_head().0);
            let t = genesis_time + interval * (head + 1);
            node.produce_block(t).await?;
            t
        }
        BenchClock::Wall => {
            wait_for(&node, &setup, 0).await;
            now_ms()
        }
    };
    let mut setup_fees = 0;
    for txid in &setup {
        let receipt = node.read(|l| l.get_receipt(txid).cloned());
        match receipt {
            Ok(r) if r.status == ReceiptStatus::Success => setup_fees += r.fee_paid,
            other => return Err(BenchError::Setup(format!("{other:?}"))),
        }
    }

    let window_ms = config.window_ms();
    let mut offsets: Vec<u64> = match &config.arrivals {
        Some(a) => a.clone(),
        None => (0..config.n_txs).map(|_| rng.gen_range(0..window_ms)).collect(),
    };
    offsets.sort_unstable();
    let mut nonces = vec![0u64; n_issuers];
    let mut arrivals = Vec::with_capacity(offsets.len());
    for (i, off) in offsets.iter().enumerate() {
        let at_ms = window_start + off;
        let k = i % n_issuers;
        let cert = bench_certificate(config.seed, i);
        let doc = MetadataDocument::new(&cert, [("sequence".to_owned(), json!(i))].into())
            .expect("generated certificates are valid");
        let metadata_cid = node.cas().put(&doc.to_canonical_bytes())?;
        let tx = sign_transaction(
            &issuers[k],
            ContractCall::RegisterCertificate { cert, metadata_cid },
            nonces[k],
            at_ms,
        );
        nonces[k] += 1;
        arrivals.push(Arrival {
            at_ms,
            txid: tx.txid(),
            tx,
        });
    }

    match config.clock {
        BenchClock::Logical => {
            let mut next = 0;
            let mut block_time = window_start;
            while next < arrivals.len() || node.read(|l| l.mempool_len()) > 0 {
                block_time += interval;
                while next < arrivals.len() && arrivals[next].at_ms < block_time {
                    node.submit(arrivals[next].tx.clone()).await?;
                    next += 1;
                }
                node.produce_block(block_time).await?;
            }
            for _ in 0..CONFIRMATION_DEPTH {
                block_time += interval;
                node.produce_block(block_time).await?;
            }
        }
        BenchClock::Wall => {
            for a in &mut arrivals {
                let now = now_ms();
                if a.at_ms > now {
                    tokio::time::sleep(Duration::from_millis(a.at_ms - now)).await;
                }
                a.at_ms = now_ms();
                node.submit(a.tx.clone()).await?;
            }
            let txids: Vec<TxId> = arrivals.iter().map(|a| a.txid).collect();
            wait_for(&node, &txids, CONFIRMATION_DEPTH).await;
        }
    }

    let ledger = node.ledger();
    let mut inclusion = Vec::with_capacity(arrivals.len());
    let mut confirmation = Vec::with_capacity(arrivals.len());
    let mut succeeded = 0;
    let mut fees = 0;
    for a in &arrivals {
        let receipt = ledger.get_receipt(&a.txid)?;
        if receipt.status == ReceiptStatus::Success {
            succeeded += 1;
        }
        fees += receipt.fee_paid;
        let Some(h) = receipt.block_height else { continue };
        let included = ledger.get_block(h)?.header.timestamp_ms;
        let confirmed = ledger.get_block(h + CONFIRMATION_DEPTH)?.header.timestamp_ms;
        inclusion.push(included.saturating_sub(a.at_ms));
        confirmation.push(confirmed.saturating_sub(a.at_ms));
    }
    inclusion.sort_unstable();
    confirmation.sort_unstable();
    let (height, head) = ledger.chain_head();
    Ok(LatencyReport {
        clock: config.clock,
        seed: config.seed,
        n_txs: arrivals.len(),
        block_interval_ms: interval,
        confirmation_depth: CONFIRMATION_DEPTH,
        issuers: n_issuers,
        window_ms,
        succeeded,
        mean_inclusion_ms: mean(&inclusion),
        p50_inclusion_ms: percentile(&inclusion, 0.50),
        p95_inclusion_ms: percentile(&inclusion, 0.95),
        min_inclusion_ms: inclusion.first().copied().unwrap_or(0),
        max_inclusion_ms: inclusion.last().copied().unwrap_or(0),
        mean_confirmation_ms: mean(&confirmation),
        min_confirmation_ms: confirmation.first().copied().unwrap_or(0),
        max_confirmation_ms: confirmation.last().copied().unwrap_or(0),
        total_fees_sun: fees,
        setup_fees_sun: setup_fees,
        chain_height: height,
        chain_head: hex_encode(&head),
    })
}

/// Polls until every txid has a receipt and `depth` blocks sit on top of the
/// latest including block.
async fn wait_for(node: &NodeHandle, txids: &[TxId], depth: u64) {
    loop {
        let done = node.read(|l| {
            let mut highest = 0;
            for id in txids {
                match l.get_receipt(id).ok().and_then(|r| r.block_height) {
                    Some(h) => highest = highest.max(h),
                    None => return false,
                }
            }
            l.height() >= highest + depth
        });
        if done {
            return;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

fn bench_certificate(seed: u64, i: usize) -> CertificateData {
    const HOLDERS: [&str; 5] = ["Alice Silva", "Bruno Costa", "Carla Dias", "Diego Lima", "Elisa Rocha"];
    const COURSES: [&str; 3] = ["Systems Analysis", "Computer Networks", "Data Science"];
    CertificateData::new(
        format!("BENCH-{seed}-{i:06}"),
        HOLDERS[i % HOLDERS.len()],
        COURSES[i % COURSES.len()],
        "IFSP",
        "2025-01-15",
        "2025-02-01",
    )
}

fn mean(sorted: &[u64]) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    sorted.iter().sum::<u64>() as f64 / sorted.len() as f64
}

/// Nearest-rank percentile over sorted samples.
fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
