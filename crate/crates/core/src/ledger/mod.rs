//! Simulated single-producer chain: signed transactions, replay protection,
//! a mempool, block production with receipts, and bandwidth fees.
//!
//! Replay protection is two-layered. Every sender has a nonce sequence and
//! every txid ever accepted is remembered; a resubmitted transaction is
//! refused as [`Rejection::DuplicateTransaction`] before any other check.

mod block;
mod fees;
mod store;
mod tx;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::Address;
use crate::canonical::CertDigest;
use crate::codec::{sha256, DecodeError, Writer};
use crate::registry::{CallOutput, FaultInjection, RegistryState, RevertReason, ValidationResult};

pub use block::{merkle_root, Block, BlockHeader, GenesisConfig};
pub use fees::{charge_bandwidth, AccountMeta, FeeSchedule, InsufficientBalance, MS_PER_DAY};
pub use store::{ChainStore, CHAIN_FILE, SEEN_FILE};
pub use tx::{assemble_transaction, sign_transaction, Transaction, TxId};

pub const DEFAULT_BLOCK_INTERVAL_MS: u64 = 3000;
pub const DEFAULT_MAX_BLOCK_TXS: usize = 10_000;
/// Blocks on top of the including block before a transaction counts as
/// confirmed.
pub const CONFIRMATION_DEPTH: u64 = 1;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("chain io: {0}")]
    Io(#[from] std::io::Error),
    #[error("chain decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("chain corrupt: {0}")]
    Corrupt(String),
    #[error("stored genesis admin {stored} differs from configured admin {configured}")]
    GenesisMismatch { stored: Address, configured: Address },
}

/// Why a transaction never made it into a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(tag = "code")]
pub enum Rejection {
    #[error("signature does not verify for the sender")]
    BadSignature,
    #[error("transaction was already submitted")]
    DuplicateTransaction,
    #[error("nonce {got} already used, next is {expected}")]
    StaleNonce { expected: u64, got: u64 },
    #[error("nonce {got} skips ahead, next is {expected}")]
    FutureNonce { expected: u64, got: u64 },
    #[error("invalid call parameters")]
    InvalidParameters,
    #[error("insufficient balance: fee {fee} sun, balance {balance} sun")]
    InsufficientBalance { fee: u64, balance: u64 },
}

impl Rejection {
    pub fn code(&self) -> &'static str {
        match self {
            Rejection::BadSignature => "BadSignature",
            Rejection::DuplicateTransaction => "DuplicateTransaction",
            Rejection::StaleNonce { .. } => "StaleNonce",
            Rejection::FutureNonce { .. } => "FutureNonce",
            Rejection::InvalidParameters => "InvalidParameters",
            Rejection::InsufficientBalance { .. } => "InsufficientBalance",
        }
    }
}

impl From<InsufficientBalance> for Rejection {
    fn from(e: InsufficientBalance) -> Self {
        Rejection::InsufficientBalance {
            fee: e.fee,
            balance: e.balance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum ReceiptStatus {
    Success,
    Reverted(RevertReason),
    RejectedPreInclusion(Rejection),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub txid: TxId,
    #[serde(flatten)]
    pub status: ReceiptStatus,
    pub block_height: Option<u64>,
    pub bandwidth_consumed: u64,
    pub fee_paid: u64,
    /// Digest registered by a successful `RegisterCertificate`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate_digest: Option<CertDigest>,
}

#[derive(Debug, Clone, Copy)]
pub struct LedgerConfig {
    pub max_block_txs: usize,
    #[doc(hidden)]
    pub faults: FaultInjection,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        Self {
            max_block_txs: DEFAULT_MAX_BLOCK_TXS,
            faults: FaultInjection::default(),
        }
    }
}

/// Contract storage plus per-account bookkeeping; `state_root` commits to both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub registry: RegistryState,
    pub accounts: BTreeMap<Address, AccountMeta>,
    fees: FeeSchedule,
}

impl ChainState {
    pub fn from_genesis(genesis: &GenesisConfig, faults: FaultInjection) -> Self {
        let registry = RegistryState::new(genesis.admin)
            .with_counter(genesis.certificate_counter)
            .with_faults(faults);
        let mut accounts = BTreeMap::new();
        for (addr, balance) in &genesis.balances {
            accounts.insert(*addr, AccountMeta::fresh(&genesis.fees, genesis.timestamp_ms, *balance));
        }
        Self {
            registry,
            accounts,
            fees: genesis.fees,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.registry.encode(&mut w);
        w.u32(self.accounts.len() as u32);
        for (addr, meta) in &self.accounts {
            w.raw(addr.as_bytes());
            meta.encode(&mut w);
        }
        w.finish()
    }

    pub fn state_root(&self) -> [u8; 32] {
        sha256(&self.to_bytes())
    }

    fn account_or_fresh(&self, addr: &Address, now_ms: u64) -> AccountMeta {
        self.accounts
            .get(addr)
            .copied()
            .unwrap_or_else(|| AccountMeta::fresh(&self.fees, now_ms, 0))
    }

    /// Executes one transaction inside a block. `Err` means it cannot be
    /// included; state is unchanged in that case.
    fn execute(&mut self, tx: &Transaction, height: u64, timestamp_ms: u64) -> Result<Receipt, Rejection> {
        let mut account = self.account_or_fresh(&tx.sender, timestamp_ms);
        account.refresh_quota(&self.fees, timestamp_ms);
        if tx.nonce != account.next_nonce {
            return Err(nonce_rejection(account.next_nonce, tx.nonce));
        }
        let size = tx.size();
        let fee = charge_bandwidth(&mut account, size, &self.fees)?;
        account.next_nonce += 1;
        self.accounts.insert(tx.sender, account);

        let (status, certificate_digest) = match self.registry.apply_call(tx.sender, &tx.call, height) {
            Ok(CallOutput::CertificateRegistered(d)) => (ReceiptStatus::Success, Some(d)),
            Ok(CallOutput::IssuerAuthorized(_)) => (ReceiptStatus::Success, None),
            Err(reason) => (ReceiptStatus::Reverted(reason), None),
        };
        Ok(Receipt {
            txid: tx.txid(),
            status,
            block_height: Some(height),
            bandwidth_consumed: size,
            fee_paid: fee,
            certificate_digest,
        })
    }
}

fn nonce_rejection(expected: u64, got: u64) -> Rejection {
    if got < expected {
        Rejection::StaleNonce { expected, got }
    } else {
        Rejection::FutureNonce { expected, got }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerStats {
    pub chain_height: u64,
    pub mean_block_interval_ms: f64,
    pub total_certificates: u64,
    pub total_fees_sun: u64,
    pub mempool_size: usize,
}

pub struct Ledger {
    genesis: GenesisConfig,
    config: LedgerConfig,
    state: ChainState,
    blocks: Vec<Block>,
    receipts: HashMap<TxId, Receipt>,
    seen: HashSet<TxId>,
    mempool: BTreeMap<(Address, u64), Transaction>,
    total_fees: u64,
    store: Option<ChainStore>,
}

impl fmt::Debug for Ledger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ledger")
            .field("height", &self.height())
            .field("mempool", &self.mempool.len())
            .finish_non_exhaustive()
    }
}

impl Ledger {
    /// In-memory chain.
    pub fn new(genesis: GenesisConfig, config: LedgerConfig) -> Self {
        let state = ChainState::from_genesis(&genesis, config.faults);
        let genesis_block = Block {
            header: BlockHeader {
                height: 0,
                parent_hash: [0u8; 32],
                timestamp_ms: genesis.timestamp_ms,
                tx_root: merkle_root(&[]),
                state_root: state.state_root(),
                tx_count: 0,
            },
            transactions: Vec::new(),
        };
        Self {
            genesis,
            config,
            state,
            blocks: vec![genesis_block],
            receipts: HashMap::new(),
            seen: HashSet::new(),
            mempool: BTreeMap::new(),
            total_fees: 0,
            store: None,
        }
    }

    /// Opens a persistent chain in `dir`, replaying and verifying any blocks
    /// already stored. A stored genesis takes precedence over `genesis`, but
    /// its admin must match.
    pub fn open(dir: &Path, genesis: GenesisConfig, config: LedgerConfig) -> Result<Self, LedgerError> {
        if !ChainStore::exists(dir) {
            let mut store = ChainStore::create(dir, &genesis)?;
            let mut ledger = Self::new(genesis, config);
            store.append_block(&ledger.blocks[0])?;
            ledger.store = Some(store);
            return Ok(ledger);
        }
        let (store, loaded) = ChainStore::open(dir)?;
        if loaded.genesis.admin != genesis.admin {
            return Err(LedgerError::GenesisMismatch {
                stored: loaded.genesis.admin,
                configured: genesis.admin,
            });
        }
        let mut ledger = Self::replay(loaded.genesis, loaded.blocks, config)?;
        ledger.seen.extend(loaded.seen);
        ledger.store = Some(store);
        Ok(ledger)
    }

    /// Rebuilds a ledger by re-executing `blocks` from genesis, checking
    /// links, transaction roots and state roots along the way.
    pub fn replay(genesis: GenesisConfig, blocks: Vec<Block>, config: LedgerConfig) -> Result<Self, LedgerError> {
        let mut ledger = Self::new(genesis, config);
        let mut blocks = blocks.into_iter();
        match blocks.next() {
            Some(b0) if b0 == ledger.blocks[0] => {}
            Some(_) => return Err(LedgerError::Corrupt("genesis block does not match genesis config".into())),
            None => return Err(LedgerError::Corrupt("chain has no genesis block".into())),
        }
        for block in blocks {
            ledger.apply_stored_block(block)?;
        }
        Ok(ledger)
    }

    fn apply_stored_block(&mut self, block: Block) -> Result<(), LedgerError> {
        let parent = self.blocks.last().expect("genesis present");
        let h = &block.header;
        if h.height != parent.height() + 1 || h.parent_hash != parent.hash() {
            return Err(LedgerError::Corrupt(format!("block {} does not link to its parent", h.height)));
        }
        if h.tx_count as usize != block.transactions.len() || block.computed_tx_root() != h.tx_root {
            return Err(LedgerError::Corrupt(format!("block {} tx_root mismatch", h.height)));
        }
        for tx in &block.transactions {
            if !tx.verify() {
                return Err(LedgerError::Corrupt(format!("block {} carries a bad signature", h.height)));
            }
            let receipt = self
                .state
                .execute(tx, h.height, h.timestamp_ms)
                .map_err(|e| LedgerError::Corrupt(format!("block {}: {e}", h.height)))?;
            self.total_fees += receipt.fee_paid;
            self.seen.insert(receipt.txid);
            self.receipts.insert(receipt.txid, receipt);
        }
        if self.state.state_root() != h.state_root {
            return Err(LedgerError::Corrupt(format!("block {} state_root mismatch", h.height)));
        }
        self.blocks.push(block);
        Ok(())
    }

    pub fn genesis(&self) -> &GenesisConfig {
        &self.genesis
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn registry(&self) -> &RegistryState {
        &self.state.registry
    }

    pub fn fees(&self) -> &FeeSchedule {
        &self.genesis.fees
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn chain_head(&self) -> (u64, [u8; 32]) {
        let head = self.blocks.last().expect("genesis present");
        (head.height(), head.hash())
    }

    pub fn get_block(&self, height: u64) -> Result<&Block, LedgerError> {
        usize::try_from(height)
            .ok()
            .and_then(|h| self.blocks.get(h))
            .ok_or_else(|| LedgerError::NotFound(format!("block {height}")))
    }

    pub fn get_receipt(&self, txid: &TxId) -> Result<&Receipt, LedgerError> {
        self.receipts
            .get(txid)
            .ok_or_else(|| LedgerError::NotFound(format!("receipt {txid}")))
    }

    pub fn is_pending(&self, txid: &TxId) -> bool {
        self.seen.contains(txid) && !self.receipts.contains_key(txid)
    }

    pub fn mempool_len(&self) -> usize {
        self.mempool.len()
    }

    pub fn total_fees(&self) -> u64 {
        self.total_fees
    }

    pub fn account(&self, addr: &Address) -> Option<&AccountMeta> {
        self.state.accounts.get(addr)
    }

    /// Next nonce `addr` should use, counting transactions still pending.
    pub fn next_nonce(&self, addr: &Address) -> u64 {
        match self.mempool.range((*addr, 0)..=(*addr, u64::MAX)).next_back() {
            Some(((_, nonce), _)) => nonce + 1,
            None => self.state.accounts.get(addr).map_or(0, |a| a.next_nonce),
        }
    }

    pub fn validate_certificate(&self, digest: &CertDigest, issuer: &Address) -> ValidationResult {
        self.state.registry.validate_certificate(digest, issuer)
    }

    pub fn stats(&self) -> LedgerStats {
        let height = self.height();
        let head = self.blocks.last().expect("genesis present");
        let mean_block_interval_ms = if height == 0 {
            0.0
        } else {
            (head.header.timestamp_ms - self.blocks[0].header.timestamp_ms) as f64 / height as f64
        };
        LedgerStats {
            chain_height: height,
            mean_block_interval_ms,
            total_certificates: self.state.registry.total_certificates(),
            total_fees_sun: self.total_fees,
            mempool_size: self.mempool.len(),
        }
    }

    /// Admits a transaction to the mempool.
    pub fn submit(&mut self, tx: Transaction) -> Result<TxId, Rejection> {
        if !tx.verify() {
            return Err(Rejection::BadSignature);
        }
        let txid = tx.txid();
        if self.seen.contains(&txid) {
            return Err(Rejection::DuplicateTransaction);
        }
        tx.call.validate().map_err(|_| Rejection::InvalidParameters)?;
        let expected = self.next_nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(nonce_rejection(expected, tx.nonce));
        }
        self.check_affordable(&tx)?;
        self.seen.insert(txid);
        self.mempool.insert((tx.sender, tx.nonce), tx);
        Ok(txid)
    }

    /// Bills the sender's pending transactions plus `tx` against its current
    /// quota. Quota refreshes at inclusion can only make this more lenient.
    fn check_affordable(&self, tx: &Transaction) -> Result<(), Rejection> {
        let now = self.blocks.last().expect("genesis present").header.timestamp_ms;
        let mut account = self.state.account_or_fresh(&tx.sender, now);
        let pending = self.mempool.range((tx.sender, 0)..=(tx.sender, u64::MAX)).map(|(_, t)| t);
        for t in pending.chain(std::iter::once(tx)) {
            charge_bandwidth(&mut account, t.size(), &self.genesis.fees)?;
        }
        Ok(())
    }

    /// Drains the mempool in (sender, nonce) order into a new block at
    /// `now_ms` (clamped to the parent's timestamp). Empty blocks are normal.
    pub fn produce_block(&mut self, now_ms: u64) -> Result<&Block, LedgerError> {
        let parent = self.blocks.last().expect("genesis present");
        let height = parent.height() + 1;
        let parent_hash = parent.hash();
        let timestamp_ms = now_ms.max(parent.header.timestamp_ms);

        let keys: Vec<(Address, u64)> = self.mempool.keys().take(self.config.max_block_txs).copied().collect();
        let mut included = Vec::with_capacity(keys.len());
        let mut receipts = Vec::with_capacity(keys.len());
        let mut blocked: HashSet<Address> = HashSet::new();
        for key in keys {
            let tx = self.mempool.remove(&key).expect("key taken from mempool");
            if blocked.contains(&tx.sender) {
                self.mempool.insert(key, tx);
                continue;
            }
            match self.state.execute(&tx, height, timestamp_ms) {
                Ok(receipt) => {
                    receipts.push(receipt);
                    included.push(tx);
                }
                Err(rejection) => {
                    blocked.insert(tx.sender);
                    self.drop_rejected(&tx, rejection);
                }
            }
        }
        // later nonces of a sender whose transaction was dropped can never execute
        for sender in blocked {
            let stuck: Vec<_> = self
                .mempool
                .range((sender, 0)..=(sender, u64::MAX))
                .map(|(k, _)| *k)
                .collect();
            for key in stuck {
                let tx = self.mempool.remove(&key).expect("key present");
                let expected = self.state.account_or_fresh(&sender, timestamp_ms).next_nonce;
                self.drop_rejected(&tx, nonce_rejection(expected, tx.nonce));
            }
        }

        let txids: Vec<TxId> = included.iter().map(Transaction::txid).collect();
        let block = Block {
            header: BlockHeader {
                height,
                parent_hash,
                timestamp_ms,
                tx_root: merkle_root(&txids),
                state_root: self.state.state_root(),
                tx_count: included.len() as u32,
            },
            transactions: included,
        };
        if let Some(store) = self.store.as_mut() {
            store.append_block(&block)?;
        }
        for receipt in receipts {
            self.total_fees += receipt.fee_paid;
            self.receipts.insert(receipt.txid, receipt);
        }
        self.blocks.push(block);
        Ok(self.blocks.last().expect("just pushed"))
    }

    fn drop_rejected(&mut self, tx: &Transaction, rejection: Rejection) {
        let txid = tx.txid();
        // never executed, so the same bytes may be submitted again
        self.seen.remove(&txid);
        self.receipts.insert(
            txid,
            Receipt {
                txid,
                status: ReceiptStatus::RejectedPreInclusion(rejection),
                block_height: None,
                bandwidth_consumed: 0,
                fee_paid: 0,
                certificate_digest: None,
            },
        );
    }

    /// Re-executes the whole chain on a fresh state and checks every stored
    /// root and link.
    pub fn verify_chain(&self) -> Result<(), LedgerError> {
        let replayed = Self::replay(self.genesis.clone(), self.blocks.clone(), self.config)?;
        if replayed.state != self.state {
            return Err(LedgerError::Corrupt("replayed state differs from live state".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
