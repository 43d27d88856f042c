//! The single writer. All submissions and block production go through one
//! command queue served by one task; readers take a shared lock on the
//! ledger, which is only held exclusively while a command is applied, so no
//! reader ever sees half a block.

use std::sync::{Arc, RwLock, RwLockReadGuard};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;

use certchain_core::ledger::{Ledger, LedgerError, Rejection, Transaction, TxId};
use certchain_core::CasStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockMode {
    /// Blocks every `block_interval_ms` of real time, stamped with the wall clock.
    Wall { block_interval_ms: u64 },
    /// Blocks only on [`NodeHandle::produce_block`], stamped with the given time.
    Manual,
}

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error(transparent)]
    Rejected(#[from] Rejection),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("node writer task has stopped")]
    Stopped,
}

enum Command {
    Submit(Box<Transaction>, oneshot::Sender<Result<TxId, Rejection>>),
    Produce(u64, oneshot::Sender<Result<(u64, [u8; 32]), LedgerError>>),
}

#[derive(Clone)]
pub struct NodeHandle {
    commands: mpsc::Sender<Command>,
    ledger: Arc<RwLock<Ledger>>,
    cas: Arc<CasStore>,
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl NodeHandle {
    /// Starts the writer task on the current tokio runtime.
    pub fn spawn(ledger: Ledger, cas: CasStore, clock: ClockMode) -> (Self, JoinHandle<()>) {
        let ledger = Arc::new(RwLock::new(ledger));
        let (tx, rx) = mpsc::channel(1024);
        let task = tokio::spawn(writer(ledger.clone(), rx, clock));
        (
            Self {
                commands: tx,
                ledger,
                cas: Arc::new(cas),
            },
            task,
        )
    }

    pub async fn submit(&self, tx: Transaction) -> Result<TxId, NodeError> {
        let (reply, rx) = oneshot::channel();
        self.commands
            .send(Command::Submit(Box::new(tx), reply))
            .await
            .map_err(|_| NodeError::Stopped)?;
        Ok(rx.await.map_err(|_| NodeError::Stopped)??)
    }

    /// Produces a block stamped `now_ms`; returns the new head.
    pub async fn produce_block(&self, now_ms: u64) -> Result<(u64, [u8; 32]), NodeError> {
        let (reply, rx) = oneshot::channel();
        self.commands
            .send(Command::Produce(now_ms, reply))
            .await
            .map_err(|_| NodeError::Stopped)?;
        Ok(rx.await.map_err(|_| NodeError::Stopped)??)
    }

    /// Consistent read-only view of the ledger.
    pub fn ledger(&self) -> RwLockReadGuard<'_, Ledger> {
        self.ledger.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn read<R>(&self, f: impl FnOnce(&Ledger) -> R) -> R {
        f(&self.ledger())
    }

    pub fn cas(&self) -> &CasStore {
        &self.cas
    }
}

async fn writer(ledger: Arc<RwLock<Ledger>>, mut rx: mpsc::Receiver<Command>, clock: ClockMode) {
    let mut ticker = match clock {
        ClockMode::Wall { block_interval_ms } => {
            let period = Duration::from_millis(block_interval_ms);
            let mut t = tokio::time::interval_at(tokio::time::Instant::now() + period, period);
            t.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
            Some(t)
        }
        ClockMode::Manual => None,
    };
    loop {
        let tick = async {
            match ticker.as_mut() {
                Some(t) => {
                    t.tick().await;
                }
                None => std::future::pending().await,
            }
        };
        tokio::select! {
            cmd = rx.recv() => match cmd {
                None => break,
                Some(Command::Submit(tx, reply)) => {
                    let result = write(&ledger).submit(*tx);
                    let _ = reply.send(result);
                }
                Some(Command::Produce(now, reply)) => {
                    let mut guard = write(&ledger);
                    let result = guard.produce_block(now).map(|b| (b.height(), b.hash()));
                    drop(guard);
                    let _ = reply.send(result);
                }
            },
            _ = tick => {
                if let Err(e) = write(&ledger).produce_block(now_ms()) {
                    tracing::error!("block production failed: {e}");
                }
            }
        }
    }
}

fn write(ledger: &RwLock<Ledger>) -> std::sync::RwLockWriteGuard<'_, Ledger> {
    ledger.write().unwrap_or_else(|e| e.into_inner())
}
