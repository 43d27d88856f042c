//! The five security scenarios, run against an in-process node in manual
//! clock mode. Each scenario reports the outcome it observed in the same
//! vocabulary as the expected result, so a row passes iff the two agree.

use serde::{Deserialize, Serialize};

use certchain_core::ledger::{
    sign_transaction, GenesisConfig, LedgerConfig, ReceiptStatus, Transaction, TxId, DEFAULT_BLOCK_INTERVAL_MS,
};
use certchain_core::registry::FaultInjection;
use certchain_core::{
    cert_hash, CasStore, CertificateData, ContractCall, Keypair, Ledger, MetadataDocument, ValidationStatus,
};
use certchain_node::{ClockMode, NodeError, NodeHandle};

use crate::table::Table;

pub const NOT_SUSCEPTIBLE: &str = "Not susceptible";
pub const SUSCEPTIBLE: &str = "Susceptible";
pub const REJECTED: &str = "Transaction rejected";
pub const ACCEPTED: &str = "Transaction accepted";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub category: String,
    pub item: String,
    pub description: String,
    pub expected: String,
    pub observed: String,
    /// What the node actually returned at each step.
    pub detail: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub rows: Vec<ScenarioRow>,
    pub passed: usize,
    pub total: usize,
}

impl ScenarioReport {
    fn new(rows: Vec<ScenarioRow>) -> Self {
        let passed = rows.iter().filter(|r| r.pass).count();
        Self {
            total: rows.len(),
            passed,
            rows,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.total
    }

    pub fn to_text(&self) -> String {
        let mut t = Table::new(["Type/Test", "Item", "Expected", "Observed", "Pass"]);
        for r in &self.rows {
            t.row([
                r.category.as_str(),
                r.item.as_str(),
                r.expected.as_str(),
                r.observed.as_str(),
                if r.pass { "yes" } else { "NO" },
            ]);
        }
        let mut out = t.render();
        out.push_str(&format!("\n{}/{} scenarios passed\n", self.passed, self.total));
        for r in &self.rows {
            out.push_str(&format!("  {}: {}\n", r.item, r.detail));
        }
        out
    }
}

/// Runs the suite on a fresh genesis. Blocking; do not call from inside a
/// tokio runtime (use [`security_suite`] there).
pub fn run_security_suite() -> ScenarioReport {
    run_security_suite_with(FaultInjection::default())
}

#[doc(hidden)]
pub fn run_security_suite_with(faults: FaultInjection) -> ScenarioReport {
    tokio::runtime::Builder::new_current_thread()
        .build()
        .expect("tokio runtime")
        .block_on(security_suite(faults))
}

pub async fn security_suite(faults: FaultInjection) -> ScenarioReport {
    let mut env = Env::new(0, faults).await;
    let replay = replay(&mut env).await;
    let overflow = overflow(faults).await;
    let fraud = fraudulent_issuance(&mut env).await;
    let dup = duplication(&mut env).await;
    let invalid = invalid_parameters(&mut env).await;
    ScenarioReport::new(vec![
        row(
            "Critical point",
            "Replay attacks",
            "Reuse of the same transaction with identical data",
            NOT_SUSCEPTIBLE,
            replay,
        ),
        row(
            "Critical point",
            "Overflow/Underflow",
            "Variable overflow or underflow in counting operations",
            NOT_SUSCEPTIBLE,
            overflow,
        ),
        row(
            "Simulated scenario",
            "Fraudulent issuance",
            "Unauthorized address attempting to issue a certificate",
            REJECTED,
            fraud,
        ),
        row(
            "Simulated scenario",
            "Certificate duplication",
            "Attempt to issue an already registered certificate",
            REJECTED,
            dup,
        ),
        row(
            "Simulated scenario",
            "Invalid parameters",
            "Submission of incomplete or malformed data",
            REJECTED,
            invalid,
        ),
    ])
}

fn row(category: &str, item: &str, description: &str, expected: &str, outcome: (&str, String)) -> ScenarioRow {
    ScenarioRow {
        category: category.into(),
        item: item.into(),
        description: description.into(),
        expected: expected.into(),
        observed: outcome.0.into(),
        detail: outcome.1,
        pass: outcome.0 == expected,
    }
}

struct Env {
    node: NodeHandle,
    admin: Keypair,
    issuer: Keypair,
    outsider: Keypair,
    now: u64,
    _dir: tempfile::TempDir,
}

impl Env {
    async fn new(counter: u64, faults: FaultInjection) -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let admin = Keypair::from_seed([0xA1; 32]);
        let issuer = Keypair::from_seed([0xB2; 32]);
        let outsider = Keypair::from_seed([0xC3; 32]);
        let mut genesis = GenesisConfig::new(admin.address());
        genesis.certificate_counter = counter;
        let config = LedgerConfig {
            faults,
            ..LedgerConfig::default()
        };
        let cas = CasStore::open(dir.path().join("cas")).expect("cas");
        let (node, _) = NodeHandle::spawn(Ledger::new(genesis, config), cas, ClockMode::Manual);
        let mut env = Self {
            node,
            admin,
            issuer,
            outsider,
            now: 0,
            _dir: dir,
        };
        let call = ContractCall::AuthorizeIssuer {
            issuer: env.issuer.address(),
        };
        let tx = env.sign(&env.admin, call);
        env.node.submit(tx).await.expect("authorize issuer");
        env.block().await;
        env
    }

    fn sign(&self, signer: &Keypair, call: ContractCall) -> Transaction {
        let nonce = self.node.read(|l| l.next_nonce(&signer.address()));
        sign_transaction(signer, call, nonce, self.now)
    }

    async fn submit(&self, tx: Transaction) -> Result<TxId, String> {
        self.node.submit(tx).await.map_err(|e| match e {
            NodeError::Rejected(r) => r.code().to_owned(),
            other => other.to_string(),
        })
    }

    async fn block(&mut self) {
        self.now += DEFAULT_BLOCK_INTERVAL_MS;
        self.node.produce_block(self.now).await.expect("produce block");
    }

    /// Submits, mines one block, and returns the receipt status as a code.
    async fn execute(&mut self, signer: &Keypair, call: ContractCall) -> String {
        let tx = self.sign(signer, call);
        match self.submit(tx).await {
            Err(code) => format!("rejected {code}"),
            Ok(txid) => {
                self.block().await;
                self.receipt(&txid)
            }
        }
    }

    fn receipt(&self, txid: &TxId) -> String {
        self.node.read(|l| match l.get_receipt(txid) {
            Ok(r) => match &r.status {
                ReceiptStatus::Success => "success".to_owned(),
                ReceiptStatus::Reverted(reason) => format!("reverted {}", reason.code()),
                ReceiptStatus::RejectedPreInclusion(rej) => format!("rejected {}", rej.code()),
            },
            Err(_) => "pending".to_owned(),
        })
    }

    fn total(&self) -> u64 {
        self.node.read(|l| l.registry().total_certificates())
    }

    fn status(&self, cert: &CertificateData, issuer: &Keypair) -> ValidationStatus {
        let digest = cert_hash(cert).expect("fixture certificate is valid");
        self.node.read(|l| l.validate_certificate(&digest, &issuer.address()).status)
    }
}

fn certificate(id: &str, holder: &str) -> CertificateData {
    CertificateData::new(id, holder, "Systems Analysis", "IFSP", "2025-01-15", "2025-02-01")
}

fn register(cert: &CertificateData) -> ContractCall {
    let cid = MetadataDocument::new(cert, Default::default())
        .map(|doc| doc.content_id())
        .unwrap_or_else(|_| certchain_core::ContentId::for_content(b"invalid"));
    ContractCall::RegisterCertificate {
        cert: cert.clone(),
        metadata_cid: cid,
    }
}

fn outcome(ok: bool, good: &'static str, bad: &'static str, detail: Vec<String>) -> (&'static str, String) {
    (if ok { good } else { bad }, detail.join("; "))
}

async fn replay(env: &mut Env) -> (&'static str, String) {
    let before = env.total();
    let tx = env.sign(&env.issuer, register(&certificate("SEC-REPLAY-1", "Bruno Costa")));
    let first = env.submit(tx.clone()).await;
    let while_pending = env.submit(tx.clone()).await;
    env.block().await;
    let first_receipt = first.as_ref().map(|id| env.receipt(id)).unwrap_or_else(|e| e.clone());
    let after_inclusion = env.submit(tx.clone()).await;
    env.block().await;
    let added = env.total() - before;

    let code = |r: &Result<TxId, String>| match r {
        Ok(_) => "accepted".to_owned(),
        Err(c) => c.clone(),
    };
    let ok = first_receipt == "success"
        && code(&while_pending) == "DuplicateTransaction"
        && code(&after_inclusion) == "DuplicateTransaction"
        && added == 1;
    outcome(
        ok,
        NOT_SUSCEPTIBLE,
        SUSCEPTIBLE,
        vec![
            format!("original {first_receipt}"),
            format!("resubmitted while pending: {}", code(&while_pending)),
            format!("resubmitted after inclusion: {}", code(&after_inclusion)),
            format!("certificates added: {added}"),
        ],
    )
}

async fn overflow(faults: FaultInjection) -> (&'static str, String) {
    let mut env = Env::new(u64::MAX, faults).await;
    let cert = certificate("SEC-OVERFLOW-1", "Carla Dias");
    let result = env.execute(&env.issuer.clone(), register(&cert)).await;
    let counter = env.total();
    let status = env.status(&cert, &env.issuer);
    let ok = result == "reverted CounterOverflow" && counter == u64::MAX && status == ValidationStatus::NotFound;
    outcome(
        ok,
        NOT_SUSCEPTIBLE,
        SUSCEPTIBLE,
        vec![
            format!("register with counter at {}: {result}", u64::MAX),
            format!("counter afterwards: {counter}"),
            format!("certificate lookup: {status:?}"),
        ],
    )
}

async fn fraudulent_issuance(env: &mut Env) -> (&'static str, String) {
    let outsider = env.outsider.clone();
    let cert = certificate("SEC-FRAUD-1", "Diego Lima");
    let issue = env.execute(&outsider, register(&cert)).await;
    let self_grant = env
        .execute(
            &outsider,
            ContractCall::AuthorizeIssuer {
                issuer: outsider.address(),
            },
        )
        .await;
    let status = env.status(&cert, &outsider);
    let authorized = env.node.read(|l| l.registry().is_authorized(&outsider.address()));
    let ok = issue == "reverted IssuerNotAuthorized"
        && self_grant == "reverted NotAdmin"
        && status == ValidationStatus::NotFound
        && !authorized;
    outcome(
        ok,
        REJECTED,
        ACCEPTED,
        vec![
            format!("issue from unauthorized address: {issue}"),
            format!("self-authorization: {self_grant}"),
            format!("certificate lookup: {status:?}"),
        ],
    )
}

async fn duplication(env: &mut Env) -> (&'static str, String) {
    let issuer = env.issuer.clone();
    let cert = certificate("SEC-DUP-1", "Elisa Rocha");
    let first = env.execute(&issuer, register(&cert)).await;
    let record_before = env.node.read(|l| l.registry().certificates().get(&cert_hash(&cert).unwrap()).cloned());
    let total_before = env.total();
    let again = env.execute(&issuer, register(&cert)).await;
    let mut padded = cert.clone();
    padded.holder_name = format!("  {}  ", cert.holder_name);
    let variant = env.execute(&issuer, register(&padded)).await;
    let record_after = env.node.read(|l| l.registry().certificates().get(&cert_hash(&cert).unwrap()).cloned());
    let added = env.total() - total_before;
    let ok = first == "success"
        && again == "reverted DuplicateCertificate"
        && variant == "reverted DuplicateCertificate"
        && record_before == record_after
        && added == 0;
    outcome(
        ok,
        REJECTED,
        ACCEPTED,
        vec![
            format!("first issuance: {first}"),
            format!("same certificate again: {again}"),
            format!("whitespace variant: {variant}"),
            format!("certificates added by duplicates: {added}"),
        ],
    )
}

async fn invalid_parameters(env: &mut Env) -> (&'static str, String) {
    let issuer = env.issuer.clone();
    let nonce_before = env.node.read(|l| l.next_nonce(&issuer.address()));
    let mut cases = Vec::new();
    let mut empty = certificate("SEC-INVALID-1", "Fabio Nunes");
    empty.course_title = String::new();
    cases.push(("empty course_title", empty));
    let mut reversed = certificate("SEC-INVALID-2", "Fabio Nunes");
    reversed.completion_date = "2025-03-01".into();
    cases.push(("completion after issue", reversed));
    let mut bad_date = certificate("SEC-INVALID-3", "Fabio Nunes");
    bad_date.issue_date = "2025-13-01".into();
    cases.push(("malformed issue_date", bad_date));

    let mut detail = Vec::new();
    let mut all_rejected = true;
    for (label, cert) in &cases {
        let result = env.execute(&issuer, register(cert)).await;
        all_rejected &= result == "rejected InvalidParameters";
        detail.push(format!("{label}: {result}"));
    }
    let nonce_after = env.node.read(|l| l.next_nonce(&issuer.address()));
    let mempool = env.node.read(|l| l.mempool_len());
    detail.push(format!("nonce consumed: {}", nonce_after != nonce_before));
    let ok = all_rejected && nonce_after == nonce_before && mempool == 0;
    outcome(ok, REJECTED, ACCEPTED, detail)
}
