use super::*;
use crate::address::Keypair;
use crate::canonical::CertificateData;
use crate::cas::ContentId;
use crate::registry::ContractCall;

struct Fixture {
    admin: Keypair,
    issuer: Keypair,
    outsider: Keypair,
    ledger: Ledger,
}

fn cert(id: &str) -> CertificateData {
    CertificateData::new(id, "Alice Silva", "Systems Analysis", "IFSP", "2025-01-15", "2025-02-01")
}

fn register(id: &str) -> ContractCall {
    ContractCall::RegisterCertificate {
        cert: cert(id),
        metadata_cid: ContentId::for_content(id.as_bytes()),
    }
}

fn fixture() -> Fixture {
    let admin = Keypair::from_seed([1; 32]);
    let issuer = Keypair::from_seed([2; 32]);
    let outsider = Keypair::from_seed([3; 32]);
    let mut ledger = Ledger::new(GenesisConfig::new(admin.address()), LedgerConfig::default());
    let auth = sign_transaction(&admin, ContractCall::AuthorizeIssuer { issuer: issuer.address() }, 0, 0);
    ledger.submit(auth).unwrap();
    ledger.produce_block(3000).unwrap();
    Fixture {
        admin,
        issuer,
        outsider,
        ledger,
    }
}

#[test]
fn genesis_block_conventions() {
    let f = fixture();
    let g = f.ledger.get_block(0).unwrap();
    assert_eq!(g.header.parent_hash, [0u8; 32]);
    assert_eq!(g.header.height, 0);
    assert!(g.transactions.is_empty());
    assert!(matches!(f.ledger.get_block(99), Err(LedgerError::NotFound(_))));
}

#[test]
fn fresh_transaction_lands_in_next_block() {
    let mut f = fixture();
    let tx = sign_transaction(&f.issuer, register("C-1"), 0, 3500);
    let txid = f.ledger.submit(tx).unwrap();
    assert!(f.ledger.is_pending(&txid));
    assert!(f.ledger.get_receipt(&txid).is_err());
    let block = f.ledger.produce_block(6000).unwrap();
    assert_eq!(block.transactions.len(), 1);
    let r = f.ledger.get_receipt(&txid).unwrap();
    assert_eq!(r.status, ReceiptStatus::Success);
    assert_eq!(r.block_height, Some(2));
    assert_eq!(r.certificate_digest, Some(crate::canonical::cert_hash(&cert("C-1")).unwrap()));
    assert_eq!(f.ledger.registry().total_certificates(), 1);
}

#[test]
fn replayed_transaction_is_refused_and_state_unchanged() {
    let mut f = fixture();
    let tx = sign_transaction(&f.issuer, register("C-1"), 0, 3500);
    f.ledger.submit(tx.clone()).unwrap();
    // resubmission while still pending
    assert_eq!(f.ledger.submit(tx.clone()), Err(Rejection::DuplicateTransaction));
    f.ledger.produce_block(6000).unwrap();
    let root = f.ledger.state().state_root();
    assert_eq!(f.ledger.submit(tx), Err(Rejection::DuplicateTransaction));
    f.ledger.produce_block(9000).unwrap();
    assert_eq!(f.ledger.state().state_root(), root);
}

#[test]
fn nonce_rules() {
    let mut f = fixture();
    let stale = sign_transaction(&f.admin, ContractCall::AuthorizeIssuer { issuer: f.outsider.address() }, 0, 1);
    assert_eq!(f.ledger.submit(stale), Err(Rejection::StaleNonce { expected: 1, got: 0 }));
    let future = sign_transaction(&f.issuer, register("C-1"), 5, 1);
    assert_eq!(f.ledger.submit(future), Err(Rejection::FutureNonce { expected: 0, got: 5 }));
    // pending transactions advance the expected nonce
    f.ledger.submit(sign_transaction(&f.issuer, register("C-1"), 0, 1)).unwrap();
    assert_eq!(f.ledger.next_nonce(&f.issuer.address()), 1);
    f.ledger.submit(sign_transaction(&f.issuer, register("C-2"), 1, 1)).unwrap();
    let clash = sign_transaction(&f.issuer, register("C-3"), 1, 2);
    assert_eq!(f.ledger.submit(clash), Err(Rejection::StaleNonce { expected: 2, got: 1 }));
}

#[test]
fn bad_signature_and_invalid_parameters_rejected_up_front() {
    let mut f = fixture();
    let mut tx = sign_transaction(&f.issuer, register("C-1"), 0, 1);
    tx.nonce = 0;
    tx.timestamp_ms = 2;
    assert_eq!(f.ledger.submit(tx), Err(Rejection::BadSignature));

    let call = ContractCall::RegisterCertificate {
        cert: CertificateData::new("C-1", "Alice", "", "IFSP", "2025-01-15", "2025-02-01"),
        metadata_cid: ContentId::for_content(b"x"),
    };
    let bad = sign_transaction(&f.issuer, call, 0, 1);
    assert_eq!(f.ledger.submit(bad), Err(Rejection::InvalidParameters));
    assert_eq!(f.ledger.mempool_len(), 0);
}

#[test]
fn unauthorized_issuer_is_included_as_reverted() {
    let mut f = fixture();
    let root = f.ledger.registry().digest();
    let txid = f.ledger.submit(sign_transaction(&f.outsider, register("C-1"), 0, 1)).unwrap();
    let block = f.ledger.produce_block(6000).unwrap();
    assert_eq!(block.transactions.len(), 1);
    let r = f.ledger.get_receipt(&txid).unwrap();
    assert_eq!(r.status, ReceiptStatus::Reverted(RevertReason::IssuerNotAuthorized));
    assert_eq!(r.block_height, Some(2));
    assert_eq!(f.ledger.registry().digest(), root);
    // the nonce is consumed even though the call reverted
    assert_eq!(f.ledger.next_nonce(&f.outsider.address()), 1);
}

#[test]
fn empty_mempool_produces_empty_blocks() {
    let mut f = fixture();
    for i in 2..5 {
        let b = f.ledger.produce_block(3000 * i).unwrap();
        assert!(b.transactions.is_empty());
        assert_eq!(b.header.tx_root, [0u8; 32]);
    }
    assert_eq!(f.ledger.height(), 4);
    assert_eq!(f.ledger.stats().mean_block_interval_ms, 3000.0);
}

#[test]
fn block_order_is_sender_then_nonce_and_respects_capacity() {
    let admin = Keypair::from_seed([1; 32]);
    let config = LedgerConfig {
        max_block_txs: 2,
        ..LedgerConfig::default()
    };
    let mut ledger = Ledger::new(GenesisConfig::new(admin.address()), config);
    let issuers: Vec<Keypair> = (10..13).map(|s| Keypair::from_seed([s; 32])).collect();
    for (n, i) in issuers.iter().enumerate() {
        ledger
            .submit(sign_transaction(&admin, ContractCall::AuthorizeIssuer { issuer: i.address() }, n as u64, 0))
            .unwrap();
    }
    let b1 = ledger.produce_block(3000).unwrap().clone();
    assert_eq!(b1.transactions.iter().map(|t| t.nonce).collect::<Vec<_>>(), vec![0, 1]);
    assert_eq!(ledger.mempool_len(), 1);
    let b2 = ledger.produce_block(6000).unwrap();
    assert_eq!(b2.transactions[0].nonce, 2);
}

#[test]
fn chain_links_and_roots_verify() {
    let mut f = fixture();
    for n in 0..5u64 {
        f.ledger
            .submit(sign_transaction(&f.issuer, register(&format!("C-{n}")), n, n))
            .unwrap();
        f.ledger.produce_block(6000 + 3000 * n).unwrap();
    }
    let blocks = f.ledger.blocks();
    for w in blocks.windows(2) {
        assert_eq!(w[1].header.parent_hash, w[0].hash());
        assert_eq!(w[1].computed_tx_root(), w[1].header.tx_root);
    }
    f.ledger.verify_chain().unwrap();

    let mut tampered = blocks.to_vec();
    tampered[3].header.state_root[0] ^= 1;
    assert!(matches!(
        Ledger::replay(f.ledger.genesis().clone(), tampered, LedgerConfig::default()),
        Err(LedgerError::Corrupt(_))
    ));
}

#[test]
fn free_quota_workload_pays_nothing() {
    let mut f = fixture();
    let mut n = 0;
    while f.ledger.state().accounts.get(&f.issuer.address()).map_or(5000, |a| a.free_bandwidth_remaining) >= 400 {
        f.ledger
            .submit(sign_transaction(&f.issuer, register(&format!("C-{n}")), n, 0))
            .unwrap();
        f.ledger.produce_block(6000 + n * 3000).unwrap();
        n += 1;
    }
    assert!(n > 5);
    assert_eq!(f.ledger.total_fees(), 0);
}

#[test]
fn quota_overflow_is_billed_or_rejected() {
    let admin = Keypair::from_seed([1; 32]);
    let issuer = Keypair::from_seed([2; 32]);
    let mut genesis = GenesisConfig::new(admin.address());
    genesis.fees.free_bandwidth_per_day = 0;
    genesis.balances.push((issuer.address(), 10_000_000));
    let mut ledger = Ledger::new(genesis, LedgerConfig::default());
    // admin has no balance and no free quota
    let refused = ledger.submit(sign_transaction(&admin, ContractCall::AuthorizeIssuer { issuer: issuer.address() }, 0, 0));
    assert!(matches!(refused, Err(Rejection::InsufficientBalance { .. })));
    let tx = sign_transaction(&issuer, register("C-1"), 0, 0);
    let size = tx.size();
    let txid = ledger.submit(tx).unwrap();
    ledger.produce_block(3000).unwrap();
    let r = ledger.get_receipt(&txid).unwrap();
    assert_eq!(r.fee_paid, size * 1000);
    assert_eq!(ledger.total_fees(), size * 1000);
    assert_eq!(ledger.account(&issuer.address()).unwrap().balance_sun, 10_000_000 - size * 1000);
}

#[test]
fn persisted_chain_reopens_identically() {
    let dir = tempfile::tempdir().unwrap();
    let admin = Keypair::from_seed([1; 32]);
    let issuer = Keypair::from_seed([2; 32]);
    let genesis = GenesisConfig::new(admin.address());
    let (head, state_bytes, tx) = {
        let mut ledger = Ledger::open(dir.path(), genesis.clone(), LedgerConfig::default()).unwrap();
        ledger
            .submit(sign_transaction(&admin, ContractCall::AuthorizeIssuer { issuer: issuer.address() }, 0, 0))
            .unwrap();
        ledger.produce_block(3000).unwrap();
        let tx = sign_transaction(&issuer, register("C-1"), 0, 0);
        ledger.submit(tx.clone()).unwrap();
        ledger.produce_block(6000).unwrap();
        ledger.produce_block(9000).unwrap();
        (ledger.chain_head(), ledger.state().to_bytes(), tx)
    };
    let mut reopened = Ledger::open(dir.path(), genesis, LedgerConfig::default()).unwrap();
    assert_eq!(reopened.chain_head(), head);
    assert_eq!(reopened.state().to_bytes(), state_bytes);
    assert_eq!(reopened.get_receipt(&tx.txid()).unwrap().status, ReceiptStatus::Success);
    assert_eq!(reopened.submit(tx), Err(Rejection::DuplicateTransaction));

    let other = GenesisConfig::new(issuer.address());
    assert!(matches!(
        Ledger::open(dir.path(), other, LedgerConfig::default()),
        Err(LedgerError::GenesisMismatch { .. })
    ));
}

#[test]
fn torn_tail_record_is_discarded_on_open() {
    let dir = tempfile::tempdir().unwrap();
    let admin = Keypair::from_seed([1; 32]);
    let genesis = GenesisConfig::new(admin.address());
    {
        let mut ledger = Ledger::open(dir.path(), genesis.clone(), LedgerConfig::default()).unwrap();
        ledger.produce_block(3000).unwrap();
    }
    let path = dir.path().join(CHAIN_FILE);
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.extend_from_slice(&[0, 0, 1, 0, 7, 7]);
    std::fs::write(&path, bytes).unwrap();
    let mut ledger = Ledger::open(dir.path(), genesis.clone(), LedgerConfig::default()).unwrap();
    assert_eq!(ledger.height(), 1);
    ledger.produce_block(6000).unwrap();
    drop(ledger);
    assert_eq!(Ledger::open(dir.path(), genesis, LedgerConfig::default()).unwrap().height(), 2);
}
