use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use certchain_core::keystore::Keystore;
use certchain_core::Address;

fn certchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_certchain"))
        .env_remove("NODE_URL")
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(path: &Path, body: &str) -> String {
    std::fs::write(path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const ALICE: &str = r#"{
  "issue_date": "2025-02-01",
  "holder_name": "Alice Silva",
  "certificate_id": "IFSP-2025-0001",
  "course_title": "Systems Analysis",
  "institution_name": "IFSP",
  "completion_date": "2025-01-15",
  "extras": {"grade": "A"}
}"#;

#[test]
fn keygen_writes_a_consistent_keystore() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.json");
    let out = certchain(&["--json", "keygen", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let ks = Keystore::load(&path).unwrap();
    let kp = ks.keypair().unwrap();
    assert_eq!(kp.address(), ks.address);
    assert_eq!(Address::from_public_key(&kp.public_key()), ks.address);
    assert_eq!(json(&out)["address"], ks.address.to_base58());
    assert!(ks.address.to_base58().starts_with('T'));

    let again = certchain(&["keygen", "--out", path.to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(2));
}

#[test]
fn hash_is_offline_and_pinned() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(&dir.path().join("alice.json"), ALICE);
    let out = certchain(&["--node-url", "http://127.0.0.1:9", "hash", "--cert-json", &file]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap().trim(),
        "a786f7d3916a64eeb5317745a482f8e1da4d912f754953e08319353c79ce43c2"
    );
}

#[test]
fn invalid_certificate_is_a_domain_failure() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(&dir.path().join("bad.json"), &ALICE.replace("Systems Analysis", " "));
    let out = certchain(&["--json", "hash", "--cert-json", &file]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["error"]["message"].as_str().unwrap().contains("course_title"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(certchain(&["verify", "--digest", "abc"]).status.code(), Some(2));
    assert_eq!(certchain(&["frobnicate"]).status.code(), Some(2));
    let issuer = "T".to_owned() + &"1".repeat(33);
    assert_eq!(
        certchain(&["verify", "--digest", &"a".repeat(63), "--issuer", &issuer]).status.code(),
        Some(2)
    );
}

#[test]
fn unreachable_node_exits_3() {
    let kp = certchain_core::Keypair::from_seed([5; 32]);
    let out = certchain(&[
        "--json",
        "--node-url",
        "http://127.0.0.1:9",
        "verify",
        "--digest",
        &"a".repeat(64),
        "--issuer",
        &kp.address().to_base58(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["error"]["machine_code"], "ConnectionFailure");
}

#[test]
fn security_suite_subcommand_reports_five_rows() {
    let out = certchain(&["--json", "security-suite"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], 5);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
}

#[test]
fn bench_subcommand_emits_report() {
    let out = certchain(&["--json", "bench", "--seed", "1", "--n", "100", "--interval-ms", "3000"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["n_txs"], 100);
    assert!(v["max_inclusion_ms"].as_u64().unwrap() <= 3000);
    let text = certchain(&["bench", "--seed", "1", "--n", "100"]);
    assert!(String::from_utf8(text.stdout).unwrap().contains("inclusion mean"));
}
