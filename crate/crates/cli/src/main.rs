mod client;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use certchain_core::keystore::Keystore;
use certchain_core::{cert_hash, canonicalize, Address, CertDigest, CertificateData, Keypair, TxId};
use certchain_harness::security::run_security_suite;
use certchain_harness::{run_latency_bench, BenchClock, BenchConfig};
use certchain_node::wire::{AuthorizeIssuerRequest, IssueCertificateRequest, IssueResponse, SubmitResponse, VerifyResponse};
use certchain_node::{now_ms, ApiError, NodeConfig};

use client::NodeClient;

const RECEIPT_TIMEOUT: Duration = Duration::from_secs(60);

/// Issue and verify academic certificates against a certchain node.
#[derive(Debug, Parser)]
#[command(name = "certchain", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Base URL of the node.
    #[arg(long, global = true, env = "NODE_URL", default_value = "http://127.0.0.1:8080")]
    node_url: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a key and write it to a keystore file.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing file.
        #[arg(long)]
        force: bool,
    },
    /// Authorize an issuer address (admin only).
    Authorize {
        #[arg(long)]
        issuer: String,
        #[arg(long)]
        admin_key: PathBuf,
        /// Return after submission instead of waiting for the receipt.
        #[arg(long)]
        no_wait: bool,
    },
    /// Register a certificate described by a JSON file.
    Issue {
        #[arg(long)]
        key: PathBuf,
        #[arg(long)]
        cert_json: PathBuf,
        /// Return after submission instead of waiting for the receipt.
        #[arg(long)]
        no_wait: bool,
    },
    /// Check a certificate digest against an issuer address.
    Verify {
        #[arg(long)]
        digest: String,
        #[arg(long)]
        issuer: String,
    },
    /// Compute a certificate digest offline.
    Hash {
        #[arg(long)]
        cert_json: PathBuf,
    },
    /// Show the receipt of a transaction.
    Receipt {
        #[arg(long)]
        txid: String,
    },
    /// Run a node.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Measure inclusion/confirmation latency and fees on an in-process node.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 3000)]
        interval_ms: u64,
        #[arg(long, value_enum, default_value_t = ClockArg::Logical)]
        clock: ClockArg,
    },
    /// Run the security scenarios on an in-process node.
    SecuritySuite,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClockArg {
    Logical,
    Wall,
}

#[derive(Debug)]
pub enum Failure {
    /// The operation completed and the answer is negative.
    Domain(String),
    /// The node answered with an error.
    Api(ApiError),
    /// The node could not be reached or spoke nonsense.
    Connection(String),
    /// Bad input detected before contacting anything.
    Usage(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Domain(_) | Failure::Api(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Connection(_) => 3,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Failure::Api(e) => json!({"error": e}),
            Failure::Domain(m) => json!({"error": {"machine_code": "DomainFailure", "message": m}}),
            Failure::Connection(m) => json!({"error": {"machine_code": "ConnectionFailure", "message": m}}),
            Failure::Usage(m) => json!({"error": {"machine_code": "UsageError", "message": m}}),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Domain(m) => write!(f, "{m}"),
            Failure::Api(e) => write!(f, "{} ({}): {}", e.machine_code, e.http_status, e.message),
            Failure::Connection(m) => write!(f, "cannot reach node: {m}"),
            Failure::Usage(m) => write!(f, "{m}"),
        }
    }
}

/// Outcome of a command: text for humans, a value for `--json`, and
/// whether the answer counts as a domain failure.
struct Output {
    text: String,
    json: Value,
    failed: bool,
}

impl Output {
    fn ok(text: impl Into<String>, json: Value) -> Self {
        Self {
            text: text.into(),
            json,
            failed: false,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(out) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&out.json).expect("json output"));
            } else {
                print!("{}", out.text);
                if !out.text.ends_with('\n') {
                    println!();
                }
            }
            ExitCode::from(u8::from(out.failed))
        }
        Err(e) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&e.to_json()).expect("json output"));
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<Output, Failure> {
    let node = NodeClient::new(&cli.node_url);
    match cli.command {
        Command::Keygen { out, force } => keygen(&out, force),
        Command::Authorize {
            issuer,
            admin_key,
            no_wait,
        } => authorize(&node, &issuer, &admin_key, !no_wait),
        Command::Issue {
            key,
            cert_json,
            no_wait,
        } => issue(&node, &key, &cert_json, !no_wait),
        Command::Verify { digest, issuer } => verify(&node, &digest, &issuer),
        Command::Hash { cert_json } => hash(&cert_json),
        Command::Receipt { txid } => receipt(&node, &txid),
        Command::Serve { config } => serve(config.as_deref()),
        Command::Bench {
            seed,
            n,
            interval_ms,
            clock,
        } => bench(seed, n, interval_ms, clock),
        Command::SecuritySuite => {
            let report = run_security_suite();
            Ok(Output {
                text: report.to_text(),
                json: json!(report),
                failed: !report.all_passed(),
            })
        }
    }
}

fn keygen(out: &Path, force: bool) -> Result<Output, Failure> {
    if out.exists() && !force {
        return Err(Failure::Usage(format!("{} exists; pass --force to overwrite", out.display())));
    }
    let ks = Keystore::from_keypair(&Keypair::generate());
    ks.save(out)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", out.display())))?;
    Ok(Output::ok(
        format!("address: {}\nkeystore: {}", ks.address, out.display()),
        json!({"address": ks.address, "public_key": ks.public_key_hex, "keystore": out}),
    ))
}

fn load_key(path: &Path) -> Result<Keypair, Failure> {
    Keystore::load(path)
        .and_then(|ks| ks.keypair())
        .map_err(|e| Failure::Usage(format!("keystore {}: {e}", path.display())))
}

/// Certificate input: the six core fields plus an optional `extras` object.
#[derive(Debug, Deserialize, Serialize)]
struct CertFile {
    #[serde(flatten)]
    cert: CertificateData,
    #[serde(default)]
    extras: std::collections::BTreeMap<String, Value>,
}

fn read_cert(path: &Path) -> Result<CertFile, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn hash(path: &Path) -> Result<Output, Failure> {
    let file = read_cert(path)?;
    let digest = cert_hash(&file.cert).map_err(|e| Failure::Domain(format!("invalid certificate: {e}")))?;
    let canonical = canonicalize(&file.cert).expect("validated by cert_hash");
    Ok(Output::ok(
        digest.to_string(),
        json!({"digest": digest, "canonical_hex": hex::encode(canonical)}),
    ))
}

fn receipt_outcome(receipt: Value) -> Output {
    let status = receipt["status"].as_str().unwrap_or("unknown").to_owned();
    let mut text = format!("status: {status}");
    if let Some(reason) = receipt["reason"].as_object().and_then(|r| r.get("code")).or(receipt.get("reason")) {
        let reason = reason.as_str().map(str::to_owned).unwrap_or_else(|| reason.to_string());
        text.push_str(&format!("\nreason: {reason}"));
    }
    if let Some(e) = receipt["error"].as_object() {
        text.push_str(&format!("\nerror: {} ({})", e["machine_code"], e["http_status"]));
    }
    for key in ["txid", "block_height", "bandwidth_consumed", "fee_paid", "certificate_digest"] {
        if let Some(v) = receipt.get(key).filter(|v| !v.is_null()) {
            let v = v.as_str().map(str::to_owned).unwrap_or_else(|| v.to_string());
            text.push_str(&format!("\n{key}: {v}"));
        }
    }
    Output {
        text,
        failed: status != "success",
        json: receipt,
    }
}

fn authorize(node: &NodeClient, issuer: &str, key: &Path, wait: bool) -> Result<Output, Failure> {
    let issuer: Address = issuer
        .trim()
        .parse()
        .map_err(|e| Failure::Usage(format!("--issuer: {e}")))?;
    let admin = load_key(key)?;
    let nonce = node.account(&admin.address().to_base58())?.next_nonce;
    let req = AuthorizeIssuerRequest {
        issuer_address: issuer.to_base58(),
        nonce,
        timestamp_ms: now_ms(),
    };
    let headers = req.sign(&admin).expect("address already parsed");
    let resp: SubmitResponse = node.post("/v1/issuers", &headers, &req)?;
    if !wait {
        return Ok(Output::ok(format!("txid: {}", resp.txid), json!(resp)));
    }
    let mut out = receipt_outcome(node.wait_receipt(&resp.txid.to_string(), RECEIPT_TIMEOUT)?);
    out.text = format!("issuer: {issuer}\n{}", out.text);
    Ok(out)
}

fn issue(node: &NodeClient, key: &Path, cert_json: &Path, wait: bool) -> Result<Output, Failure> {
    let file = read_cert(cert_json)?;
    let issuer = load_key(key)?;
    let nonce = node.account(&issuer.address().to_base58())?.next_nonce;
    let req = IssueCertificateRequest {
        cert: file.cert,
        extras: file.extras,
        nonce,
        timestamp_ms: now_ms(),
    };
    let headers = req
        .sign(&issuer)
        .map_err(|e| Failure::Domain(format!("invalid certificate: {e}")))?;
    let resp: IssueResponse = node.post("/v1/certificates", &headers, &req)?;
    let summary = format!(
        "digest: {}\nmetadata_cid: {}\nmetadata: {}",
        resp.digest,
        resp.metadata_cid,
        node.url(&format!("/v1/metadata/{}", resp.metadata_cid))
    );
    if !wait {
        return Ok(Output::ok(format!("txid: {}\n{summary}", resp.txid), json!(resp)));
    }
    let receipt = node.wait_receipt(&resp.txid.to_string(), RECEIPT_TIMEOUT)?;
    let mut out = receipt_outcome(receipt.clone());
    out.text = format!("{summary}\n{}", out.text);
    out.json = json!({
        "txid": resp.txid,
        "digest": resp.digest,
        "metadata_cid": resp.metadata_cid,
        "receipt": receipt,
    });
    Ok(out)
}

fn verify(node: &NodeClient, digest: &str, issuer: &str) -> Result<Output, Failure> {
    let digest: CertDigest = digest
        .trim()
        .parse()
        .map_err(|e| Failure::Usage(format!("--digest: {e}")))?;
    let issuer: Address = issuer
        .trim()
        .parse()
        .map_err(|e| Failure::Usage(format!("--issuer: {e}")))?;
    let resp: VerifyResponse = node.get(&format!("/v1/certificates/{digest}?issuer={issuer}"))?;
    let status = json!(resp.status).as_str().unwrap_or_default().to_owned();
    let text = match &resp.record {
        Some(r) if status == "valid" => format!(
            "valid: certificate {} issued by {}\nregistered at block {}\ncompletion {}, issued {}\nmetadata: {}",
            r.certificate_id,
            r.issuer,
            r.registered_at,
            r.completion_date,
            r.issue_date,
            node.url(&format!("/v1/metadata/{}", r.metadata_cid))
        ),
        Some(r) => format!("issuer_mismatch: digest {digest} is registered by {}, not {issuer}", r.issuer),
        None => format!("not_found: no certificate with digest {digest}"),
    };
    Ok(Output {
        text,
        failed: status != "valid",
        json: json!(resp),
    })
}

fn receipt(node: &NodeClient, txid: &str) -> Result<Output, Failure> {
    let txid: TxId = txid
        .trim()
        .parse()
        .map_err(|_| Failure::Usage("--txid must be 64 hex characters".into()))?;
    Ok(receipt_outcome(node.get(&format!("/v1/receipts/{txid}"))?))
}

fn serve(config: Option<&Path>) -> Result<Output, Failure> {
    let config = NodeConfig::load(config).map_err(|e| Failure::Usage(e.to_string()))?;
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Domain(e.to_string()))?;
    runtime
        .block_on(certchain_node::serve(config, async {
            let _ = tokio::signal::ctrl_c().await;
        }))
        .map_err(|e| Failure::Domain(format!("node stopped: {e}")))?;
    Ok(Output::ok("node stopped", json!({"stopped": true})))
}

fn bench(seed: u64, n: usize, interval_ms: u64, clock: ClockArg) -> Result<Output, Failure> {
    let clock = match clock {
        ClockArg::Logical => BenchClock::Logical,
        ClockArg::Wall => BenchClock::Wall,
    };
    let report = run_latency_bench(&BenchConfig::new(n, interval_ms, clock, seed))
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(Output {
        text: report.to_text(),
        failed: report.succeeded != report.n_txs,
        json: json!(report),
    })
}
