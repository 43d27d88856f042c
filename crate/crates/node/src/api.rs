//! HTTP routes under `/v1`.
//!
//! | method | path                                   | auth          |
//! |--------|----------------------------------------|---------------|
//! | POST   | `/v1/issuers`                          | admin         |
//! | POST   | `/v1/certificates`                     | issuer        |
//! | GET    | `/v1/certificates/{digest}?issuer=...` | public        |
//! | GET    | `/v1/metadata/{cid}`                   | public        |
//! | GET    | `/v1/receipts/{txid}`                  | public        |
//! | GET    | `/v1/blocks/{height}`                  | public        |
//! | GET    | `/v1/accounts/{address}`               | public        |
//! | GET    | `/v1/stats`                            | public        |

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use certchain_core::cas::CasError;
use certchain_core::ledger::{assemble_transaction, ReceiptStatus, Transaction, TxId};
use certchain_core::{Address, CertDigest, ContentId, ContractCall};

use crate::error::ApiError;
use crate::node::{NodeError, NodeHandle};
use crate::wire::{
    AccountResponse, AuthorizeIssuerRequest, IssueCertificateRequest, IssueResponse, SubmitResponse,
    VerifyResponse, HEADER_PUBLIC_KEY, HEADER_SENDER, HEADER_SIGNATURE,
};

pub fn router(node: NodeHandle, cors_origin: Option<&str>) -> Router {
    let origin = match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => AllowOrigin::exact(o),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([
            header::CONTENT_TYPE,
            HeaderName::from_static(HEADER_SENDER),
            HeaderName::from_static(HEADER_PUBLIC_KEY),
            HeaderName::from_static(HEADER_SIGNATURE),
        ]);
    Router::new()
        .route("/v1/issuers", post(authorize_issuer))
        .route("/v1/certificates", post(issue_certificate))
        .route("/v1/certificates/{digest}", get(verify_certificate))
        .route("/v1/metadata/{cid}", get(get_metadata))
        .route("/v1/receipts/{txid}", get(get_receipt))
        .route("/v1/blocks/{height}", get(get_block))
        .route("/v1/accounts/{address}", get(get_account))
        .route("/v1/stats", get(get_stats))
        .layer(cors)
        .with_state(node)
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(format!("request body: {e}")))
}

fn header_str<'a>(headers: &'a HeaderMap, name: &str) -> Result<&'a str, ApiError> {
    headers
        .get(name)
        .and_then(|v| v.to_str().ok())
        .ok_or_else(|| ApiError::malformed(format!("missing header {name}")))
}

/// Rebuilds the transaction a signed request stands for and checks that the
/// detached signature authorizes it.
fn signed_transaction(headers: &HeaderMap, call: ContractCall, nonce: u64, ts: u64) -> Result<Transaction, ApiError> {
    let sender: Address = header_str(headers, HEADER_SENDER)?
        .parse()
        .map_err(|e| ApiError::malformed(format!("{HEADER_SENDER}: {e}")))?;
    let mut public_key = [0u8; 32];
    hex::decode_to_slice(header_str(headers, HEADER_PUBLIC_KEY)?, &mut public_key)
        .map_err(|_| ApiError::malformed(format!("{HEADER_PUBLIC_KEY} must be 64 hex characters")))?;
    let mut signature = [0u8; 64];
    hex::decode_to_slice(header_str(headers, HEADER_SIGNATURE)?, &mut signature)
        .map_err(|_| ApiError::malformed(format!("{HEADER_SIGNATURE} must be 128 hex characters")))?;
    let tx = assemble_transaction(public_key, nonce, ts, call, signature);
    if tx.sender != sender || !tx.verify() {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            "BadSignature",
            "signature does not verify for the sender",
        ));
    }
    Ok(tx)
}

fn submit_error(e: NodeError) -> ApiError {
    match e {
        NodeError::Rejected(r) => ApiError::from(&r),
        other => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "NodeUnavailable", other.to_string()),
    }
}

async fn authorize_issuer(State(node): State<NodeHandle>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let req: AuthorizeIssuerRequest = parse_json(&body)?;
    let call = req
        .call()
        .map_err(|e| ApiError::malformed(format!("issuer_address: {e}")))?;
    let tx = signed_transaction(&headers, call, req.nonce, req.timestamp_ms)?;
    if tx.sender != node.read(|l| l.registry().admin()) {
        return Err(certchain_core::RevertReason::NotAdmin.into());
    }
    let txid = node.submit(tx).await.map_err(submit_error)?;
    Ok((StatusCode::ACCEPTED, Json(SubmitResponse { txid })).into_response())
}

async fn issue_certificate(State(node): State<NodeHandle>, headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let req: IssueCertificateRequest = parse_json(&body)?;
    let invalid = |e: certchain_core::canonical::CertError| {
        ApiError::new(StatusCode::BAD_REQUEST, "InvalidParameters", e.to_string())
    };
    let metadata = req.metadata().map_err(invalid)?;
    let digest = certchain_core::cert_hash(&req.cert).map_err(invalid)?;
    let call = req.call().map_err(invalid)?;
    let tx = signed_transaction(&headers, call, req.nonce, req.timestamp_ms)?;
    if !node.read(|l| l.registry().is_authorized(&tx.sender)) {
        return Err(certchain_core::RevertReason::IssuerNotAuthorized.into());
    }
    // metadata first; an orphan left by a later revert is harmless
    let metadata_cid = node
        .cas()
        .put(&metadata.to_canonical_bytes())
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let txid = node.submit(tx).await.map_err(submit_error)?;
    Ok((
        StatusCode::ACCEPTED,
        Json(IssueResponse {
            txid,
            digest,
            metadata_cid,
        }),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
struct IssuerQuery {
    issuer: Option<String>,
}

async fn verify_certificate(
    State(node): State<NodeHandle>,
    Path(digest): Path<String>,
    Query(q): Query<IssuerQuery>,
) -> Result<Json<VerifyResponse>, ApiError> {
    let digest: CertDigest = digest.parse().map_err(|e| ApiError::malformed(format!("digest: {e}")))?;
    let issuer: Address = q
        .issuer
        .ok_or_else(|| ApiError::malformed("missing query parameter issuer"))?
        .parse()
        .map_err(|e| ApiError::malformed(format!("issuer: {e}")))?;
    let result = node.read(|l| l.validate_certificate(&digest, &issuer));
    Ok(Json(VerifyResponse {
        status: result.status,
        digest,
        issuer,
        metadata_cid: result.record.as_ref().map(|r| r.metadata_cid),
        record: result.record,
    }))
}

async fn get_metadata(State(node): State<NodeHandle>, Path(cid): Path<String>) -> Result<Response, ApiError> {
    let cid: ContentId = cid.parse().map_err(|e| ApiError::malformed(format!("cid: {e}")))?;
    match node.cas().get(&cid) {
        Ok(bytes) => Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response()),
        Err(CasError::NotFound(_)) => Err(ApiError::not_found(format!("metadata {cid}"))),
        Err(e @ CasError::CorruptObject(_)) => {
            Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "CorruptObject", e.to_string()))
        }
        Err(e) => Err(ApiError::internal(e.to_string())),
    }
}

async fn get_receipt(State(node): State<NodeHandle>, Path(txid): Path<String>) -> Result<Json<Value>, ApiError> {
    let txid: TxId = txid
        .parse()
        .map_err(|_| ApiError::malformed("txid must be 64 hex characters"))?;
    let ledger = node.ledger();
    let receipt = match ledger.get_receipt(&txid) {
        Ok(r) => r.clone(),
        Err(_) if ledger.is_pending(&txid) => {
            return Err(ApiError::new(StatusCode::NOT_FOUND, "Pending", "transaction is waiting for a block"))
        }
        Err(_) => return Err(ApiError::not_found(format!("receipt {txid}"))),
    };
    drop(ledger);
    let error = match &receipt.status {
        ReceiptStatus::Success => None,
        ReceiptStatus::Reverted(reason) => Some(ApiError::from(*reason)),
        ReceiptStatus::RejectedPreInclusion(r) => Some(ApiError::from(r)),
    };
    let mut body = serde_json::to_value(&receipt).map_err(|e| ApiError::internal(e.to_string()))?;
    if let Some(e) = error {
        body["error"] = json!(e);
    }
    Ok(Json(body))
}

async fn get_block(State(node): State<NodeHandle>, Path(height): Path<String>) -> Result<Json<Value>, ApiError> {
    let height: u64 = height.parse().map_err(|_| ApiError::malformed("height must be a number"))?;
    let ledger = node.ledger();
    let block = ledger.get_block(height).map_err(|e| ApiError::not_found(e.to_string()))?;
    let transactions: Vec<Value> = block
        .transactions
        .iter()
        .map(|tx| {
            let mut v = json!(tx);
            v["txid"] = json!(tx.txid());
            v
        })
        .collect();
    Ok(Json(json!({
        "hash": hex::encode(block.hash()),
        "header": block.header,
        "transactions": transactions,
    })))
}

async fn get_account(State(node): State<NodeHandle>, Path(address): Path<String>) -> Result<Json<AccountResponse>, ApiError> {
    let address: Address = address.parse().map_err(|e| ApiError::malformed(format!("address: {e}")))?;
    let ledger = node.ledger();
    let fees = ledger.fees();
    let meta = ledger.account(&address);
    Ok(Json(AccountResponse {
        address,
        next_nonce: ledger.next_nonce(&address),
        balance_sun: meta.map_or(0, |m| m.balance_sun),
        free_bandwidth_remaining: meta.map_or(fees.free_bandwidth_per_day, |m| m.free_bandwidth_remaining),
        is_admin: ledger.registry().admin() == address,
        is_authorized_issuer: ledger.registry().is_authorized(&address),
    }))
}

async fn get_stats(State(node): State<NodeHandle>) -> Json<Value> {
    Json(json!(node.read(|l| l.stats())))
}
