//! JSON request/response bodies and the detached-signature header scheme.
//!
//! Mutating requests carry three headers:
//!
//! * `X-Sender`: Base58Check address of the signer
//! * `X-Public-Key`: hex Ed25519 public key the address derives from
//! * `X-Signature`: hex Ed25519 signature over the canonical body
//!
//! The canonical body of a request is the signing preimage of the
//! transaction it becomes: `sender(21) || public_key(32) || nonce(u64 BE)
//! || timestamp_ms(u64 BE) || call`, with the call encoded as in the chain
//! file. The node rebuilds that preimage from the JSON body, so a valid
//! header signature is also the on-chain transaction signature and the
//! key never leaves the client.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use certchain_core::address::AddressError;
use certchain_core::canonical::CertError;
use certchain_core::ledger::{Transaction, TxId};
use certchain_core::{
    Address, CertDigest, CertificateData, CertificateRecord, ContentId, ContractCall, Keypair, MetadataDocument,
    ValidationStatus,
};

pub const HEADER_SENDER: &str = "x-sender";
pub const HEADER_PUBLIC_KEY: &str = "x-public-key";
pub const HEADER_SIGNATURE: &str = "x-signature";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureHeaders {
    pub sender: Address,
    pub public_key_hex: String,
    pub signature_hex: String,
}

impl SignatureHeaders {
    pub fn pairs(&self) -> [(&'static str, String); 3] {
        [
            (HEADER_SENDER, self.sender.to_base58()),
            (HEADER_PUBLIC_KEY, self.public_key_hex.clone()),
            (HEADER_SIGNATURE, self.signature_hex.clone()),
        ]
    }
}

pub fn sign_call(keypair: &Keypair, call: &ContractCall, nonce: u64, timestamp_ms: u64) -> SignatureHeaders {
    let preimage = Transaction::signing_bytes(&keypair.address(), &keypair.public_key(), nonce, timestamp_ms, call);
    SignatureHeaders {
        sender: keypair.address(),
        public_key_hex: hex::encode(keypair.public_key()),
        signature_hex: hex::encode(keypair.sign(&preimage)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorizeIssuerRequest {
    pub issuer_address: String,
    pub nonce: u64,
    pub timestamp_ms: u64,
}

impl AuthorizeIssuerRequest {
    pub fn call(&self) -> Result<ContractCall, AddressError> {
        Ok(ContractCall::AuthorizeIssuer {
            issuer: self.issuer_address.trim().parse()?,
        })
    }

    pub fn sign(&self, keypair: &Keypair) -> Result<SignatureHeaders, AddressError> {
        Ok(sign_call(keypair, &self.call()?, self.nonce, self.timestamp_ms))
    }
}

/// The six certificate fields, an optional `extras` object, and the
/// transaction nonce and timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IssueCertificateRequest {
    #[serde(flatten)]
    pub cert: CertificateData,
    #[serde(default)]
    pub extras: BTreeMap<String, Value>,
    pub nonce: u64,
    pub timestamp_ms: u64,
}

impl IssueCertificateRequest {
    pub fn metadata(&self) -> Result<MetadataDocument, CertError> {
        MetadataDocument::new(&self.cert, self.extras.clone())
    }

    /// The `RegisterCertificate` call this request turns into. The
    /// certificate travels as entered; the content ID is that of the
    /// canonical metadata document.
    pub fn call(&self) -> Result<ContractCall, CertError> {
        Ok(ContractCall::RegisterCertificate {
            cert: self.cert.clone(),
            metadata_cid: self.metadata()?.content_id(),
        })
    }

    pub fn sign(&self, keypair: &Keypair) -> Result<SignatureHeaders, CertError> {
        Ok(sign_call(keypair, &self.call()?, self.nonce, self.timestamp_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub txid: TxId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueResponse {
    pub txid: TxId,
    pub digest: CertDigest,
    pub metadata_cid: ContentId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyResponse {
    pub status: ValidationStatus,
    pub digest: CertDigest,
    pub issuer: Address,
    pub record: Option<CertificateRecord>,
    pub metadata_cid: Option<ContentId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccountResponse {
    pub address: Address,
    pub next_nonce: u64,
    pub balance_sun: u64,
    pub free_bandwidth_remaining: u64,
    pub is_admin: bool,
    pub is_authorized_issuer: bool,
}
