//! Certificate registry contract: issuer authorization, duplicate prevention
//! and public validation.
//!
//! Every mutating call either succeeds or leaves the state untouched and
//! reports a [`RevertReason`]. All guards run before the first write.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::address::{Address, ADDRESS_LEN};
use crate::canonical::{cert_hash, CertDigest, CertificateData};
use crate::cas::ContentId;
use crate::codec::{sha256, DecodeError, Reader, Writer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RevertReason {
    NotAdmin,
    IssuerNotAuthorized,
    DuplicateCertificate,
    InvalidParameters,
    CounterOverflow,
    AlreadyAuthorized,
    UnknownIssuer,
}

impl RevertReason {
    pub const ALL: [RevertReason; 7] = [
        RevertReason::NotAdmin,
        RevertReason::IssuerNotAuthorized,
        RevertReason::DuplicateCertificate,
        RevertReason::InvalidParameters,
        RevertReason::CounterOverflow,
        RevertReason::AlreadyAuthorized,
        RevertReason::UnknownIssuer,
    ];

    pub fn code(self) -> &'static str {
        match self {
            RevertReason::NotAdmin => "NotAdmin",
            RevertReason::IssuerNotAuthorized => "IssuerNotAuthorized",
            RevertReason::DuplicateCertificate => "DuplicateCertificate",
            RevertReason::InvalidParameters => "InvalidParameters",
            RevertReason::CounterOverflow => "CounterOverflow",
            RevertReason::AlreadyAuthorized => "AlreadyAuthorized",
            RevertReason::UnknownIssuer => "UnknownIssuer",
        }
    }
}

impl fmt::Display for RevertReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A contract call carried by a transaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContractCall {
    AuthorizeIssuer {
        issuer: Address,
    },
    RegisterCertificate {
        cert: CertificateData,
        metadata_cid: ContentId,
    },
}

const CALL_AUTHORIZE: u8 = 0x01;
const CALL_REGISTER: u8 = 0x02;

impl ContractCall {
    /// Static parameter check, independent of contract state.
    pub fn validate(&self) -> Result<(), RevertReason> {
        match self {
            ContractCall::AuthorizeIssuer { .. } => Ok(()),
            ContractCall::RegisterCertificate { cert, .. } => cert
                .normalized()
                .map(|_| ())
                .map_err(|_| RevertReason::InvalidParameters),
        }
    }

    pub fn encode(&self, w: &mut Writer) {
        match self {
            ContractCall::AuthorizeIssuer { issuer } => {
                w.u8(CALL_AUTHORIZE).raw(issuer.as_bytes());
            }
            ContractCall::RegisterCertificate { cert, metadata_cid } => {
                w.u8(CALL_REGISTER);
                cert.encode_raw(w);
                w.raw(&metadata_cid.to_bytes());
            }
        }
    }

    pub fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        match r.u8()? {
            CALL_AUTHORIZE => Ok(ContractCall::AuthorizeIssuer {
                issuer: decode_address(r)?,
            }),
            CALL_REGISTER => {
                let cert = CertificateData::decode_raw(r)?;
                let metadata_cid = decode_cid(r)?;
                Ok(ContractCall::RegisterCertificate { cert, metadata_cid })
            }
            tag => Err(DecodeError::InvalidTag(tag)),
        }
    }
}

pub(crate) fn decode_address(r: &mut Reader<'_>) -> Result<Address, DecodeError> {
    Address::from_bytes(r.array::<ADDRESS_LEN>()?).map_err(|e| DecodeError::Invalid(e.to_string()))
}

fn decode_cid(r: &mut Reader<'_>) -> Result<ContentId, DecodeError> {
    ContentId::from_bytes(&r.array::<36>()?).map_err(|e| DecodeError::Invalid(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub digest: CertDigest,
    pub certificate_id: String,
    pub issuer: Address,
    pub completion_date: String,
    pub issue_date: String,
    pub metadata_cid: ContentId,
    pub registered_at: u64,
}

impl CertificateRecord {
    fn encode(&self, w: &mut Writer) {
        w.raw(self.digest.as_bytes())
            .str(&self.certificate_id)
            .raw(self.issuer.as_bytes())
            .str(&self.completion_date)
            .str(&self.issue_date)
            .raw(&self.metadata_cid.to_bytes())
            .u64(self.registered_at);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationStatus {
    Valid,
    NotFound,
    IssuerMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub status: ValidationStatus,
    pub record: Option<CertificateRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallOutput {
    IssuerAuthorized(Address),
    CertificateRegistered(CertDigest),
}

/// Deliberate contract defects, used only to check that the security suite
/// notices them.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FaultInjection {
    pub skip_duplicate_check: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryState {
    admin: Address,
    authorized_issuers: BTreeSet<Address>,
    certificates: BTreeMap<CertDigest, CertificateRecord>,
    total_certificates: u64,
    faults: FaultInjection,
}

impl RegistryState {
    pub fn new(admin: Address) -> Self {
        Self {
            admin,
            authorized_issuers: BTreeSet::new(),
            certificates: BTreeMap::new(),
            total_certificates: 0,
            faults: FaultInjection::default(),
        }
    }

    /// Genesis hook: starts the certificate counter at `count`. Only meant for
    /// exercising the overflow guard; the counter then no longer equals the
    /// number of stored records.
    pub fn with_counter(mut self, count: u64) -> Self {
        self.total_certificates = count;
        self
    }

    #[doc(hidden)]
    pub fn with_faults(mut self, faults: FaultInjection) -> Self {
        self.faults = faults;
        self
    }

    pub fn admin(&self) -> Address {
        self.admin
    }

    pub fn authorized_issuers(&self) -> &BTreeSet<Address> {
        &self.authorized_issuers
    }

    pub fn is_authorized(&self, addr: &Address) -> bool {
        self.authorized_issuers.contains(addr)
    }

    pub fn certificates(&self) -> &BTreeMap<CertDigest, CertificateRecord> {
        &self.certificates
    }

    pub fn total_certificates(&self) -> u64 {
        self.total_certificates
    }

    pub fn authorize_issuer(&mut self, caller: Address, issuer: Address) -> Result<(), RevertReason> {
        if caller != self.admin {
            return Err(RevertReason::NotAdmin);
        }
        if self.authorized_issuers.contains(&issuer) {
            return Err(RevertReason::AlreadyAuthorized);
        }
        self.authorized_issuers.insert(issuer);
        Ok(())
    }

    pub fn register_certificate(
        &mut self,
        caller: Address,
        cert: &CertificateData,
        metadata_cid: ContentId,
        height: u64,
    ) -> Result<CertDigest, RevertReason> {
        let normalized = cert.normalized().map_err(|_| RevertReason::InvalidParameters)?;
        let digest = cert_hash(&normalized).map_err(|_| RevertReason::InvalidParameters)?;
        if !self.authorized_issuers.contains(&caller) {
            return Err(RevertReason::IssuerNotAuthorized);
        }
        if !self.faults.skip_duplicate_check && self.certificates.contains_key(&digest) {
            return Err(RevertReason::DuplicateCertificate);
        }
        let next = self
            .total_certificates
            .checked_add(1)
            .ok_or(RevertReason::CounterOverflow)?;
        self.certificates.insert(
            digest,
            CertificateRecord {
                digest,
                certificate_id: normalized.certificate_id,
                issuer: caller,
                completion_date: normalized.completion_date,
                issue_date: normalized.issue_date,
                metadata_cid,
                registered_at: height,
            },
        );
        self.total_certificates = next;
        Ok(digest)
    }

    /// Public, read-only lookup by digest followed by an issuer comparison.
    pub fn validate_certificate(&self, digest: &CertDigest, issuer: &Address) -> ValidationResult {
        match self.certificates.get(digest) {
            None => ValidationResult {
                status: ValidationStatus::NotFound,
                record: None,
            },
            Some(rec) => ValidationResult {
                status: if rec.issuer == *issuer {
                    ValidationStatus::Valid
                } else {
                    ValidationStatus::IssuerMismatch
                },
                record: Some(rec.clone()),
            },
        }
    }

    /// Single dispatch point used by block execution. Parameters are checked
    /// before any state is read.
    pub fn apply_call(
        &mut self,
        caller: Address,
        call: &ContractCall,
        height: u64,
    ) -> Result<CallOutput, RevertReason> {
        call.validate()?;
        match call {
            ContractCall::AuthorizeIssuer { issuer } => self
                .authorize_issuer(caller, *issuer)
                .map(|()| CallOutput::IssuerAuthorized(*issuer)),
            ContractCall::RegisterCertificate { cert, metadata_cid } => self
                .register_certificate(caller, cert, *metadata_cid, height)
                .map(CallOutput::CertificateRegistered),
        }
    }

    /// Deterministic snapshot: issuers and records in ascending byte order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode(&mut w);
        w.finish()
    }

    pub(crate) fn encode(&self, w: &mut Writer) {
        w.raw(self.admin.as_bytes());
        w.u32(self.authorized_issuers.len() as u32);
        for issuer in &self.authorized_issuers {
            w.raw(issuer.as_bytes());
        }
        w.u64(self.total_certificates);
        w.u32(self.certificates.len() as u32);
        for record in self.certificates.values() {
            record.encode(w);
        }
    }

    pub fn digest(&self) -> [u8; 32] {
        sha256(&self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::Keypair;

    fn addr(seed: u8) -> Address {
        Keypair::from_seed([seed; 32]).address()
    }

    fn cert(id: &str) -> CertificateData {
        CertificateData::new(id, "Alice Silva", "Systems Analysis", "IFSP", "2025-01-15", "2025-02-01")
    }

    fn cid() -> ContentId {
        ContentId::for_content(b"metadata")
    }

    fn register(id: &str) -> ContractCall {
        ContractCall::RegisterCertificate {
            cert: cert(id),
            metadata_cid: cid(),
        }
    }

    #[test]
    fn admin_authorizes_fresh_issuer() {
        let mut s = RegistryState::new(addr(0));
        s.authorize_issuer(addr(0), addr(1)).unwrap();
        assert!(s.is_authorized(&addr(1)));
        assert_eq!(s.authorize_issuer(addr(0), addr(1)), Err(RevertReason::AlreadyAuthorized));
    }

    #[test]
    fn non_admin_cannot_authorize() {
        let mut s = RegistryState::new(addr(0));
        let before = s.clone();
        assert_eq!(s.authorize_issuer(addr(1), addr(2)), Err(RevertReason::NotAdmin));
        assert_eq!(s, before);
    }

    #[test]
    fn unauthorized_issuance_reverts_without_change() {
        let mut s = RegistryState::new(addr(0));
        let before = s.to_bytes();
        assert_eq!(
            s.apply_call(addr(5), &register("X-1"), 1),
            Err(RevertReason::IssuerNotAuthorized)
        );
        assert_eq!(s.to_bytes(), before);
    }

    #[test]
    fn registration_and_duplicate() {
        let mut s = RegistryState::new(addr(0));
        s.authorize_issuer(addr(0), addr(1)).unwrap();
        s.authorize_issuer(addr(0), addr(2)).unwrap();
        let out = s.apply_call(addr(1), &register("X-1"), 7).unwrap();
        let digest = cert_hash(&cert("X-1")).unwrap();
        assert_eq!(out, CallOutput::CertificateRegistered(digest));
        assert_eq!(s.total_certificates(), 1);
        assert_eq!(s.certificates()[&digest].registered_at, 7);

        let before = s.to_bytes();
        assert_eq!(s.apply_call(addr(1), &register("X-1"), 8), Err(RevertReason::DuplicateCertificate));
        // the digest is global: a second issuer cannot claim the same content
        assert_eq!(s.apply_call(addr(2), &register("X-1"), 8), Err(RevertReason::DuplicateCertificate));
        assert_eq!(s.to_bytes(), before);
    }

    #[test]
    fn counter_overflow_reverts() {
        let mut s = RegistryState::new(addr(0)).with_counter(u64::MAX);
        s.authorize_issuer(addr(0), addr(1)).unwrap();
        let before = s.clone();
        assert_eq!(s.apply_call(addr(1), &register("X-1"), 1), Err(RevertReason::CounterOverflow));
        assert_eq!(s, before);

        let mut s = RegistryState::new(addr(0)).with_counter(u64::MAX - 1);
        s.authorize_issuer(addr(0), addr(1)).unwrap();
        assert!(s.apply_call(addr(1), &register("X-1"), 1).is_ok());
        assert_eq!(s.total_certificates(), u64::MAX);
    }

    #[test]
    fn invalid_parameters_checked_before_authorization() {
        // caller is not even authorized, yet the parameter error wins
        let mut s = RegistryState::new(addr(0));
        let call = ContractCall::RegisterCertificate {
            cert: cert(""),
            metadata_cid: cid(),
        };
        let before = s.clone();
        assert_eq!(s.apply_call(addr(9), &call, 1), Err(RevertReason::InvalidParameters));
        assert_eq!(s, before);
    }

    #[test]
    fn validation_verdicts() {
        let mut s = RegistryState::new(addr(0));
        s.authorize_issuer(addr(0), addr(1)).unwrap();
        let digest = s.register_certificate(addr(1), &cert("X-1"), cid(), 3).unwrap();

        let ok = s.validate_certificate(&digest, &addr(1));
        assert_eq!(ok.status, ValidationStatus::Valid);
        assert_eq!(ok.record.unwrap().issuer, addr(1));

        let mismatch = s.validate_certificate(&digest, &addr(2));
        assert_eq!(mismatch.status, ValidationStatus::IssuerMismatch);
        assert!(mismatch.record.is_some());

        let missing = s.validate_certificate(&CertDigest([0xee; 32]), &addr(1));
        assert_eq!(missing.status, ValidationStatus::NotFound);
        assert!(missing.record.is_none());
    }

    #[test]
    fn duplicate_fault_injection_disables_guard() {
        let mut s = RegistryState::new(addr(0)).with_faults(FaultInjection {
            skip_duplicate_check: true,
        });
        s.authorize_issuer(addr(0), addr(1)).unwrap();
        s.apply_call(addr(1), &register("X-1"), 1).unwrap();
        assert!(s.apply_call(addr(1), &register("X-1"), 2).is_ok());
    }

    #[test]
    fn call_codec_round_trip() {
        for call in [ContractCall::AuthorizeIssuer { issuer: addr(3) }, register("X-9")] {
            let mut w = Writer::new();
            call.encode(&mut w);
            let bytes = w.finish();
            let mut r = Reader::new(&bytes);
            assert_eq!(ContractCall::decode(&mut r).unwrap(), call);
            r.finish().unwrap();
        }
        assert_eq!(
            ContractCall::decode(&mut Reader::new(&[9])),
            Err(DecodeError::InvalidTag(9))
        );
    }
}
