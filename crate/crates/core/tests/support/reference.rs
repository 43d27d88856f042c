//! Naive reference interpreter for the registry contract, written against
//! plain vectors and a hand-rolled digest so it shares no code path with
//! `RegistryState` beyond the input types.

use certchain_core::{Address, CertificateData, ContractCall};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefOutcome {
    Ok,
    Err(&'static str),
}

#[derive(Debug, Clone)]
pub struct RefRegistry {
    pub admin: Address,
    pub issuers: Vec<Address>,
    /// (digest, issuer) in insertion order
    pub certs: Vec<([u8; 32], Address)>,
    pub counter: u128,
}

pub fn ref_digest(cert: &CertificateData) -> [u8; 32] {
    let mut bytes = Vec::new();
    for f in [
        &cert.certificate_id,
        &cert.holder_name,
        &cert.course_title,
        &cert.institution_name,
        &cert.completion_date,
        &cert.issue_date,
    ] {
        let f = f.trim();
        bytes.extend_from_slice(&(f.len() as u32).to_be_bytes());
        bytes.extend_from_slice(f.as_bytes());
    }
    Sha256::digest(&bytes).into()
}

/// Only ASCII, already-NFC fixtures are fed to the reference, so validity
/// reduces to: no blank field, dates of shape YYYY-MM-DD, completion <= issue.
fn ref_valid(cert: &CertificateData) -> bool {
    let blank = [
        &cert.certificate_id,
        &cert.holder_name,
        &cert.course_title,
        &cert.institution_name,
    ]
    .iter()
    .any(|f| f.trim().is_empty());
    let date_ok = |d: &str| d.len() == 10 && d.as_bytes()[4] == b'-' && d.as_bytes()[7] == b'-';
    !blank && date_ok(&cert.completion_date) && date_ok(&cert.issue_date) && cert.completion_date <= cert.issue_date
}

impl RefRegistry {
    pub fn new(admin: Address, counter: u128) -> Self {
        Self {
            admin,
            issuers: Vec::new(),
            certs: Vec::new(),
            counter,
        }
    }

    pub fn apply(&mut self, caller: Address, call: &ContractCall) -> RefOutcome {
        match call {
            ContractCall::AuthorizeIssuer { issuer } => {
                if caller != self.admin {
                    return RefOutcome::Err("NotAdmin");
                }
                if self.issuers.contains(issuer) {
                    return RefOutcome::Err("AlreadyAuthorized");
                }
                self.issuers.push(*issuer);
                RefOutcome::Ok
            }
            ContractCall::RegisterCertificate { cert, .. } => {
                if !ref_valid(cert) {
                    return RefOutcome::Err("InvalidParameters");
                }
                if !self.issuers.contains(&caller) {
                    return RefOutcome::Err("IssuerNotAuthorized");
                }
                let d = ref_digest(cert);
                if self.certs.iter().any(|(x, _)| *x == d) {
                    return RefOutcome::Err("DuplicateCertificate");
                }
                if self.counter + 1 > u64::MAX as u128 {
                    return RefOutcome::Err("CounterOverflow");
                }
                self.certs.push((d, caller));
                self.counter += 1;
                RefOutcome::Ok
            }
        }
    }
}
