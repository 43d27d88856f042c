//! Pinned fixtures shared by the property suites and the acceptance suite.

use certchain_core::CertificateData;

/// SHA-256 of the canonical encoding of [`alice`], computed independently
/// (Python `hashlib` over the length-prefixed fields) and frozen here.
pub const ALICE_DIGEST: &str = "a786f7d3916a64eeb5317745a482f8e1da4d912f754953e08319353c79ce43c2";

pub fn alice() -> CertificateData {
    CertificateData::new("IFSP-2025-0001", "Alice Silva", "Systems Analysis", "IFSP", "2025-01-15", "2025-02-01")
}
