//! Certificate attributes, their canonical byte encoding and the digest that
//! identifies a certificate.
//!
//! Canonical encoding: the six core fields in fixed order
//! (`certificate_id`, `holder_name`, `course_title`, `institution_name`,
//! `completion_date`, `issue_date`), each emitted as a 4-byte big-endian
//! byte length followed by its UTF-8 bytes. String fields are trimmed and
//! NFC-normalized first; dates are `YYYY-MM-DD`. The digest is SHA-256 of
//! those bytes.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::codec::{sha256, DecodeError, Reader, Writer};

pub const FIELD_NAMES: [&str; 6] = [
    "certificate_id",
    "holder_name",
    "course_title",
    "institution_name",
    "completion_date",
    "issue_date",
];

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertError {
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },
}

impl CertError {
    fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        CertError::InvalidField {
            field,
            reason: reason.into(),
        }
    }
}

/// Certificate attributes as entered by an issuer.
///
/// Values are kept as entered; [`CertificateData::normalized`] applies the
/// trimming, NFC and date rules.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CertificateData {
    pub certificate_id: String,
    pub holder_name: String,
    pub course_title: String,
    pub institution_name: String,
    pub completion_date: String,
    pub issue_date: String,
}

impl CertificateData {
    pub fn new(
        certificate_id: impl Into<String>,
        holder_name: impl Into<String>,
        course_title: impl Into<String>,
        institution_name: impl Into<String>,
        completion_date: impl Into<String>,
        issue_date: impl Into<String>,
    ) -> Self {
        Self {
            certificate_id: certificate_id.into(),
            holder_name: holder_name.into(),
            course_title: course_title.into(),
            institution_name: institution_name.into(),
            completion_date: completion_date.into(),
            issue_date: issue_date.into(),
        }
    }

    pub fn fields(&self) -> [&str; 6] {
        [
            &self.certificate_id,
            &self.holder_name,
            &self.course_title,
            &self.institution_name,
            &self.completion_date,
            &self.issue_date,
        ]
    }

    fn from_fields(mut f: [String; 6]) -> Self {
        let take = |s: &mut String| std::mem::take(s);
        Self {
            certificate_id: take(&mut f[0]),
            holder_name: take(&mut f[1]),
            course_title: take(&mut f[2]),
            institution_name: take(&mut f[3]),
            completion_date: take(&mut f[4]),
            issue_date: take(&mut f[5]),
        }
    }

    /// Validates the record and returns the normalized form that feeds the
    /// canonical encoding.
    pub fn normalized(&self) -> Result<CertificateData, CertError> {
        let mut out: [String; 6] = Default::default();
        for (i, (name, raw)) in FIELD_NAMES.iter().zip(self.fields()).enumerate() {
            let value: String = raw.trim().nfc().collect();
            if value.is_empty() {
                return Err(CertError::invalid(name, "must not be empty"));
            }
            out[i] = value;
        }
        let completion = parse_date(FIELD_NAMES[4], &out[4])?;
        let issue = parse_date(FIELD_NAMES[5], &out[5])?;
        if completion > issue {
            return Err(CertError::invalid(
                "completion_date",
                "completion_date is later than issue_date",
            ));
        }
        Ok(Self::from_fields(out))
    }

    pub fn completion(&self) -> Option<NaiveDate> {
        NaiveDate::parse_from_str(self.completion_date.trim(), DATE_FORMAT).ok()
    }

    pub fn issued(&self) -> Option<NaiveDate> {
        NaiveDate::parse_from_str(self.issue_date.trim(), DATE_FORMAT).ok()
    }

    /// Encodes the fields exactly as stored, without validation. Used for
    /// transaction payloads, which must be able to carry malformed input
    /// up to the point where it is rejected.
    pub(crate) fn encode_raw(&self, w: &mut Writer) {
        for field in self.fields() {
            w.str(field);
        }
    }

    pub(crate) fn decode_raw(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        let mut f: [String; 6] = Default::default();
        for slot in f.iter_mut() {
            *slot = r.string()?;
        }
        Ok(Self::from_fields(f))
    }
}

fn parse_date(field: &'static str, value: &str) -> Result<NaiveDate, CertError> {
    // chrono accepts unpadded months and days, the canonical form does not
    let date = NaiveDate::parse_from_str(value, DATE_FORMAT)
        .map_err(|e| CertError::invalid(field, format!("not a YYYY-MM-DD date: {e}")))?;
    if date.format(DATE_FORMAT).to_string() != value {
        return Err(CertError::invalid(field, "not a YYYY-MM-DD date"));
    }
    Ok(date)
}

/// The canonical byte encoding of a certificate.
pub fn canonicalize(cert: &CertificateData) -> Result<Vec<u8>, CertError> {
    let normalized = cert.normalized()?;
    let mut w = Writer::new();
    normalized.encode_raw(&mut w);
    Ok(w.finish())
}

/// Parses canonical bytes back into the (normalized) field tuple.
pub fn decode_canonical(bytes: &[u8]) -> Result<CertificateData, DecodeError> {
    let mut r = Reader::new(bytes);
    let cert = CertificateData::decode_raw(&mut r)?;
    r.finish()?;
    Ok(cert)
}

pub fn cert_hash(cert: &CertificateData) -> Result<CertDigest, CertError> {
    Ok(CertDigest(sha256(&canonicalize(cert)?)))
}

/// SHA-256 digest of a certificate's canonical encoding.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CertDigest(pub [u8; 32]);

impl CertDigest {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for CertDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for CertDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CertDigest({})", self.to_hex())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("digest must be 64 hexadecimal characters")]
pub struct ParseDigestError;

impl FromStr for CertDigest {
    type Err = ParseDigestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 64 {
            return Err(ParseDigestError);
        }
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out).map_err(|_| ParseDigestError)?;
        Ok(CertDigest(out))
    }
}

impl Serialize for CertDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CertDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen with an independent SHA-256 (Python hashlib) over the documented
    // length-prefixed bytes.
    const ALICE_CANONICAL_HEX: &str = "0000000e494653502d323032352d303030310000000b416c6963652053696c76610000001053797374656d7320416e616c7973697300000004494653500000000a323032352d30312d31350000000a323032352d30322d3031";
    const ALICE_DIGEST: &str = "a786f7d3916a64eeb5317745a482f8e1da4d912f754953e08319353c79ce43c2";
    const ALICE_TYPO_DIGEST: &str =
        "2888fa1abd0be4f30d9247f1a8216b679cf6303b4970bbfbb8267f7e842c9fce";

    fn alice() -> CertificateData {
        CertificateData::new(
            "IFSP-2025-0001",
            "Alice Silva",
            "Systems Analysis",
            "IFSP",
            "2025-01-15",
            "2025-02-01",
        )
    }

    #[test]
    fn alice_canonical_bytes_and_digest_are_pinned() {
        assert_eq!(hex::encode(canonicalize(&alice()).unwrap()), ALICE_CANONICAL_HEX);
        assert_eq!(cert_hash(&alice()).unwrap().to_hex(), ALICE_DIGEST);
    }

    #[test]
    fn one_character_change_gives_pinned_different_digest() {
        let mut c = alice();
        c.course_title = "Systems Analysiz".into();
        let d = cert_hash(&c).unwrap();
        assert_eq!(d.to_hex(), ALICE_TYPO_DIGEST);
        assert_ne!(d, cert_hash(&alice()).unwrap());
    }

    #[test]
    fn identical_inputs_identical_bytes() {
        assert_eq!(canonicalize(&alice()), canonicalize(&alice().clone()));
    }

    #[test]
    fn key_order_in_json_input_is_irrelevant() {
        let a: CertificateData = serde_json::from_str(
            r#"{"certificate_id":"IFSP-2025-0001","holder_name":"Alice Silva","course_title":"Systems Analysis","institution_name":"IFSP","completion_date":"2025-01-15","issue_date":"2025-02-01"}"#,
        )
        .unwrap();
        let b: CertificateData = serde_json::from_str(
            r#"{"issue_date":"2025-02-01","institution_name":"IFSP","completion_date":"2025-01-15","course_title":"Systems Analysis","holder_name":"Alice Silva","certificate_id":"IFSP-2025-0001"}"#,
        )
        .unwrap();
        assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
    }

    #[test]
    fn trailing_whitespace_is_trimmed() {
        let mut a = alice();
        a.holder_name = "Ana ".into();
        let mut b = alice();
        b.holder_name = "Ana".into();
        assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
    }

    #[test]
    fn nfc_and_nfd_forms_hash_equal() {
        let mut a = alice();
        a.holder_name = "Jos\u{e9}".into();
        let mut b = alice();
        b.holder_name = "Jose\u{301}".into();
        assert_eq!(cert_hash(&a).unwrap(), cert_hash(&b).unwrap());
    }

    #[test]
    fn rejects_empty_and_blank_fields() {
        for (i, name) in FIELD_NAMES.iter().enumerate().take(4) {
            let mut c = alice();
            let slot = match i {
                0 => &mut c.certificate_id,
                1 => &mut c.holder_name,
                2 => &mut c.course_title,
                _ => &mut c.institution_name,
            };
            *slot = "   ".into();
            let err = canonicalize(&c).unwrap_err();
            assert!(matches!(err, CertError::InvalidField { field, .. } if field == *name));
        }
    }

    #[test]
    fn rejects_malformed_and_inverted_dates() {
        for bad in ["2025-13-01", "2025-02-30", "2025-1-15", "15/01/2025", ""] {
            let mut c = alice();
            c.completion_date = bad.into();
            assert!(canonicalize(&c).is_err(), "{bad}");
        }
        let mut c = alice();
        c.completion_date = "2025-03-01".into();
        assert!(matches!(
            canonicalize(&c),
            Err(CertError::InvalidField { field: "completion_date", .. })
        ));
        // same-day completion and issue is allowed
        c.completion_date = "2025-02-01".into();
        assert!(canonicalize(&c).is_ok());
    }

    #[test]
    fn decode_recovers_tuple() {
        let bytes = canonicalize(&alice()).unwrap();
        assert_eq!(decode_canonical(&bytes).unwrap(), alice());
        assert!(decode_canonical(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn digest_parsing() {
        let d: CertDigest = ALICE_DIGEST.parse().unwrap();
        assert_eq!(d.to_string(), ALICE_DIGEST);
        assert!(ALICE_DIGEST[..63].parse::<CertDigest>().is_err());
        assert!("zz".repeat(32).parse::<CertDigest>().is_err());
    }
}
