//! Content-addressed metadata store.
//!
//! A [`ContentId`] is the 36-byte CIDv1 layout `01 55 12 20 <sha256>`
//! (version 1, raw codec, sha2-256 multihash) rendered as `b` followed by
//! lowercase RFC 4648 base32 without padding, so raw leaves get the same
//! ID an IPFS node would compute. Objects live at `<root>/aa/bb/<hex>`
//! where `aabb` are the first two digest bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::canonical::{CertError, CertificateData, FIELD_NAMES};
use crate::codec::sha256;

pub const CID_VERSION: u8 = 0x01;
pub const CODEC_RAW: u8 = 0x55;
pub const MULTIHASH_SHA2_256: u8 = 0x12;
pub const DIGEST_LEN: u8 = 0x20;
pub const CID_LEN: usize = 36;

pub const DEFAULT_MAX_OBJECT_SIZE: usize = 1024 * 1024;

const BASE32_ALPHABET: &[u8; 32] = b"abcdefghijklmnopqrstuvwxyz234567";

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentId {
    digest: [u8; 32],
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CidError {
    #[error("content id must start with multibase prefix `b`")]
    Multibase,
    #[error("invalid base32 character {0:?}")]
    Base32(char),
    #[error("content id must decode to {CID_LEN} bytes, got {0}")]
    Length(usize),
    #[error("unsupported content id header {0:02x?}")]
    Header([u8; 4]),
}

impl ContentId {
    pub fn for_content(content: &[u8]) -> Self {
        Self {
            digest: sha256(content),
        }
    }

    pub fn from_digest(digest: [u8; 32]) -> Self {
        Self { digest }
    }

    pub fn digest(&self) -> &[u8; 32] {
        &self.digest
    }

    pub fn to_bytes(&self) -> [u8; CID_LEN] {
        let mut out = [0u8; CID_LEN];
        out[..4].copy_from_slice(&[CID_VERSION, CODEC_RAW, MULTIHASH_SHA2_256, DIGEST_LEN]);
        out[4..].copy_from_slice(&self.digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CidError> {
        if bytes.len() != CID_LEN {
            return Err(CidError::Length(bytes.len()));
        }
        let header = [bytes[0], bytes[1], bytes[2], bytes[3]];
        if header != [CID_VERSION, CODEC_RAW, MULTIHASH_SHA2_256, DIGEST_LEN] {
            return Err(CidError::Header(header));
        }
        let mut digest = [0u8; 32];
        digest.copy_from_slice(&bytes[4..]);
        Ok(Self { digest })
    }
}

pub fn base32_encode(bytes: &[u8]) -> String {
    let mut out = String::with_capacity((bytes.len() * 8).div_ceil(5));
    let mut buffer: u32 = 0;
    let mut bits = 0;
    for &b in bytes {
        buffer = (buffer << 8) | u32::from(b);
        bits += 8;
        while bits >= 5 {
            bits -= 5;
            out.push(BASE32_ALPHABET[((buffer >> bits) & 0x1f) as usize] as char);
        }
    }
    if bits > 0 {
        out.push(BASE32_ALPHABET[((buffer << (5 - bits)) & 0x1f) as usize] as char);
    }
    out
}

pub fn base32_decode(s: &str) -> Result<Vec<u8>, CidError> {
    let mut out = Vec::with_capacity(s.len() * 5 / 8);
    let mut buffer: u32 = 0;
    let mut bits = 0;
    for c in s.chars() {
        let v = match c {
            'a'..='z' => c as u32 - 'a' as u32,
            '2'..='7' => c as u32 - '2' as u32 + 26,
            _ => return Err(CidError::Base32(c)),
        };
        buffer = (buffer << 5) | v;
        bits += 5;
        if bits >= 8 {
            bits -= 8;
            out.push((buffer >> bits) as u8);
        }
    }
    Ok(out)
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}", base32_encode(&self.to_bytes()))
    }
}

impl fmt::Debug for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentId({self})")
    }
}

impl FromStr for ContentId {
    type Err = CidError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.strip_prefix('b').ok_or(CidError::Multibase)?;
        let cid = ContentId::from_bytes(&base32_decode(body)?)?;
        // reject non-canonical spellings (stray trailing bits)
        if cid.to_string() != s {
            return Err(CidError::Length(body.len()));
        }
        Ok(cid)
    }
}

impl Serialize for ContentId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ContentId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum CasError {
    #[error("content is empty")]
    Empty,
    #[error("content is {size} bytes, limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("object {0} not found")]
    NotFound(ContentId),
    #[error("object {0} failed digest verification")]
    CorruptObject(ContentId),
    #[error("store io: {0}")]
    Io(#[from] io::Error),
}

/// Local single-node object store.
#[derive(Debug, Clone)]
pub struct CasStore {
    root: PathBuf,
    max_object_size: usize,
}

impl CasStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, CasError> {
        Self::with_limit(root, DEFAULT_MAX_OBJECT_SIZE)
    }

    pub fn with_limit(root: impl Into<PathBuf>, max_object_size: usize) -> Result<Self, CasError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            max_object_size,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn object_path(&self, cid: &ContentId) -> PathBuf {
        let hex = hex::encode(cid.digest());
        self.root.join(&hex[0..2]).join(&hex[2..4]).join(hex)
    }

    pub fn put(&self, content: &[u8]) -> Result<ContentId, CasError> {
        if content.is_empty() {
            return Err(CasError::Empty);
        }
        if content.len() > self.max_object_size {
            return Err(CasError::TooLarge {
                size: content.len(),
                limit: self.max_object_size,
            });
        }
        let cid = ContentId::for_content(content);
        let path = self.object_path(&cid);
        if let Ok(existing) = fs::read(&path) {
            if sha256(&existing) == *cid.digest() {
                return Ok(cid);
            }
        }
        let dir = path.parent().expect("object path has a parent");
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(content)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| CasError::Io(e.error))?;
        Ok(cid)
    }

    /// Reads an object, re-verifying its digest.
    pub fn get(&self, cid: &ContentId) -> Result<Vec<u8>, CasError> {
        let bytes = match fs::read(self.object_path(cid)) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(CasError::NotFound(*cid)),
            Err(e) => return Err(e.into()),
        };
        if sha256(&bytes) != *cid.digest() {
            return Err(CasError::CorruptObject(*cid));
        }
        Ok(bytes)
    }

    pub fn contains(&self, cid: &ContentId) -> bool {
        self.object_path(cid).is_file()
    }
}

#[derive(Debug, Error)]
pub enum MetadataError {
    #[error("metadata is not valid json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("metadata must be a json object")]
    NotAnObject,
    #[error("metadata field `{0}` is missing or not a string")]
    MissingField(&'static str),
    #[error("metadata field `extras` must be an object")]
    BadExtras,
    #[error("unknown metadata field `{0}`")]
    UnknownField(String),
    #[error(transparent)]
    Certificate(#[from] CertError),
}

/// Certificate metadata stored off-chain: the six normalized core fields
/// plus a free-form `extras` object.
///
/// The canonical text form is compact JSON with object keys sorted by their
/// UTF-8 bytes at every level, no insignificant whitespace and no trailing
/// newline.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataDocument {
    pub core: CertificateData,
    pub extras: BTreeMap<String, Value>,
}

impl MetadataDocument {
    pub fn new(cert: &CertificateData, extras: BTreeMap<String, Value>) -> Result<Self, CertError> {
        Ok(Self {
            core: cert.normalized()?,
            extras,
        })
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        let mut top: BTreeMap<&str, Value> = BTreeMap::new();
        for (name, value) in FIELD_NAMES.iter().zip(self.core.fields()) {
            top.insert(name, Value::String(value.to_owned()));
        }
        top.insert(
            "extras",
            Value::Object(self.extras.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
        );
        let mut out = String::new();
        write_canonical_object(&mut out, top.iter().map(|(k, v)| (*k, v)));
        out.into_bytes()
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, MetadataError> {
        let Value::Object(mut map) = serde_json::from_slice::<Value>(bytes)? else {
            return Err(MetadataError::NotAnObject);
        };
        let mut fields: [String; 6] = Default::default();
        for (slot, name) in fields.iter_mut().zip(FIELD_NAMES) {
            match map.remove(name) {
                Some(Value::String(s)) => *slot = s,
                _ => return Err(MetadataError::MissingField(name)),
            }
        }
        let extras = match map.remove("extras") {
            None => BTreeMap::new(),
            Some(Value::Object(m)) => m.into_iter().collect(),
            Some(_) => return Err(MetadataError::BadExtras),
        };
        if let Some(key) = map.keys().next() {
            return Err(MetadataError::UnknownField(key.clone()));
        }
        let [a, b, c, d, e, f] = fields;
        let cert = CertificateData::new(a, b, c, d, e, f);
        Ok(Self::new(&cert, extras)?)
    }

    pub fn content_id(&self) -> ContentId {
        ContentId::for_content(&self.to_canonical_bytes())
    }
}

fn write_canonical_object<'a>(out: &mut String, entries: impl Iterator<Item = (&'a str, &'a Value)>) {
    out.push('{');
    for (i, (k, v)) in entries.enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&Value::String(k.to_owned()).to_string());
        out.push(':');
        write_canonical_value(out, v);
    }
    out.push('}');
}

fn write_canonical_value(out: &mut String, value: &Value) {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(&str, &Value)> = map.iter().map(|(k, v)| (k.as_str(), v)).collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            write_canonical_object(out, entries.into_iter());
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical_value(out, item);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}
