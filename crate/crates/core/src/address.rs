//! Account addresses and signing keys.
//!
//! An address is 21 bytes: the prefix byte `0x41` followed by the first 20
//! bytes of SHA-256 over the Ed25519 public key. Humans see it as
//! Base58Check (double-SHA-256, 4-byte checksum), which always starts
//! with `T`.

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::sha256;

pub const ADDRESS_PREFIX: u8 = 0x41;
pub const ADDRESS_LEN: usize = 21;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address([u8; ADDRESS_LEN]);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddressError {
    #[error("invalid base58check encoding")]
    Base58,
    #[error("address must be {ADDRESS_LEN} bytes, got {0}")]
    Length(usize),
    #[error("address prefix must be 0x41, got {0:#04x}")]
    Prefix(u8),
}

impl Address {
    pub fn from_public_key(public_key: &[u8; 32]) -> Self {
        let digest = sha256(public_key);
        let mut out = [0u8; ADDRESS_LEN];
        out[0] = ADDRESS_PREFIX;
        out[1..].copy_from_slice(&digest[..20]);
        Address(out)
    }

    pub fn from_bytes(bytes: [u8; ADDRESS_LEN]) -> Result<Self, AddressError> {
        if bytes[0] != ADDRESS_PREFIX {
            return Err(AddressError::Prefix(bytes[0]));
        }
        Ok(Address(bytes))
    }

    pub fn as_bytes(&self) -> &[u8; ADDRESS_LEN] {
        &self.0
    }

    pub fn to_base58(&self) -> String {
        bs58::encode(self.0).with_check().into_string()
    }
}

impl FromStr for Address {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = bs58::decode(s)
            .with_check(None)
            .into_vec()
            .map_err(|_| AddressError::Base58)?;
        let bytes: [u8; ADDRESS_LEN] = raw
            .as_slice()
            .try_into()
            .map_err(|_| AddressError::Length(raw.len()))?;
        Address::from_bytes(bytes)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_base58())
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.to_base58())
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_base58())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Ed25519 signing key. Signatures are deterministic.
#[derive(Clone)]
pub struct Keypair {
    signing: SigningKey,
}

impl Keypair {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self {
            signing: SigningKey::from_bytes(&seed),
        }
    }

    pub fn generate() -> Self {
        use rand::RngCore;
        let mut seed = [0u8; 32];
        rand::rngs::OsRng.fill_bytes(&mut seed);
        Self::from_seed(seed)
    }

    pub fn seed(&self) -> [u8; 32] {
        self.signing.to_bytes()
    }

    pub fn public_key(&self) -> [u8; 32] {
        self.signing.verifying_key().to_bytes()
    }

    pub fn address(&self) -> Address {
        Address::from_public_key(&self.public_key())
    }

    pub fn sign(&self, message: &[u8]) -> [u8; 64] {
        self.signing.sign(message).to_bytes()
    }
}

impl fmt::Debug for Keypair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Keypair").field("address", &self.address()).finish_non_exhaustive()
    }
}

/// Checks `signature` over `message` under `public_key`.
pub fn verify_signature(public_key: &[u8; 32], message: &[u8], signature: &[u8; 64]) -> bool {
    let Ok(key) = VerifyingKey::from_bytes(public_key) else {
        return false;
    };
    key.verify(message, &Signature::from_bytes(signature)).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn address_layout() {
        let kp = Keypair::from_seed([7u8; 32]);
        let addr = kp.address();
        assert_eq!(addr.as_bytes()[0], 0x41);
        assert_eq!(&addr.as_bytes()[1..], &sha256(&kp.public_key())[..20]);
        assert!(addr.to_base58().starts_with('T'));
    }

    #[test]
    fn base58_round_trip_and_rejections() {
        let addr = Keypair::from_seed([1u8; 32]).address();
        let s = addr.to_base58();
        assert_eq!(s.parse::<Address>().unwrap(), addr);

        // corrupt one character: checksum must catch it
        let mut chars: Vec<char> = s.chars().collect();
        chars[5] = if chars[5] == 'a' { 'b' } else { 'a' };
        let bad: String = chars.into_iter().collect();
        assert_eq!(bad.parse::<Address>(), Err(AddressError::Base58));

        let wrong_prefix = bs58::encode([0x42u8; 21]).with_check().into_string();
        assert_eq!(wrong_prefix.parse::<Address>(), Err(AddressError::Prefix(0x42)));
        let short = bs58::encode([0x41u8; 20]).with_check().into_string();
        assert_eq!(short.parse::<Address>(), Err(AddressError::Length(20)));
        assert!("not an address".parse::<Address>().is_err());
    }

    #[test]
    fn signatures_are_deterministic_and_verify() {
        let kp = Keypair::from_seed([3u8; 32]);
        let sig = kp.sign(b"hello");
        assert_eq!(sig, kp.sign(b"hello"));
        assert!(verify_signature(&kp.public_key(), b"hello", &sig));
        assert!(!verify_signature(&kp.public_key(), b"hellO", &sig));
    }
}
