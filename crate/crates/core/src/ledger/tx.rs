use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::address::{verify_signature, Address, Keypair};
use crate::codec::{sha256, DecodeError, Reader, Writer};
use crate::registry::{decode_address, ContractCall};

/// SHA-256 over the full serialized transaction, signature included.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TxId(pub [u8; 32]);

impl TxId {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TxId({})", self.to_hex())
    }
}

impl FromStr for TxId {
    type Err = hex::FromHexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s, &mut out)?;
        Ok(TxId(out))
    }
}

impl Serialize for TxId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for TxId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A signed contract call.
///
/// The public key travels with the transaction because Ed25519 keys cannot
/// be recovered from signatures; `sender` must derive from it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    #[serde(with = "crate::hexser")]
    pub public_key: [u8; 32],
    pub nonce: u64,
    pub timestamp_ms: u64,
    pub call: ContractCall,
    #[serde(with = "crate::hexser")]
    pub signature: [u8; 64],
}

impl Transaction {
    /// Bytes covered by the signature: every field except the signature.
    pub fn signing_bytes(
        sender: &Address,
        public_key: &[u8; 32],
        nonce: u64,
        timestamp_ms: u64,
        call: &ContractCall,
    ) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(sender.as_bytes())
            .raw(public_key)
            .u64(nonce)
            .u64(timestamp_ms);
        call.encode(&mut w);
        w.finish()
    }

    pub fn unsigned_bytes(&self) -> Vec<u8> {
        Self::signing_bytes(&self.sender, &self.public_key, self.nonce, self.timestamp_ms, &self.call)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = self.unsigned_bytes();
        bytes.extend_from_slice(&self.signature);
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let sender = decode_address(&mut r)?;
        let public_key = r.array()?;
        let nonce = r.u64()?;
        let timestamp_ms = r.u64()?;
        let call = ContractCall::decode(&mut r)?;
        let signature = r.array()?;
        r.finish()?;
        Ok(Self {
            sender,
            public_key,
            nonce,
            timestamp_ms,
            call,
            signature,
        })
    }

    pub fn txid(&self) -> TxId {
        TxId(sha256(&self.to_bytes()))
    }

    /// Serialized size, the quantity billed as bandwidth.
    pub fn size(&self) -> u64 {
        self.to_bytes().len() as u64
    }

    pub fn verify(&self) -> bool {
        Address::from_public_key(&self.public_key) == self.sender
            && verify_signature(&self.public_key, &self.unsigned_bytes(), &self.signature)
    }
}

pub fn sign_transaction(keypair: &Keypair, call: ContractCall, nonce: u64, timestamp_ms: u64) -> Transaction {
    let sender = keypair.address();
    let public_key = keypair.public_key();
    let signature = keypair.sign(&Transaction::signing_bytes(
        &sender,
        &public_key,
        nonce,
        timestamp_ms,
        &call,
    ));
    Transaction {
        sender,
        public_key,
        nonce,
        timestamp_ms,
        call,
        signature,
    }
}

/// Assembles a transaction from a detached signature produced elsewhere
/// (HTTP clients sign the same bytes as [`Transaction::signing_bytes`]).
pub fn assemble_transaction(
    public_key: [u8; 32],
    nonce: u64,
    timestamp_ms: u64,
    call: ContractCall,
    signature: [u8; 64],
) -> Transaction {
    Transaction {
        sender: Address::from_public_key(&public_key),
        public_key,
        nonce,
        timestamp_ms,
        call,
        signature,
    }
}
