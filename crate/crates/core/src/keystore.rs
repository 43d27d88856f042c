//! JSON keystore files: `{address, public_key_hex, secret_seed_hex, created_at}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::address::{Address, Keypair};

#[derive(Debug, Error)]
pub enum KeystoreError {
    #[error("keystore io: {0}")]
    Io(#[from] std::io::Error),
    #[error("keystore json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("keystore field `{0}` is not valid hex of the right length")]
    BadHex(&'static str),
    #[error("keystore address does not match its public key")]
    AddressMismatch,
    #[error("keystore public key does not match its secret seed")]
    KeyMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keystore {
    pub address: Address,
    pub public_key_hex: String,
    pub secret_seed_hex: String,
    pub created_at: String,
}

impl Keystore {
    pub fn from_keypair(kp: &Keypair) -> Self {
        Self {
            address: kp.address(),
            public_key_hex: hex::encode(kp.public_key()),
            secret_seed_hex: hex::encode(kp.seed()),
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    /// Rebuilds the keypair, checking that address and public key re-derive.
    pub fn keypair(&self) -> Result<Keypair, KeystoreError> {
        let mut seed = [0u8; 32];
        hex::decode_to_slice(&self.secret_seed_hex, &mut seed)
            .map_err(|_| KeystoreError::BadHex("secret_seed_hex"))?;
        let mut public = [0u8; 32];
        hex::decode_to_slice(&self.public_key_hex, &mut public)
            .map_err(|_| KeystoreError::BadHex("public_key_hex"))?;
        let kp = Keypair::from_seed(seed);
        if kp.public_key() != public {
            return Err(KeystoreError::KeyMismatch);
        }
        if Address::from_public_key(&public) != self.address {
            return Err(KeystoreError::AddressMismatch);
        }
        Ok(kp)
    }

    pub fn load(path: &Path) -> Result<Self, KeystoreError> {
        let ks: Keystore = serde_json::from_slice(&fs::read(path)?)?;
        ks.keypair()?;
        Ok(ks)
    }

    /// Writes the keystore, creating the file with owner-only permissions on Unix.
    pub fn save(&self, path: &Path) -> Result<(), KeystoreError> {
        let mut opts = fs::OpenOptions::new();
        opts.write(true).create(true).truncate(true);
        #[cfg(unix)]
        {
            use std::os::unix::fs::OpenOptionsExt;
            opts.mode(0o600);
        }
        let mut file = opts.open(path)?;
        let mut body = serde_json::to_vec_pretty(self)?;
        body.push(b'\n');
        file.write_all(&body)?;
        Ok(())
    }
}
