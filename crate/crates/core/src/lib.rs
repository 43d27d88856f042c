//! Core of the certificate registry: canonical certificate hashing, the
//! registry contract, a simulated ledger that executes it, and a
//! content-addressed store for certificate metadata.

pub mod address;
pub mod canonical;
pub mod cas;
pub mod codec;
mod hexser;
pub mod keystore;
pub mod ledger;
pub mod registry;

pub use address::{Address, Keypair};
pub use canonical::{canonicalize, cert_hash, CertDigest, CertificateData};
pub use cas::{CasStore, ContentId, MetadataDocument};
pub use keystore::Keystore;
pub use ledger::{
    sign_transaction, Block, GenesisConfig, Ledger, LedgerConfig, Receipt, ReceiptStatus, Rejection, Transaction,
    TxId,
};
pub use registry::{
    CertificateRecord, ContractCall, RegistryState, RevertReason, ValidationResult, ValidationStatus,
};
