use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::codec::{sha256, DecodeError, Reader, Writer};
use crate::registry::decode_address;

use super::fees::FeeSchedule;
use super::tx::{Transaction, TxId};

/// Binary Merkle root over txids: parents are SHA-256(left || right), an odd
/// node at any level is paired with itself, a single leaf is its own root and
/// the empty list has the all-zero root.
pub fn merkle_root(leaves: &[TxId]) -> [u8; 32] {
    if leaves.is_empty() {
        return [0u8; 32];
    }
    let mut level: Vec<[u8; 32]> = leaves.iter().map(|t| t.0).collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                let right = pair.get(1).unwrap_or(&pair[0]);
                let mut buf = [0u8; 64];
                buf[..32].copy_from_slice(&pair[0]);
                buf[32..].copy_from_slice(right);
                sha256(&buf)
            })
            .collect();
    }
    level[0]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub height: u64,
    #[serde(with = "crate::hexser")]
    pub parent_hash: [u8; 32],
    pub timestamp_ms: u64,
    #[serde(with = "crate::hexser")]
    pub tx_root: [u8; 32],
    #[serde(with = "crate::hexser")]
    pub state_root: [u8; 32],
    pub tx_count: u32,
}

impl BlockHeader {
    fn encode(&self, w: &mut Writer) {
        w.u64(self.height)
            .raw(&self.parent_hash)
            .u64(self.timestamp_ms)
            .raw(&self.tx_root)
            .raw(&self.state_root)
            .u32(self.tx_count);
    }

    fn decode(r: &mut Reader<'_>) -> Result<Self, DecodeError> {
        Ok(Self {
            height: r.u64()?,
            parent_hash: r.array()?,
            timestamp_ms: r.u64()?,
            tx_root: r.array()?,
            state_root: r.array()?,
            tx_count: r.u32()?,
        })
    }

    pub fn hash(&self) -> [u8; 32] {
        let mut w = Writer::new();
        self.encode(&mut w);
        sha256(&w.finish())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub header: BlockHeader,
    pub transactions: Vec<Transaction>,
}

impl Block {
    pub fn hash(&self) -> [u8; 32] {
        self.header.hash()
    }

    pub fn height(&self) -> u64 {
        self.header.height
    }

    pub fn txids(&self) -> Vec<TxId> {
        self.transactions.iter().map(Transaction::txid).collect()
    }

    pub fn computed_tx_root(&self) -> [u8; 32] {
        merkle_root(&self.txids())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.header.encode(&mut w);
        for tx in &self.transactions {
            w.bytes(&tx.to_bytes());
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let header = BlockHeader::decode(&mut r)?;
        let mut transactions = Vec::with_capacity(header.tx_count as usize);
        for _ in 0..header.tx_count {
            transactions.push(Transaction::from_bytes(r.bytes()?)?);
        }
        r.finish()?;
        Ok(Self {
            header,
            transactions,
        })
    }
}

/// Everything block 0 commits to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenesisConfig {
    pub admin: Address,
    pub timestamp_ms: u64,
    pub fees: FeeSchedule,
    /// Initial sun balances.
    #[serde(default)]
    pub balances: Vec<(Address, u64)>,
    /// Starting value of the certificate counter. Non-zero only in tests of
    /// the overflow guard.
    #[serde(default)]
    pub certificate_counter: u64,
}

impl GenesisConfig {
    pub fn new(admin: Address) -> Self {
        Self {
            admin,
            timestamp_ms: 0,
            fees: FeeSchedule::default(),
            balances: Vec::new(),
            certificate_counter: 0,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(self.admin.as_bytes())
            .u64(self.timestamp_ms)
            .u64(self.fees.free_bandwidth_per_day)
            .u64(self.fees.sun_per_byte)
            .u32(self.balances.len() as u32);
        for (addr, bal) in &self.balances {
            w.raw(addr.as_bytes()).u64(*bal);
        }
        w.u64(self.certificate_counter);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let admin = decode_address(&mut r)?;
        let timestamp_ms = r.u64()?;
        let fees = FeeSchedule {
            free_bandwidth_per_day: r.u64()?,
            sun_per_byte: r.u64()?,
        };
        let n = r.u32()?;
        let mut balances = Vec::new();
        for _ in 0..n {
            balances.push((decode_address(&mut r)?, r.u64()?));
        }
        let certificate_counter = r.u64()?;
        r.finish()?;
        Ok(Self {
            admin,
            timestamp_ms,
            fees,
            balances,
            certificate_counter,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::Keypair;

    fn leaf(i: u8) -> TxId {
        TxId(sha256(&[i]))
    }

    fn h(a: &[u8; 32], b: &[u8; 32]) -> [u8; 32] {
        let mut v = a.to_vec();
        v.extend_from_slice(b);
        sha256(&v)
    }

    #[test]
    fn merkle_small_cases_by_hand() {
        assert_eq!(merkle_root(&[]), [0u8; 32]);
        assert_eq!(merkle_root(&[leaf(1)]), leaf(1).0);
        let (a, b, c) = (leaf(1).0, leaf(2).0, leaf(3).0);
        assert_eq!(merkle_root(&[leaf(1), leaf(2)]), h(&a, &b));
        // odd leaf duplicated
        assert_eq!(merkle_root(&[leaf(1), leaf(2), leaf(3)]), h(&h(&a, &b), &h(&c, &c)));
    }

    #[test]
    fn merkle_matches_recursive_oracle() {
        // independent formulation: recurse on the padded leaf list
        fn oracle(level: Vec<[u8; 32]>) -> [u8; 32] {
            if level.len() == 1 {
                return level[0];
            }
            let mut padded = level.clone();
            if padded.len() % 2 == 1 {
                padded.push(*padded.last().unwrap());
            }
            oracle(padded.chunks(2).map(|p| h(&p[0], &p[1])).collect())
        }
        for n in 1..=17u8 {
            let leaves: Vec<TxId> = (0..n).map(leaf).collect();
            assert_eq!(merkle_root(&leaves), oracle(leaves.iter().map(|t| t.0).collect()), "n={n}");
        }
    }

    #[test]
    fn genesis_round_trip() {
        let mut g = GenesisConfig::new(Keypair::from_seed([1; 32]).address());
        g.balances.push((Keypair::from_seed([2; 32]).address(), 77));
        g.certificate_counter = u64::MAX;
        assert_eq!(GenesisConfig::from_bytes(&g.to_bytes()).unwrap(), g);
    }
}
