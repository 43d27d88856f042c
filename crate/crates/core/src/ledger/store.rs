//! Append-only chain file plus txid index.
//!
//! `chain.dat` is the magic `CERTCHN1` followed by records, each a 4-byte
//! big-endian length and a payload. Record 0 is the genesis configuration,
//! record 1 is block 0, and so on. `seen.idx` is a flat list of 32-byte
//! txids of every included transaction, in inclusion order.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::block::{Block, GenesisConfig};
use super::tx::TxId;
use super::LedgerError;

const MAGIC: &[u8; 8] = b"CERTCHN1";
pub const CHAIN_FILE: &str = "chain.dat";
pub const SEEN_FILE: &str = "seen.idx";

#[derive(Debug)]
pub struct ChainStore {
    dir: PathBuf,
    chain: File,
    seen: File,
}

pub struct Loaded {
    pub genesis: GenesisConfig,
    pub blocks: Vec<Block>,
    pub seen: Vec<TxId>,
}

impl ChainStore {
    pub fn exists(dir: &Path) -> bool {
        dir.join(CHAIN_FILE).is_file()
    }

    pub fn create(dir: &Path, genesis: &GenesisConfig) -> Result<Self, LedgerError> {
        fs::create_dir_all(dir)?;
        let mut chain = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(dir.join(CHAIN_FILE))?;
        chain.write_all(MAGIC)?;
        write_record(&mut chain, &genesis.to_bytes())?;
        chain.sync_data()?;
        let seen = OpenOptions::new()
            .append(true)
            .create(true)
            .open(dir.join(SEEN_FILE))?;
        seen.set_len(0)?;
        Ok(Self {
            dir: dir.to_owned(),
            chain,
            seen,
        })
    }

    /// Reads everything back. A torn final record is dropped and the file
    /// truncated to the last complete record.
    pub fn open(dir: &Path) -> Result<(Self, Loaded), LedgerError> {
        let path = dir.join(CHAIN_FILE);
        let mut bytes = Vec::new();
        File::open(&path)?.read_to_end(&mut bytes)?;
        if !bytes.starts_with(MAGIC) {
            return Err(LedgerError::Corrupt("chain file has no magic header".into()));
        }
        let mut pos = MAGIC.len();
        let mut records = Vec::new();
        while pos + 4 <= bytes.len() {
            let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
            if pos + 4 + len > bytes.len() {
                break;
            }
            records.push(&bytes[pos + 4..pos + 4 + len]);
            pos += 4 + len;
        }
        let complete = pos;
        let mut records = records.into_iter();
        let genesis = GenesisConfig::from_bytes(
            records
                .next()
                .ok_or_else(|| LedgerError::Corrupt("chain file has no genesis record".into()))?,
        )?;
        let blocks = records.map(Block::from_bytes).collect::<Result<Vec<_>, _>>()?;

        let chain = OpenOptions::new().append(true).open(&path)?;
        if complete < bytes.len() {
            chain.set_len(complete as u64)?;
        }

        let seen_path = dir.join(SEEN_FILE);
        let seen_bytes = fs::read(&seen_path).or_else(|e| {
            if e.kind() == io::ErrorKind::NotFound {
                Ok(Vec::new())
            } else {
                Err(e)
            }
        })?;
        let seen = seen_bytes
            .chunks_exact(32)
            .map(|c| TxId(c.try_into().unwrap()))
            .collect();
        let seen_file = OpenOptions::new().append(true).create(true).open(&seen_path)?;
        seen_file.set_len((seen_bytes.len() / 32 * 32) as u64)?;

        Ok((
            Self {
                dir: dir.to_owned(),
                chain,
                seen: seen_file,
            },
            Loaded {
                genesis,
                blocks,
                seen,
            },
        ))
    }

    pub fn append_block(&mut self, block: &Block) -> Result<(), LedgerError> {
        write_record(&mut self.chain, &block.to_bytes())?;
        self.chain.sync_data()?;
        let mut w = BufWriter::new(&mut self.seen);
        for txid in block.txids() {
            w.write_all(&txid.0)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

fn write_record(file: &mut File, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).expect("record fits in u32");
    let mut buf = Vec::with_capacity(4 + payload.len());
    buf.extend_from_slice(&len.to_be_bytes());
    buf.extend_from_slice(payload);
    file.write_all(&buf)
}
