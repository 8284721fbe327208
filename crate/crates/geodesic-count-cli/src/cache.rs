//! Flat binary cache of the ideal-count table.
//!
//! Layout: magic `N2SIEVE1` (8 bytes), version u32 LE = 1, limit u64 LE, then
//! `limit` u16 LE counts for n = 1..=limit.

use std::fs;
use std::io::Write;
use std::path::Path;

use geodesic_count::quadfield::IdealCountTable;
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"N2SIEVE1";
pub const VERSION: u32 = 1;
const HEADER: usize = 8 + 4 + 8;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path} is not a sieve cache: {reason}")]
    Format { path: String, reason: String },
}

pub fn encode(table: &IdealCountTable) -> Vec<u8> {
    let counts = table.counts();
    let mut out = Vec::with_capacity(HEADER + 2 * counts.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&table.limit().to_le_bytes());
    for &c in counts {
        out.extend_from_slice(&c.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], path: &str) -> Result<IdealCountTable, CacheError> {
    let bad = |reason: &str| CacheError::Format { path: path.to_string(), reason: reason.to_string() };
    if bytes.len() < HEADER || &bytes[..8] != MAGIC {
        return Err(bad("missing N2SIEVE1 header"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let limit = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let payload = &bytes[HEADER..];
    if payload.len() as u64 != 2 * limit {
        return Err(bad(&format!("payload of {} bytes does not match limit {limit}", payload.len())));
    }
    let counts = payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    Ok(IdealCountTable::from_counts(counts))
}

pub fn read(path: &Path) -> Result<IdealCountTable, CacheError> {
    let name = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| CacheError::Io { path: name.clone(), source })?;
    decode(&bytes, &name)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write(path: &Path, table: &IdealCountTable) -> Result<(), CacheError> {
    let name = path.display().to_string();
    let io = |source| CacheError::Io { path: name.clone(), source };
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&encode(table)).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use geodesic_count::quadfield::ideal_count_sieve;

    #[test]
    fn payload_for_eight() {
        let bytes = encode(&ideal_count_sieve(8).unwrap());
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        assert_eq!(&bytes[12..20], &8u64.to_le_bytes());
        assert_eq!(&bytes[20..], &[1, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 2, 0, 1, 0]);
    }

    #[test]
    fn payload_for_one() {
        let bytes = encode(&ideal_count_sieve(1).unwrap());
        assert_eq!(&bytes[20..], &[1, 0]);
    }

    #[test]
    fn roundtrip_and_rejects() {
        let t = ideal_count_sieve(1000).unwrap();
        assert_eq!(decode(&encode(&t), "x").unwrap(), t);
        let mut bad = encode(&t);
        bad[0] = b'X';
        assert!(decode(&bad, "x").is_err());
        let mut short = encode(&t);
        short.pop();
        assert!(decode(&short, "x").is_err());
    }
}
