//! Binary field snapshots.
//!
//! Layout: a 64-byte header (magic `CHNS`, format version, dimension, `M`,
//! time as f64, field count, zero padding), then the fields `ϱ, m₁[, m₂], q`
//! as little-endian f64 arrays in node order. All header integers are
//! little-endian u32.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::{Grid, GridField, State};

pub const MAGIC: &[u8; 4] = b"CHNS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 64;

/// Identifier of the build that wrote a file.
pub const BUILD_ID: &str = env!("CHNS_BUILD_ID");

pub fn encode(t: f64, state: &State) -> Vec<u8> {
    let grid = state.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * state.n_components() * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.m() as u32).to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&(state.n_components() as u32).to_le_bytes());
    out.resize(HEADER_LEN, 0);
    for field in state.components() {
        for v in field.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<(f64, State)> {
    let bad = |msg: &str| Error::InvalidSnapshot(msg.to_string());
    if bytes.len() < HEADER_LEN {
        return Err(bad("file shorter than the header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("wrong magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::InvalidSnapshot(format!("unsupported version {version}")));
    }
    let (dim, m) = (u32_at(8) as usize, u32_at(12) as usize);
    let t = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let count = u32_at(24) as usize;
    let grid = Grid::new(dim, m).map_err(|_| Error::InvalidSnapshot(format!("bad grid {dim}D, M = {m}")))?;
    if count != dim + 2 {
        return Err(Error::InvalidSnapshot(format!("{count} fields for a {dim}D state")));
    }
    if bytes[28..HEADER_LEN].iter().any(|&b| b != 0) {
        return Err(bad("non-zero header padding"));
    }
    let n = grid.len();
    if bytes.len() != HEADER_LEN + 8 * count * n {
        return Err(Error::InvalidSnapshot(format!(
            "expected {} bytes, found {}",
            HEADER_LEN + 8 * count * n,
            bytes.len()
        )));
    }
    let mut fields = bytes[HEADER_LEN..].chunks_exact(8 * n).map(|chunk| {
        GridField::new(grid, chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
    });
    let rho = fields.next().unwrap();
    let m: Vec<GridField> = (0..dim).map(|_| fields.next().unwrap()).collect();
    let q = fields.next().unwrap();
    Ok((t, State { rho, m, q }))
}

/// Writes `<stem>.bin` and the metadata sidecar `<stem>.txt`.
pub fn write_snapshot(dir: &Path, stem: &str, t: f64, state: &State, config_echo: &str, seed: u64) -> Result<PathBuf> {
    let path = dir.join(format!("{stem}.bin"));
    std::fs::write(&path, encode(t, state))?;
    let mut meta = std::fs::File::create(dir.join(format!("{stem}.txt")))?;
    writeln!(meta, "t = {t:e}")?;
    writeln!(meta, "seed = {seed}")?;
    writeln!(meta, "build = {BUILD_ID}")?;
    writeln!(meta, "\n# configuration\n{config_echo}")?;
    Ok(path)
}

pub fn read_snapshot(path: &Path) -> Result<(f64, State)> {
    decode(&std::fs::read(path)?)
}
