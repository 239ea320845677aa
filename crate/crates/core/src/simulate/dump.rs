//! Raw path dump for debugging.
//!
//! Layout: 32-byte header of four little-endian `u64` words (magic `EXCPATH1`, path count,
//! node count, seed) followed by the `n_paths × n_nodes` sample matrix as row-major
//! little-endian `f64`.

use std::io::{Read, Write};

use super::PathBatch;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"EXCPATH1";

pub fn write_paths<W: Write>(mut w: W, batch: &PathBatch) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&(batch.n_paths as u64).to_le_bytes())?;
    w.write_all(&(batch.n_nodes as u64).to_le_bytes())?;
    w.write_all(&batch.seed.to_le_bytes())?;
    for v in &batch.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Header fields and matrix of a dump.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDump {
    pub n_paths: usize,
    pub n_nodes: usize,
    pub seed: u64,
    pub values: Vec<f64>,
}

pub fn read_paths<R: Read>(mut r: R) -> Result<PathDump> {
    let mut head = [0u8; 32];
    r.read_exact(&mut head)?;
    if head[..8] != MAGIC {
        return Err(Error::Shape("not a path dump (bad magic)".into()));
    }
    let word = |i: usize| u64::from_le_bytes(head[i * 8..i * 8 + 8].try_into().unwrap());
    let (n_paths, n_nodes, seed) = (word(1) as usize, word(2) as usize, word(3));
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() != n_paths * n_nodes * 8 {
        return Err(Error::Shape(format!("dump holds {} bytes, header says {}", buf.len(), n_paths * n_nodes * 8)));
    }
    let values = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(PathDump { n_paths, n_nodes, seed, values })
}
