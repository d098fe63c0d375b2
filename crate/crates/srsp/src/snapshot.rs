//! Binary state snapshots ("SPS1" format).
//!
//! Layout, all little-endian: magic `SPS1`, `n` as u32, box length `L` as
//! f64, rank `K` as u32, the `K` weights as f64, then `K` blocks of `n^3`
//! interleaved (re, im) f64 pairs in row-major (x, y, z) order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::make_grid;
use crate::state::MixedState;

const MAGIC: &[u8; 4] = b"SPS1";

pub fn write_snapshot(path: &Path, state: &MixedState) -> Result<()> {
    let grid = state.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&grid.box_length().to_le_bytes())?;
    w.write_all(&(state.rank() as u32).to_le_bytes())?;
    for lam in state.weights() {
        w.write_all(&lam.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(grid.len() * 16);
    for comp in state.components() {
        buf.clear();
        for z in comp.values() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<MixedState> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!(
            "bad magic {:?} in {}",
            magic,
            path.display()
        )));
    }
    let mut u32buf = [0u8; 4];
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut f64buf)?;
    let box_length = f64::from_le_bytes(f64buf);
    r.read_exact(&mut u32buf)?;
    let rank = u32::from_le_bytes(u32buf) as usize;
    if rank == 0 || rank > 1024 {
        return Err(Error::Snapshot(format!("implausible rank {rank}")));
    }
    let grid = make_grid(n, box_length).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut weights = Vec::with_capacity(rank);
    for _ in 0..rank {
        r.read_exact(&mut f64buf)?;
        weights.push(f64::from_le_bytes(f64buf));
    }
    let len = grid.len();
    let mut components = Vec::with_capacity(rank);
    let mut raw = vec![0u8; len * 16];
    for _ in 0..rank {
        r.read_exact(&mut raw)?;
        let values: Vec<Complex64> = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        components.push(Field::from_values(grid.clone(), values));
    }
    MixedState::new(components, weights).map_err(|e| Error::Snapshot(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let g = make_grid(8, 4.0).unwrap();
        let a = Field::from_fn(g.clone(), |x, y, z| Complex64::new(x * y, z - x));
        let b = Field::from_fn(g.clone(), |x, y, z| Complex64::new((y * z).sin(), x.cos()));
        let st = MixedState::new(vec![a, b], vec![0.7, 0.3]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.sps");
        write_snapshot(&path, &st).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.rank(), 2);
        assert_eq!(back.weights(), st.weights());
        assert_eq!(back.grid().n(), 8);
        assert_eq!(back.grid().box_length(), 4.0);
        for (ca, cb) in st.components().iter().zip(back.components()) {
            assert_eq!(ca.values(), cb.values());
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.sps");
        std::fs::write(&path, b"NOPE0000").unwrap();
        assert!(read_snapshot(&path).is_err());
    }
}
