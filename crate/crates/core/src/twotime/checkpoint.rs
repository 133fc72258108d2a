//! Binary grid checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic    7 bytes  "TTGRID1"
//! delta    f64
//! horizon  f64
//! steps    u64
//! beta     f64
//! mode     u8       0 = spherical, 1 = soft
//! [soft]   L f64, k u32, K0 f64
//! terms    u32 count, then (p u32, a f64) per term
//! R        f64 × (steps+1)(steps+2)/2, lower triangle row-major
//! C        same layout
//! K        f64 × (steps+1)
//! mu       f64 × (steps+1)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Mode, TwoTimeGrid};
use crate::error::{Error, Result};
use crate::mesh::Triangle;
use crate::model::SoftPotential;

pub const CHECKPOINT_MAGIC: &[u8; 7] = b"TTGRID1";

// guards allocation when reading corrupt headers
const MAX_READ_STEPS: u64 = 20_000;

pub fn write_checkpoint<W: Write>(grid: &TwoTimeGrid, mut w: W) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&grid.delta.to_le_bytes())?;
    w.write_all(&grid.horizon.to_le_bytes())?;
    w.write_all(&(grid.steps() as u64).to_le_bytes())?;
    w.write_all(&grid.beta.to_le_bytes())?;
    match grid.mode {
        Mode::Spherical => w.write_all(&[0u8])?,
        Mode::Soft { potential, k0 } => {
            w.write_all(&[1u8])?;
            w.write_all(&potential.l.to_le_bytes())?;
            w.write_all(&potential.k.to_le_bytes())?;
            w.write_all(&k0.to_le_bytes())?;
        }
    }
    w.write_all(&(grid.terms.len() as u32).to_le_bytes())?;
    for &(p, a) in &grid.terms {
        w.write_all(&p.to_le_bytes())?;
        w.write_all(&a.to_le_bytes())?;
    }
    for field in [
        grid.r.as_slice(),
        grid.c.as_slice(),
        &grid.k[..],
        &grid.mu[..],
    ] {
        for v in field {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated checkpoint: {e}")))?;
    Ok(buf)
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_array(r)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    (0..len).map(|_| read_f64(r)).collect()
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<TwoTimeGrid> {
    let magic: [u8; 7] = read_array(&mut r)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let delta = read_f64(&mut r)?;
    let horizon = read_f64(&mut r)?;
    let steps = u64::from_le_bytes(read_array(&mut r)?);
    if steps > MAX_READ_STEPS {
        return Err(Error::Format(format!("implausible step count {steps}")));
    }
    let beta = read_f64(&mut r)?;
    let mode = match read_array::<1, _>(&mut r)?[0] {
        0 => Mode::Spherical,
        1 => {
            let l = read_f64(&mut r)?;
            let k = read_u32(&mut r)?;
            let k0 = read_f64(&mut r)?;
            let potential = SoftPotential::new(l, k).map_err(|e| Error::Format(e.to_string()))?;
            Mode::Soft { potential, k0 }
        }
        other => return Err(Error::Format(format!("unknown mode tag {other}"))),
    };
    let n_terms = read_u32(&mut r)?;
    if n_terms > 64 {
        return Err(Error::Format(format!("implausible term count {n_terms}")));
    }
    let mut terms = Vec::with_capacity(n_terms as usize);
    for _ in 0..n_terms {
        let p = read_u32(&mut r)?;
        let a = read_f64(&mut r)?;
        terms.push((p, a));
    }
    let points = steps as usize + 1;
    let tri = points * (points + 1) / 2;
    let rf = Triangle::from_raw(points, read_vec(&mut r, tri)?)?;
    let cf = Triangle::from_raw(points, read_vec(&mut r, tri)?)?;
    let k = read_vec(&mut r, points)?;
    let mu = read_vec(&mut r, points)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    Ok(TwoTimeGrid {
        delta,
        horizon,
        beta,
        mode,
        terms,
        r: rf,
        c: cf,
        k,
        mu,
    })
}

pub fn save_checkpoint(grid: &TwoTimeGrid, path: &Path) -> Result<()> {
    write_checkpoint(grid, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<TwoTimeGrid> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
