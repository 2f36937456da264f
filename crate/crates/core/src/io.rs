//! On-disk formats.
//!
//! `MWT1` tensors: the magic bytes `MWT1`, one `u8` order `K`, `K`
//! little-endian `u64` dims, then `Π dims` little-endian `f64` values in
//! colexicographic order.
//!
//! Sparse triplet text: a header line `rows cols nnz` followed by `nnz`
//! lines `i j value` with 0-based indices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

pub const MWT1_MAGIC: &[u8; 4] = b"MWT1";

pub fn write_mwt1<W: Write>(mut w: W, t: &Tensor) -> Result<()> {
    let order = u8::try_from(t.order()).map_err(|_| CoreError::Format(format!("order {} exceeds 255", t.order())))?;
    w.write_all(MWT1_MAGIC)?;
    w.write_all(&[order])?;
    for &d in t.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &x in t.as_slice() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mwt1<R: Read>(mut r: R) -> Result<Tensor> {
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, "magic")?;
    if &magic != MWT1_MAGIC {
        return Err(CoreError::Format(format!("bad magic {magic:?}")));
    }
    let mut order = [0u8; 1];
    read_exact(&mut r, &mut order, "order")?;
    let mut dims = Vec::with_capacity(order[0] as usize);
    for _ in 0..order[0] {
        let mut b = [0u8; 8];
        read_exact(&mut r, &mut b, "dims")?;
        let d = usize::try_from(u64::from_le_bytes(b)).map_err(|_| CoreError::Format("dim overflows usize".into()))?;
        dims.push(d);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| CoreError::Format("tensor size overflows".into()))?;
    let mut data = Vec::with_capacity(len);
    let mut b = [0u8; 8];
    for _ in 0..len {
        read_exact(&mut r, &mut b, "payload")?;
        data.push(f64::from_le_bytes(b));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(CoreError::Format("trailing bytes after payload".into()));
    }
    Tensor::new(dims, data)
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => CoreError::Format(format!("truncated {what}")),
        _ => CoreError::Io(e),
    })
}

pub fn save_mwt1(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    write_mwt1(BufWriter::new(File::create(path)?), t)
}

pub fn load_mwt1(path: impl AsRef<Path>) -> Result<Tensor> {
    read_mwt1(BufReader::new(File::open(path)?))
}

/// Coordinate-format sparse matrix as exchanged on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplets {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.rows, self.cols, self.entries.len())?;
        for (i, j, v) in &self.entries {
            writeln!(w, "{i} {j} {v:e}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| CoreError::Format("missing header".into()))??;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| CoreError::Format(format!("bad header '{header}'"))))
            .collect::<Result<_>>()?;
        if h.len() != 3 {
            return Err(CoreError::Format(format!("bad header '{header}'")));
        }
        let (rows, cols, nnz) = (h[0], h[1], h[2]);
        let mut entries = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            let line = lines.next().ok_or_else(|| CoreError::Format("truncated triplets".into()))??;
            let mut it = line.split_whitespace();
            let bad = || CoreError::Format(format!("bad triplet '{line}'"));
            let i: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let j: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let v: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if i >= rows || j >= cols {
                return Err(CoreError::Format(format!("index ({i},{j}) outside {rows}x{cols}")));
            }
            entries.push((i, j, v));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}
