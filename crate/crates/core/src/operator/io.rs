//! Spectrum CSV and a raw little-endian eigenvector dump.
//!
//! Dump layout: the 8-byte magic `QPLOCEV\0`, then `u32` version, `u64`
//! rows, `u64` cols, `u32` d, `d × i64` center, `u64` radius, `u64` seed,
//! followed by `rows × cols` `f64` values in column-major order (column `j`
//! is eigenvector `j`).

use std::io::{Read, Write};

use nalgebra::DMatrix;

use super::SpectralData;
use crate::error::{Error, Result};
use crate::lattice::Cube;

pub const DUMP_MAGIC: &[u8; 8] = b"QPLOCEV\0";
pub const DUMP_VERSION: u32 = 1;

/// `index,eigenvalue` rows with 17 significant digits.
pub fn write_spectrum_csv<W: Write>(spec: &SpectralData, mut out: W) -> Result<()> {
    writeln!(out, "index,eigenvalue")?;
    for (i, l) in spec.eigenvalues.iter().enumerate() {
        writeln!(out, "{i},{l:.16e}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvectorDump {
    pub cube: Cube,
    pub seed: u64,
    pub vectors: DMatrix<f64>,
}

pub fn write_eigenvectors<W: Write>(spec: &SpectralData, seed: u64, mut out: W) -> Result<()> {
    let v = &spec.eigenvectors;
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&DUMP_VERSION.to_le_bytes())?;
    out.write_all(&(v.nrows() as u64).to_le_bytes())?;
    out.write_all(&(v.ncols() as u64).to_le_bytes())?;
    out.write_all(&(spec.cube.dim() as u32).to_le_bytes())?;
    for c in &spec.cube.center {
        out.write_all(&c.to_le_bytes())?;
    }
    out.write_all(&spec.cube.radius.to_le_bytes())?;
    out.write_all(&seed.to_le_bytes())?;
    for x in v.iter() {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_eigenvectors<R: Read>(mut input: R) -> Result<EigenvectorDump> {
    if &take::<8, _>(&mut input)? != DUMP_MAGIC {
        return Err(Error::Io("not an eigenvector dump".into()));
    }
    let version = u32::from_le_bytes(take(&mut input)?);
    if version != DUMP_VERSION {
        return Err(Error::Io(format!("unsupported dump version {version}")));
    }
    let rows = u64::from_le_bytes(take(&mut input)?) as usize;
    let cols = u64::from_le_bytes(take(&mut input)?) as usize;
    let d = u32::from_le_bytes(take(&mut input)?) as usize;
    let center = (0..d)
        .map(|_| take(&mut input).map(i64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    let radius = u64::from_le_bytes(take(&mut input)?);
    let seed = u64::from_le_bytes(take(&mut input)?);
    let cube = Cube::new(center, radius)?;
    if rows != cube.site_count() {
        return Err(Error::Io(format!("{rows} rows for a cube of {} sites", cube.site_count())));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(f64::from_le_bytes(take(&mut input)?));
    }
    Ok(EigenvectorDump { cube, seed, vectors: DMatrix::from_vec(rows, cols, data) })
}
