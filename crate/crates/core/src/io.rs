//! Field snapshots on disk.
//!
//! CSV: a header line `# nx ny Lx Ly` carrying the four values, then one line
//! `ix,iy,re,im` per grid point in row-major order (`iy` outer, `ix` inner).
//!
//! Raw: a 32-byte little-endian header (`b"VLAB"`, `u32` version, `u32 nx`,
//! `u32 ny`, `f64 Lx`, `f64 Ly`) followed by `nx·ny` pairs of `f64` (re, im)
//! in the same order.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::spectral::Field;
use crate::{Error, Result, C64};

pub const RAW_MAGIC: &[u8; 4] = b"VLAB";
pub const RAW_VERSION: u32 = 1;
pub const RAW_HEADER_LEN: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub lx: f64,
    pub ly: f64,
    pub field: Field,
}

pub fn write_csv<W: Write>(mut w: W, lx: f64, ly: f64, field: &Field) -> Result<()> {
    let (ny, nx) = field.dim();
    writeln!(w, "# {nx} {ny} {lx:?} {ly:?}")?;
    for ((iy, ix), v) in field.indexed_iter() {
        writeln!(w, "{ix},{iy},{:?},{:?}", v.re, v.im)?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Snapshot> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))??;
    let rest = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Format("missing '#' header".into()))?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::Format(format!("bad header: {header}")));
    }
    let parse_u = |s: &str| {
        s.parse::<usize>()
            .map_err(|e| Error::Format(format!("bad grid size {s}: {e}")))
    };
    let parse_f = |s: &str| {
        s.parse::<f64>()
            .map_err(|e| Error::Format(format!("bad number {s}: {e}")))
    };
    let (nx, ny) = (parse_u(parts[0])?, parse_u(parts[1])?);
    let (lx, ly) = (parse_f(parts[2])?, parse_f(parts[3])?);
    let mut field = Array2::zeros((ny, nx));
    let mut count = 0usize;
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::Format(format!("bad row: {line}")));
        }
        let (ix, iy) = (parse_u(cols[0])?, parse_u(cols[1])?);
        if ix >= nx || iy >= ny {
            return Err(Error::Format(format!("index out of range: {line}")));
        }
        field[(iy, ix)] = C64::new(parse_f(cols[2])?, parse_f(cols[3])?);
        count += 1;
    }
    if count != nx * ny {
        return Err(Error::Format(format!(
            "expected {} rows, found {count}",
            nx * ny
        )));
    }
    Ok(Snapshot { lx, ly, field })
}

pub fn write_raw<W: Write>(mut w: W, lx: f64, ly: f64, field: &Field) -> Result<()> {
    let (ny, nx) = field.dim();
    let mut header = Vec::with_capacity(RAW_HEADER_LEN);
    header.extend_from_slice(RAW_MAGIC);
    header.extend_from_slice(&RAW_VERSION.to_le_bytes());
    header.extend_from_slice(&(nx as u32).to_le_bytes());
    header.extend_from_slice(&(ny as u32).to_le_bytes());
    header.extend_from_slice(&lx.to_le_bytes());
    header.extend_from_slice(&ly.to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(nx * ny * 16);
    for v in field.iter() {
        body.extend_from_slice(&v.re.to_le_bytes());
        body.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_raw<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut header = [0u8; RAW_HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..4] != RAW_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != RAW_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (nx, ny) = (u32_at(8) as usize, u32_at(12) as usize);
    let (lx, ly) = (f64_at(16), f64_at(24));
    let mut body = vec![0u8; nx * ny * 16];
    r.read_exact(&mut body)?;
    let values: Vec<C64> = body
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    let field = Array2::from_shape_vec((ny, nx), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(Snapshot { lx, ly, field })
}

/// Writes through a temporary file in the same directory and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
