//! Binary field snapshots: `"SQGF"`, version, dim, n (u32 LE), time (f64 LE),
//! then `n^dim` row-major f64 LE collocation values.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::TorusGrid;

pub const MAGIC: &[u8; 4] = b"SQGF";
pub const VERSION: u32 = 1;

pub fn write_snapshot(mut w: impl Write, field: &SpectralField, time: f64) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(g.n() as u32).to_le_bytes())?;
    w.write_all(&time.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * g.len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Returns the field (mean kept as stored) and its time stamp.
pub fn read_snapshot(mut r: impl Read) -> Result<(SpectralField, f64)> {
    let bad = |message: String| Error::Format {
        path: "<snapshot>".into(),
        message,
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    let mut read_u32 = |r: &mut dyn Read| -> Result<u32> {
        r.read_exact(&mut word)?;
        Ok(u32::from_le_bytes(word))
    };
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let grid = TorusGrid::new(dim, n).map_err(|e| bad(e.to_string()))?;
    let mut t = [0u8; 8];
    r.read_exact(&mut t)?;
    let time = f64::from_le_bytes(t);
    let mut raw = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut raw)?;
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((SpectralField::from_values(grid, &values)?, time))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = TorusGrid::square(16).unwrap();
        let f = SpectralField::from_fn(g, |x| (x[0] + x[1]).sin());
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &f, 1.25).unwrap();
        assert_eq!(&buf[..4], b"SQGF");
        assert_eq!(buf.len(), 4 + 12 + 8 + 8 * 256);
        let (back, t) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(t, 1.25);
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let buf = b"NOPE\x01\x00\x00\x00".to_vec();
        assert!(read_snapshot(buf.as_slice()).is_err());
    }
}
