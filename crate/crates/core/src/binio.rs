//! Little-endian helpers for the binary checkpoint containers.

use std::io::{self, Read, Write};

pub(crate) fn write_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn write_f64<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

pub(crate) fn write_f64s<W: Write>(w: &mut W, vs: &[f64]) -> io::Result<()> {
    write_u64(w, vs.len() as u64)?;
    for &v in vs {
        write_f64(w, v)?;
    }
    Ok(())
}

pub(crate) fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    write_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads a length-prefixed run of floats, refusing lengths above `limit`.
pub(crate) fn read_f64s<R: Read>(r: &mut R, limit: usize) -> io::Result<Vec<f64>> {
    let n = read_len(r, limit)?;
    (0..n).map(|_| read_f64(r)).collect()
}

pub(crate) fn read_str<R: Read>(r: &mut R) -> io::Result<String> {
    let n = read_len(r, 1 << 20)?;
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

pub(crate) fn read_len<R: Read>(r: &mut R, limit: usize) -> io::Result<usize> {
    let n = read_u64(r)?;
    if n > limit as u64 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("length {n} exceeds limit {limit}"),
        ));
    }
    Ok(n as usize)
}

pub(crate) fn expect_magic<R: Read>(r: &mut R, magic: &[u8]) -> io::Result<()> {
    let mut buf = vec![0u8; magic.len()];
    r.read_exact(&mut buf)?;
    if buf != magic {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!(
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(&buf)
            ),
        ));
    }
    Ok(())
}
