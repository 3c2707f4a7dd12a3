//! Bit-exact field snapshots.
//!
//! Layout, all little-endian: `b"RDAS"`, `u32` version, `u32` N, `u32` field
//! count, `f64` h, `f64` t, then each field as N*N `f64` values in row-major order.

use std::io::{Read, Write};

use super::field::Field2D;
use super::run::RdasState;
use crate::error::{Error, Result};
use crate::num::{cst, Real};

pub const MAGIC: &[u8; 4] = b"RDAS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

/// Decoded snapshot contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub h: f64,
    pub t: f64,
    pub fields: Vec<Vec<f64>>,
}

pub fn write_snapshot<T: Real, W: Write>(mut out: W, t: T, fields: &[&Field2D<T>]) -> Result<()> {
    let first = fields.first().ok_or_else(|| Error::Snapshot("no fields to write".into()))?;
    if fields.iter().any(|f| !f.same_shape(first)) {
        return Err(Error::Snapshot("fields differ in shape".into()));
    }
    let n = first.n();
    let mut buf = Vec::with_capacity(HEADER_LEN + fields.len() * n * n * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(fields.len() as u32).to_le_bytes());
    buf.extend_from_slice(&first.h().to_f64().unwrap_or(f64::NAN).to_le_bytes());
    buf.extend_from_slice(&t.to_f64().unwrap_or(f64::NAN).to_le_bytes());
    for f in fields {
        for x in f.values() {
            buf.extend_from_slice(&x.to_f64().unwrap_or(f64::NAN).to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<Snapshot> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header).map_err(|_| Error::Snapshot("truncated header".into()))?;
    if &header[0..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().expect("4 bytes"));
    let real = |k: usize| f64::from_le_bytes(header[k..k + 8].try_into().expect("8 bytes"));
    let version = word(4);
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let (n, count) = (word(8) as usize, word(12) as usize);
    let (h, t) = (real(16), real(24));
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != count * n * n * 8 {
        return Err(Error::Snapshot(format!("expected {} payload bytes, found {}", count * n * n * 8, body.len())));
    }
    let values: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let fields = values.chunks(n * n).map(<[f64]>::to_vec).collect();
    Ok(Snapshot { n, h, t, fields })
}

impl Snapshot {
    /// Rebuilds the `(u, v)` state on a grid with the given origin.
    pub fn to_state<T: Real>(&self, origin: (T, T), dt: f64) -> Result<RdasState<T>> {
        if self.fields.len() != 2 {
            return Err(Error::Snapshot(format!("expected 2 fields, found {}", self.fields.len())));
        }
        let conv = |f: &Vec<f64>| Field2D::from_values(self.n, cst(self.h), origin, f.iter().map(|x| cst(*x)).collect());
        let step = (self.t / dt).round();
        if !(step >= 0.0) {
            return Err(Error::Snapshot(format!("time {} is not a step of {dt}", self.t)));
        }
        Ok(RdasState { u: conv(&self.fields[0])?, v: conv(&self.fields[1])?, step: step as u64 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let u = Field2D::<f64>::from_fn(5, 0.1, (-0.2, -0.2), |x, y| (x * 13.0).sin() + y / 3.0).unwrap();
        let v = Field2D::<f64>::from_fn(5, 0.1, (-0.2, -0.2), |x, y| x * y + 1e-300).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, 2.5, &[&u, &v]).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 2 * 25 * 8);
        assert_eq!(&buf[..4], b"RDAS");
        let snap = read_snapshot(&buf[..]).unwrap();
        assert_eq!((snap.n, snap.h, snap.t), (5, 0.1, 2.5));
        let state = snap.to_state::<f64>((-0.2, -0.2), 0.005).unwrap();
        assert_eq!(state.step, 500);
        for (a, b) in state.u.values().iter().zip(u.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(state.v, v);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        assert!(read_snapshot(&b"RDA"[..]).is_err());
        let mut buf = Vec::new();
        let u = Field2D::<f64>::from_fn(3, 1.0, (0.0, 0.0), |x, _| x).unwrap();
        write_snapshot(&mut buf, 0.0, &[&u]).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_snapshot(&bad[..]).is_err());
        assert!(read_snapshot(&buf[..buf.len() - 1]).is_err());
        assert!(read_snapshot(&buf[..]).unwrap().to_state::<f64>((0.0, 0.0), 0.1).is_err());
    }
}
