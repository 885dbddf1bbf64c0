//! Binary voxel files.
//!
//! Layout (little-endian): magic `PVOX`, version `u8 = 1`, element kind `u8`
//! (`1` = one mask byte per node, `8` = one `f64` per node), dims `3 × u32`,
//! spacing `h: f64`, origin `3 × f64`, then the payload with the last index
//! varying fastest. Mask bytes are `0` outside, `1` interior, `2` boundary.

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PVOX";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Mask(Vec<u8>),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelFile {
    pub dims: [usize; 3],
    pub h: f64,
    pub origin: [f64; 3],
    pub payload: Payload,
}

impl VoxelFile {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let n: usize = self.dims.iter().product();
        let (kind, len) = match &self.payload {
            Payload::Mask(m) => (1u8, m.len()),
            Payload::Values(v) => (8u8, v.len()),
        };
        if len != n {
            return Err(Error::Format(format!("payload has {len} entries, dims need {n}")));
        }
        w.write_all(MAGIC)?;
        w.write_all(&[VERSION, kind])?;
        for d in self.dims {
            let d = u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} too large")))?;
            w.write_all(&d.to_le_bytes())?;
        }
        w.write_all(&self.h.to_le_bytes())?;
        for o in self.origin {
            w.write_all(&o.to_le_bytes())?;
        }
        match &self.payload {
            Payload::Mask(m) => w.write_all(m)?,
            Payload::Values(v) => {
                let mut buf = Vec::with_capacity(8 * v.len());
                for x in v {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
                w.write_all(&buf)?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 6];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(Error::Format("not a voxel file (bad magic)".into()));
        }
        if head[4] != VERSION {
            return Err(Error::Format(format!("unsupported voxel version {}", head[4])));
        }
        let kind = head[5];
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *d = u32::from_le_bytes(b) as usize;
        }
        let mut f = [0u8; 8];
        r.read_exact(&mut f)?;
        let h = f64::from_le_bytes(f);
        let mut origin = [0.0; 3];
        for o in &mut origin {
            r.read_exact(&mut f)?;
            *o = f64::from_le_bytes(f);
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Format(format!("invalid spacing {h}")));
        }
        let n = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
        let payload = match kind {
            1 => {
                let mut m = vec![0u8; n];
                r.read_exact(&mut m)?;
                if let Some(bad) = m.iter().find(|&&b| b > 2) {
                    return Err(Error::Format(format!("invalid mask byte {bad}")));
                }
                Payload::Mask(m)
            }
            8 => {
                let mut buf = vec![0u8; 8 * n];
                r.read_exact(&mut buf)?;
                Payload::Values(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap_or([0; 8]))).collect())
            }
            k => return Err(Error::Format(format!("unknown element kind {k}"))),
        };
        Ok(VoxelFile { dims, h, origin, payload })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let f = VoxelFile { dims: [2, 1, 3], h: 0.25, origin: [-1.0, 0.0, 2.0], payload: Payload::Mask(vec![0, 1, 2, 1, 0, 2]) };
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"PVOX");
        assert_eq!(VoxelFile::read(&buf[..]).unwrap(), f);
        let g = VoxelFile { payload: Payload::Values(vec![0.5, -1.0, 3.25, 0.0, 1e-300, 7.0]), ..f };
        let mut buf = Vec::new();
        g.write(&mut buf).unwrap();
        assert_eq!(VoxelFile::read(&buf[..]).unwrap(), g);
    }

    #[test]
    fn rejects_garbage() {
        assert!(VoxelFile::read(&b"NOPE\x01\x01"[..]).is_err());
        let f = VoxelFile { dims: [1, 1, 1], h: 1.0, origin: [0.0; 3], payload: Payload::Mask(vec![7]) };
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        assert!(VoxelFile::read(&buf[..]).is_err());
        let short = VoxelFile { dims: [2, 2, 2], h: 1.0, origin: [0.0; 3], payload: Payload::Mask(vec![0]) };
        assert!(short.write(Vec::new()).is_err());
    }
}
