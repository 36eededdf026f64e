//! Little-endian binary framing shared by the checkpoint and dataset files:
//! `magic | u32 version | body | u64 CRC-64/XZ of body`.

use crc::{Crc, CRC_64_XZ};

use crate::error::{Error, Result};

const CRC64: Crc<u64> = Crc::<u64>::new(&CRC_64_XZ);

pub fn checksum(bytes: &[u8]) -> u64 {
    CRC64.checksum(bytes)
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    /// Frames the accumulated body.
    pub fn finish(self, magic: &[u8], version: u32) -> Vec<u8> {
        let mut out = Vec::with_capacity(magic.len() + 12 + self.buf.len());
        out.extend_from_slice(magic);
        out.extend_from_slice(&version.to_le_bytes());
        out.extend_from_slice(&self.buf);
        out.extend_from_slice(&checksum(&self.buf).to_le_bytes());
        out
    }
}

/// Bounds-checked reader over a verified body.
#[derive(Debug)]
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    /// Checks magic, version and checksum, returning a reader over the body.
    pub fn open(bytes: &'a [u8], magic: &[u8], version: u32) -> Result<Self> {
        let header = magic.len() + 4;
        if bytes.len() < header || &bytes[..magic.len()] != magic {
            return Err(Error::FormatVersionMismatch(format!(
                "missing {} header",
                String::from_utf8_lossy(magic)
            )));
        }
        let found = u32::from_le_bytes(bytes[magic.len()..header].try_into().unwrap());
        if found != version {
            return Err(Error::FormatVersionMismatch(format!(
                "expected version {version}, found {found}"
            )));
        }
        if bytes.len() < header + 8 {
            return Err(Error::FormatVersionMismatch("file ends before checksum".into()));
        }
        let (body, tail) = bytes[header..].split_at(bytes.len() - header - 8);
        let stored = u64::from_le_bytes(tail.try_into().unwrap());
        let computed = checksum(body);
        if stored != computed {
            return Err(Error::ChecksumMismatch { stored, computed });
        }
        Ok(Self { buf: body })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.buf.len() {
            return Err(Error::FormatVersionMismatch("body shorter than its header claims".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// A count or dimension; rejects values that cannot fit the remaining body.
    pub fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v)
            .ok()
            .filter(|&n| n <= self.buf.len().max(1) * 8)
            .ok_or_else(|| Error::FormatVersionMismatch(format!("implausible count {v}")))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| Error::FormatVersionMismatch("length overflow".into()))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(Error::FormatVersionMismatch(format!("{} trailing bytes", self.buf.len())))
        }
    }
}
