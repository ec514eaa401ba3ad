//! Little-endian encode/decode helpers shared by the container formats.

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8], path: &'a Path) -> Self {
        Self { buf, pos: 0, path }
    }

    pub fn truncated(&self, expected: usize) -> Error {
        Error::Truncated {
            path: self.path.to_path_buf(),
            expected: expected as u64,
            actual: self.buf.len() as u64,
        }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .ok_or_else(|| self.truncated(usize::MAX))?;
        if end > self.buf.len() {
            return Err(self.truncated(end));
        }
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let found = self.take(4)?;
        if found != expected {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected: String::from_utf8_lossy(expected).into_owned(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        Ok(())
    }

    pub fn version(&mut self, supported: u32) -> Result<()> {
        let found = self.u32()?;
        if found != supported {
            return Err(Error::UnsupportedVersion {
                path: self.path.to_path_buf(),
                found,
                supported,
            });
        }
        Ok(())
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    /// Reads `count` sample ids (u16 length prefix + UTF-8).
    pub fn ids(&mut self, count: usize) -> Result<Vec<String>> {
        let mut ids = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let len = self.u16()? as usize;
            let raw = self.take(len)?;
            let id = std::str::from_utf8(raw)
                .map_err(|_| Error::Shape(format!("sample id at byte {} is not UTF-8", self.pos - len)))?;
            ids.push(id.to_owned());
        }
        Ok(ids)
    }

    /// Checks that exactly `payload` bytes remain, then decodes them as f32.
    pub fn f32_payload(&mut self, values: usize) -> Result<Vec<f32>> {
        let bytes = values
            .checked_mul(4)
            .ok_or_else(|| Error::Shape("payload size overflows".into()))?;
        let expected = self.pos + bytes;
        if expected != self.buf.len() {
            if expected > self.buf.len() {
                return Err(self.truncated(expected));
            }
            return Err(Error::Shape(format!(
                "{}: {} trailing bytes after payload",
                self.path.display(),
                self.buf.len() - expected
            )));
        }
        Ok(self
            .take(bytes)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn f64_payload(&mut self, values: usize) -> Result<Vec<f64>> {
        let bytes = values
            .checked_mul(8)
            .ok_or_else(|| Error::Shape("payload size overflows".into()))?;
        let expected = self.pos + bytes;
        if expected != self.buf.len() {
            if expected > self.buf.len() {
                return Err(self.truncated(expected));
            }
            return Err(Error::Shape(format!(
                "{}: {} trailing bytes after payload",
                self.path.display(),
                self.buf.len() - expected
            )));
        }
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_ids(out: &mut Vec<u8>, ids: &[String]) {
    for id in ids {
        out.extend_from_slice(&(id.len() as u16).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
    }
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    out.reserve(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn put_f64s(out: &mut Vec<u8>, values: &[f64]) {
    out.reserve(values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn to_u32(value: usize, what: &str) -> Result<u32> {
    u32::try_from(value).map_err(|_| Error::Shape(format!("{what} {value} does not fit in u32")))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
