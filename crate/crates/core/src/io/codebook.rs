//! `UDFC`: magic, version u32, k u32, dim u32, seed u64, inertia f64, then
//! `k * dim` little-endian f64 centroid values.

use std::path::Path;

use crate::error::Result;
use crate::io::bytes::{self, ByteReader};
use crate::io::FORMAT_VERSION;
use crate::kmeans::Codebook;

pub const CODEBOOK_MAGIC: &[u8; 4] = b"UDFC";

pub fn encode_codebook(codebook: &Codebook) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(32 + codebook.centroids().len() * 8);
    out.extend_from_slice(CODEBOOK_MAGIC);
    bytes::put_u32(&mut out, FORMAT_VERSION);
    bytes::put_u32(&mut out, bytes::to_u32(codebook.k(), "k")?);
    bytes::put_u32(&mut out, bytes::to_u32(codebook.dim(), "dim")?);
    bytes::put_u64(&mut out, codebook.seed());
    bytes::put_f64(&mut out, codebook.inertia());
    bytes::put_f64s(&mut out, codebook.centroids());
    Ok(out)
}

/// The iteration count is not stored; decoded codebooks report 0.
pub fn decode_codebook(buf: &[u8], path: &Path) -> Result<Codebook> {
    let mut r = ByteReader::new(buf, path);
    r.magic(CODEBOOK_MAGIC)?;
    r.version(FORMAT_VERSION)?;
    let k = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let seed = r.u64()?;
    let inertia = r.f64()?;
    let centroids = r.f64_payload(k.saturating_mul(dim))?;
    Codebook::new(k, dim, centroids, inertia, 0, seed)
}

pub fn write_codebook(codebook: &Codebook, path: impl AsRef<Path>) -> Result<()> {
    bytes::write_file(path.as_ref(), &encode_codebook(codebook)?)
}

pub fn read_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    let path = path.as_ref();
    decode_codebook(&bytes::read_file(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn round_trip_and_layout() {
        let cb = Codebook::new(2, 3, vec![0.5, -1.0, 2.0, 3.0, 4.0, 1e-300], 1.25, 7, 42).unwrap();
        let bytes = encode_codebook(&cb).unwrap();
        assert_eq!(bytes.len(), 32 + 6 * 8);
        assert_eq!(&bytes[..4], b"UDFC");
        assert_eq!(u64::from_le_bytes(bytes[16..24].try_into().unwrap()), 42);
        let back = decode_codebook(&bytes, Path::new("c")).unwrap();
        assert_eq!(back.centroids(), cb.centroids());
        assert_eq!(back.inertia(), 1.25);
        assert_eq!(back.seed(), 42);
        assert!(matches!(
            decode_codebook(&bytes[..40], Path::new("c")),
            Err(Error::Truncated { expected: 80, actual: 40, .. })
        ));
    }
}
