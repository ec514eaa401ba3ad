//! In-memory batches and their `UDFT` / `UDFV` containers.
//!
//! Both containers share the same layout: 4 magic bytes, little-endian u32
//! header fields, an id table (u16 byte length + UTF-8 per sample) and a
//! dense little-endian f32 payload in sample-major order.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::bytes::{self, ByteReader};

pub const TENSOR_MAGIC: &[u8; 4] = b"UDFT";
pub const VECTOR_MAGIC: &[u8; 4] = b"UDFV";
pub const FORMAT_VERSION: u32 = 1;

/// `N` activation maps of shape `H x W x D`, stored sample-major then
/// row, column, channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMapBatch {
    height: usize,
    width: usize,
    depth: usize,
    data: Vec<f32>,
    sample_ids: Vec<String>,
}

impl FeatureMapBatch {
    pub fn new(
        height: usize,
        width: usize,
        depth: usize,
        data: Vec<f32>,
        sample_ids: Vec<String>,
    ) -> Result<Self> {
        if height == 0 || width == 0 || depth == 0 {
            return Err(Error::Shape(format!(
                "feature map dims must be positive, got {height}x{width}x{depth}"
            )));
        }
        let per_sample = height
            .checked_mul(width)
            .and_then(|v| v.checked_mul(depth))
            .ok_or_else(|| Error::Shape("feature map size overflows".into()))?;
        validate_common(&data, &sample_ids, per_sample)?;
        Ok(Self {
            height,
            width,
            depth,
            data,
            sample_ids,
        })
    }

    pub fn count(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn sample_len(&self) -> usize {
        self.height * self.width * self.depth
    }

    /// The `H*W*D` values of one sample.
    pub fn sample(&self, index: usize) -> &[f32] {
        let len = self.sample_len();
        &self.data[index * len..(index + 1) * len]
    }

    pub fn samples(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.sample_len())
    }
}

/// `N` feature vectors of dimension `dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVectorBatch {
    dim: usize,
    data: Vec<f32>,
    sample_ids: Vec<String>,
}

impl FeatureVectorBatch {
    pub fn new(dim: usize, data: Vec<f32>, sample_ids: Vec<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("vector dim must be positive".into()));
        }
        validate_common(&data, &sample_ids, dim)?;
        Ok(Self {
            dim,
            data,
            sample_ids,
        })
    }

    /// Builds a batch from rows computed in 64-bit, rounding to f32.
    pub fn from_rows_f64(dim: usize, rows: &[Vec<f64>], sample_ids: Vec<String>) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Shape(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
            data.extend(row.iter().map(|&v| v as f32));
        }
        Self::new(dim, data, sample_ids)
    }

    pub fn count(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn row(&self, index: usize) -> &[f32] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.data.chunks_exact(self.dim)
    }

    /// Rows widened to f64.
    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|r| r.iter().map(|&v| v as f64).collect())
            .collect()
    }

    /// Subset of rows by index, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            ids.push(self.sample_ids[i].clone());
        }
        Self {
            dim: self.dim,
            data,
            sample_ids: ids,
        }
    }
}

fn validate_common(data: &[f32], sample_ids: &[String], per_sample: usize) -> Result<()> {
    if sample_ids.is_empty() {
        return Err(Error::Shape("batch must contain at least one sample".into()));
    }
    let expected = sample_ids
        .len()
        .checked_mul(per_sample)
        .ok_or_else(|| Error::Shape("batch size overflows".into()))?;
    if data.len() != expected {
        return Err(Error::Shape(format!(
            "data length {} does not match {} samples x {per_sample}",
            data.len(),
            sample_ids.len()
        )));
    }
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            sample: pos / per_sample,
        });
    }
    let mut seen = HashSet::with_capacity(sample_ids.len());
    for id in sample_ids {
        if id.len() > u16::MAX as usize {
            return Err(Error::Shape(format!(
                "sample id of {} bytes exceeds the 65535-byte limit",
                id.len()
            )));
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

pub fn encode_tensor(batch: &FeatureMapBatch) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(24 + batch.data.len() * 4);
    out.extend_from_slice(TENSOR_MAGIC);
    bytes::put_u32(&mut out, FORMAT_VERSION);
    bytes::put_u32(&mut out, bytes::to_u32(batch.count(), "sample count")?);
    bytes::put_u32(&mut out, bytes::to_u32(batch.height, "height")?);
    bytes::put_u32(&mut out, bytes::to_u32(batch.width, "width")?);
    bytes::put_u32(&mut out, bytes::to_u32(batch.depth, "depth")?);
    bytes::put_ids(&mut out, &batch.sample_ids);
    bytes::put_f32s(&mut out, &batch.data);
    Ok(out)
}

pub fn decode_tensor(buf: &[u8], path: &Path) -> Result<FeatureMapBatch> {
    let mut r = ByteReader::new(buf, path);
    r.magic(TENSOR_MAGIC)?;
    r.version(FORMAT_VERSION)?;
    let count = r.u32()? as usize;
    let height = r.u32()? as usize;
    let width = r.u32()? as usize;
    let depth = r.u32()? as usize;
    let ids = r.ids(count)?;
    let values = count
        .checked_mul(height)
        .and_then(|v| v.checked_mul(width))
        .and_then(|v| v.checked_mul(depth))
        .ok_or_else(|| Error::Shape("tensor size overflows".into()))?;
    let data = r.f32_payload(values)?;
    FeatureMapBatch::new(height, width, depth, data, ids)
}

pub fn write_tensor_file(batch: &FeatureMapBatch, path: impl AsRef<Path>) -> Result<()> {
    bytes::write_file(path.as_ref(), &encode_tensor(batch)?)
}

pub fn read_tensor_file(path: impl AsRef<Path>) -> Result<FeatureMapBatch> {
    let path = path.as_ref();
    decode_tensor(&bytes::read_file(path)?, path)
}

pub fn encode_vectors(batch: &FeatureVectorBatch) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + batch.data.len() * 4);
    out.extend_from_slice(VECTOR_MAGIC);
    bytes::put_u32(&mut out, FORMAT_VERSION);
    bytes::put_u32(&mut out, bytes::to_u32(batch.count(), "sample count")?);
    bytes::put_u32(&mut out, bytes::to_u32(batch.dim, "dim")?);
    bytes::put_ids(&mut out, &batch.sample_ids);
    bytes::put_f32s(&mut out, &batch.data);
    Ok(out)
}

pub fn decode_vectors(buf: &[u8], path: &Path) -> Result<FeatureVectorBatch> {
    let mut r = ByteReader::new(buf, path);
    r.magic(VECTOR_MAGIC)?;
    r.version(FORMAT_VERSION)?;
    let count = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let ids = r.ids(count)?;
    let values = count
        .checked_mul(dim)
        .ok_or_else(|| Error::Shape("vector batch size overflows".into()))?;
    let data = r.f32_payload(values)?;
    FeatureVectorBatch::new(dim, data, ids)
}

pub fn write_vector_file(batch: &FeatureVectorBatch, path: impl AsRef<Path>) -> Result<()> {
    bytes::write_file(path.as_ref(), &encode_vectors(batch)?)
}

pub fn read_vector_file(path: impl AsRef<Path>) -> Result<FeatureVectorBatch> {
    let path = path.as_ref();
    decode_vectors(&bytes::read_file(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img{i}.jpg")).collect()
    }

    #[test]
    fn smallest_tensor_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.udft");
        let batch = FeatureMapBatch::new(1, 1, 1, vec![0.0], vec!["a".into()]).unwrap();
        write_tensor_file(&batch, &path).unwrap();
        // 24-byte header, 2+1 byte id entry, one f32
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 24 + 3 + 4);
        assert_eq!(read_tensor_file(&path).unwrap(), batch);
    }

    #[test]
    fn tensor_data_section_size() {
        let (h, w, d) = (7, 7, 512);
        let batch = FeatureMapBatch::new(h, w, d, vec![0.5; 2 * h * w * d], ids(2)).unwrap();
        let bytes = encode_tensor(&batch).unwrap();
        let id_table: usize = ids(2).iter().map(|s| 2 + s.len()).sum();
        // byte-count oracle: 2 samples * 7*7*512 values * 4 bytes
        let expected_payload = 2 * 7 * 7 * 512 * 4;
        assert_eq!(expected_payload, 200_704);
        assert_eq!(bytes.len() - 24 - id_table, expected_payload);
    }

    #[test]
    fn nan_is_rejected_with_sample_index() {
        let mut data = vec![1.0; 3 * 4];
        data[9] = f32::NAN;
        let err = FeatureMapBatch::new(2, 2, 1, data, ids(3)).unwrap_err();
        assert!(matches!(err, Error::NonFinite { sample: 2 }), "{err}");
    }

    #[test]
    fn bad_magic_is_reported() {
        let batch = FeatureMapBatch::new(1, 1, 2, vec![1.0, 2.0], ids(1)).unwrap();
        let mut bytes = encode_tensor(&batch).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        let err = decode_tensor(&bytes, Path::new("x.udft")).unwrap_err();
        assert!(matches!(err, Error::BadMagic { ref found, .. } if found == "XXXX"), "{err}");
    }

    #[test]
    fn unsupported_version_is_reported() {
        let batch = FeatureMapBatch::new(1, 1, 2, vec![1.0, 2.0], ids(1)).unwrap();
        let mut bytes = encode_tensor(&batch).unwrap();
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        let err = decode_tensor(&bytes, Path::new("x.udft")).unwrap_err();
        assert!(matches!(err, Error::UnsupportedVersion { found: 7, .. }), "{err}");
    }

    #[test]
    fn truncated_payload_reports_byte_counts() {
        let batch = FeatureMapBatch::new(2, 2, 2, vec![1.0; 16], ids(2)).unwrap();
        let bytes = encode_tensor(&batch).unwrap();
        let full = bytes.len() as u64;
        let err = decode_tensor(&bytes[..bytes.len() - 6], Path::new("t.udft")).unwrap_err();
        match err {
            Error::Truncated {
                expected, actual, ..
            } => {
                assert_eq!(expected, full);
                assert_eq!(actual, full - 6);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let batch = FeatureMapBatch::new(1, 1, 1, vec![1.0], ids(1)).unwrap();
        let mut bytes = encode_tensor(&batch).unwrap();
        bytes.push(0);
        assert!(decode_tensor(&bytes, Path::new("t.udft")).is_err());
    }

    #[test]
    fn non_finite_payload_is_rejected_on_load() {
        let batch = FeatureMapBatch::new(1, 1, 2, vec![1.0, 2.0], ids(2)[..1].to_vec()).unwrap();
        let mut bytes = encode_tensor(&batch).unwrap();
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::INFINITY.to_le_bytes());
        let err = decode_tensor(&bytes, Path::new("t.udft")).unwrap_err();
        assert!(matches!(err, Error::NonFinite { sample: 0 }));
    }

    #[test]
    fn vector_batches_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.udfv");
        let batch = FeatureVectorBatch::new(250, vec![0.0; 250], ids(1)).unwrap();
        write_vector_file(&batch, &path).unwrap();
        assert_eq!(read_vector_file(&path).unwrap(), batch);
    }

    #[test]
    fn vector_data_section_size() {
        let batch = FeatureVectorBatch::new(500, vec![1.0; 1500], ids(3)).unwrap();
        let bytes = encode_vectors(&batch).unwrap();
        let id_table: usize = ids(3).iter().map(|s| 2 + s.len()).sum();
        assert_eq!(bytes.len() - 16 - id_table, 3 * 500 * 4);
    }

    #[test]
    fn zero_dim_is_rejected() {
        assert!(FeatureVectorBatch::new(0, vec![], ids(1)).is_err());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = FeatureVectorBatch::new(1, vec![1.0, 2.0], vec!["a".into(), "a".into()])
            .unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }

    #[test]
    fn tensor_magic_in_vector_reader_fails() {
        let batch = FeatureMapBatch::new(1, 1, 1, vec![1.0], ids(1)).unwrap();
        let bytes = encode_tensor(&batch).unwrap();
        assert!(matches!(
            decode_vectors(&bytes, Path::new("x")),
            Err(Error::BadMagic { .. })
        ));
    }
}
