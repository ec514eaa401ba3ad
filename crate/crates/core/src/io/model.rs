//! `UDFM`: magic, version u32, dim u32, C f64, then `dim + 1` little-endian
//! f64 values (weights, then the bias weight).

use std::path::Path;

use crate::classifier::LinearModel;
use crate::error::{Error, Result};
use crate::io::bytes::{self, ByteReader};
use crate::io::FORMAT_VERSION;

pub const MODEL_MAGIC: &[u8; 4] = b"UDFM";

pub fn encode_model(model: &LinearModel) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(20 + (model.dim() + 1) * 8);
    out.extend_from_slice(MODEL_MAGIC);
    bytes::put_u32(&mut out, FORMAT_VERSION);
    bytes::put_u32(&mut out, bytes::to_u32(model.dim(), "dim")?);
    bytes::put_f64(&mut out, model.c);
    bytes::put_f64s(&mut out, &model.weights);
    bytes::put_f64(&mut out, model.bias_weight);
    Ok(out)
}

pub fn decode_model(buf: &[u8], path: &Path) -> Result<LinearModel> {
    let mut r = ByteReader::new(buf, path);
    r.magic(MODEL_MAGIC)?;
    r.version(FORMAT_VERSION)?;
    let dim = r.u32()? as usize;
    let c = r.f64()?;
    if dim == 0 {
        return Err(Error::Shape("model dim must be positive".into()));
    }
    let params = r.f64_payload(dim + 1)?;
    if let Some(pos) = params.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { sample: pos });
    }
    Ok(LinearModel::from_augmented(&params, c))
}

pub fn write_model(model: &LinearModel, path: impl AsRef<Path>) -> Result<()> {
    bytes::write_file(path.as_ref(), &encode_model(model)?)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<LinearModel> {
    let path = path.as_ref();
    decode_model(&bytes::read_file(path)?, path)
}
