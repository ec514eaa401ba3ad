//! On-disk formats: feature-map tensors (`UDFT`), feature vectors (`UDFV`),
//! codebooks (`UDFC`), linear models (`UDFM`) and label CSV files.

pub(crate) mod bytes;

mod batch;
mod codebook;
mod labels;
mod model;

pub use batch::{
    decode_tensor, decode_vectors, encode_tensor, encode_vectors, read_tensor_file,
    read_vector_file, write_tensor_file, write_vector_file, FeatureMapBatch, FeatureVectorBatch,
    FORMAT_VERSION, TENSOR_MAGIC, VECTOR_MAGIC,
};
pub use codebook::{decode_codebook, encode_codebook, read_codebook, write_codebook, CODEBOOK_MAGIC};
pub use labels::{parse_labels, read_labels, write_labels, Class, LabelSet};
pub use model::{decode_model, encode_model, read_model, write_model, MODEL_MAGIC};
