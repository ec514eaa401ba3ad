//! Serial fusion: row-wise concatenation of two aligned feature batches.

use crate::error::{Error, Result};
use crate::io::FeatureVectorBatch;

/// Concatenates `a` and `b` per sample, `a`'s columns first. Both batches
/// must list the same sample ids in the same order.
pub fn serial_fuse(a: &FeatureVectorBatch, b: &FeatureVectorBatch) -> Result<FeatureVectorBatch> {
    if a.count() != b.count() {
        return Err(Error::CountMismatch {
            left: a.count(),
            right: b.count(),
        });
    }
    if let Some(index) = a
        .sample_ids()
        .iter()
        .zip(b.sample_ids())
        .position(|(x, y)| x != y)
    {
        return Err(Error::IdMismatch {
            index,
            left: a.sample_ids()[index].clone(),
            right: b.sample_ids()[index].clone(),
        });
    }
    let dim = a.dim() + b.dim();
    let mut data = Vec::with_capacity(a.count() * dim);
    for (ra, rb) in a.rows().zip(b.rows()) {
        data.extend_from_slice(ra);
        data.extend_from_slice(rb);
    }
    FeatureVectorBatch::new(dim, data, a.sample_ids().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(dim: usize, data: Vec<f32>, ids: &[&str]) -> FeatureVectorBatch {
        FeatureVectorBatch::new(dim, data, ids.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn concatenates() {
        let fused = serial_fuse(&batch(2, vec![1.0, 2.0], &["x"]), &batch(1, vec![3.0], &["x"])).unwrap();
        assert_eq!(fused.dim(), 3);
        assert_eq!(fused.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn order_matters() {
        let a = batch(1, vec![1.0], &["x"]);
        let b = batch(1, vec![2.0], &["x"]);
        assert_eq!(serial_fuse(&a, &b).unwrap().data(), &[1.0, 2.0]);
        assert_eq!(serial_fuse(&b, &a).unwrap().data(), &[2.0, 1.0]);
    }

    #[test]
    fn id_mismatch_reports_first_index() {
        let a = batch(1, vec![1.0, 2.0], &["x", "y"]);
        let b = batch(1, vec![1.0, 2.0], &["y", "x"]);
        assert!(matches!(serial_fuse(&a, &b), Err(Error::IdMismatch { index: 0, .. })));
    }

    #[test]
    fn count_mismatch() {
        let a = batch(1, vec![1.0, 2.0], &["x", "y"]);
        let b = batch(1, vec![1.0], &["x"]);
        assert!(matches!(serial_fuse(&a, &b), Err(Error::CountMismatch { left: 2, right: 1 })));
    }
}
