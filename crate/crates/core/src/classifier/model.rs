use crate::error::{Error, Result};
use crate::io::{Class, FeatureVectorBatch};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainMeta {
    pub iterations: usize,
    pub final_objective: f64,
}

/// Logistic-regression weights. The bias is an extra input fixed at 1 whose
/// weight (`bias_weight`) is regularized like every other weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias_weight: f64,
    pub c: f64,
    pub train_meta: TrainMeta,
}

impl LinearModel {
    pub fn zeros(dim: usize, c: f64) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias_weight: 0.0,
            c,
            train_meta: TrainMeta::default(),
        }
    }

    /// Weights followed by the bias weight.
    pub fn from_augmented(params: &[f64], c: f64) -> Self {
        let (w, b) = params.split_at(params.len() - 1);
        Self {
            weights: w.to_vec(),
            bias_weight: b[0],
            c,
            train_meta: TrainMeta::default(),
        }
    }

    pub fn augmented(&self) -> Vec<f64> {
        let mut out = self.weights.clone();
        out.push(self.bias_weight);
        out
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `w . x + b`.
    pub fn decision(&self, x: &[f32]) -> f64 {
        self.weights
            .iter()
            .zip(x)
            .map(|(w, &v)| w * v as f64)
            .sum::<f64>()
            + self.bias_weight
    }

    pub fn check_dim(&self, features: &FeatureVectorBatch) -> Result<()> {
        if features.dim() != self.dim() {
            return Err(Error::DimMismatch {
                what: "features",
                left: features.dim(),
                other: "model",
                right: self.dim(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub labels: Vec<Class>,
    pub scores: Vec<f64>,
}

/// Sign of `w . x + b` per sample; a score of exactly 0 maps to `Private`.
pub fn predict(model: &LinearModel, features: &FeatureVectorBatch) -> Result<Predictions> {
    model.check_dim(features)?;
    let scores: Vec<f64> = features.rows().map(|x| model.decision(x)).collect();
    let labels = scores.iter().map(|&s| Class::from_sign(s)).collect();
    Ok(Predictions { labels, scores })
}
