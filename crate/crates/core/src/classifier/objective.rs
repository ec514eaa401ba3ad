//! Objective `0.5 * |w~|^2 + C * sum_i log(1 + exp(-y_i w~ . x~_i))` where
//! `x~ = [x, 1]` and `w~ = [w, b]`, and its derivatives.

use crate::error::{Error, Result};
use crate::io::FeatureVectorBatch;

use super::model::LinearModel;

/// Dense training problem in f64, with labels in {+1, -1}.
#[derive(Debug, Clone)]
pub struct Problem {
    pub(crate) n: usize,
    pub(crate) dim: usize,
    pub(crate) x: Vec<f64>,
    pub(crate) y: Vec<f64>,
}

impl Problem {
    pub fn new(features: &FeatureVectorBatch, labels: &[f64]) -> Result<Self> {
        if labels.len() != features.count() {
            return Err(Error::CountMismatch {
                left: features.count(),
                right: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::ClassifierConfig(format!("label {bad} is not +1 or -1")));
        }
        Ok(Self {
            n: features.count(),
            dim: features.dim(),
            x: features.data().iter().map(|&v| v as f64).collect(),
            y: labels.to_vec(),
        })
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    pub(crate) fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    /// `w~ . x~_i` for every sample.
    pub(crate) fn margins(&self, params: &[f64]) -> Vec<f64> {
        let (w, b) = params.split_at(self.dim);
        (0..self.n).map(|i| dot(self.row(i), w) + b[0]).collect()
    }

    pub(crate) fn objective_at(&self, params: &[f64], c: f64, margins: &[f64]) -> f64 {
        let loss: f64 = margins
            .iter()
            .zip(&self.y)
            .map(|(&z, &y)| log1p_exp(-y * z))
            .sum();
        0.5 * dot(params, params) + c * loss
    }

    pub(crate) fn gradient_at(&self, params: &[f64], c: f64, margins: &[f64]) -> Vec<f64> {
        let mut g = params.to_vec();
        for i in 0..self.n {
            let y = self.y[i];
            // d/dz log(1 + exp(-y z)) = -y * sigmoid(-y z)
            let coef = -c * y * sigmoid(-y * margins[i]);
            for (gj, xj) in g[..self.dim].iter_mut().zip(self.row(i)) {
                *gj += coef * xj;
            }
            g[self.dim] += coef;
        }
        g
    }

    /// Per-sample curvature weights `sigmoid(z)(1 - sigmoid(z))`.
    pub(crate) fn curvature(&self, margins: &[f64]) -> Vec<f64> {
        margins
            .iter()
            .map(|&z| {
                let s = sigmoid(z);
                s * (1.0 - s)
            })
            .collect()
    }

    /// `(I + C X~^T D X~) v`.
    pub(crate) fn hessian_vec(&self, c: f64, curvature: &[f64], v: &[f64], out: &mut [f64]) {
        let (vw, vb) = v.split_at(self.dim);
        out.copy_from_slice(v);
        for i in 0..self.n {
            let x = self.row(i);
            let t = c * curvature[i] * (dot(x, vw) + vb[0]);
            if t != 0.0 {
                for (o, xj) in out[..self.dim].iter_mut().zip(x) {
                    *o += t * xj;
                }
                out[self.dim] += t;
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log(1 + exp(t))` without overflow.
pub(crate) fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn problem_for(model: &LinearModel, features: &FeatureVectorBatch, labels: &[f64]) -> Result<Problem> {
    model.check_dim(features)?;
    Problem::new(features, labels)
}

pub fn lr_objective(model: &LinearModel, features: &FeatureVectorBatch, labels: &[f64]) -> Result<f64> {
    let problem = problem_for(model, features, labels)?;
    let params = model.augmented();
    let margins = problem.margins(&params);
    Ok(problem.objective_at(&params, model.c, &margins))
}

/// Gradient with respect to `(weights, bias_weight)`, bias last.
pub fn lr_gradient(
    model: &LinearModel,
    features: &FeatureVectorBatch,
    labels: &[f64],
) -> Result<Vec<f64>> {
    let problem = problem_for(model, features, labels)?;
    let params = model.augmented();
    let margins = problem.margins(&params);
    Ok(problem.gradient_at(&params, model.c, &margins))
}
