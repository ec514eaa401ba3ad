use std::fmt::Write as _;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::io::{Class, FeatureVectorBatch};

use super::model::{predict, LinearModel, Predictions};

/// Accuracy, confusion counts and prediction wall-clock for a test batch.
///
/// `confusion[actual][predicted]`, index 0 = private, 1 = public.
/// `predict_seconds` covers scoring the already-loaded batch only.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: [[usize; 2]; 2],
    pub predict_seconds: f64,
    pub count: usize,
}

fn class_index(class: Class) -> usize {
    match class {
        Class::Private => 0,
        Class::Public => 1,
    }
}

pub fn evaluate(model: &LinearModel, features: &FeatureVectorBatch, labels: &[f64]) -> Result<EvalReport> {
    if labels.len() != features.count() {
        return Err(Error::CountMismatch {
            left: features.count(),
            right: labels.len(),
        });
    }
    let started = Instant::now();
    let Predictions { labels: predicted, .. } = predict(model, features)?;
    let predict_seconds = started.elapsed().as_secs_f64();
    Ok(report_from(&predicted, labels, predict_seconds))
}

pub fn report_from(predicted: &[Class], labels: &[f64], predict_seconds: f64) -> EvalReport {
    let mut confusion = [[0usize; 2]; 2];
    for (&p, &y) in predicted.iter().zip(labels) {
        confusion[class_index(Class::from_sign(y))][class_index(p)] += 1;
    }
    let correct = confusion[0][0] + confusion[1][1];
    let count = predicted.len();
    EvalReport {
        accuracy: if count == 0 { 0.0 } else { correct as f64 / count as f64 },
        confusion,
        predict_seconds,
        count,
    }
}

impl EvalReport {
    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let c = &self.confusion;
        let mut out = String::new();
        let _ = writeln!(out, "samples:   {}", self.count);
        let _ = writeln!(out, "accuracy:  {:.2}%", 100.0 * self.accuracy);
        let _ = writeln!(out, "predict:   {:.6} s", self.predict_seconds);
        let _ = writeln!(out, "confusion (rows actual, cols predicted):");
        let _ = writeln!(out, "            private  public");
        let _ = writeln!(out, "  private   {:>7}  {:>6}", c[0][0], c[0][1]);
        let _ = writeln!(out, "  public    {:>7}  {:>6}", c[1][0], c[1][1]);
        out
    }

    /// One `key=value` per line.
    pub fn to_key_values(&self) -> String {
        let c = &self.confusion;
        format!(
            "samples={}\naccuracy={}\npredict_seconds={}\nprivate_as_private={}\nprivate_as_public={}\npublic_as_private={}\npublic_as_public={}\n",
            self.count, self.accuracy, self.predict_seconds, c[0][0], c[0][1], c[1][0], c[1][1]
        )
    }
}
