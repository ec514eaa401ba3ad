//! Truncated Newton (conjugate-gradient inner solves) with a backtracking
//! Armijo line search. Every accepted step decreases the objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::FeatureVectorBatch;

use super::model::{LinearModel, TrainMeta};
use super::objective::{dot, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainOptions {
    /// Converged when `|grad| <= tolerance * (1 + |objective|)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 1000,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

pub fn train(
    features: &FeatureVectorBatch,
    labels: &[f64],
    c: f64,
    options: &TrainOptions,
) -> Result<LinearModel> {
    let problem = Problem::new(features, labels)?;
    Ok(train_problem(&problem, c, options, None)?.0)
}

/// Like [`train`] but starting from `start` (weights then bias) and
/// returning the objective after every iteration, starting point included.
pub fn train_traced(
    features: &FeatureVectorBatch,
    labels: &[f64],
    c: f64,
    options: &TrainOptions,
    start: Option<&[f64]>,
) -> Result<(LinearModel, Vec<f64>)> {
    let problem = Problem::new(features, labels)?;
    train_problem(&problem, c, options, start)
}

pub(crate) fn train_problem(
    problem: &Problem,
    c: f64,
    options: &TrainOptions,
    start: Option<&[f64]>,
) -> Result<(LinearModel, Vec<f64>)> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::ClassifierConfig(format!("C must be positive, got {c}")));
    }
    let has_pos = problem.y.iter().any(|&y| y > 0.0);
    let has_neg = problem.y.iter().any(|&y| y < 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }
    if let Some(pos) = problem.x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            sample: pos / problem.dim,
        });
    }

    let size = problem.dim + 1;
    let mut params = match start {
        Some(s) if s.len() == size => s.to_vec(),
        Some(s) => {
            return Err(Error::DimMismatch {
                what: "start point",
                left: s.len(),
                other: "model (with bias)",
                right: size,
            })
        }
        None => vec![0.0; size],
    };

    let mut margins = problem.margins(&params);
    let mut objective = problem.objective_at(&params, c, &margins);
    let mut grad = problem.gradient_at(&params, c, &margins);
    let mut history = vec![objective];
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let gnorm = dot(&grad, &grad).sqrt();
        if gnorm <= options.tolerance * (1.0 + objective.abs()) {
            break;
        }
        iterations += 1;

        let curvature = problem.curvature(&margins);
        let mut direction = newton_direction(problem, c, &curvature, &grad, gnorm);
        let mut slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            direction = grad.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = params
                .iter()
                .zip(&direction)
                .map(|(p, d)| p + step * d)
                .collect();
            let trial_margins = problem.margins(&trial);
            let trial_objective = problem.objective_at(&trial, c, &trial_margins);
            if trial_objective <= objective + ARMIJO * step * slope {
                accepted = Some((trial, trial_margins, trial_objective));
                break;
            }
            step *= 0.5;
        }
        // no decrease representable at this precision: stop where we are
        let Some((p, m, f)) = accepted else { break };
        params = p;
        margins = m;
        objective = f;
        grad = problem.gradient_at(&params, c, &margins);
        history.push(objective);
    }

    let mut model = LinearModel::from_augmented(&params, c);
    model.train_meta = TrainMeta {
        iterations,
        final_objective: objective,
    };
    Ok((model, history))
}

/// Approximately solves `H d = -g` by conjugate gradients.
fn newton_direction(problem: &Problem, c: f64, curvature: &[f64], grad: &[f64], gnorm: f64) -> Vec<f64> {
    let size = grad.len();
    let target = gnorm.sqrt().min(0.5) * gnorm;
    let mut x = vec![0.0; size];
    let mut r: Vec<f64> = grad.iter().map(|g| -g).collect();
    let mut p = r.clone();
    let mut hp = vec![0.0; size];
    let mut rr = dot(&r, &r);
    for _ in 0..size.max(10) {
        if rr.sqrt() <= target {
            break;
        }
        problem.hessian_vec(c, curvature, &p, &mut hp);
        let php = dot(&p, &hp);
        if php <= 0.0 {
            break;
        }
        let alpha = rr / php;
        for j in 0..size {
            x[j] += alpha * p[j];
            r[j] -= alpha * hp[j];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for j in 0..size {
            p[j] = r[j] + beta * p[j];
        }
    }
    x
}
