//! Stratified k-fold cross-validation over a grid of `C` values.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::FeatureVectorBatch;

use super::objective::Problem;
use super::train::{train_problem, TrainOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSearchConfig {
    pub c_values: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    pub train: TrainOptions,
}

impl Default for GridSearchConfig {
    fn default() -> Self {
        Self {
            c_values: (1..=50).map(f64::from).collect(),
            folds: 5,
            seed: 0,
            train: TrainOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvRow {
    pub c: f64,
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best_c: f64,
    pub best_accuracy: f64,
    /// One row per grid value, in grid order.
    pub table: Vec<CvRow>,
}

/// Fold index per sample. Each class is shuffled separately and dealt out
/// round-robin, so every fold gets a near-equal share of both classes.
pub fn stratified_folds(labels: &[f64], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] < 0.0).collect();
    let smallest = pos.len().min(neg.len());
    if folds < 2 || folds > smallest {
        return Err(Error::ClassifierConfig(format!(
            "{folds} folds need 2 <= folds <= smallest class size ({smallest})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut assignment = vec![0; labels.len()];
    // continue the deal across classes so fold sizes stay balanced
    for (slot, &i) in pos.iter().chain(&neg).enumerate() {
        assignment[i] = slot % folds;
    }
    Ok(assignment)
}

pub fn grid_search(
    features: &FeatureVectorBatch,
    labels: &[f64],
    config: &GridSearchConfig,
) -> Result<GridSearchResult> {
    if config.c_values.is_empty() {
        return Err(Error::ClassifierConfig("c_values is empty".into()));
    }
    if let Some(bad) = config.c_values.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
        return Err(Error::ClassifierConfig(format!("C = {bad} is not positive")));
    }
    let problem = Problem::new(features, labels)?;
    let assignment = stratified_folds(labels, config.folds, config.seed)?;

    let splits: Vec<(Problem, Problem)> = (0..config.folds)
        .map(|fold| {
            let train: Vec<usize> = (0..problem.len()).filter(|&i| assignment[i] != fold).collect();
            let held: Vec<usize> = (0..problem.len()).filter(|&i| assignment[i] == fold).collect();
            (subset(&problem, &train), subset(&problem, &held))
        })
        .collect();

    // folds run in parallel; within a fold the grid is walked in ascending C
    // order with warm starts, which only changes the start point, not the
    // (unique) optimum each fit converges to
    let mut order: Vec<usize> = (0..config.c_values.len()).collect();
    order.sort_by(|&a, &b| config.c_values[a].total_cmp(&config.c_values[b]));
    let per_fold: Vec<Vec<f64>> = splits
        .par_iter()
        .map(|(train, held)| -> Result<Vec<f64>> {
            let mut acc = vec![0.0; config.c_values.len()];
            let mut start: Option<Vec<f64>> = None;
            for &ci in &order {
                let (model, _) =
                    train_problem(train, config.c_values[ci], &config.train, start.as_deref())?;
                acc[ci] = accuracy_on(held, &model.augmented());
                start = Some(model.augmented());
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let table: Vec<CvRow> = config
        .c_values
        .iter()
        .enumerate()
        .map(|(ci, &c)| {
            let fold_accuracies: Vec<f64> = per_fold.iter().map(|f| f[ci]).collect();
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
            CvRow {
                c,
                mean_accuracy,
                fold_accuracies,
            }
        })
        .collect();

    let best = table
        .iter()
        .reduce(|best, row| {
            if row.mean_accuracy > best.mean_accuracy
                || (row.mean_accuracy == best.mean_accuracy && row.c < best.c)
            {
                row
            } else {
                best
            }
        })
        .expect("non-empty grid");
    Ok(GridSearchResult {
        best_c: best.c,
        best_accuracy: best.mean_accuracy,
        table,
    })
}

fn subset(problem: &Problem, rows: &[usize]) -> Problem {
    let mut x = Vec::with_capacity(rows.len() * problem.dim);
    let mut y = Vec::with_capacity(rows.len());
    for &i in rows {
        x.extend_from_slice(problem.row(i));
        y.push(problem.y[i]);
    }
    Problem {
        n: rows.len(),
        dim: problem.dim,
        x,
        y,
    }
}

fn accuracy_on(problem: &Problem, params: &[f64]) -> f64 {
    let margins = problem.margins(params);
    let correct = margins
        .iter()
        .zip(&problem.y)
        .filter(|(&z, &y)| (if z >= 0.0 { 1.0 } else { -1.0 }) == y)
        .count();
    correct as f64 / problem.len() as f64
}
