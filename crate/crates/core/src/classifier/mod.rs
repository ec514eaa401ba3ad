//! L2-regularized logistic regression with a constant bias input of 1,
//! cross-validated choice of `C`, and evaluation.

mod eval;
mod grid;
mod model;
mod objective;
mod train;

pub use eval::{evaluate, report_from, EvalReport};
pub use grid::{grid_search, stratified_folds, CvRow, GridSearchConfig, GridSearchResult};
pub use model::{predict, LinearModel, Predictions, TrainMeta};
pub use objective::{lr_gradient, lr_objective};
pub use train::{train, train_traced, TrainOptions};
