//! Mini-batch AdaGrad on the regularized logistic loss, with early stopping.

mod adagrad;
mod early_stop;
mod fit;
mod history;
mod metrics;

pub use adagrad::{AdaGrad, Regularization, DEFAULT_EPSILON, DEFAULT_INITIAL_ACCUMULATOR};
pub use early_stop::{simulate as simulate_early_stopping, EarlyStopping, Verdict};
pub use fit::{batch_step, evaluate, fit, fit_with, predict_probabilities, write_predictions, Evaluation, TrainConfig};
pub use history::{EpochRecord, TrainHistory, HISTORY_HEADER};
pub use metrics::{auc_metric, instance_loss, log_loss_metric, loss_upstream, sigmoid, softplus, LOG_LOSS_CLIP};
