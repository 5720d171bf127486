use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adagrad::{AdaGrad, Regularization, DEFAULT_EPSILON, DEFAULT_INITIAL_ACCUMULATOR};
use super::early_stop::{EarlyStopping, Verdict};
use super::history::{EpochRecord, TrainHistory};
use super::metrics::{auc_metric, instance_loss, log_loss_metric, loss_upstream, sigmoid};
use crate::data::{Dataset, Instance, Label};
use crate::deep::Mode;
use crate::error::{Error, Result};
use crate::model::{Model, ModelGradient};

/// Batches are reduced in this many fixed slices, in order, whether or
/// not they run in parallel.
const REDUCTION_SLICES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub eta: f64,
    /// L2 on `w0` and `w`.
    pub lambda1: f64,
    /// L2 on feature embeddings (`v`, and FFM's `v_ffm`).
    pub lambda2: f64,
    /// L2 on field-pair parameters (`r`, `U`).
    pub lambda3: f64,
    /// L2 on DNN weights and the logit head.
    pub lambda_deep: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub min_delta: f64,
    pub patience: usize,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    /// Run the slices of each batch on the rayon pool.
    pub parallel: bool,
    /// Record wall time in the history; off gives byte-stable history files.
    pub record_time: bool,
    pub adagrad_initial_accumulator: f64,
    pub adagrad_epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta: 0.05,
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: 0.0,
            lambda_deep: 0.0,
            batch_size: 1024,
            max_epochs: 50,
            min_delta: 5e-6,
            patience: 2,
            seed: 0,
            shuffle_each_epoch: true,
            parallel: true,
            record_time: true,
            adagrad_initial_accumulator: DEFAULT_INITIAL_ACCUMULATOR,
            adagrad_epsilon: DEFAULT_EPSILON,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        for (name, v) in [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("lambda_deep", self.lambda_deep),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be ≥ 0, got {v}"));
            }
        }
        if self.batch_size == 0 {
            return bad("batch_size must be ≥ 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be ≥ 1".into());
        }
        if !(self.min_delta >= 0.0) {
            return bad(format!("min_delta must be ≥ 0, got {}", self.min_delta));
        }
        if !(self.adagrad_initial_accumulator >= 0.0) || !(self.adagrad_epsilon >= 0.0) {
            return bad("AdaGrad accumulator and epsilon must be ≥ 0".into());
        }
        if self.adagrad_initial_accumulator == 0.0 && self.adagrad_epsilon == 0.0 {
            return bad("AdaGrad needs a positive initial accumulator or epsilon".into());
        }
        Ok(())
    }

    pub fn regularization(&self) -> Regularization {
        Regularization {
            linear: self.lambda1,
            embedding: self.lambda2,
            field_pair: self.lambda3,
            deep: self.lambda_deep,
        }
    }

    pub fn optimizer(&self, model: &Model) -> Result<AdaGrad> {
        AdaGrad::new(model, self.eta, self.adagrad_initial_accumulator, self.adagrad_epsilon)
    }
}

/// AUC (when defined) and log loss of a model on a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub auc: Option<f64>,
    pub log_loss: f64,
}

fn check_shape(model: &Model, ds: &Dataset) -> Result<()> {
    if ds.n_fields() != model.n_fields() || ds.n_features() > model.n_features() {
        return Err(Error::Dimension(format!(
            "data has n = {}, m = {} but the model expects n = {}, m ≤ {}",
            ds.n_fields(),
            ds.n_features(),
            model.n_fields(),
            model.n_features()
        )));
    }
    Ok(())
}

/// Seed for one (epoch, purpose) pair derived from the run seed.
fn derived_seed(seed: u64, stream: u64, epoch: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(epoch as u128 * 16);
    rng.next_u64()
}

const SHUFFLE_STREAM: u64 = 1;
const DROPOUT_STREAM: u64 = 2;

/// One optimizer step on the mean loss of `batch`. Returns the mean
/// training-mode instance loss.
///
/// `dropout_seed` fixes the dropout masks: instance `i` of the batch draws
/// from stream `i` of a generator seeded with it.
pub fn batch_step(
    model: &mut Model,
    batch: &[&Instance],
    cfg: &TrainConfig,
    opt: &mut AdaGrad,
    dropout_seed: u64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    let slice_len = batch.len().div_ceil(REDUCTION_SLICES);
    let frozen: &Model = model;
    let dropout = frozen.uses_dropout();
    let run_slice = |(s, slice): (usize, &[&Instance])| -> Result<(f64, ModelGradient)> {
        let mut grad = ModelGradient::zeros_like(frozen);
        let mut loss = 0.0;
        for (j, inst) in slice.iter().enumerate() {
            let (phi, cache) = if dropout {
                let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
                rng.set_stream((s * slice_len + j) as u64);
                frozen.forward(inst, Mode::Train(&mut rng))?
            } else {
                frozen.forward(inst, Mode::Eval)?
            };
            loss += instance_loss(phi, inst.label);
            frozen.accumulate_gradient(inst, loss_upstream(phi, inst.label), &cache, &mut grad)?;
        }
        Ok((loss, grad))
    };
    let parts: Vec<Result<(f64, ModelGradient)>> = if cfg.parallel {
        batch.par_chunks(slice_len).enumerate().map(run_slice).collect()
    } else {
        batch.chunks(slice_len).enumerate().map(run_slice).collect()
    };
    let mut total = 0.0;
    let mut grad: Option<ModelGradient> = None;
    for part in parts {
        let (loss, g) = part?;
        total += loss;
        match grad.as_mut() {
            None => grad = Some(g),
            Some(acc) => acc.merge(&g),
        }
    }
    let mut grad = grad.expect("non-empty batch");
    let scale = 1.0 / batch.len() as f64;
    grad.scale(scale);
    let mean = total * scale;
    if !mean.is_finite() {
        return Err(Error::Numeric(format!("training loss became {mean}")));
    }
    opt.step(model, &grad, &cfg.regularization());
    Ok(mean)
}

/// Eval-mode click probabilities, in dataset order.
pub fn predict_probabilities(model: &Model, ds: &Dataset) -> Result<Vec<f64>> {
    check_shape(model, ds)?;
    ds.instances()
        .par_iter()
        .map(|inst| model.logit(inst).map(sigmoid))
        .collect()
}

pub fn evaluate(model: &Model, ds: &Dataset) -> Result<Evaluation> {
    let probs = predict_probabilities(model, ds)?;
    let labels: Vec<Label> = ds.iter().map(|i| i.label).collect();
    let log_loss = log_loss_metric(&probs, &labels)?;
    if !log_loss.is_finite() {
        return Err(Error::Numeric("log loss is not finite".into()));
    }
    let auc = match auc_metric(&probs, &labels) {
        Ok(a) => Some(a),
        Err(Error::Undefined(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(Evaluation { auc, log_loss })
}

/// Trains with early stopping on validation log loss and returns the
/// parameters of the best epoch.
pub fn fit(model: Model, train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<(Model, TrainHistory)> {
    fit_with(model, train, val, cfg, |_| {})
}

/// [`fit`] with a callback after every epoch.
pub fn fit_with(
    mut model: Model,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    model.validate()?;
    check_shape(&model, train)?;
    check_shape(&model, val)?;
    let mut opt = cfg.optimizer(&model)?;
    let mut stopper = EarlyStopping::new(cfg.min_delta, cfg.patience);
    let mut history = TrainHistory::default();
    let mut best = model.clone();
    let mut order: Vec<&Instance> = train.iter().collect();
    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        if cfg.shuffle_each_epoch || epoch == 1 {
            let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(cfg.seed, SHUFFLE_STREAM, epoch));
            order.shuffle(&mut rng);
        }
        let dropout_base = derived_seed(cfg.seed, DROPOUT_STREAM, epoch);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mean = batch_step(&mut model, batch, cfg, &mut opt, dropout_base.wrapping_add(b as u64))?;
            loss_sum += mean * batch.len() as f64;
        }
        let eval = evaluate(&model, val)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_logloss: eval.log_loss,
            val_auc: eval.auc,
            seconds: if cfg.record_time {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        on_epoch(&record);
        history.records.push(record);
        match stopper.observe(epoch, eval.log_loss) {
            Verdict::Improved => best.clone_from(&model),
            Verdict::NoImprovement => {}
            Verdict::Stop => break,
        }
    }
    history.best_epoch = stopper.best_epoch();
    Ok((best, history))
}

/// Writes `probability,label` rows with labels as 1/0.
pub fn write_predictions(path: &Path, probs: &[f64], ds: &Dataset) -> Result<()> {
    if probs.len() != ds.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} rows",
            probs.len(),
            ds.len()
        )));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "probability,label").map_err(io)?;
    for (p, inst) in probs.iter().zip(ds) {
        writeln!(out, "{p},{}", inst.label.as_binary()).map_err(io)?;
    }
    out.flush().map_err(io)
}
