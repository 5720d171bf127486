#![allow(dead_code)]

use fefm::data::{Dataset, Instance, Label};
use fefm::model::ModelGradient;
use fefm::shallow::BlockGrad;
use fefm::Model;
use rand::Rng;
use rand_distr::StandardNormal;

/// One random instance with `per_field` values per field; feature `c` of
/// field `f` has id `f·per_field + c`.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, per_field: usize) -> Instance {
    let label = Label::from_bool(rng.random());
    let active = (0..n)
        .map(|f| (f * per_field + rng.random_range(0..per_field)) as u32)
        .collect();
    Instance::new(label, active)
}

pub fn random_dataset<R: Rng>(rng: &mut R, count: usize, n: usize, per_field: usize) -> Dataset {
    let instances = (0..count).map(|_| random_instance(rng, n, per_field)).collect();
    Dataset::new(n, n * per_field, instances).unwrap()
}

/// Overwrites every parameter with `N(0, std²)`.
pub fn randomize<R: Rng>(model: &mut Model, std: f64, rng: &mut R) {
    for block in model.blocks_mut() {
        for x in block.values.iter_mut() {
            *x = std * rng.sample::<f64, _>(StandardNormal);
        }
    }
}

/// Gradient expanded to one dense vector per parameter block.
pub fn dense_grads(model: &Model, grad: &ModelGradient) -> Vec<Vec<f64>> {
    let blocks = model.blocks();
    let grads = grad.block_grads();
    assert_eq!(blocks.len(), grads.len());
    blocks
        .iter()
        .zip(grads)
        .map(|(b, g)| {
            let mut out = vec![0.0; b.values.len()];
            match g {
                BlockGrad::Untouched => {}
                BlockGrad::Scalar(s) => out[0] = s,
                BlockGrad::Dense(d) => out.copy_from_slice(d),
                BlockGrad::Rows(rows) => {
                    let len = rows.row_len();
                    for (r, vals) in rows.iter() {
                        out[r * len..(r + 1) * len].copy_from_slice(vals);
                    }
                }
            }
            out
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `(2·wins + ties) / (2·P·N)` by comparing every positive with every
/// negative.
pub fn pairwise_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let mut doubled: u64 = 0;
    let (mut pos, mut neg) = (0u64, 0u64);
    for (i, yi) in labels.iter().enumerate() {
        if yi.is_positive() {
            pos += 1;
        } else {
            neg += 1;
            continue;
        }
        for (j, yj) in labels.iter().enumerate() {
            if yj.is_positive() {
                continue;
            }
            if scores[i] > scores[j] {
                doubled += 2;
            } else if scores[i] == scores[j] {
                doubled += 1;
            }
        }
    }
    doubled as f64 / (2 * pos * neg) as f64
}

/// Early stopping as a fold over the losses: returns (epochs run, best epoch).
pub fn reference_early_stopping(
    losses: &[f64],
    min_delta: f64,
    patience: usize,
    max_epochs: usize,
) -> (usize, Option<usize>) {
    let mut best = f64::INFINITY;
    let mut best_epoch = None;
    let mut wait = 0;
    let mut epoch = 0;
    while epoch < losses.len().min(max_epochs) {
        let loss = losses[epoch];
        epoch += 1;
        if loss < best - min_delta {
            best = loss;
            best_epoch = Some(epoch);
            wait = 0;
        } else {
            wait += 1;
            if wait >= patience {
                break;
            }
        }
    }
    (epoch, best_epoch)
}
