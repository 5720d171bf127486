use crate::error::{Error, Result};
use crate::model::{Model, ModelGradient};
use crate::shallow::{BlockGrad, ParamGroup};

pub const DEFAULT_INITIAL_ACCUMULATOR: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 1e-7;

/// L2 strength per parameter group.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Regularization {
    pub linear: f64,
    pub embedding: f64,
    pub field_pair: f64,
    pub deep: f64,
}

impl Regularization {
    pub fn for_group(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Linear => self.linear,
            ParamGroup::Embedding => self.embedding,
            ParamGroup::FieldPair => self.field_pair,
            ParamGroup::DnnWeight => self.deep,
            ParamGroup::DnnBias => 0.0,
        }
    }
}

/// Per-coordinate AdaGrad with accumulators shaped like the model's blocks.
#[derive(Clone, Debug)]
pub struct AdaGrad {
    pub eta: f64,
    pub epsilon: f64,
    accumulators: Vec<Vec<f64>>,
}

impl AdaGrad {
    pub fn new(model: &Model, eta: f64, initial_accumulator: f64, epsilon: f64) -> Result<Self> {
        if !(eta > 0.0) || !(initial_accumulator >= 0.0) || !(epsilon >= 0.0) {
            return Err(Error::Config(format!(
                "AdaGrad needs η > 0 and non-negative accumulator/ε (got {eta}, {initial_accumulator}, {epsilon})"
            )));
        }
        let accumulators = model
            .blocks()
            .iter()
            .map(|b| vec![initial_accumulator; b.values.len()])
            .collect();
        Ok(AdaGrad {
            eta,
            epsilon,
            accumulators,
        })
    }

    pub fn accumulators(&self) -> &[Vec<f64>] {
        &self.accumulators
    }

    /// One update from `grad` (the data term). Every touched coordinate
    /// also gets its group's `λ θ`.
    pub fn step(&mut self, model: &mut Model, grad: &ModelGradient, reg: &Regularization) {
        let grads = grad.block_grads();
        let (eta, eps) = (self.eta, self.epsilon);
        let update = |theta: &mut f64, acc: &mut f64, g: f64, lambda: f64| {
            let g = g + lambda * *theta;
            *acc += g * g;
            *theta -= eta * g / (acc.sqrt() + eps);
        };
        for ((block, g), acc) in model.blocks_mut().into_iter().zip(grads).zip(&mut self.accumulators) {
            let lambda = reg.for_group(block.group);
            match g {
                BlockGrad::Untouched => {}
                BlockGrad::Scalar(s) => update(&mut block.values[0], &mut acc[0], s, lambda),
                BlockGrad::Rows(rows) => {
                    let len = rows.row_len();
                    for (r, row) in rows.iter() {
                        let span = r * len..(r + 1) * len;
                        for ((t, a), &gi) in block.values[span.clone()].iter_mut().zip(&mut acc[span]).zip(row) {
                            update(t, a, gi, lambda);
                        }
                    }
                }
                BlockGrad::Dense(d) => {
                    for ((t, a), &gi) in block.values.iter_mut().zip(acc.iter_mut()).zip(d) {
                        update(t, a, gi, lambda);
                    }
                }
            }
        }
    }
}
