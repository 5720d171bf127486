//! DeepFEFM: an FEFM whose pairwise scores and feature embeddings also feed
//! a rectifier network; the network's scalar output is added to the FEFM logit.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::Instance;
use crate::error::{Error, Result};
use crate::linalg::{add_outer, axpy, dot, matvec, matvec_t};
use crate::shallow::{BlockGrad, ModelKind, ParamBlock, ParamBlockMut, ParamGroup, ShallowParams, SparseGradient};

pub const DEFAULT_HIDDEN: [usize; 3] = [1024, 1024, 1024];
pub const DEFAULT_DROPOUT: f64 = 0.2;

/// Switches for the four architecture ablations. All on is the full model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationFlags {
    /// Add the FEFM pairwise sum to the logit.
    pub use_fefm_logit: bool,
    /// Add `w0 + Σ w_i` to the logit.
    pub use_linear_terms: bool,
    /// Feed the active feature embeddings to the DNN.
    pub dnn_input_feature_embeddings: bool,
    /// Feed the FEFM interaction vector to the DNN.
    pub dnn_input_fefm_embeddings: bool,
}

impl Default for AblationFlags {
    fn default() -> Self {
        AblationFlags {
            use_fefm_logit: true,
            use_linear_terms: true,
            dnn_input_feature_embeddings: true,
            dnn_input_fefm_embeddings: true,
        }
    }
}

impl AblationFlags {
    /// Without the FEFM logit terms.
    pub fn ablation1() -> Self {
        AblationFlags {
            use_fefm_logit: false,
            ..Self::default()
        }
    }

    /// Without the linear terms.
    pub fn ablation2() -> Self {
        AblationFlags {
            use_linear_terms: false,
            ..Self::default()
        }
    }

    /// Without feature embeddings in the DNN input.
    pub fn ablation3() -> Self {
        AblationFlags {
            dnn_input_feature_embeddings: false,
            ..Self::default()
        }
    }

    /// Without FEFM interaction embeddings in the DNN input.
    pub fn ablation4() -> Self {
        AblationFlags {
            dnn_input_fefm_embeddings: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dnn_input_feature_embeddings && !self.dnn_input_fefm_embeddings {
            return Err(Error::Config(
                "the DNN input needs at least one of the feature or FEFM embedding blocks".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn to_bits(self) -> u8 {
        (self.use_fefm_logit as u8)
            | (self.use_linear_terms as u8) << 1
            | (self.dnn_input_feature_embeddings as u8) << 2
            | (self.dnn_input_fefm_embeddings as u8) << 3
    }

    pub(crate) fn from_bits(bits: u8) -> Self {
        AblationFlags {
            use_fefm_logit: bits & 1 != 0,
            use_linear_terms: bits & 2 != 0,
            dnn_input_feature_embeddings: bits & 4 != 0,
            dnn_input_fefm_embeddings: bits & 8 != 0,
        }
    }

    /// DNN input width for `n` fields and embedding dimension `k`.
    pub fn input_width(&self, n: usize, k: usize) -> usize {
        let pairs = n * n.saturating_sub(1) / 2;
        (if self.dnn_input_fefm_embeddings { pairs } else { 0 })
            + (if self.dnn_input_feature_embeddings { n * k } else { 0 })
    }
}

/// Affine layer `z = W x + b` with `W` stored row-major `n_out × n_in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    pub n_in: usize,
    pub n_out: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        DenseLayer {
            n_in,
            n_out,
            weight: vec![0.0; n_in * n_out],
            bias: vec![0.0; n_out],
        }
    }
}

/// Rectifier feed-forward network with a bias-free scalar head.
#[derive(Clone, Debug, PartialEq)]
pub struct DnnParams {
    pub layers: Vec<DenseLayer>,
    pub w_logit: Vec<f64>,
    pub dropout: f64,
}

/// Whether dropout is active. Training draws masks from the given source.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Clone, Debug, Default)]
pub struct DnnCache {
    /// `inputs[l]` feeds layer `l`; the last entry feeds the head.
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    /// Inverted-dropout multipliers per hidden unit (empty in eval mode).
    masks: Vec<Vec<f64>>,
}

impl DnnCache {
    /// Hidden-layer pre-activations, layer by layer.
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre
    }
}

impl DnnParams {
    pub fn zeros(input_width: usize, hidden: &[usize], dropout: f64) -> Self {
        let mut layers = Vec::with_capacity(hidden.len());
        let mut n_in = input_width;
        for &w in hidden {
            layers.push(DenseLayer::zeros(n_in, w));
            n_in = w;
        }
        DnnParams {
            layers,
            w_logit: vec![0.0; n_in],
            dropout,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn random<R: Rng + ?Sized>(input_width: usize, hidden: &[usize], dropout: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::Config(format!("dropout must be in [0, 1), got {dropout}")));
        }
        if hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        let mut dnn = DnnParams::zeros(input_width, hidden, dropout);
        let mut glorot = |fan_in: usize, fan_out: usize, values: &mut [f64]| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            values.iter_mut().for_each(|x| *x = dist.sample(rng));
        };
        for layer in &mut dnn.layers {
            glorot(layer.n_in, layer.n_out, &mut layer.weight);
        }
        let last = dnn.w_logit.len();
        glorot(last, 1, &mut dnn.w_logit);
        Ok(dnn)
    }

    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(self.w_logit.len(), |l| l.n_in)
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.n_out).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut width = self.input_width();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.n_in != width || layer.weight.len() != layer.n_in * layer.n_out || layer.bias.len() != layer.n_out
            {
                return Err(Error::Dimension(format!("layer {i} does not chain from width {width}")));
            }
            width = layer.n_out;
        }
        if self.w_logit.len() != width {
            return Err(Error::Dimension(format!(
                "logit head has {} weights for a last layer of width {width}",
                self.w_logit.len()
            )));
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum::<usize>() + self.w_logit.len()
    }
}

/// Runs the network on `input`: rectifier layers (dropout after each in
/// training), then `w_logitᵀ h_L`.
pub fn dnn_forward(dnn: &DnnParams, input: &[f64], mode: Mode<'_>) -> Result<(f64, DnnCache)> {
    if input.len() != dnn.input_width() {
        return Err(Error::Dimension(format!(
            "DNN input has width {}, first layer expects {}",
            input.len(),
            dnn.input_width()
        )));
    }
    let mut rng = match mode {
        Mode::Train(rng) if dnn.dropout > 0.0 => Some(rng),
        _ => None,
    };
    let keep = 1.0 - dnn.dropout;
    let mut cache = DnnCache::default();
    let mut h = input.to_vec();
    for layer in &dnn.layers {
        let mut z = vec![0.0; layer.n_out];
        matvec(&layer.weight, &h, &mut z);
        axpy(1.0, &layer.bias, &mut z);
        let mut a: Vec<f64> = z.iter().map(|&x| x.max(0.0)).collect();
        if let Some(rng) = rng.as_deref_mut() {
            let mask: Vec<f64> = (0..layer.n_out)
                .map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                .collect();
            a.iter_mut().zip(&mask).for_each(|(x, m)| *x *= m);
            cache.masks.push(mask);
        }
        cache.inputs.push(std::mem::replace(&mut h, a));
        cache.pre.push(z);
    }
    let out = dot(&dnn.w_logit, &h);
    cache.inputs.push(h);
    Ok((out, cache))
}

/// Dense gradient of every DNN parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct DnnGradient {
    pub layers: Vec<DenseLayer>,
    pub w_logit: Vec<f64>,
}

impl DnnGradient {
    pub fn zeros_like(dnn: &DnnParams) -> Self {
        let zero = DnnParams::zeros(dnn.input_width(), &dnn.hidden_widths(), 0.0);
        DnnGradient {
            layers: zero.layers,
            w_logit: zero.w_logit,
        }
    }

    pub fn merge(&mut self, other: &DnnGradient) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            axpy(1.0, &b.weight, &mut a.weight);
            axpy(1.0, &b.bias, &mut a.bias);
        }
        axpy(1.0, &other.w_logit, &mut self.w_logit);
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            layer
                .weight
                .iter_mut()
                .chain(layer.bias.iter_mut())
                .for_each(|x| *x *= factor);
        }
        self.w_logit.iter_mut().for_each(|x| *x *= factor);
    }
}

/// Backpropagates `upstream = ∂L/∂out` through the network, accumulating
/// parameter gradients and returning `∂L/∂input`.
pub fn dnn_backward(dnn: &DnnParams, cache: &DnnCache, upstream: f64, grad: &mut DnnGradient) -> Vec<f64> {
    let last = cache.inputs.last().expect("cache from a forward pass");
    axpy(upstream, last, &mut grad.w_logit);
    let mut dh: Vec<f64> = dnn.w_logit.iter().map(|w| upstream * w).collect();
    for (l, layer) in dnn.layers.iter().enumerate().rev() {
        let mut dz = dh;
        if let Some(mask) = cache.masks.get(l) {
            dz.iter_mut().zip(mask).for_each(|(d, m)| *d *= m);
        }
        dz.iter_mut().zip(&cache.pre[l]).for_each(|(d, &z)| {
            if z <= 0.0 {
                *d = 0.0
            }
        });
        let g = &mut grad.layers[l];
        add_outer(1.0, &dz, &cache.inputs[l], &mut g.weight);
        axpy(1.0, &dz, &mut g.bias);
        let mut prev = vec![0.0; layer.n_in];
        matvec_t(&layer.weight, &dz, &mut prev);
        dh = prev;
    }
    dh
}

/// Full DeepFEFM parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct DeepFefmParams {
    pub fefm: ShallowParams,
    pub dnn: DnnParams,
    pub flags: AblationFlags,
}

/// Forward state needed by [`DeepFefmParams::gradient`].
#[derive(Clone, Debug)]
pub struct DeepCache {
    active: Vec<u32>,
    dnn: DnnCache,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeepGradient {
    pub shallow: SparseGradient,
    pub dnn: DnnGradient,
}

impl DeepCache {
    pub fn dnn(&self) -> &DnnCache {
        &self.dnn
    }
}

impl DeepGradient {
    pub fn zeros_like(params: &DeepFefmParams) -> Self {
        DeepGradient {
            shallow: SparseGradient::new(params.fefm.dim()),
            dnn: DnnGradient::zeros_like(&params.dnn),
        }
    }

    pub fn merge(&mut self, other: &DeepGradient) {
        self.shallow.merge(&other.shallow);
        self.dnn.merge(&other.dnn);
    }

    pub fn scale(&mut self, factor: f64) {
        self.shallow.scale(factor);
        self.dnn.scale(factor);
    }

    /// Per-block views aligned with [`DeepFefmParams::blocks`].
    pub fn block_grads(&self) -> Vec<BlockGrad<'_>> {
        let mut out = self.shallow.block_grads(ModelKind::Fefm);
        for layer in &self.dnn.layers {
            out.push(BlockGrad::Dense(&layer.weight));
            out.push(BlockGrad::Dense(&layer.bias));
        }
        out.push(BlockGrad::Dense(&self.dnn.w_logit));
        out
    }
}

impl DeepFefmParams {
    #[allow(clippy::too_many_arguments)]
    pub fn random<R: Rng + ?Sized>(
        m: usize,
        n: usize,
        k: usize,
        hidden: &[usize],
        dropout: f64,
        flags: AblationFlags,
        init_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        flags.validate()?;
        let fefm = ShallowParams::random(ModelKind::Fefm, m, n, k, init_std, rng)?;
        let dnn = DnnParams::random(flags.input_width(n, k), hidden, dropout, rng)?;
        Ok(DeepFefmParams { fefm, dnn, flags })
    }

    pub fn validate(&self) -> Result<()> {
        self.flags.validate()?;
        if self.fefm.kind() != ModelKind::Fefm {
            return Err(Error::KindMismatch {
                expected: "fefm".into(),
                found: self.fefm.kind().to_string(),
            });
        }
        self.fefm.validate()?;
        self.dnn.validate()?;
        let expected = self.flags.input_width(self.fefm.n_fields(), self.fefm.dim());
        if self.dnn.input_width() != expected {
            return Err(Error::Dimension(format!(
                "DNN input width {} does not match the enabled blocks ({expected})",
                self.dnn.input_width()
            )));
        }
        Ok(())
    }

    /// DNN input: the FEFM interaction vector first, then the active
    /// embeddings in field order, skipping disabled blocks.
    pub fn dnn_input(&self, inst: &Instance) -> Result<Vec<f64>> {
        self.validate()?;
        crate::data::dataset_check(inst, self.fefm.n_fields(), self.fefm.n_features())?;
        let scores = if self.flags.dnn_input_fefm_embeddings {
            self.fefm.fefm_scores_unchecked(inst)
        } else {
            Vec::new()
        };
        let embeddings: Vec<&[f64]> = inst.active.iter().map(|&i| self.fefm.embedding(i)).collect();
        build_dnn_input(&scores, &embeddings, self.flags)
    }

    /// Logit in the given mode, with the cache for backpropagation.
    pub fn forward(&self, inst: &Instance, mode: Mode<'_>) -> Result<(f64, DeepCache)> {
        self.validate()?;
        crate::data::dataset_check(inst, self.fefm.n_fields(), self.fefm.n_features())?;
        let needs_scores = self.flags.use_fefm_logit || self.flags.dnn_input_fefm_embeddings;
        let scores = if needs_scores {
            self.fefm.fefm_scores_unchecked(inst)
        } else {
            Vec::new()
        };
        let mut logit = 0.0;
        if self.flags.use_linear_terms {
            logit += self.fefm.linear_term(inst);
        }
        if self.flags.use_fefm_logit {
            logit += scores.iter().sum::<f64>();
        }
        let embeddings: Vec<&[f64]> = inst.active.iter().map(|&i| self.fefm.embedding(i)).collect();
        let dnn_scores: &[f64] = if self.flags.dnn_input_fefm_embeddings {
            &scores
        } else {
            &[]
        };
        let input = build_dnn_input(dnn_scores, &embeddings, self.flags)?;
        let (out, dnn) = dnn_forward(&self.dnn, &input, mode)?;
        let cache = DeepCache {
            active: inst.active.clone(),
            dnn,
        };
        Ok((logit + out, cache))
    }

    /// Deterministic (eval-mode) logit.
    pub fn logit(&self, inst: &Instance) -> Result<f64> {
        Ok(self.forward(inst, Mode::Eval)?.0)
    }

    /// Gradient of `upstream · φ` given the cache of the matching forward pass.
    pub fn gradient(&self, inst: &Instance, upstream: f64, cache: &DeepCache) -> Result<DeepGradient> {
        let mut grad = DeepGradient::zeros_like(self);
        self.accumulate_gradient(inst, upstream, cache, &mut grad)?;
        Ok(grad)
    }

    pub(crate) fn accumulate_gradient(
        &self,
        inst: &Instance,
        upstream: f64,
        cache: &DeepCache,
        grad: &mut DeepGradient,
    ) -> Result<()> {
        if cache.active != inst.active || cache.dnn.inputs.first().map(Vec::len) != Some(self.dnn.input_width()) {
            return Err(Error::Data(
                "stale forward cache: it belongs to another instance or model".into(),
            ));
        }
        let d_input = dnn_backward(&self.dnn, &cache.dnn, upstream, &mut grad.dnn);
        if self.flags.use_linear_terms {
            self.fefm.accumulate_linear(inst, upstream, &mut grad.shallow);
        }
        let n_pairs = self.fefm.pair_index().len();
        let (d_scores, d_embed) = if self.flags.dnn_input_fefm_embeddings {
            d_input.split_at(n_pairs)
        } else {
            d_input.split_at(0)
        };
        if self.flags.use_fefm_logit || self.flags.dnn_input_fefm_embeddings {
            let base = if self.flags.use_fefm_logit { upstream } else { 0.0 };
            let coeffs: Vec<f64> = (0..n_pairs)
                .map(|p| base + d_scores.get(p).copied().unwrap_or(0.0))
                .collect();
            self.fefm.accumulate_fefm_pairs(inst, &coeffs, &mut grad.shallow);
        }
        if self.flags.dnn_input_feature_embeddings {
            let k = self.fefm.dim();
            for (&id, chunk) in inst.active.iter().zip(d_embed.chunks_exact(k)) {
                axpy(1.0, chunk, grad.shallow.d_v.row_mut(id as usize));
            }
        }
        Ok(())
    }

    /// Blocks in storage order: the FEFM blocks, then per layer weight and
    /// bias, then the logit head.
    pub fn blocks(&self) -> Vec<ParamBlock<'_>> {
        let mut out = self.fefm.blocks();
        for layer in &self.dnn.layers {
            out.push(ParamBlock {
                name: "dnn_weight",
                group: ParamGroup::DnnWeight,
                values: &layer.weight,
            });
            out.push(ParamBlock {
                name: "dnn_bias",
                group: ParamGroup::DnnBias,
                values: &layer.bias,
            });
        }
        out.push(ParamBlock {
            name: "w_logit",
            group: ParamGroup::DnnWeight,
            values: &self.dnn.w_logit,
        });
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<ParamBlockMut<'_>> {
        let mut out = self.fefm.blocks_mut();
        for layer in &mut self.dnn.layers {
            out.push(ParamBlockMut {
                name: "dnn_weight",
                group: ParamGroup::DnnWeight,
                values: &mut layer.weight,
            });
            out.push(ParamBlockMut {
                name: "dnn_bias",
                group: ParamGroup::DnnBias,
                values: &mut layer.bias,
            });
        }
        out.push(ParamBlockMut {
            name: "w_logit",
            group: ParamGroup::DnnWeight,
            values: &mut self.dnn.w_logit,
        });
        out
    }

    pub fn n_params(&self) -> usize {
        self.fefm.n_params() + self.dnn.n_params()
    }
}

/// Concatenates the enabled input blocks.
pub fn build_dnn_input(fefm_scores: &[f64], embeddings: &[&[f64]], flags: AblationFlags) -> Result<Vec<f64>> {
    flags.validate()?;
    let mut input = Vec::new();
    if flags.dnn_input_fefm_embeddings {
        input.extend_from_slice(fefm_scores);
    }
    if flags.dnn_input_feature_embeddings {
        for e in embeddings {
            input.extend_from_slice(e);
        }
    }
    Ok(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn input_width_per_ablation() {
        let scores = [0.1, 0.2, 0.3];
        let e = [1.0, 2.0];
        let embeddings: Vec<&[f64]> = vec![&e, &e, &e];
        let width = |flags| build_dnn_input(&scores, &embeddings, flags).unwrap().len();
        assert_eq!(width(AblationFlags::default()), 9);
        assert_eq!(width(AblationFlags::ablation3()), 3);
        assert_eq!(width(AblationFlags::ablation4()), 6);
        let none = AblationFlags {
            dnn_input_feature_embeddings: false,
            dnn_input_fefm_embeddings: false,
            ..AblationFlags::default()
        };
        assert!(build_dnn_input(&scores, &embeddings, none).is_err());
        assert_eq!(AblationFlags::default().input_width(22, 0), 231);
    }

    #[test]
    fn single_unit_by_hand() {
        let dnn = DnnParams {
            layers: vec![DenseLayer {
                n_in: 1,
                n_out: 1,
                weight: vec![2.0],
                bias: vec![1.0],
            }],
            w_logit: vec![1.0],
            dropout: 0.2,
        };
        assert_eq!(dnn_forward(&dnn, &[3.0], Mode::Eval).unwrap().0, 7.0);
        assert!(dnn_forward(&dnn, &[3.0, 1.0], Mode::Eval).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let dnn = DnnParams::zeros(4, &[3, 2], 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(dnn_forward(&dnn, &[1.0, -2.0, 3.0, 0.5], Mode::Eval).unwrap().0, 0.0);
        assert_eq!(
            dnn_forward(&dnn, &[1.0, -2.0, 3.0, 0.5], Mode::Train(&mut rng))
                .unwrap()
                .0,
            0.0
        );
    }

    #[test]
    fn zero_dropout_training_equals_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dnn = DnnParams::random(5, &[8, 8], 0.0, &mut rng).unwrap();
        let x = [0.3, -1.0, 2.0, 0.0, 0.7];
        let eval = dnn_forward(&dnn, &x, Mode::Eval).unwrap().0;
        let train = dnn_forward(&dnn, &x, Mode::Train(&mut rng)).unwrap().0;
        assert_eq!(eval.to_bits(), train.to_bits());
    }

    #[test]
    fn dropout_rescales_kept_units() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dnn = DnnParams::random(3, &[64], 0.5, &mut rng).unwrap();
        let (_, cache) = dnn_forward(&dnn, &[1.0, 1.0, 1.0], Mode::Train(&mut rng)).unwrap();
        let mask = &cache.masks[0];
        assert!(mask.iter().all(|&m| m == 0.0 || m == 2.0));
        assert!(mask.contains(&0.0) && mask.contains(&2.0));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = DeepFefmParams::random(6, 2, 2, &[4], 0.0, AblationFlags::default(), 0.1, &mut rng).unwrap();
        let a = Instance::new(Label::Positive, vec![0, 3]);
        let b = Instance::new(Label::Positive, vec![1, 3]);
        let (_, cache) = p.forward(&a, Mode::Eval).unwrap();
        assert!(p.gradient(&b, 1.0, &cache).is_err());
        assert!(p.gradient(&a, 1.0, &cache).is_ok());
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = DeepFefmParams::random(6, 3, 2, &[4, 4], 0.0, AblationFlags::default(), 0.1, &mut rng).unwrap();
        let x = Instance::new(Label::Negative, vec![0, 2, 5]);
        let (_, cache) = p.forward(&x, Mode::Eval).unwrap();
        let g = p.gradient(&x, 0.0, &cache).unwrap();
        for block in g.block_grads() {
            match block {
                BlockGrad::Scalar(s) => assert_eq!(s, 0.0),
                BlockGrad::Rows(r) => assert!(r.iter().all(|(_, row)| row.iter().all(|&x| x == 0.0))),
                BlockGrad::Dense(d) => assert!(d.iter().all(|&x| x == 0.0)),
                BlockGrad::Untouched => {}
            }
        }
    }

    #[test]
    fn flag_bits_round_trip() {
        for bits in 0..16u8 {
            assert_eq!(AblationFlags::from_bits(bits).to_bits(), bits);
        }
    }
}
