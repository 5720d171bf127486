//! One type over the five shallow models and DeepFEFM.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Instance;
use crate::deep::{AblationFlags, DeepCache, DeepFefmParams, DeepGradient, Mode, DEFAULT_DROPOUT, DEFAULT_HIDDEN};
use crate::error::{Error, Result};
use crate::shallow::{
    param_count, BlockGrad, ModelKind, ParamBlock, ParamBlockMut, ShallowParams, SparseGradient, DEFAULT_INIT_STD,
};

/// Model architecture as named on the command line and in files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Lr,
    Fm,
    Ffm,
    Fwfm,
    Fefm,
    Deepfefm,
}

impl Architecture {
    pub const ALL: [Architecture; 6] = [
        Architecture::Lr,
        Architecture::Fm,
        Architecture::Ffm,
        Architecture::Fwfm,
        Architecture::Fefm,
        Architecture::Deepfefm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Deepfefm => "deepfefm",
            other => other.shallow_kind().name(),
        }
    }

    /// The shallow kind, or FEFM for DeepFEFM.
    pub fn shallow_kind(self) -> ModelKind {
        match self {
            Architecture::Lr => ModelKind::Lr,
            Architecture::Fm => ModelKind::Fm,
            Architecture::Ffm => ModelKind::Ffm,
            Architecture::Fwfm => ModelKind::Fwfm,
            Architecture::Fefm | Architecture::Deepfefm => ModelKind::Fefm,
        }
    }

    pub(crate) fn code(self) -> u8 {
        Architecture::ALL.iter().position(|&a| a == self).unwrap() as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Architecture::ALL.get(code as usize).copied()
    }
}

impl From<ModelKind> for Architecture {
    fn from(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lr => Architecture::Lr,
            ModelKind::Fm => Architecture::Fm,
            ModelKind::Ffm => Architecture::Ffm,
            ModelKind::Fwfm => Architecture::Fwfm,
            ModelKind::Fefm => Architecture::Fefm,
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown model `{s}` (expected one of lr, fm, ffm, fwfm, fefm, deepfefm)"
                ))
            })
    }
}

/// Everything needed to build a fresh model besides the data shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub k: usize,
    pub symmetric: bool,
    pub init_std: f64,
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub flags: AblationFlags,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            architecture: Architecture::Fefm,
            k: 16,
            symmetric: true,
            init_std: DEFAULT_INIT_STD,
            hidden: DEFAULT_HIDDEN.to_vec(),
            dropout: DEFAULT_DROPOUT,
            flags: AblationFlags::default(),
        }
    }
}

impl ModelSpec {
    pub fn new(architecture: Architecture, k: usize) -> Self {
        ModelSpec {
            architecture,
            k,
            ..Self::default()
        }
    }

    /// Exact parameter count for `m` features and `n` fields.
    pub fn param_count(&self, m: u64, n: u64) -> u64 {
        let base = param_count(self.architecture.shallow_kind(), m, n, self.k as u64);
        if self.architecture != Architecture::Deepfefm {
            return base;
        }
        let mut width = self.flags.input_width(n as usize, self.k) as u64;
        let mut dnn = 0;
        for &h in &self.hidden {
            dnn += width * h as u64 + h as u64;
            width = h as u64;
        }
        base + dnn + width
    }

    pub fn build<R: Rng + ?Sized>(&self, m: usize, n: usize, rng: &mut R) -> Result<Model> {
        let model = match self.architecture {
            Architecture::Deepfefm => {
                let mut p =
                    DeepFefmParams::random(m, n, self.k, &self.hidden, self.dropout, self.flags, self.init_std, rng)?;
                p.fefm.symmetric = self.symmetric;
                Model::Deep(p)
            }
            arch => {
                let mut p = ShallowParams::random(arch.shallow_kind(), m, n, self.k, self.init_std, rng)?;
                p.symmetric = self.symmetric;
                Model::Shallow(p)
            }
        };
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Shallow(ShallowParams),
    Deep(DeepFefmParams),
}

/// Forward state kept for the gradient of one instance.
#[derive(Clone, Debug)]
pub enum ForwardCache {
    Shallow,
    Deep(DeepCache),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelGradient {
    Shallow(SparseGradient, ModelKind),
    Deep(DeepGradient),
}

impl ModelGradient {
    pub fn zeros_like(model: &Model) -> Self {
        match model {
            Model::Shallow(p) => ModelGradient::Shallow(SparseGradient::new(p.dim()), p.kind()),
            Model::Deep(p) => ModelGradient::Deep(DeepGradient::zeros_like(p)),
        }
    }

    pub fn merge(&mut self, other: &ModelGradient) {
        match (self, other) {
            (ModelGradient::Shallow(a, _), ModelGradient::Shallow(b, _)) => a.merge(b),
            (ModelGradient::Deep(a), ModelGradient::Deep(b)) => a.merge(b),
            _ => panic!("merging gradients of different architectures"),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        match self {
            ModelGradient::Shallow(g, _) => g.scale(factor),
            ModelGradient::Deep(g) => g.scale(factor),
        }
    }

    /// Per-block views aligned with [`Model::blocks`].
    pub fn block_grads(&self) -> Vec<BlockGrad<'_>> {
        match self {
            ModelGradient::Shallow(g, kind) => g.block_grads(*kind),
            ModelGradient::Deep(g) => g.block_grads(),
        }
    }
}

impl Model {
    pub fn architecture(&self) -> Architecture {
        match self {
            Model::Shallow(p) => p.kind().into(),
            Model::Deep(_) => Architecture::Deepfefm,
        }
    }

    pub fn shallow(&self) -> &ShallowParams {
        match self {
            Model::Shallow(p) => p,
            Model::Deep(p) => &p.fefm,
        }
    }

    pub fn n_fields(&self) -> usize {
        self.shallow().n_fields()
    }

    pub fn n_features(&self) -> usize {
        self.shallow().n_features()
    }

    pub fn dim(&self) -> usize {
        self.shallow().dim()
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Shallow(p) => p.validate(),
            Model::Deep(p) => p.validate(),
        }
    }

    /// Evaluation-mode logit.
    pub fn logit(&self, inst: &Instance) -> Result<f64> {
        match self {
            Model::Shallow(p) => p.logit(inst),
            Model::Deep(p) => p.logit(inst),
        }
    }

    /// Click probability `σ(φ)`.
    pub fn predict(&self, inst: &Instance) -> Result<f64> {
        Ok(crate::train::sigmoid(self.logit(inst)?))
    }

    pub fn forward(&self, inst: &Instance, mode: Mode<'_>) -> Result<(f64, ForwardCache)> {
        match self {
            Model::Shallow(p) => Ok((p.logit(inst)?, ForwardCache::Shallow)),
            Model::Deep(p) => {
                let (phi, cache) = p.forward(inst, mode)?;
                Ok((phi, ForwardCache::Deep(cache)))
            }
        }
    }

    /// Adds the gradient of `upstream · φ` into `grad`.
    pub fn accumulate_gradient(
        &self,
        inst: &Instance,
        upstream: f64,
        cache: &ForwardCache,
        grad: &mut ModelGradient,
    ) -> Result<()> {
        match (self, cache, grad) {
            (Model::Shallow(p), ForwardCache::Shallow, ModelGradient::Shallow(g, _)) => {
                p.accumulate_gradient(inst, upstream, g);
                Ok(())
            }
            (Model::Deep(p), ForwardCache::Deep(c), ModelGradient::Deep(g)) => {
                p.accumulate_gradient(inst, upstream, c, g)
            }
            _ => Err(Error::KindMismatch {
                expected: self.architecture().to_string(),
                found: "cache or gradient of another architecture".into(),
            }),
        }
    }

    /// Gradient of the eval-mode logit times `upstream`.
    pub fn gradient(&self, inst: &Instance, upstream: f64) -> Result<ModelGradient> {
        let (_, cache) = self.forward(inst, Mode::Eval)?;
        let mut grad = ModelGradient::zeros_like(self);
        self.accumulate_gradient(inst, upstream, &cache, &mut grad)?;
        Ok(grad)
    }

    pub fn blocks(&self) -> Vec<ParamBlock<'_>> {
        match self {
            Model::Shallow(p) => p.blocks(),
            Model::Deep(p) => p.blocks(),
        }
    }

    pub fn blocks_mut(&mut self) -> Vec<ParamBlockMut<'_>> {
        match self {
            Model::Shallow(p) => p.blocks_mut(),
            Model::Deep(p) => p.blocks_mut(),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Model::Shallow(p) => p.n_params(),
            Model::Deep(p) => p.n_params(),
        }
    }

    /// Whether dropout makes training-mode forward passes random.
    pub(crate) fn uses_dropout(&self) -> bool {
        matches!(self, Model::Deep(p) if p.dnn.dropout > 0.0)
    }
}

impl From<ShallowParams> for Model {
    fn from(p: ShallowParams) -> Self {
        Model::Shallow(p)
    }
}

impl From<DeepFefmParams> for Model {
    fn from(p: DeepFefmParams) -> Self {
        Model::Deep(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn architecture_names_round_trip() {
        for a in Architecture::ALL {
            assert_eq!(a.name().parse::<Architecture>().unwrap(), a);
            assert_eq!(Architecture::from_code(a.code()), Some(a));
        }
        assert!("deepfm".parse::<Architecture>().is_err());
    }

    #[test]
    fn spec_count_matches_storage() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for arch in Architecture::ALL {
            let spec = ModelSpec {
                hidden: vec![5, 3],
                ..ModelSpec::new(arch, 3)
            };
            let model = spec.build(17, 4, &mut rng).unwrap();
            assert_eq!(model.n_params() as u64, spec.param_count(17, 4), "{arch}");
            assert_eq!(model.architecture(), arch);
        }
    }
}
