//! LR, FM, FFM, FwFM and FEFM: parameters, logits and analytic gradients.
//!
//! Every model shares a bias `w0` and linear weights `w`. The variants
//! differ in how the active features of two fields `f < g` interact:
//!
//! | kind | interaction of features `i ∈ f`, `j ∈ g` |
//! |------|-------------------------------------------|
//! | FM   | `v_i · v_j` |
//! | FFM  | `v_{i,g} · v_{j,f}` |
//! | FwFM | `r_{fg} · (v_i · v_j)` |
//! | FEFM | `v_iᵀ W_{fg} v_j` with `W_{fg} = U_{fg} + U_{fgᵀ}` |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Instance;
use crate::error::{Error, Result};
use crate::linalg::{add_outer, axpy, bilinear, dot, matvec};
use crate::pairs::FieldPairIndex;

/// Standard deviation of the normal draw used for embeddings and pair matrices.
pub const DEFAULT_INIT_STD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Fm,
    Ffm,
    Fwfm,
    Fefm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Lr,
        ModelKind::Fm,
        ModelKind::Ffm,
        ModelKind::Fwfm,
        ModelKind::Fefm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Fm => "fm",
            ModelKind::Ffm => "ffm",
            ModelKind::Fwfm => "fwfm",
            ModelKind::Fefm => "fefm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown model kind {s:?}")))
    }
}

/// Exact parameter count of a shallow model over `m` features, `n` fields
/// and embedding dimension `k`.
pub fn param_count(kind: ModelKind, m: u64, n: u64, k: u64) -> u64 {
    let pairs = n * n.saturating_sub(1) / 2;
    match kind {
        ModelKind::Lr => m + 1,
        ModelKind::Fm => m + m * k + 1,
        ModelKind::Ffm => m + m * n.saturating_sub(1) * k + 1,
        ModelKind::Fwfm => m + m * k + pairs + 1,
        ModelKind::Fefm => m + m * k + pairs * k * k + 1,
    }
}

/// Which L2 strength a parameter block is regularized with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    /// `w0` and `w`.
    Linear,
    /// Feature embeddings `v`, and FFM's field-specific `v_{i,F}`.
    Embedding,
    /// FwFM's `r` and FEFM's `U`.
    FieldPair,
    /// DNN weight matrices and the logit head.
    DnnWeight,
    /// DNN hidden-layer biases (never regularized).
    DnnBias,
}

/// A named, contiguous slice of model parameters.
#[derive(Debug)]
pub struct ParamBlock<'a> {
    pub name: &'static str,
    pub group: ParamGroup,
    pub values: &'a [f64],
}

#[derive(Debug)]
pub struct ParamBlockMut<'a> {
    pub name: &'static str,
    pub group: ParamGroup,
    pub values: &'a mut [f64],
}

/// Gradient rows keyed by row index; each row holds `row_len` entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseRows {
    row_len: usize,
    rows: BTreeMap<usize, Vec<f64>>,
}

impl SparseRows {
    pub fn new(row_len: usize) -> Self {
        SparseRows {
            row_len,
            rows: BTreeMap::new(),
        }
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, row: usize) -> Option<&[f64]> {
        self.rows.get(&row).map(Vec::as_slice)
    }

    /// Row `row`, inserted as zeros if absent.
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        let len = self.row_len;
        self.rows.entry(row).or_insert_with(|| vec![0.0; len])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.rows.iter().map(|(&r, v)| (r, v.as_slice()))
    }

    pub fn merge(&mut self, other: &SparseRows) {
        for (row, values) in other.iter() {
            axpy(1.0, values, self.row_mut(row));
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for row in self.rows.values_mut() {
            row.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn clear(&mut self) {
        self.rows.clear();
    }
}

/// Gradient of a shallow model restricted to the parameters an instance
/// (or batch) touches.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGradient {
    pub d_w0: f64,
    /// Whether `w0` and `w` took part in the computation.
    pub linear_touched: bool,
    pub d_w: SparseRows,
    pub d_v: SparseRows,
    /// Rows indexed `feature · (n−1) + slot`.
    pub d_v_ffm: SparseRows,
    pub d_r: SparseRows,
    pub d_u: SparseRows,
}

impl SparseGradient {
    pub fn new(k: usize) -> Self {
        SparseGradient {
            d_w0: 0.0,
            linear_touched: false,
            d_w: SparseRows::new(1),
            d_v: SparseRows::new(k),
            d_v_ffm: SparseRows::new(k),
            d_r: SparseRows::new(1),
            d_u: SparseRows::new(k * k),
        }
    }

    pub fn merge(&mut self, other: &SparseGradient) {
        self.d_w0 += other.d_w0;
        self.linear_touched |= other.linear_touched;
        self.d_w.merge(&other.d_w);
        self.d_v.merge(&other.d_v);
        self.d_v_ffm.merge(&other.d_v_ffm);
        self.d_r.merge(&other.d_r);
        self.d_u.merge(&other.d_u);
    }

    pub fn scale(&mut self, factor: f64) {
        self.d_w0 *= factor;
        self.d_w.scale(factor);
        self.d_v.scale(factor);
        self.d_v_ffm.scale(factor);
        self.d_r.scale(factor);
        self.d_u.scale(factor);
    }

    /// Per-block views aligned with [`ShallowParams::blocks`].
    pub fn block_grads(&self, kind: ModelKind) -> Vec<BlockGrad<'_>> {
        let w0 = if self.linear_touched {
            BlockGrad::Scalar(self.d_w0)
        } else {
            BlockGrad::Untouched
        };
        let mut out = vec![w0, BlockGrad::Rows(&self.d_w)];
        match kind {
            ModelKind::Lr => {}
            ModelKind::Fm => out.push(BlockGrad::Rows(&self.d_v)),
            ModelKind::Ffm => out.push(BlockGrad::Rows(&self.d_v_ffm)),
            ModelKind::Fwfm => {
                out.push(BlockGrad::Rows(&self.d_v));
                out.push(BlockGrad::Rows(&self.d_r));
            }
            ModelKind::Fefm => {
                out.push(BlockGrad::Rows(&self.d_v));
                out.push(BlockGrad::Rows(&self.d_u));
            }
        }
        out
    }
}

/// Gradient of one parameter block.
#[derive(Clone, Copy, Debug)]
pub enum BlockGrad<'a> {
    Untouched,
    Scalar(f64),
    Rows(&'a SparseRows),
    Dense(&'a [f64]),
}

/// Parameters of a shallow model. Unused blocks are empty.
#[derive(Clone, Debug, PartialEq)]
pub struct ShallowParams {
    kind: ModelKind,
    m: usize,
    n: usize,
    k: usize,
    pairs: FieldPairIndex,
    pub w0: f64,
    pub w: Vec<f64>,
    /// `m × k` feature embeddings (FM, FwFM, FEFM).
    pub v: Vec<f64>,
    /// `m × (n−1) × k` field-specific embeddings (FFM). Slot `s` of feature
    /// `i` in field `F(i)` serves field `s` if `s < F(i)`, else field `s + 1`.
    pub v_ffm: Vec<f64>,
    /// `n(n−1)/2` field-pair scalars (FwFM).
    pub r: Vec<f64>,
    /// `n(n−1)/2` row-major `k × k` matrices (FEFM).
    pub u: Vec<f64>,
    /// FEFM only: use `U + Uᵀ` (on) or `U` (off) as the pair matrix.
    pub symmetric: bool,
}

impl ShallowParams {
    /// All-zero parameters. FwFM's `r` starts at zero too.
    pub fn zeros(kind: ModelKind, m: usize, n: usize, k: usize) -> Self {
        let pairs = FieldPairIndex::new(n);
        let k = if kind == ModelKind::Lr { 0 } else { k };
        let (v, v_ffm, r, u) = match kind {
            ModelKind::Lr => (0, 0, 0, 0),
            ModelKind::Fm => (m * k, 0, 0, 0),
            ModelKind::Ffm => (0, m * n.saturating_sub(1) * k, 0, 0),
            ModelKind::Fwfm => (m * k, 0, pairs.len(), 0),
            ModelKind::Fefm => (m * k, 0, 0, pairs.len() * k * k),
        };
        ShallowParams {
            kind,
            m,
            n,
            k,
            pairs,
            w0: 0.0,
            w: vec![0.0; m],
            v: vec![0.0; v],
            v_ffm: vec![0.0; v_ffm],
            r: vec![0.0; r],
            u: vec![0.0; u],
            symmetric: true,
        }
    }

    /// Random start: embeddings and pair matrices from `N(0, init_std²)`,
    /// linear weights at zero and FwFM pair scalars at one.
    pub fn random<R: Rng + ?Sized>(
        kind: ModelKind,
        m: usize,
        n: usize,
        k: usize,
        init_std: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if m == 0 || n == 0 || (kind != ModelKind::Lr && k == 0) {
            return Err(Error::Config(format!(
                "need m, n, k ≥ 1 (got m = {m}, n = {n}, k = {k})"
            )));
        }
        let normal = Normal::new(0.0, init_std).map_err(|e| Error::Config(format!("bad init_std {init_std}: {e}")))?;
        let mut p = ShallowParams::zeros(kind, m, n, k);
        for x in p.v.iter_mut().chain(p.v_ffm.iter_mut()).chain(p.u.iter_mut()) {
            *x = normal.sample(rng);
        }
        p.r.fill(1.0);
        Ok(p)
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn n_features(&self) -> usize {
        self.m
    }

    pub fn n_fields(&self) -> usize {
        self.n
    }

    /// Embedding dimension (0 for LR).
    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn pair_index(&self) -> FieldPairIndex {
        self.pairs
    }

    pub fn embedding(&self, feature: u32) -> &[f64] {
        let i = feature as usize * self.k;
        &self.v[i..i + self.k]
    }

    fn ffm_row(&self, feature: u32, own_field: usize, other_field: usize) -> usize {
        let slot = if other_field < own_field {
            other_field
        } else {
            other_field - 1
        };
        feature as usize * (self.n - 1) + slot
    }

    fn ffm_embedding(&self, row: usize) -> &[f64] {
        &self.v_ffm[row * self.k..(row + 1) * self.k]
    }

    /// Stored `U_p` (not the effective matrix).
    pub fn pair_u(&self, p: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.u[p * kk..(p + 1) * kk]
    }

    pub fn pair_u_mut(&mut self, p: usize) -> &mut [f64] {
        let kk = self.k * self.k;
        &mut self.u[p * kk..(p + 1) * kk]
    }

    fn require_kind(&self, kind: ModelKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind.to_string(),
                found: self.kind.to_string(),
            });
        }
        Ok(())
    }

    /// The matrix mediating pair `p`: `U_p + U_pᵀ` in symmetric mode, `U_p` otherwise.
    pub fn effective_pair_matrix(&self, p: usize) -> Result<Vec<f64>> {
        self.require_kind(ModelKind::Fefm)?;
        if p >= self.pairs.len() {
            return Err(Error::Dimension(format!(
                "pair index {p} out of range ({} pairs)",
                self.pairs.len()
            )));
        }
        let mut out = vec![0.0; self.k * self.k];
        self.write_pair_matrix(p, &mut out);
        Ok(out)
    }

    fn write_pair_matrix(&self, p: usize, out: &mut [f64]) {
        let k = self.k;
        let u = self.pair_u(p);
        if self.symmetric {
            for a in 0..k {
                for b in 0..k {
                    out[a * k + b] = u[a * k + b] + u[b * k + a];
                }
            }
        } else {
            out.copy_from_slice(u);
        }
    }

    /// Checks that block sizes match `(kind, m, n, k)`.
    pub fn validate(&self) -> Result<()> {
        let expected = ShallowParams::zeros(self.kind, self.m, self.n, self.k);
        let sizes = |p: &ShallowParams| [p.w.len(), p.v.len(), p.v_ffm.len(), p.r.len(), p.u.len()];
        if sizes(self) != sizes(&expected) {
            return Err(Error::Dimension(format!(
                "{} parameters do not match m = {}, n = {}, k = {}",
                self.kind, self.m, self.n, self.k
            )));
        }
        Ok(())
    }

    fn check(&self, inst: &Instance) -> Result<()> {
        self.validate()?;
        crate::data::dataset_check(inst, self.n, self.m)
    }

    /// `w0 + Σ w_i` over the active features.
    pub fn linear_term(&self, inst: &Instance) -> f64 {
        self.w0 + inst.active.iter().map(|&i| self.w[i as usize]).sum::<f64>()
    }

    /// Logit `φ` for one instance.
    pub fn logit(&self, inst: &Instance) -> Result<f64> {
        self.check(inst)?;
        Ok(self.linear_term(inst) + self.interaction_term(inst))
    }

    /// Sum of the pairwise interactions over the `n(n−1)/2` active pairs.
    pub fn interaction_term(&self, inst: &Instance) -> f64 {
        let a = &inst.active;
        match self.kind {
            ModelKind::Lr => 0.0,
            ModelKind::Fm => self
                .pairs
                .iter()
                .map(|(_, f, g)| dot(self.embedding(a[f]), self.embedding(a[g])))
                .sum(),
            ModelKind::Fwfm => self
                .pairs
                .iter()
                .map(|(p, f, g)| self.r[p] * dot(self.embedding(a[f]), self.embedding(a[g])))
                .sum(),
            ModelKind::Ffm => self
                .pairs
                .iter()
                .map(|(_, f, g)| {
                    let vi = self.ffm_embedding(self.ffm_row(a[f], f, g));
                    let vj = self.ffm_embedding(self.ffm_row(a[g], g, f));
                    dot(vi, vj)
                })
                .sum(),
            ModelKind::Fefm => self.fefm_scores_unchecked(inst).iter().sum(),
        }
    }

    /// The FEFM interaction vector: entry `p({f, g})` is `v_iᵀ W_{fg} v_j`
    /// for the active features `i` of `f` and `j` of `g`.
    pub fn fefm_interaction_vector(&self, inst: &Instance) -> Result<Vec<f64>> {
        self.require_kind(ModelKind::Fefm)?;
        self.check(inst)?;
        Ok(self.fefm_scores_unchecked(inst))
    }

    pub(crate) fn fefm_scores_unchecked(&self, inst: &Instance) -> Vec<f64> {
        let a = &inst.active;
        self.pairs
            .iter()
            .map(|(p, f, g)| {
                let (vi, vj, u) = (self.embedding(a[f]), self.embedding(a[g]), self.pair_u(p));
                if self.symmetric {
                    bilinear(vi, u, vj) + bilinear(vj, u, vi)
                } else {
                    bilinear(vi, u, vj)
                }
            })
            .collect()
    }

    /// Gradient of `upstream · φ` for one instance.
    pub fn gradient(&self, inst: &Instance, upstream: f64) -> Result<SparseGradient> {
        self.check(inst)?;
        let mut grad = SparseGradient::new(self.k);
        self.accumulate_gradient(inst, upstream, &mut grad);
        Ok(grad)
    }

    /// Adds the gradient of `upstream · φ` into `grad`. The instance must
    /// already be validated.
    pub(crate) fn accumulate_gradient(&self, inst: &Instance, c: f64, grad: &mut SparseGradient) {
        self.accumulate_linear(inst, c, grad);
        let a = &inst.active;
        let k = self.k;
        match self.kind {
            ModelKind::Lr => {}
            ModelKind::Fm | ModelKind::Fwfm => {
                let mut dv = vec![0.0; self.n * k];
                for (p, f, g) in self.pairs.iter() {
                    let (vi, vj) = (self.embedding(a[f]), self.embedding(a[g]));
                    let r = if self.kind == ModelKind::Fwfm {
                        grad.d_r.row_mut(p)[0] += c * dot(vi, vj);
                        self.r[p]
                    } else {
                        1.0
                    };
                    axpy(c * r, vj, &mut dv[f * k..(f + 1) * k]);
                    axpy(c * r, vi, &mut dv[g * k..(g + 1) * k]);
                }
                flush_rows(a, &dv, &mut grad.d_v);
            }
            ModelKind::Ffm => {
                for (_, f, g) in self.pairs.iter() {
                    let (ri, rj) = (self.ffm_row(a[f], f, g), self.ffm_row(a[g], g, f));
                    let (vi, vj) = (self.ffm_embedding(ri), self.ffm_embedding(rj));
                    axpy(c, vj, grad.d_v_ffm.row_mut(ri));
                    axpy(c, vi, grad.d_v_ffm.row_mut(rj));
                }
            }
            ModelKind::Fefm => {
                let coeffs = vec![c; self.pairs.len()];
                self.accumulate_fefm_pairs(inst, &coeffs, grad);
            }
        }
    }

    pub(crate) fn accumulate_linear(&self, inst: &Instance, c: f64, grad: &mut SparseGradient) {
        grad.linear_touched = true;
        grad.d_w0 += c;
        for &i in &inst.active {
            grad.d_w.row_mut(i as usize)[0] += c;
        }
    }

    /// Adds `Σ_p coeffs[p] · ∂(v_iᵀ W_p v_j)` into `grad`.
    pub(crate) fn accumulate_fefm_pairs(&self, inst: &Instance, coeffs: &[f64], grad: &mut SparseGradient) {
        let a = &inst.active;
        let k = self.k;
        let mut dv = vec![0.0; self.n * k];
        let mut w = vec![0.0; k * k];
        let mut wx = vec![0.0; k];
        for (p, f, g) in self.pairs.iter() {
            let c = coeffs[p];
            let (vi, vj) = (self.embedding(a[f]), self.embedding(a[g]));
            self.write_pair_matrix(p, &mut w);
            // ∂/∂v_i = W v_j, ∂/∂v_j = Wᵀ v_i
            matvec(&w, vj, &mut wx);
            axpy(c, &wx, &mut dv[f * k..(f + 1) * k]);
            crate::linalg::matvec_t(&w, vi, &mut wx);
            axpy(c, &wx, &mut dv[g * k..(g + 1) * k]);
            let du = grad.d_u.row_mut(p);
            add_outer(c, vi, vj, du);
            if self.symmetric {
                add_outer(c, vj, vi, du);
            }
        }
        flush_rows(a, &dv, &mut grad.d_v);
    }

    /// Parameter blocks in storage order: `w0`, `w`, then the
    /// kind-specific blocks.
    pub fn blocks(&self) -> Vec<ParamBlock<'_>> {
        let mut out = vec![
            ParamBlock {
                name: "w0",
                group: ParamGroup::Linear,
                values: std::slice::from_ref(&self.w0),
            },
            ParamBlock {
                name: "w",
                group: ParamGroup::Linear,
                values: &self.w,
            },
        ];
        let v = ParamBlock {
            name: "v",
            group: ParamGroup::Embedding,
            values: &self.v,
        };
        match self.kind {
            ModelKind::Lr => {}
            ModelKind::Fm => out.push(v),
            ModelKind::Ffm => out.push(ParamBlock {
                name: "v_ffm",
                group: ParamGroup::Embedding,
                values: &self.v_ffm,
            }),
            ModelKind::Fwfm => {
                out.push(v);
                out.push(ParamBlock {
                    name: "r",
                    group: ParamGroup::FieldPair,
                    values: &self.r,
                });
            }
            ModelKind::Fefm => {
                out.push(v);
                out.push(ParamBlock {
                    name: "u",
                    group: ParamGroup::FieldPair,
                    values: &self.u,
                });
            }
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<ParamBlockMut<'_>> {
        let kind = self.kind;
        let mut out = vec![
            ParamBlockMut {
                name: "w0",
                group: ParamGroup::Linear,
                values: std::slice::from_mut(&mut self.w0),
            },
            ParamBlockMut {
                name: "w",
                group: ParamGroup::Linear,
                values: &mut self.w,
            },
        ];
        let v = ParamBlockMut {
            name: "v",
            group: ParamGroup::Embedding,
            values: &mut self.v,
        };
        match kind {
            ModelKind::Lr => {}
            ModelKind::Fm => out.push(v),
            ModelKind::Ffm => out.push(ParamBlockMut {
                name: "v_ffm",
                group: ParamGroup::Embedding,
                values: &mut self.v_ffm,
            }),
            ModelKind::Fwfm => {
                out.push(v);
                out.push(ParamBlockMut {
                    name: "r",
                    group: ParamGroup::FieldPair,
                    values: &mut self.r,
                });
            }
            ModelKind::Fefm => {
                out.push(v);
                out.push(ParamBlockMut {
                    name: "u",
                    group: ParamGroup::FieldPair,
                    values: &mut self.u,
                });
            }
        }
        out
    }

    /// Number of stored parameters, counted block by block.
    pub fn n_params(&self) -> usize {
        self.blocks().iter().map(|b| b.values.len()).sum()
    }
}

/// Adds per-field rows of `dv` (field-major, `k` wide) to the rows of the
/// active features.
fn flush_rows(active: &[u32], dv: &[f64], rows: &mut SparseRows) {
    let k = rows.row_len();
    if k == 0 {
        return;
    }
    for (&id, chunk) in active.iter().zip(dv.chunks_exact(k)) {
        axpy(1.0, chunk, rows.row_mut(id as usize));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(active: Vec<u32>) -> Instance {
        Instance::new(Label::Positive, active)
    }

    #[test]
    fn effective_matrix_modes() {
        let mut p = ShallowParams::zeros(ModelKind::Fefm, 4, 2, 2);
        p.u.copy_from_slice(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.effective_pair_matrix(0).unwrap(), vec![0.0, 1.0, 1.0, 0.0]);
        p.symmetric = false;
        assert_eq!(p.effective_pair_matrix(0).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        p.u.fill(0.0);
        assert_eq!(p.effective_pair_matrix(0).unwrap(), vec![0.0; 4]);
        p.symmetric = true;
        assert_eq!(p.effective_pair_matrix(0).unwrap(), vec![0.0; 4]);
        assert!(p.effective_pair_matrix(1).is_err());
        let fm = ShallowParams::zeros(ModelKind::Fm, 4, 2, 2);
        assert!(matches!(fm.effective_pair_matrix(0), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn lr_bias_only() {
        let mut p = ShallowParams::zeros(ModelKind::Lr, 5, 2, 3);
        p.w0 = 0.5;
        assert_eq!(p.logit(&inst(vec![1, 3])).unwrap(), 0.5);
    }

    #[test]
    fn fm_three_pairs_by_hand() {
        let mut p = ShallowParams::zeros(ModelKind::Fm, 3, 3, 2);
        p.v.copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        // (1,0)·(0,1) + (1,0)·(1,1) + (0,1)·(1,1) = 0 + 1 + 1
        assert_eq!(p.logit(&inst(vec![0, 1, 2])).unwrap(), 2.0);
    }

    #[test]
    fn ffm_uses_the_other_fields_slot() {
        // n = 3, k = 1: feature 0 in field 0 has slots for fields 1 and 2.
        let mut p = ShallowParams::zeros(ModelKind::Ffm, 3, 3, 1);
        // feature 0: [for f1, for f2]; feature 1: [for f0, for f2]; feature 2: [for f0, for f1]
        p.v_ffm.copy_from_slice(&[2.0, 3.0, 5.0, 7.0, 11.0, 13.0]);
        // {0,1}: 2·5, {0,2}: 3·11, {1,2}: 7·13
        assert_eq!(p.logit(&inst(vec![0, 1, 2])).unwrap(), 10.0 + 33.0 + 91.0);
    }

    #[test]
    fn zero_embeddings_give_linear_gradients_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in ModelKind::ALL {
            let mut p = ShallowParams::random(kind, 6, 3, 2, 0.1, &mut rng).unwrap();
            p.v.fill(0.0);
            p.v_ffm.fill(0.0);
            let g = p.gradient(&inst(vec![0, 2, 4]), 0.7).unwrap();
            assert_eq!(g.d_w0, 0.7);
            for id in [0, 2, 4] {
                assert_eq!(g.d_w.get(id), Some(&[0.7][..]));
            }
            if kind == ModelKind::Fefm || kind == ModelKind::Fm {
                assert!(g.d_v.iter().all(|(_, row)| row.iter().all(|&x| x == 0.0)));
            }
            assert!(g.d_v_ffm.iter().all(|(_, row)| row.iter().all(|&x| x == 0.0)));
        }
    }

    #[test]
    fn symmetric_scalar_pair_gradient() {
        // k = 1, W = 2u, φ_pair = 2u·v_i·v_j, ∂/∂u = 2·v_i·v_j = 12.
        let mut p = ShallowParams::zeros(ModelKind::Fefm, 2, 2, 1);
        p.v.copy_from_slice(&[2.0, 3.0]);
        p.u[0] = 0.25;
        let g = p.gradient(&inst(vec![0, 1]), 1.0).unwrap();
        assert_eq!(g.d_u.get(0), Some(&[12.0][..]));
        assert_eq!(g.d_v.get(0), Some(&[1.5][..]));
        assert_eq!(g.d_v.get(1), Some(&[1.0][..]));
    }

    #[test]
    fn block_walk_matches_formula() {
        for kind in ModelKind::ALL {
            let p = ShallowParams::zeros(kind, 17, 5, 3);
            assert_eq!(p.n_params() as u64, param_count(kind, 17, 5, 3), "{kind}");
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.name().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("xdeepfm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn bad_instances_are_rejected() {
        let p = ShallowParams::zeros(ModelKind::Fm, 3, 2, 2);
        assert!(p.logit(&inst(vec![0])).is_err());
        assert!(p.logit(&inst(vec![0, 3])).is_err());
    }
}
