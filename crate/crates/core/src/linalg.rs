//! Small dense helpers over row-major `f64` slices.

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out = M x` for a row-major `rows × x.len()` matrix.
#[inline]
pub(crate) fn matvec(m: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o = dot(row, x);
    }
}

/// `out = Mᵀ x` for a row-major `x.len() × out.len()` matrix.
#[inline]
pub(crate) fn matvec_t(m: &[f64], x: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (xi, row) in x.iter().zip(m.chunks_exact(out.len())) {
        axpy(*xi, row, out);
    }
}

/// `y += a·x`.
#[inline]
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `M += a · x yᵀ` for a row-major `x.len() × y.len()` matrix.
#[inline]
pub(crate) fn add_outer(a: f64, x: &[f64], y: &[f64], m: &mut [f64]) {
    for (xi, row) in x.iter().zip(m.chunks_exact_mut(y.len())) {
        axpy(a * xi, y, row);
    }
}

/// Bilinear form `aᵀ W b` with `W` a row-major `k × k` matrix.
pub fn bilinear(a: &[f64], w: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(w.chunks_exact(b.len()))
        .map(|(ai, row)| ai * dot(row, b))
        .sum()
}

/// FEFM pair score `v_iᵀ W v_j`.
pub fn pair_score_fefm(v_i: &[f64], v_j: &[f64], w: &[f64]) -> Result<f64> {
    let k = v_i.len();
    if v_j.len() != k || w.len() != k * k {
        return Err(Error::Dimension(format!(
            "pair score needs two {k}-vectors and a {k}×{k} matrix, got lengths {}, {} and {}",
            v_i.len(),
            v_j.len(),
            w.len()
        )));
    }
    Ok(bilinear(v_i, w, v_j))
}

pub fn frobenius_norm(w: &[f64]) -> f64 {
    w.iter().map(|x| x * x).sum::<f64>().sqrt()
}
