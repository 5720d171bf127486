use crate::error::{Error, Result};
use crate::linalg::frobenius_norm;

/// Off-diagonal entries must fall below this times `‖W‖_F`.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// `W = Q diag(values) Qᵀ`, values non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricEigen {
    pub k: usize,
    pub values: Vec<f64>,
    /// Row-major `k × k`; column `t` is the eigenvector of `values[t]`.
    pub vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn vector(&self, t: usize) -> Vec<f64> {
        (0..self.k).map(|i| self.vectors[i * self.k + t]).collect()
    }

    /// `Q Λ Qᵀ`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let k = self.k;
        let mut out = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                out[i * k + j] = (0..k)
                    .map(|t| self.vectors[i * k + t] * self.values[t] * self.vectors[j * k + t])
                    .sum();
            }
        }
        out
    }
}

fn dim_of(w: &[f64]) -> Result<usize> {
    let k = (w.len() as f64).sqrt().round() as usize;
    if k * k != w.len() {
        return Err(Error::Dimension(format!(
            "{} entries do not form a square matrix",
            w.len()
        )));
    }
    Ok(k)
}

fn check_symmetric(w: &[f64], k: usize) -> Result<()> {
    let scale = w.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    for i in 0..k {
        for j in i + 1..k {
            if (w[i * k + j] - w[j * k + i]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::Data(format!(
                    "matrix is not symmetric: entries ({i},{j}) and ({j},{i}) differ"
                )));
            }
        }
    }
    Ok(())
}

/// Cyclic Jacobi eigendecomposition of a symmetric row-major matrix.
pub fn symmetric_eigen(w: &[f64], tol: f64) -> Result<SymmetricEigen> {
    let k = dim_of(w)?;
    check_symmetric(w, k)?;
    let mut a = w.to_vec();
    let mut q = vec![0.0; k * k];
    for i in 0..k {
        q[i * k + i] = 1.0;
    }
    let threshold = tol * frobenius_norm(w);
    let off_max = |a: &[f64]| {
        let mut m = 0.0f64;
        for i in 0..k {
            for j in i + 1..k {
                m = m.max(a[i * k + j].abs());
            }
        }
        m
    };
    let mut sweeps = 0;
    while off_max(&a) > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!(
                "Jacobi did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..k {
            for r in p + 1..k {
                let apq = a[p * k + r];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[r * k + r] - a[p * k + p]) / (2.0 * apq);
                let t = if tau >= 0.0 { 1.0 } else { -1.0 } / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..k {
                    let (x, y) = (a[i * k + p], a[i * k + r]);
                    a[i * k + p] = c * x - s * y;
                    a[i * k + r] = s * x + c * y;
                }
                for j in 0..k {
                    let (x, y) = (a[p * k + j], a[r * k + j]);
                    a[p * k + j] = c * x - s * y;
                    a[r * k + j] = s * x + c * y;
                }
                a[p * k + r] = 0.0;
                a[r * k + p] = 0.0;
                for i in 0..k {
                    let (x, y) = (q[i * k + p], q[i * k + r]);
                    q[i * k + p] = c * x - s * y;
                    q[i * k + r] = s * x + c * y;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| a[y * k + y].total_cmp(&a[x * k + x]));
    let values = order.iter().map(|&t| a[t * k + t]).collect();
    let mut vectors = vec![0.0; k * k];
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..k {
            vectors[i * k + dst] = q[i * k + src];
        }
    }
    Ok(SymmetricEigen { k, values, vectors })
}

/// Eigenvalues only, non-increasing.
pub fn symmetric_eigenvalues(w: &[f64], tol: f64) -> Result<Vec<f64>> {
    Ok(symmetric_eigen(w, tol)?.values)
}

/// `√(Σ λ_t²)` of a symmetric matrix.
pub fn pair_strength(w: &[f64]) -> Result<f64> {
    let values = symmetric_eigenvalues(w, DEFAULT_TOLERANCE)?;
    Ok(values.iter().map(|l| l * l).sum::<f64>().sqrt())
}
