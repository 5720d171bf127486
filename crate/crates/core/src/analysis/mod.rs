//! Eigenvalues of the FEFM field-pair matrices and the field-pair
//! interaction strengths derived from them.

mod eigen;
mod report;

pub use eigen::{pair_strength, symmetric_eigen, symmetric_eigenvalues, SymmetricEigen, DEFAULT_TOLERANCE, MAX_SWEEPS};
pub use report::{rank_field_pairs, PairStrength, PairStrengthReport};
