use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::eigen::{symmetric_eigenvalues, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::shallow::ModelKind;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairStrength {
    pub field_a: String,
    pub field_b: String,
    pub strength: f64,
    /// Non-increasing.
    pub eigenvalues: Vec<f64>,
}

/// Field pairs by decreasing strength.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PairStrengthReport {
    pub entries: Vec<PairStrength>,
}

impl PairStrengthReport {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("field_a,field_b,strength,eigenvalues\n");
        for e in &self.entries {
            let values: Vec<String> = e.eigenvalues.iter().map(f64::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                csv_cell(&e.field_a),
                csv_cell(&e.field_b),
                e.strength,
                values.join("|")
            );
        }
        out
    }

    /// Aligned table with the largest and smallest eigenvalue of each pair.
    pub fn to_text(&self) -> String {
        let wa = self.entries.iter().map(|e| e.field_a.len()).max().unwrap_or(0).max(7);
        let wb = self.entries.iter().map(|e| e.field_b.len()).max().unwrap_or(0).max(7);
        let mut out = format!(
            "{:>4}  {:<wa$}  {:<wb$}  {:>12}  {:>12}  {:>12}\n",
            "rank", "field_a", "field_b", "strength", "lambda_max", "lambda_min"
        );
        for (i, e) in self.entries.iter().enumerate() {
            let first = e.eigenvalues.first().copied().unwrap_or(0.0);
            let last = e.eigenvalues.last().copied().unwrap_or(0.0);
            let _ = writeln!(
                out,
                "{:>4}  {:<wa$}  {:<wb$}  {:>12.6}  {:>12.6}  {:>12.6}",
                i + 1,
                e.field_a,
                e.field_b,
                e.strength,
                first,
                last
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn write_text(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Strength of every field pair of an FEFM or DeepFEFM model, strongest
/// first, truncated to `top`. Equal strengths sort by field names.
pub fn rank_field_pairs(model: &Model, field_names: &[String], top: usize) -> Result<PairStrengthReport> {
    let p = model.shallow();
    if p.kind() != ModelKind::Fefm {
        return Err(Error::KindMismatch {
            expected: "fefm or deepfefm".into(),
            found: model.architecture().to_string(),
        });
    }
    if !p.symmetric {
        return Err(Error::Config(
            "field-pair strengths need symmetric pair matrices; this model was trained with \
             symmetric = false, so its matrices have no real eigendecomposition. Retrain with \
             symmetric = true"
                .into(),
        ));
    }
    if field_names.len() != p.n_fields() {
        return Err(Error::Dimension(format!(
            "{} field names for a model with {} fields",
            field_names.len(),
            p.n_fields()
        )));
    }
    let index = p.pair_index();
    let mut entries = index
        .iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(pair, f, g)| {
            let w = p.effective_pair_matrix(pair)?;
            let eigenvalues = symmetric_eigenvalues(&w, DEFAULT_TOLERANCE)?;
            let strength = eigenvalues.iter().map(|l| l * l).sum::<f64>().sqrt();
            Ok(PairStrength {
                field_a: field_names[f].clone(),
                field_b: field_names[g].clone(),
                strength,
                eigenvalues,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|x, y| {
        y.strength
            .total_cmp(&x.strength)
            .then_with(|| (&x.field_a, &x.field_b).cmp(&(&y.field_a, &y.field_b)))
    });
    entries.truncate(top);
    Ok(PairStrengthReport { entries })
}
