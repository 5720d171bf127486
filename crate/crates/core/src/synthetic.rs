//! Synthetic click data with planted field-pair interactions.
//!
//! Each feature gets a latent vector `z` and each field pair a random
//! symmetric matrix `M_p` with its own weight, so the teacher logit is
//!
//! ```text
//! b + Σ_i w_i + s · Σ_{f<g} z_iᵀ M_{fg} z_j
//! ```
//!
//! with `s` calibrated so the interaction part has a chosen standard
//! deviation. An FEFM with `k ≥ latent_dim` can represent it exactly;
//! an FM cannot, since its inner product is shared by every pair.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Instance, Label};
use crate::error::{Error, Result};
use crate::linalg::{bilinear, frobenius_norm};
use crate::pairs::FieldPairIndex;
use crate::train::sigmoid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedConfig {
    pub n_fields: usize,
    pub values_per_field: usize,
    pub latent_dim: usize,
    /// Standard deviation of the interaction part of the teacher logit.
    pub interaction_std: f64,
    pub linear_std: f64,
    pub bias: f64,
    /// Draw labels from `σ(logit)`; otherwise label by the logit's sign.
    pub noisy_labels: bool,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            n_fields: 8,
            values_per_field: 20,
            latent_dim: 4,
            interaction_std: 2.0,
            linear_std: 0.3,
            bias: 0.0,
            noisy_labels: true,
        }
    }
}

impl PlantedConfig {
    /// Small noiseless problem that an FEFM with `k = 4` can fit exactly.
    pub fn overfit() -> Self {
        PlantedConfig {
            n_fields: 6,
            values_per_field: 16,
            latent_dim: 4,
            interaction_std: 3.0,
            noisy_labels: false,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_fields < 2 || self.values_per_field == 0 || self.latent_dim == 0 {
            return Err(Error::Config(
                "planted data needs ≥ 2 fields, ≥ 1 value per field and latent_dim ≥ 1".into(),
            ));
        }
        if !(self.interaction_std >= 0.0) || !(self.linear_std >= 0.0) {
            return Err(Error::Config("standard deviations must be ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PlantedTeacher {
    cfg: PlantedConfig,
    pairs: FieldPairIndex,
    latent: Vec<f64>,
    /// Scaled `d × d` pair matrices, pair after pair.
    matrices: Vec<f64>,
    linear: Vec<f64>,
}

const CALIBRATION_DRAWS: usize = 4096;

impl PlantedTeacher {
    pub fn new(cfg: PlantedConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, d) = (cfg.n_fields, cfg.latent_dim);
        let m = n * cfg.values_per_field;
        let pairs = FieldPairIndex::new(n);
        let latent: Vec<f64> = (0..m * d).map(|_| rng.sample(StandardNormal)).collect();
        let mut matrices = vec![0.0; pairs.len() * d * d];
        for mat in matrices.chunks_exact_mut(d * d) {
            let weight: f64 = rng.sample::<f64, _>(StandardNormal).abs();
            for i in 0..d {
                for j in i..d {
                    let x = weight * rng.sample::<f64, _>(StandardNormal);
                    mat[i * d + j] = x;
                    mat[j * d + i] = x;
                }
            }
        }
        let normal = Normal::new(0.0, cfg.linear_std).map_err(|e| Error::Config(e.to_string()))?;
        let linear = (0..m).map(|_| normal.sample(&mut rng)).collect();
        let mut teacher = PlantedTeacher {
            cfg,
            pairs,
            latent,
            matrices,
            linear,
        };
        teacher.calibrate(&mut rng);
        Ok(teacher)
    }

    fn calibrate(&mut self, rng: &mut ChaCha8Rng) {
        let draws: Vec<f64> = (0..CALIBRATION_DRAWS)
            .map(|_| {
                let active = self.draw_active(rng);
                self.interaction(&active)
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        let scale = if var > 0.0 {
            self.cfg.interaction_std / var.sqrt()
        } else {
            0.0
        };
        self.matrices.iter_mut().for_each(|x| *x *= scale);
    }

    pub fn config(&self) -> &PlantedConfig {
        &self.cfg
    }

    pub fn n_fields(&self) -> usize {
        self.cfg.n_fields
    }

    pub fn n_features(&self) -> usize {
        self.cfg.n_fields * self.cfg.values_per_field
    }

    pub fn field_names(&self) -> Vec<String> {
        (0..self.cfg.n_fields).map(|f| format!("f{f}")).collect()
    }

    fn z(&self, id: u32) -> &[f64] {
        let d = self.cfg.latent_dim;
        &self.latent[id as usize * d..(id as usize + 1) * d]
    }

    fn interaction(&self, active: &[u32]) -> f64 {
        let d2 = self.cfg.latent_dim * self.cfg.latent_dim;
        self.pairs
            .iter()
            .map(|(p, f, g)| {
                bilinear(
                    self.z(active[f]),
                    &self.matrices[p * d2..(p + 1) * d2],
                    self.z(active[g]),
                )
            })
            .sum()
    }

    pub fn logit(&self, active: &[u32]) -> f64 {
        self.cfg.bias + active.iter().map(|&i| self.linear[i as usize]).sum::<f64>() + self.interaction(active)
    }

    /// Frobenius norm of each planted pair matrix, by canonical pair index.
    pub fn pair_strengths(&self) -> Vec<f64> {
        let d2 = self.cfg.latent_dim * self.cfg.latent_dim;
        self.matrices.chunks_exact(d2).map(frobenius_norm).collect()
    }

    fn draw_active<R: Rng>(&self, rng: &mut R) -> Vec<u32> {
        let v = self.cfg.values_per_field;
        (0..self.cfg.n_fields)
            .map(|f| (f * v + rng.random_range(0..v)) as u32)
            .collect()
    }

    /// `count` independent instances; feature `c` of field `f` has id `f·V + c`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Dataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let instances = (0..count)
            .map(|_| {
                let active = self.draw_active(&mut rng);
                let phi = self.logit(&active);
                let click = if self.cfg.noisy_labels {
                    rng.random::<f64>() < sigmoid(phi)
                } else {
                    phi > 0.0
                };
                Instance::new(Label::from_bool(click), active)
            })
            .collect();
        Dataset::new(self.n_fields(), self.n_features(), instances)
    }

    /// Writes a dataset as raw CSV (`label,f0,…`) with values named `v<c>`,
    /// ready for the preprocessing pipeline.
    pub fn write_raw_csv(&self, path: &Path, ds: &Dataset) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "label,{}", self.field_names().join(",")).map_err(io)?;
        let v = self.cfg.values_per_field as u32;
        for inst in ds {
            let cells: Vec<String> = inst.active.iter().map(|&id| format!("v{}", id % v)).collect();
            writeln!(out, "{},{}", inst.label.as_binary(), cells.join(",")).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Schema TOML matching [`Self::write_raw_csv`].
    pub fn schema_toml(&self) -> String {
        let mut s = String::from("label = \"label\"\ndelimiter = \",\"\n");
        for name in self.field_names() {
            s.push_str(&format!("\n[[fields]]\nname = \"{name}\"\nkind = \"categorical\"\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibrated_and_deterministic() {
        let t = PlantedTeacher::new(PlantedConfig::default(), 7).unwrap();
        let a = t.sample(2000, 1).unwrap();
        let b = t.sample(2000, 1).unwrap();
        assert_eq!(a.instances(), b.instances());
        let (pos, neg) = a.class_counts();
        assert!(pos > 300 && neg > 300);
        assert_eq!(t.pair_strengths().len(), 28);
        for inst in &a {
            for (f, &id) in inst.active.iter().enumerate() {
                assert_eq!(id as usize / 20, f);
            }
        }
    }

    #[test]
    fn noiseless_labels_follow_the_logit_sign() {
        let t = PlantedTeacher::new(PlantedConfig::overfit(), 3).unwrap();
        let ds = t.sample(100, 0).unwrap();
        for inst in &ds {
            assert_eq!(inst.label.is_positive(), t.logit(&inst.active) > 0.0);
        }
    }

    #[test]
    fn schema_parses() {
        let t = PlantedTeacher::new(PlantedConfig::default(), 0).unwrap();
        let schema: crate::data::TableSchema = toml::from_str(&t.schema_toml()).unwrap();
        schema.validate().unwrap();
        assert_eq!(schema.active_fields().count(), 8);
    }
}
