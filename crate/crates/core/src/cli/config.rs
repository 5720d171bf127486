use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{read_libffm, Dataset, Vocabulary};
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::train::TrainConfig;

/// Locations of encoded data. Relative paths resolve against the config
/// file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub train: PathBuf,
    pub validation: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// Supplies `n`, `m` and field names. Without it they are inferred from
    /// the data files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocabulary: Option<PathBuf>,
}

/// One training run, as read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub data: DataPaths,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.train);
        fix(&mut self.data.validation);
        self.data.test.as_mut().map(fix);
        self.data.vocabulary.as_mut().map(fix);
        self.out.as_mut().map(fix);
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let m = &self.model;
        if m.k == 0 && m.architecture != crate::model::Architecture::Lr {
            return Err(Error::Config("model.k must be ≥ 1".into()));
        }
        if !(m.init_std > 0.0 && m.init_std.is_finite()) {
            return Err(Error::Config(format!(
                "model.init_std must be positive, got {}",
                m.init_std
            )));
        }
        if m.architecture == crate::model::Architecture::Deepfefm {
            m.flags.validate()?;
            if !(0.0..1.0).contains(&m.dropout) {
                return Err(Error::Config(format!(
                    "model.dropout must be in [0, 1), got {}",
                    m.dropout
                )));
            }
            if m.hidden.contains(&0) {
                return Err(Error::Config("model.hidden widths must be ≥ 1".into()));
            }
        }
        Ok(())
    }
}

/// Train/validation/test data with its shape and field names.
pub struct LoadedData {
    pub n: usize,
    pub m: usize,
    pub field_names: Vec<String>,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Option<Dataset>,
}

pub fn load_data(paths: &DataPaths) -> Result<LoadedData> {
    let mut files = vec![&paths.train, &paths.validation];
    files.extend(paths.test.as_ref());
    let (n, m, field_names) = match &paths.vocabulary {
        Some(v) => {
            let vocab = Vocabulary::load(v)?;
            let names = vocab.field_names().into_iter().map(String::from).collect();
            (vocab.n_fields(), vocab.n_features(), names)
        }
        None => {
            let (mut n, mut m) = (0, 0);
            for f in &files {
                let (_, fn_, fm) = crate::data::libffm::scan_libffm(f)?;
                n = n.max(fn_);
                m = m.max(fm);
            }
            (n, m, (0..n).map(|f| format!("field_{f}")).collect())
        }
    };
    Ok(LoadedData {
        n,
        m,
        field_names,
        train: read_libffm(&paths.train, n, m)?,
        validation: read_libffm(&paths.validation, n, m)?,
        test: paths.test.as_ref().map(|p| read_libffm(p, n, m)).transpose()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let ok = "[data]\ntrain = \"a\"\nvalidation = \"b\"\n[model]\narchitecture = \"fm\"\nk = 4\n";
        let cfg: RunConfig = toml::from_str(ok).unwrap();
        assert_eq!(cfg.model.k, 4);
        cfg.validate().unwrap();
        for bad in [
            "[data]\ntrain = \"a\"\nvalidation = \"b\"\nepochs = 3\n",
            "[data]\ntrain = \"a\"\nvalidation = \"b\"\n[train]\nlearning_rate = 0.1\n",
            "[data]\ntrain = \"a\"\nvalidation = \"b\"\n[model.flags]\nuse_fm = true\n",
        ] {
            assert!(toml::from_str::<RunConfig>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let mut cfg: RunConfig = toml::from_str("[data]\ntrain = \"a\"\nvalidation = \"/abs/b\"\n").unwrap();
        cfg.resolve_paths(Path::new("conf"));
        assert_eq!(cfg.data.train, PathBuf::from("conf/a"));
        assert_eq!(cfg.data.validation, PathBuf::from("/abs/b"));
    }
}
