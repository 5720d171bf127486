//! Binary model files and their JSON metadata sidecar.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic     8 bytes  "FEFMBIN\0"
//! version   u32
//! kind      u8       0 lr, 1 fm, 2 ffm, 3 fwfm, 4 fefm, 5 deepfefm
//! symmetric u8
//! flags     u8       ablation bits (DeepFEFM), else 0
//! reserved  u8
//! m, n, k   u64 × 3
//! [deepfefm only]
//!   layers  u32
//!   widths  u64 × layers
//!   dropout f64
//! blocks    f64 values, block after block in storage order
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::deep::{AblationFlags, DeepFefmParams, DnnParams};
use crate::error::{Error, Result};
use crate::model::{Architecture, Model};
use crate::shallow::ShallowParams;

pub const MAGIC: [u8; 8] = *b"FEFMBIN\0";
pub const VERSION: u32 = 1;

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    model.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_model(&mut out, model).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(&mut BufReader::new(file))
}

pub fn write_model<W: Write>(out: &mut W, model: &Model) -> std::io::Result<()> {
    let p = model.shallow();
    let flags = match model {
        Model::Deep(d) => d.flags.to_bits(),
        Model::Shallow(_) => 0,
    };
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[model.architecture().code(), p.symmetric as u8, flags, 0])?;
    for x in [p.n_features(), p.n_fields(), p.dim()] {
        out.write_all(&(x as u64).to_le_bytes())?;
    }
    if let Model::Deep(d) = model {
        let widths = d.dnn.hidden_widths();
        out.write_all(&(widths.len() as u32).to_le_bytes())?;
        for w in widths {
            out.write_all(&(w as u64).to_le_bytes())?;
        }
        out.write_all(&d.dnn.dropout.to_le_bytes())?;
    }
    for block in model.blocks() {
        for x in block.values {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_model<R: Read>(input: &mut R) -> Result<Model> {
    let mut r = Reader(input);
    if r.array::<8>()? != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(r.array()?);
    if version != VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version}")));
    }
    let [code, symmetric, flags, _] = r.array::<4>()?;
    let arch =
        Architecture::from_code(code).ok_or_else(|| Error::ModelFormat(format!("unknown model kind code {code}")))?;
    let m = r.size()?;
    let n = r.size()?;
    let k = r.size()?;
    // Refuse absurd headers before allocating.
    let expected = crate::model::ModelSpec::new(arch, k).param_count(m as u64, n as u64);
    if expected > (1u64 << 40) {
        return Err(Error::ModelFormat("header describes an implausibly large model".into()));
    }
    let mut model = match arch {
        Architecture::Deepfefm => {
            let flags = AblationFlags::from_bits(flags);
            flags.validate().map_err(|e| Error::ModelFormat(e.to_string()))?;
            let layers = u32::from_le_bytes(r.array()?) as usize;
            if layers > 1024 {
                return Err(Error::ModelFormat(format!("{layers} hidden layers")));
            }
            let widths = (0..layers).map(|_| r.size()).collect::<Result<Vec<_>>>()?;
            if widths.iter().any(|&w| w == 0 || w > 1 << 20) {
                return Err(Error::ModelFormat(format!("bad hidden widths {widths:?}")));
            }
            let dropout = f64::from_le_bytes(r.array()?);
            let mut fefm = ShallowParams::zeros(arch.shallow_kind(), m, n, k);
            fefm.symmetric = symmetric != 0;
            Model::Deep(DeepFefmParams {
                fefm,
                dnn: DnnParams::zeros(flags.input_width(n, k), &widths, dropout),
                flags,
            })
        }
        _ => {
            let mut p = ShallowParams::zeros(arch.shallow_kind(), m, n, k);
            p.symmetric = symmetric != 0;
            Model::Shallow(p)
        }
    };
    for block in model.blocks_mut() {
        for x in block.values.iter_mut() {
            *x = f64::from_le_bytes(r.array()?);
        }
    }
    let mut rest = [0u8; 1];
    if r.0.read(&mut rest).map_err(|e| Error::ModelFormat(e.to_string()))? != 0 {
        return Err(Error::ModelFormat("trailing bytes after the last block".into()));
    }
    model.validate().map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok(model)
}

struct Reader<'a, R>(&'a mut R);

impl<R: Read> Reader<'_, R> {
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| Error::ModelFormat("file is truncated".into()))?;
        Ok(buf)
    }

    fn size(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.array()?))
            .map_err(|_| Error::ModelFormat("dimension does not fit in memory".into()))
    }
}

/// `model.bin` → `model.bin.meta.json`.
pub fn meta_path(model_path: &Path) -> PathBuf {
    let mut s = model_path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes any serializable value as pretty JSON.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn round_trip(model: &Model) -> Model {
        let mut bytes = Vec::new();
        write_model(&mut bytes, model).unwrap();
        read_model(&mut bytes.as_slice()).unwrap()
    }

    #[test]
    fn every_architecture_round_trips_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for arch in Architecture::ALL {
            let spec = ModelSpec {
                hidden: vec![4, 3],
                flags: AblationFlags::ablation4(),
                symmetric: arch != Architecture::Fefm,
                ..ModelSpec::new(arch, 3)
            };
            let mut model = spec.build(9, 3, &mut rng).unwrap();
            if let Some(b) = model.blocks_mut().first_mut() {
                b.values[0] = 0.25;
            }
            assert_eq!(round_trip(&model), model, "{arch}");
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let model = ModelSpec::new(Architecture::Fm, 2)
            .build(4, 2, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        let mut bytes = Vec::new();
        write_model(&mut bytes, &model).unwrap();
        assert!(read_model(&mut &bytes[..bytes.len() - 1]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(read_model(&mut longer.as_slice()).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_model(&mut bad.as_slice()).is_err());
        let mut kind = bytes;
        kind[12] = 9;
        assert!(read_model(&mut kind.as_slice()).is_err());
    }

    #[test]
    fn meta_path_appends_suffix() {
        assert_eq!(
            meta_path(Path::new("out/model.bin")),
            PathBuf::from("out/model.bin.meta.json")
        );
    }
}
