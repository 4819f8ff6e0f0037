//! Self-describing training checkpoints.
//!
//! A checkpoint is a single JSON document with the architecture spec, every
//! parameter tensor flattened under a stable name with its shape, both
//! optimizer moment sets, the iteration counter, and the full RNG state.
//! JSON is written and parsed with exact float round-tripping, so
//! save/load/resume reproduces an unbroken run bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::Adam;

use super::train::TrainConfig;
use super::{CondScale, DiscriminatorParams, GanParams, GanSpec, GeneratorParams};

/// One flattened parameter array with its logical shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedTensor {
    fn from2(name: &str, a: &Array2<f64>) -> Self {
        NamedTensor {
            name: name.into(),
            shape: vec![a.nrows(), a.ncols()],
            data: a.iter().cloned().collect(),
        }
    }

    fn from1(name: &str, a: &Array1<f64>) -> Self {
        NamedTensor {
            name: name.into(),
            shape: vec![a.len()],
            data: a.to_vec(),
        }
    }
}

/// Flattens every parameter tensor under its stable name.
fn tensors_of(params: &GanParams) -> Vec<NamedTensor> {
    let g = &params.generator;
    let d = &params.discriminator;
    vec![
        NamedTensor::from2("generator.lstm1.w_ih", &g.lstm1.w_ih),
        NamedTensor::from2("generator.lstm1.w_hh", &g.lstm1.w_hh),
        NamedTensor::from1("generator.lstm1.b", &g.lstm1.b),
        NamedTensor::from2("generator.lstm2.w_ih", &g.lstm2.w_ih),
        NamedTensor::from2("generator.lstm2.w_hh", &g.lstm2.w_hh),
        NamedTensor::from1("generator.lstm2.b", &g.lstm2.b),
        NamedTensor::from2("generator.head.w", &g.head.w),
        NamedTensor::from1("generator.head.b", &g.head.b),
        NamedTensor::from2("discriminator.lstm1.w_ih", &d.lstm1.w_ih),
        NamedTensor::from2("discriminator.lstm1.w_hh", &d.lstm1.w_hh),
        NamedTensor::from1("discriminator.lstm1.b", &d.lstm1.b),
        NamedTensor::from2("discriminator.lstm2.w_ih", &d.lstm2.w_ih),
        NamedTensor::from2("discriminator.lstm2.w_hh", &d.lstm2.w_hh),
        NamedTensor::from1("discriminator.lstm2.b", &d.lstm2.b),
        NamedTensor::from2("discriminator.head.w", &d.head.w),
        NamedTensor::from1("discriminator.head.b", &d.head.b),
    ]
}

fn hash_tensors(tensors: &[NamedTensor]) -> String {
    let mut hasher = Sha256::new();
    for t in tensors {
        hasher.update(t.name.as_bytes());
        for &dim in &t.shape {
            hasher.update((dim as u64).to_le_bytes());
        }
        for &v in &t.data {
            hasher.update(v.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

/// Content hash of a parameter set; equals [`Checkpoint::id`] for a
/// checkpoint holding the same weights.
pub fn param_hash(params: &GanParams) -> String {
    hash_tensors(&tensors_of(params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: GanSpec,
    pub cond: CondScale,
    pub iteration: u64,
    pub tensors: Vec<NamedTensor>,
    pub adam_g: Adam,
    pub adam_d: Adam,
    pub rng: ChaCha8Rng,
    pub cfg: TrainConfig,
}

impl Checkpoint {
    pub(crate) fn capture(
        params: &GanParams,
        adam_g: &Adam,
        adam_d: &Adam,
        rng: &ChaCha8Rng,
        iteration: u64,
        cfg: &TrainConfig,
    ) -> Self {
        Checkpoint {
            spec: params.spec,
            cond: params.cond,
            iteration,
            tensors: tensors_of(params),
            adam_g: adam_g.clone(),
            adam_d: adam_d.clone(),
            rng: rng.clone(),
            cfg: cfg.clone(),
        }
    }

    /// Content id: sha256 over every tensor's name, shape, and raw bytes.
    /// Stable across save/load since the floats round-trip exactly.
    pub fn id(&self) -> String {
        hash_tensors(&self.tensors)
    }

    fn tensor(&self, name: &str) -> Result<&NamedTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Config(format!("checkpoint missing tensor `{name}`")))
    }

    fn get2(&self, name: &str) -> Result<Array2<f64>> {
        let t = self.tensor(name)?;
        if t.shape.len() != 2 || t.shape[0] * t.shape[1] != t.data.len() {
            return Err(Error::Config(format!(
                "tensor `{name}` has inconsistent shape {:?} for {} values",
                t.shape,
                t.data.len()
            )));
        }
        Array2::from_shape_vec((t.shape[0], t.shape[1]), t.data.clone())
            .map_err(|e| Error::Config(format!("tensor `{name}`: {e}")))
    }

    fn get1(&self, name: &str) -> Result<Array1<f64>> {
        let t = self.tensor(name)?;
        if t.shape.len() != 1 || t.shape[0] != t.data.len() {
            return Err(Error::Config(format!(
                "tensor `{name}` has inconsistent shape {:?} for {} values",
                t.shape,
                t.data.len()
            )));
        }
        Ok(Array1::from_vec(t.data.clone()))
    }

    /// Reassembles the parameter set, validating shapes against the spec.
    pub fn params(&self) -> Result<GanParams> {
        self.spec.validate()?;
        let params = GanParams {
            spec: self.spec,
            cond: self.cond,
            generator: GeneratorParams {
                lstm1: crate::nn::LstmParams {
                    w_ih: self.get2("generator.lstm1.w_ih")?,
                    w_hh: self.get2("generator.lstm1.w_hh")?,
                    b: self.get1("generator.lstm1.b")?,
                },
                lstm2: crate::nn::LstmParams {
                    w_ih: self.get2("generator.lstm2.w_ih")?,
                    w_hh: self.get2("generator.lstm2.w_hh")?,
                    b: self.get1("generator.lstm2.b")?,
                },
                head: crate::nn::DenseParams {
                    w: self.get2("generator.head.w")?,
                    b: self.get1("generator.head.b")?,
                },
            },
            discriminator: DiscriminatorParams {
                lstm1: crate::nn::LstmParams {
                    w_ih: self.get2("discriminator.lstm1.w_ih")?,
                    w_hh: self.get2("discriminator.lstm1.w_hh")?,
                    b: self.get1("discriminator.lstm1.b")?,
                },
                lstm2: crate::nn::LstmParams {
                    w_ih: self.get2("discriminator.lstm2.w_ih")?,
                    w_hh: self.get2("discriminator.lstm2.w_hh")?,
                    b: self.get1("discriminator.lstm2.b")?,
                },
                head: crate::nn::DenseParams {
                    w: self.get2("discriminator.head.w")?,
                    b: self.get1("discriminator.head.b")?,
                },
            },
        };
        let reference = GanParams::zeros(self.spec);
        for (name, got, want) in [
            (
                "generator",
                params.generator.n_params(),
                reference.generator.n_params(),
            ),
            (
                "discriminator",
                params.discriminator.n_params(),
                reference.discriminator.n_params(),
            ),
        ] {
            if got != want {
                return Err(Error::Config(format!(
                    "{name} parameter count {got} does not match spec ({want})"
                )));
            }
        }
        if !params.generator.all_finite() || !params.discriminator.all_finite() {
            return Err(Error::Config("checkpoint contains non-finite weights".into()));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synth_surrogate, SurrogateConfig};
    use crate::preprocess::preprocess_dataset;
    use crate::rcgan::{train, Trainer};

    fn cycles() -> Vec<crate::preprocess::PreprocessedCycle> {
        let ds = synth_surrogate(&SurrogateConfig {
            n_cycles: 10,
            samples_per_cycle: 20,
            seed: 8,
            ..Default::default()
        })
        .unwrap();
        preprocess_dataset(&ds, 6, 1).unwrap()
    }

    fn spec() -> GanSpec {
        GanSpec {
            seq_len: 6,
            noise_dim: 2,
            g_hidden: 3,
            d_hidden: 3,
        }
    }

    #[test]
    fn checkpoint_roundtrips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainConfig {
            iterations: 20,
            batch_size: 4,
            seed: 5,
            ..Default::default()
        };
        let cycles = cycles();
        let mut trainer = Trainer::new(&cycles, spec(), cfg).unwrap();
        trainer.run_to(20).unwrap();
        let ckpt = trainer.checkpoint();
        let path = dir.path().join("ckpt.json");
        ckpt.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(loaded, ckpt);
        assert_eq!(loaded.id(), ckpt.id());
        assert_eq!(loaded.params().unwrap(), *trainer.params());
    }

    #[test]
    fn resumed_run_matches_unbroken_run() {
        let dir = tempfile::tempdir().unwrap();
        let cycles = cycles();
        let cfg = TrainConfig {
            iterations: 40,
            batch_size: 4,
            seed: 9,
            ..Default::default()
        };

        let (p_full, h_full) = train(&cycles, spec(), cfg.clone()).unwrap();

        let mut first = Trainer::new(&cycles, spec(), cfg).unwrap();
        first.run_to(15).unwrap();
        let path = dir.path().join("mid.json");
        first.checkpoint().save(&path).unwrap();

        let ckpt = Checkpoint::load(&path).unwrap();
        let mut second = Trainer::resume(&ckpt, &cycles).unwrap();
        second.run_to(40).unwrap();

        assert_eq!(second.params(), &p_full);
        assert_eq!(second.history().records, h_full.records[15..].to_vec());
    }

    #[test]
    fn missing_tensor_is_a_config_error() {
        let cycles = cycles();
        let cfg = TrainConfig {
            batch_size: 4,
            ..Default::default()
        };
        let trainer = Trainer::new(&cycles, spec(), cfg).unwrap();
        let mut ckpt = trainer.checkpoint();
        ckpt.tensors.retain(|t| t.name != "generator.head.b");
        match ckpt.params() {
            Err(Error::Config(msg)) => assert!(msg.contains("generator.head.b")),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}
