//! Run configuration: presets, dotted overrides and the resolved JSON form.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{Dataset, DatasetTag, Split};
use crate::error::{Error, Result};
use crate::model::lindblad::DENSE_MAX_SITES;
use crate::model::params::{A_INITIAL, B_INITIAL};
use crate::model::{NetworkConfig, ParamSet};
use crate::tn::{Backend, BondDims, TruncConfig};
use crate::training::{EvalConfig, LossConfig, NadamConfig, NoiseMode, TrainConfig, TrainSetup};

pub const CONFIG_SCHEMA: &str = "qnn.config/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnSettings {
    pub chi_mpo: usize,
    pub chi_mps: usize,
    pub rel_cutoff: f64,
    pub alarm_threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSettings {
    pub shots: usize,
    /// Replace shot estimates by exact expectations.
    pub exact: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub rounds: usize,
    pub minibatch: usize,
    pub epsilon: f64,
    pub noise: NoiseMode,
    pub checkpoint_every: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSettings {
    pub dataset: DatasetTag,
    pub count: usize,
    pub train: usize,
    pub validation: usize,
}

/// Everything a run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub preset: String,
    pub seed: u64,
    pub backend: Backend,
    pub network: NetworkConfig,
    pub tn: TnSettings,
    pub sampler: SamplerSettings,
    pub loss: LossConfig,
    pub optimizer: NadamConfig,
    pub train: TrainSettings,
    pub data: DataSettings,
    /// Initial parameter file; `None` uses the dataset's reference start.
    pub init: Option<PathBuf>,
    pub output: PathBuf,
}

/// Named starting points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    DatasetI,
    DatasetII,
    ReducedI,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::DatasetI, Preset::DatasetII, Preset::ReducedI];

    pub fn name(self) -> &'static str {
        match self {
            Preset::DatasetI => "dataset-i",
            Preset::DatasetII => "dataset-ii",
            Preset::ReducedI => "reduced-i",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown preset {s:?} (expected dataset-i, dataset-ii or reduced-i)"))
        })
    }
}

impl RunConfig {
    pub fn preset(p: Preset) -> Self {
        let base = RunConfig {
            schema: CONFIG_SCHEMA.into(),
            preset: p.name().into(),
            seed: 1,
            backend: Backend::Mpo,
            network: NetworkConfig::new(50, 10, 0.1).expect("valid"),
            tn: TnSettings {
                chi_mpo: 16,
                chi_mps: 48,
                rel_cutoff: TruncConfig::default().rel_cutoff,
                alarm_threshold: TruncConfig::default().alarm_threshold,
            },
            sampler: SamplerSettings { shots: 5000, exact: false },
            loss: LossConfig { margin: 0.25 },
            optimizer: NadamConfig {
                beta1: 0.75,
                beta2: 0.98,
                learning_rate: 0.05,
                delta: 1e-7,
            },
            train: TrainSettings {
                rounds: 50,
                minibatch: 25,
                epsilon: 0.1,
                noise: NoiseMode::FreshShots,
                checkpoint_every: 5,
            },
            data: DataSettings {
                dataset: DatasetTag::I,
                count: 300,
                train: 250,
                validation: 50,
            },
            init: None,
            output: PathBuf::from("runs").join(p.name()),
        };
        match p {
            Preset::DatasetI => base,
            Preset::DatasetII => RunConfig {
                loss: LossConfig { margin: 0.35 },
                optimizer: NadamConfig {
                    beta1: 0.85,
                    beta2: 0.9995,
                    ..base.optimizer
                },
                train: TrainSettings {
                    rounds: 20,
                    minibatch: 23,
                    ..base.train
                },
                data: DataSettings {
                    dataset: DatasetTag::II,
                    ..base.data
                },
                ..base
            },
            Preset::ReducedI => RunConfig {
                backend: Backend::Sweep,
                network: NetworkConfig::new(12, 6, 0.1).expect("valid"),
                tn: TnSettings {
                    chi_mpo: 16,
                    chi_mps: 24,
                    ..base.tn
                },
                sampler: SamplerSettings { shots: 2000, exact: false },
                train: TrainSettings {
                    minibatch: 15,
                    ..base.train
                },
                data: DataSettings {
                    count: 80,
                    train: 60,
                    validation: 20,
                    ..base.data
                },
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::InvalidArgument(format!("{name}: {e}"));
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::InvalidArgument(format!("schema: expected {CONFIG_SCHEMA:?}, got {:?}", self.schema)));
        }
        self.network.validate().map_err(|e| field("network", e))?;
        if self.backend == Backend::Dense && self.network.sites > DENSE_MAX_SITES {
            return Err(Error::InvalidArgument(format!(
                "backend: dense requires network.sites <= {DENSE_MAX_SITES}, got {}",
                self.network.sites
            )));
        }
        if self.tn.chi_mpo == 0 || self.tn.chi_mps == 0 {
            return Err(Error::InvalidArgument("tn: bond dimensions must be positive".into()));
        }
        if !(self.tn.rel_cutoff >= 0.0) {
            return Err(Error::InvalidArgument("tn.rel_cutoff must be non-negative".into()));
        }
        if self.sampler.shots == 0 {
            return Err(Error::InvalidArgument("sampler.shots must be positive".into()));
        }
        self.loss.validate().map_err(|e| field("loss", e))?;
        self.optimizer.validate().map_err(|e| field("optimizer", e))?;
        let d = &self.data;
        if d.train == 0 || d.validation == 0 || d.train + d.validation > d.count {
            return Err(Error::InvalidArgument(format!(
                "data: cannot split {} samples into {} training and {} validation",
                d.count, d.train, d.validation
            )));
        }
        self.train_config().validate(d.train).map_err(|e| field("train", e))
    }

    /// Applies `key.path=value`; the value is parsed as JSON and taken as a
    /// string otherwise.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("override {assignment:?} is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut tree = serde_json::to_value(&*self)?;
        let mut slot = &mut tree;
        for key in path.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(key))
                .ok_or_else(|| Error::InvalidArgument(format!("unknown configuration field {path:?}")))?;
        }
        *slot = value;
        *self = serde_json::from_value(tree).map_err(|e| Error::InvalidArgument(format!("{path}: {e}")))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn trunc(&self) -> TruncConfig {
        TruncConfig {
            rel_cutoff: self.tn.rel_cutoff,
            alarm_threshold: self.tn.alarm_threshold,
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            network: self.network,
            backend: self.backend,
            chis: BondDims::new(self.tn.chi_mpo, self.tn.chi_mps),
            trunc: self.trunc(),
            shots: (!self.sampler.exact).then_some(self.sampler.shots),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            rounds: self.train.rounds,
            minibatch: self.train.minibatch,
            epsilon: self.train.epsilon,
            seed: self.seed,
            noise: self.train.noise,
            checkpoint_every: self.train.checkpoint_every,
        }
    }

    pub fn setup(&self) -> TrainSetup {
        TrainSetup {
            eval: self.eval_config(),
            loss: self.loss,
            optimizer: self.optimizer,
            train: self.train_config(),
        }
    }

    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::generate(self.data.dataset, self.data.count, self.seed)
    }

    pub fn split(&self) -> Result<Split> {
        Split::new(self.data.count, self.data.train, self.data.validation, self.seed)
    }

    pub fn initial_params(&self) -> Result<ParamSet> {
        match (&self.init, self.data.dataset) {
            (Some(path), _) => ParamSet::load(path),
            (None, DatasetTag::I) => ParamSet::dataset_i(&A_INITIAL),
            (None, DatasetTag::II) => ParamSet::dataset_ii(&B_INITIAL),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for p in Preset::ALL {
            let c = RunConfig::preset(p);
            c.validate().unwrap();
            assert_eq!(RunConfig::load_str(&c.to_json().unwrap()), c);
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        let ii = RunConfig::preset(Preset::DatasetII);
        assert_eq!((ii.optimizer.beta1, ii.optimizer.beta2, ii.loss.margin), (0.85, 0.9995, 0.35));
        assert_eq!((ii.train.minibatch, ii.train.rounds), (23, 20));
        assert_eq!(ii.initial_params().unwrap().num_trainable(), 11);
    }

    impl RunConfig {
        fn load_str(s: &str) -> Self {
            serde_json::from_str(s).unwrap()
        }
    }

    #[test]
    fn overrides() {
        let mut c = RunConfig::preset(Preset::DatasetI);
        c.apply_override("network.sites=8").unwrap();
        c.apply_override("backend=sweep").unwrap();
        c.apply_override("train.noise=common-random-numbers").unwrap();
        c.apply_override("sampler.exact=true").unwrap();
        assert_eq!(c.network.sites, 8);
        assert_eq!(c.backend, Backend::Sweep);
        assert_eq!(c.train.noise, NoiseMode::CommonRandomNumbers);
        assert_eq!(c.eval_config().shots, None);
        assert!(c.apply_override("network.nope=1").is_err());
        assert!(c.apply_override("network.sites=many").is_err());
        assert!(c.apply_override("no-equals").is_err());
    }

    #[test]
    fn field_level_validation() {
        let mut c = RunConfig::preset(Preset::DatasetI);
        c.backend = Backend::Dense;
        assert!(c.validate().unwrap_err().to_string().contains("backend"));
        c.network.sites = 4;
        c.validate().unwrap();
        c.train.minibatch = 251;
        assert!(c.validate().unwrap_err().to_string().contains("train"));
    }
}
