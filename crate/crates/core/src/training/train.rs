use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::{BlochSample, Label, Split};
use crate::error::{Error, Result};
use crate::model::ParamSet;
use crate::rng::{StreamKey, DOMAIN_MINIBATCH, DOMAIN_SHOTS};

use super::classify::Centroids;
use super::loss::LossConfig;
use super::nadam::{nadam_step, NadamConfig, OptimizerState};
use super::objective::{finite_diff_gradient, loss_of_params, network_outputs, EvalConfig, Indexed, NoiseMode};

pub const HISTORY_SCHEMA: &str = "qnn.history/1";
pub const OPTIMIZER_SCHEMA: &str = "qnn.optimizer/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub rounds: usize,
    pub minibatch: usize,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(default)]
    pub noise: NoiseMode,
    /// Write a checkpoint every this many rounds; 0 only at the end.
    #[serde(default)]
    pub checkpoint_every: usize,
}

impl TrainConfig {
    pub fn validate(&self, training_count: usize) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidArgument("train.rounds must be at least 1".into()));
        }
        if self.minibatch == 0 || self.minibatch > training_count {
            return Err(Error::InvalidArgument(format!(
                "train.minibatch = {} must lie in 1..={training_count}",
                self.minibatch
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("train.epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Everything that determines a training run besides data and initial
/// parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSetup {
    pub eval: EvalConfig,
    pub loss: LossConfig,
    pub optimizer: NadamConfig,
    pub train: TrainConfig,
}

/// Losses of the parameters in force during a round, before its update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub training_loss: f64,
    pub validation_loss: f64,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub schema: String,
    pub records: Vec<RoundRecord>,
    /// Round with the smallest validation loss, earliest on ties.
    pub best_round: Option<usize>,
}

impl Default for TrainHistory {
    fn default() -> Self {
        Self {
            schema: HISTORY_SCHEMA.into(),
            records: Vec::new(),
            best_round: None,
        }
    }
}

impl TrainHistory {
    pub fn push(&mut self, record: RoundRecord) {
        let better = self.best().is_none_or(|b| record.validation_loss < b.validation_loss);
        if better {
            self.best_round = Some(record.round);
        }
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best(&self) -> Option<&RoundRecord> {
        self.best_round.and_then(|r| self.records.iter().find(|x| x.round == r))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("round,training_loss,validation_loss\n");
        for r in &self.records {
            s.push_str(&format!("{},{},{}\n", r.round, r.training_loss, r.validation_loss));
        }
        s
    }
}

#[derive(Serialize, Deserialize)]
struct OptimizerFile {
    schema: String,
    #[serde(flatten)]
    state: OptimizerState,
}

/// Stateful minibatch optimization over a fixed dataset split.
pub struct Trainer<'a> {
    setup: TrainSetup,
    samples: &'a [BlochSample],
    split: &'a Split,
    params: ParamSet,
    optimizer: OptimizerState,
    history: TrainHistory,
}

impl<'a> Trainer<'a> {
    pub fn new(setup: TrainSetup, samples: &'a [BlochSample], split: &'a Split, init: ParamSet) -> Result<Self> {
        setup.eval.validate()?;
        setup.loss.validate()?;
        setup.optimizer.validate()?;
        split.validate(samples.len())?;
        setup.train.validate(split.train.len())?;
        let dim = init.num_trainable();
        Ok(Self {
            setup,
            samples,
            split,
            params: init,
            optimizer: OptimizerState::new(dim),
            history: TrainHistory::default(),
        })
    }

    /// Continues from a directory written by [`Trainer::checkpoint`].
    pub fn resume(setup: TrainSetup, samples: &'a [BlochSample], split: &'a Split, checkpoint: &Path) -> Result<Self> {
        let params = ParamSet::load(checkpoint.join("params.json"))?;
        let opt: OptimizerFile = serde_json::from_str(&fs::read_to_string(checkpoint.join("optimizer.json"))?)?;
        let history: TrainHistory = serde_json::from_str(&fs::read_to_string(checkpoint.join("history.json"))?)?;
        if opt.state.m.len() != params.num_trainable() || opt.state.round as usize != history.len() {
            return Err(Error::InvalidArgument(format!("{}: inconsistent checkpoint", checkpoint.display())));
        }
        let mut t = Self::new(setup, samples, split, params)?;
        t.optimizer = opt.state;
        t.history = history;
        Ok(t)
    }

    /// Most recent `round-XXXX` directory below `dir`.
    pub fn latest_checkpoint(dir: &Path) -> Result<Option<PathBuf>> {
        if !dir.exists() {
            return Ok(None);
        }
        let mut best: Option<(usize, PathBuf)> = None;
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            let round = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_prefix("round-"))
                .and_then(|n| n.parse::<usize>().ok());
            if let Some(r) = round {
                if best.as_ref().is_none_or(|(b, _)| r > *b) {
                    best = Some((r, path));
                }
            }
        }
        Ok(best.map(|b| b.1))
    }

    pub fn setup(&self) -> &TrainSetup {
        &self.setup
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn optimizer(&self) -> &OptimizerState {
        &self.optimizer
    }

    pub fn history(&self) -> &TrainHistory {
        &self.history
    }

    pub fn completed_rounds(&self) -> usize {
        self.history.len()
    }

    fn root(&self) -> StreamKey {
        StreamKey::root(self.setup.train.seed)
    }

    fn indexed(&self, ids: &[usize]) -> Vec<Indexed<'a>> {
        let samples = self.samples;
        ids.iter().map(|&i| (i, &samples[i])).collect()
    }

    /// Training indices of round `round`.
    pub fn minibatch(&self, round: usize) -> Vec<usize> {
        let pool = &self.split.train;
        let mut rng = self.root().path(&[DOMAIN_MINIBATCH, round as u64]).rng();
        let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), self.setup.train.minibatch)
            .into_iter()
            .map(|k| pool[k])
            .collect();
        picked.sort_unstable();
        picked
    }

    /// Runs the next round.
    pub fn step(&mut self) -> Result<&RoundRecord> {
        let round = self.completed_rounds() + 1;
        self.round_inner(round).map_err(|e| Error::Round {
            round,
            source: Box::new(e),
        })?;
        Ok(self.history.records.last().expect("just pushed"))
    }

    fn round_inner(&mut self, round: usize) -> Result<()> {
        let s = self.setup;
        let batch = self.indexed(&self.minibatch(round));
        let shots = self.root().path(&[DOMAIN_SHOTS, round as u64]);
        let (training_loss, grad) = finite_diff_gradient(&self.params, &batch, &s.eval, &s.loss, s.train.epsilon, s.train.noise, shots.child(0))?;
        let validation = self.indexed(&self.split.validation);
        let validation_loss = loss_of_params(&self.params, &validation, &s.eval, &s.loss, shots.child(1))?;
        for (what, v) in [("training", training_loss), ("validation", validation_loss)] {
            if !v.is_finite() {
                return Err(Error::Numerical {
                    op: "loss",
                    rows: 0,
                    cols: 0,
                    msg: format!("{what} loss is {v}"),
                });
            }
        }
        log::info!("round {round}: training loss {training_loss:.6}, validation loss {validation_loss:.6}");
        self.history.push(RoundRecord {
            round,
            training_loss,
            validation_loss,
            params: self.params.flat(),
        });
        let f = nadam_step(&mut self.optimizer, &s.optimizer, &grad)?;
        let step: Vec<f64> = f.iter().map(|x| s.optimizer.learning_rate * x).collect();
        self.params.apply_update(&step)
    }

    /// Runs the remaining rounds, checkpointing below `checkpoints` on the
    /// configured cadence and after the last round.
    pub fn run(&mut self, checkpoints: Option<&Path>) -> Result<&TrainHistory> {
        let total = self.setup.train.rounds;
        let every = self.setup.train.checkpoint_every;
        while self.completed_rounds() < total {
            self.step()?;
            let r = self.completed_rounds();
            if let Some(dir) = checkpoints {
                if r == total || (every > 0 && r.is_multiple_of(every)) {
                    self.checkpoint(dir)?;
                }
            }
        }
        Ok(&self.history)
    }

    /// Writes `dir/round-XXXX/{params,optimizer,history}.json`.
    pub fn checkpoint(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("round-{:04}", self.completed_rounds()));
        fs::create_dir_all(&path)?;
        self.params.save(path.join("params.json"))?;
        let opt = OptimizerFile {
            schema: OPTIMIZER_SCHEMA.into(),
            state: self.optimizer.clone(),
        };
        fs::write(path.join("optimizer.json"), serde_json::to_string_pretty(&opt)? + "\n")?;
        fs::write(path.join("history.json"), serde_json::to_string_pretty(&self.history)? + "\n")?;
        Ok(path)
    }

    /// Parameters of the best round.
    pub fn best_params(&self) -> Result<ParamSet> {
        let best = self.history.best().ok_or_else(|| Error::InvalidArgument("no rounds recorded".into()))?;
        let mut p = self.params.clone();
        p.set_flat(&best.params)?;
        Ok(p)
    }

    /// Class means of the training-split outputs under `params`.
    pub fn centroids(&self, params: &ParamSet) -> Result<Centroids> {
        Centroids::from_outputs(&self.training_outputs(params)?)
    }

    /// Validation outputs under `params`.
    pub fn validation_outputs(&self, params: &ParamSet) -> Result<Vec<(f64, Label)>> {
        self.outputs(params, &self.split.validation)
    }

    /// Training-split outputs under `params`, with the same shot streams
    /// as the validation evaluation.
    pub fn training_outputs(&self, params: &ParamSet) -> Result<Vec<(f64, Label)>> {
        self.outputs(params, &self.split.train)
    }

    fn outputs(&self, params: &ParamSet, ids: &[usize]) -> Result<Vec<(f64, Label)>> {
        let key = self.root().path(&[DOMAIN_SHOTS, 0]);
        network_outputs(params, &self.indexed(ids), &self.setup.eval, key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, DatasetTag};
    use crate::model::params::A_INITIAL;
    use crate::model::NetworkConfig;
    use crate::tn::{Backend, BondDims, TruncConfig};

    fn tiny_setup(shots: Option<usize>, noise: NoiseMode) -> TrainSetup {
        TrainSetup {
            eval: EvalConfig {
                network: NetworkConfig::new(3, 2, 0.1).unwrap(),
                backend: Backend::Dense,
                chis: BondDims::new(16, 16),
                trunc: TruncConfig::default(),
                shots,
            },
            loss: LossConfig::new(0.25).unwrap(),
            optimizer: NadamConfig {
                beta1: 0.75,
                beta2: 0.98,
                learning_rate: 0.05,
                delta: 1e-7,
            },
            train: TrainConfig {
                rounds: 2,
                minibatch: 4,
                epsilon: 0.1,
                seed: 11,
                noise,
                checkpoint_every: 1,
            },
        }
    }

    #[test]
    fn two_rounds_and_checkpoint_round_trip() {
        let data = Dataset::generate(DatasetTag::I, 12, 1).unwrap();
        let split = Split::new(12, 8, 4, 1).unwrap();
        let init = ParamSet::dataset_i(&A_INITIAL).unwrap();
        let mut t = Trainer::new(tiny_setup(Some(40), NoiseMode::FreshShots), &data.samples, &split, init.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let h = t.run(Some(dir.path())).unwrap().clone();
        assert_eq!(h.len(), 2);
        assert_eq!(h.records[0].params, init.flat());
        assert_ne!(h.records[1].params, init.flat());
        let last = Trainer::latest_checkpoint(dir.path()).unwrap().unwrap();
        assert!(last.ends_with("round-0002"));
        assert_eq!(&ParamSet::load(last.join("params.json")).unwrap(), t.params());
        let back: TrainHistory = serde_json::from_str(&fs::read_to_string(last.join("history.json")).unwrap()).unwrap();
        assert_eq!(back, h);
        let best = h.best_round.unwrap();
        let min = h.records.iter().map(|r| r.validation_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(h.records[best - 1].validation_loss, min);
    }

    #[test]
    fn resume_reproduces_uninterrupted_run() {
        let data = Dataset::generate(DatasetTag::I, 12, 2).unwrap();
        let split = Split::new(12, 8, 4, 2).unwrap();
        let init = ParamSet::dataset_i(&A_INITIAL).unwrap();
        for noise in [NoiseMode::FreshShots, NoiseMode::CommonRandomNumbers] {
            let mut setup = tiny_setup(Some(30), noise);
            setup.train.rounds = 3;
            let mut full = Trainer::new(setup, &data.samples, &split, init.clone()).unwrap();
            full.run(None).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let mut first = setup;
            first.train.rounds = 1;
            Trainer::new(first, &data.samples, &split, init.clone()).unwrap().run(Some(dir.path())).unwrap();
            let ck = Trainer::latest_checkpoint(dir.path()).unwrap().unwrap();
            let mut resumed = Trainer::resume(setup, &data.samples, &split, &ck).unwrap();
            resumed.run(None).unwrap();
            assert_eq!(resumed.history(), full.history());
            assert_eq!(resumed.params(), full.params());
        }
    }

    #[test]
    fn minibatches_are_subsets_without_repeats() {
        let data = Dataset::generate(DatasetTag::I, 20, 3).unwrap();
        let split = Split::new(20, 15, 5, 3).unwrap();
        let mut setup = tiny_setup(None, NoiseMode::FreshShots);
        setup.train.minibatch = 15;
        let t = Trainer::new(setup, &data.samples, &split, ParamSet::dataset_i(&A_INITIAL).unwrap()).unwrap();
        assert_eq!(t.minibatch(1), split.train);
        setup.train.minibatch = 5;
        let t = Trainer::new(setup, &data.samples, &split, ParamSet::dataset_i(&A_INITIAL).unwrap()).unwrap();
        let (a, b) = (t.minibatch(1), t.minibatch(2));
        assert_ne!(a, b);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert!(a.iter().all(|i| split.train.contains(i)));
        setup.train.minibatch = 16;
        assert!(Trainer::new(setup, &data.samples, &split, ParamSet::zeros()).is_err());
    }

    #[test]
    fn best_round_prefers_earliest_tie() {
        let mut h = TrainHistory::default();
        for (r, v) in [(1, 0.3), (2, 0.1), (3, 0.1)] {
            h.push(RoundRecord {
                round: r,
                training_loss: 0.0,
                validation_loss: v,
                params: vec![],
            });
        }
        assert_eq!(h.best_round, Some(2));
        assert_eq!(h.to_csv().lines().count(), 4);
    }
}
