use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use qnn_core::config::{Preset, RunConfig};
use qnn_core::data::{dataset_ii_rules, Dataset, DatasetTag, Label, Split};
use qnn_core::rng::{StreamKey, DOMAIN_SHOTS};
use qnn_core::sampler::ShotSampler;
use qnn_core::training::{classify, Centroids, Trainer};
use qnn_core::{ParamSet, Pauli};

use crate::svg::{Plot, Series};
use crate::{Part, RunArgs};

pub const CENTROIDS_SCHEMA: &str = "qnn.centroids/1";
pub const REPORT_SCHEMA: &str = "qnn.report/1";

const COLOR_A: &str = "#1f77b4";
const COLOR_B: &str = "#ff7f0e";

/// A result below a requested threshold.
#[derive(Debug)]
pub struct ThresholdFailure(pub String);

impl std::fmt::Display for ThresholdFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ThresholdFailure {}

/// 1 usage or configuration, 2 numerical, 3 threshold.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<ThresholdFailure>() {
            return 3;
        }
        if let Some(q) = cause.downcast_ref::<qnn_core::Error>() {
            if q.is_numerical() {
                return 2;
            }
        }
    }
    1
}

pub fn resolve(run: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &run.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::preset(run.preset.parse::<Preset>()?),
    };
    for o in &run.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(o) = &run.out {
        cfg.output = o.clone();
    }
    if let Some(b) = run.backend {
        cfg.backend = b;
    }
    Ok(cfg)
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    let out = cfg.output.clone();
    fs::create_dir_all(&out).with_context(|| format!("cannot create output directory {}", out.display()))?;
    Ok(out)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

/// Dataset and split from files or from the configuration.
fn load_data(cfg: &RunConfig, data: Option<&Path>, split: Option<&Path>) -> Result<(Dataset, Split)> {
    let dataset = match data {
        Some(p) => Dataset::load(p)?,
        None => cfg.dataset()?,
    };
    let split = match split {
        Some(p) => Split::load(p)?,
        None if dataset.len() == cfg.data.count => cfg.split()?,
        None => Split::default_for(dataset.len(), cfg.seed)?,
    };
    split.validate(dataset.len())?;
    Ok((dataset, split))
}

pub fn gen_data(run: &RunArgs, dataset: Option<DatasetTag>, count: Option<usize>) -> Result<()> {
    let mut cfg = resolve(run)?;
    if let Some(d) = dataset {
        cfg.data.dataset = d;
    }
    if let Some(n) = count {
        let validation = (n / 6).max(1);
        cfg.data.count = n;
        cfg.data.train = n.saturating_sub(validation);
        cfg.data.validation = validation;
        cfg.train.minibatch = cfg.train.minibatch.min(cfg.data.train.max(1));
    }
    cfg.validate()?;
    let out = prepare_output(&cfg)?;
    let data = cfg.dataset()?;
    if data.tag == DatasetTag::II {
        if let Some((i, _)) = data.samples.iter().enumerate().find(|(_, s)| dataset_ii_rules(s).len() != 1) {
            bail!("generated sample {i} violates the dataset-II rules");
        }
    }
    let split = cfg.split()?;
    data.save(out.join("dataset.jsonl"))?;
    split.save(out.join("split.json"))?;
    cfg.save(out.join("config.resolved.json"))?;
    println!(
        "wrote {} samples of dataset {} ({} training, {} validation) to {}",
        data.len(),
        data.tag,
        split.train.len(),
        split.validation.len(),
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct CentroidsFile {
    schema: &'static str,
    round: usize,
    a: f64,
    b: f64,
}

fn same_run(a: &RunConfig, b: &RunConfig) -> bool {
    let mut a = a.clone();
    a.train.rounds = b.train.rounds;
    &a == b
}

pub fn train(run: &RunArgs, data: Option<&Path>, split: Option<&Path>, resume: bool) -> Result<()> {
    let cfg = resolve(run)?;
    cfg.validate()?;
    let out = prepare_output(&cfg)?;
    let resolved = out.join("config.resolved.json");
    let checkpoints = out.join("checkpoints");
    if resume && resolved.exists() {
        let previous = RunConfig::load(&resolved)?;
        if !same_run(&previous, &cfg) {
            bail!("{} differs from the current configuration beyond train.rounds; refusing to resume", resolved.display());
        }
    }
    cfg.save(&resolved)?;
    let (dataset, split) = load_data(&cfg, data, split)?;
    dataset.save(out.join("dataset.jsonl"))?;
    split.save(out.join("split.json"))?;

    let setup = cfg.setup();
    let latest = if resume { Trainer::latest_checkpoint(&checkpoints)? } else { None };
    let mut trainer = match &latest {
        Some(dir) => {
            log::info!("resuming from {}", dir.display());
            Trainer::resume(setup, &dataset.samples, &split, dir)?
        }
        None => Trainer::new(setup, &dataset.samples, &split, cfg.initial_params()?)?,
    };
    let history = trainer.run(Some(&checkpoints))?.clone();

    write(&out.join("losses.csv"), history.to_csv())?;
    write_json(&out.join("history.json"), &history)?;
    write(&out.join("loss.svg"), loss_plot(&history).render())?;
    let best = trainer.best_params()?;
    best.save(out.join("best_params.json"))?;
    let centroids = trainer.centroids(&best)?;
    let round = history.best_round.unwrap_or(0);
    write_json(
        &out.join("centroids.json"),
        &CentroidsFile {
            schema: CENTROIDS_SCHEMA,
            round,
            a: centroids.a,
            b: centroids.b,
        },
    )?;
    let record = history.best().context("empty history")?;
    print!(
        "best round {round}: training loss {:.5}, validation loss {:.5} (round 1: {:.5})",
        record.training_loss, record.validation_loss, history.records[0].validation_loss
    );
    match classify(&trainer.validation_outputs(&best)?, &centroids) {
        Ok(c) => println!(", validation accuracy {:.3}, margin {:.4}", c.accuracy, c.margin),
        Err(e) => println!(", not classifiable: {e}"),
    }
    Ok(())
}

fn loss_plot(h: &qnn_core::training::TrainHistory) -> Plot {
    let pts = |f: fn(&qnn_core::training::RoundRecord) -> f64| h.records.iter().map(|r| (r.round as f64, f(r))).collect();
    Plot {
        title: "Loss per round".into(),
        x_label: "round".into(),
        y_label: "contrastive loss".into(),
        series: vec![
            Series {
                name: "training".into(),
                color: COLOR_A,
                points: pts(|r| r.training_loss),
                legend: true,
            },
            Series {
                name: "validation".into(),
                color: COLOR_B,
                points: pts(|r| r.validation_loss),
                legend: true,
            },
        ],
    }
}

fn params_or_initial(cfg: &RunConfig, params: Option<&Path>) -> Result<ParamSet> {
    Ok(match params {
        Some(p) => ParamSet::load(p).with_context(|| format!("cannot read parameters from {}", p.display()))?,
        None => cfg.initial_params()?,
    })
}

pub fn trajectory(
    run: &RunArgs,
    params: Option<&Path>,
    data: Option<&Path>,
    split: Option<&Path>,
    limit: usize,
    export_shots: Option<usize>,
) -> Result<()> {
    let cfg = resolve(run)?;
    cfg.validate()?;
    let out = prepare_output(&cfg)?;
    let params = params_or_initial(&cfg, params)?;
    let (dataset, split) = load_data(&cfg, data, split)?;
    let eval = cfg.eval_config();
    let prop = eval.propagator(&params)?;
    let ids: Vec<usize> = split.validation.iter().copied().take(limit).collect();
    if ids.is_empty() {
        bail!("no states selected");
    }

    let mut csv = csv::Writer::from_path(out.join("trajectories.csv"))?;
    csv.write_record(["state_id", "label", "layer", "mx"])?;
    let mut shots_csv = match export_shots {
        Some(_) => {
            let mut w = csv::Writer::from_path(out.join("shots.csv"))?;
            w.write_record(["state_id", "shot", "site", "outcome"])?;
            Some(w)
        }
        None => None,
    };
    let shot_key = StreamKey::root(cfg.seed).path(&[DOMAIN_SHOTS, 0, u64::MAX]);
    let mut series = Vec::new();
    let mut seen = [false; 2];
    for &id in &ids {
        let s = &dataset.samples[id];
        let t = prop.trajectory(&s.to_input_state(cfg.network.sites)?, Pauli::X)?;
        for (layer, mx) in t.values.iter().enumerate() {
            csv.write_record([id.to_string(), s.label.to_string(), layer.to_string(), mx.to_string()])?;
        }
        if let (Some(w), Some(n)) = (shots_csv.as_mut(), export_shots) {
            let est = ShotSampler::new(&t.state)?.estimate(n, shot_key.child(id as u64), true)?;
            for (shot, outcomes) in est.outcomes.unwrap_or_default().iter().enumerate() {
                for (site, o) in outcomes.iter().enumerate() {
                    w.write_record([id.to_string(), shot.to_string(), site.to_string(), o.to_string()])?;
                }
            }
        }
        let k = (s.label == Label::B) as usize;
        series.push(Series {
            name: format!("label {}", s.label),
            color: if k == 0 { COLOR_A } else { COLOR_B },
            points: t.values.iter().enumerate().map(|(l, &m)| (l as f64, m)).collect(),
            legend: !std::mem::replace(&mut seen[k], true),
        });
    }
    csv.flush()?;
    if let Some(mut w) = shots_csv {
        w.flush()?;
    }
    let plot = Plot {
        title: "Magnetization per layer".into(),
        x_label: "layer".into(),
        y_label: "m^x".into(),
        series,
    };
    write(&out.join("trajectories.svg"), plot.render())?;
    println!("wrote {} trajectories to {}", ids.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct StateReport {
    state_id: usize,
    label: Label,
    m: f64,
    prediction: Label,
}

#[derive(Serialize)]
struct Report {
    schema: &'static str,
    accuracy: f64,
    margin: f64,
    centroids: Centroids,
    states: Vec<StateReport>,
}

pub fn evaluate(run: &RunArgs, params: &Path, data: Option<&Path>, split: Option<&Path>, on: Part, min_accuracy: f64) -> Result<()> {
    let cfg = resolve(run)?;
    let params = params_or_initial(&cfg, Some(params))?;
    let (dataset, split) = load_data(&cfg, data, split)?;
    let mut setup = cfg.setup();
    setup.train.minibatch = setup.train.minibatch.min(split.train.len());
    let trainer = Trainer::new(setup, &dataset.samples, &split, params.clone())?;
    let centroids = trainer.centroids(&params)?;
    let (ids, outputs) = match on {
        Part::Validation => (&split.validation, trainer.validation_outputs(&params)?),
        Part::Train => (&split.train, trainer.training_outputs(&params)?),
    };
    let result = classify(&outputs, &centroids)?;
    let report = Report {
        schema: REPORT_SCHEMA,
        accuracy: result.accuracy,
        margin: result.margin,
        centroids,
        states: ids
            .iter()
            .zip(&outputs)
            .zip(&result.predictions)
            .map(|((&state_id, &(m, label)), &prediction)| StateReport {
                state_id,
                label,
                m,
                prediction,
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    if let Some(o) = &run.out {
        fs::create_dir_all(o)?;
        write(&o.join("report.json"), &json)?;
    }
    print!("{json}");
    if result.accuracy < min_accuracy {
        return Err(ThresholdFailure(format!("accuracy {:.3} is below the required {min_accuracy}", result.accuracy)).into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&ThresholdFailure("x".into()).into()), 3);
        let numerical = qnn_core::Error::NegativeProbability { site: 0, p: -1.0 };
        assert_eq!(exit_code(&anyhow::Error::from(numerical).context("round")), 2);
        assert_eq!(exit_code(&qnn_core::Error::InvalidArgument("x".into()).into()), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("plain")), 1);
    }

    #[test]
    fn resume_tolerates_more_rounds_only() {
        let a = RunConfig::preset(Preset::ReducedI);
        let mut b = a.clone();
        b.train.rounds += 5;
        assert!(same_run(&a, &b));
        b.seed += 1;
        assert!(!same_run(&a, &b));
    }
}
