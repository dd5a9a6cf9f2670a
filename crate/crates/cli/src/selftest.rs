use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qnn_core::data::Label;
use qnn_core::model::params::{A_INITIAL, DATASET_II_MASK};
use qnn_core::oracle::{evolve_dense, lindblad_limit_error, random_bloch, DenseLayerState};
use qnn_core::rng::StreamKey;
use qnn_core::sampler::estimate_magnetization;
use qnn_core::tn::{build_layer_mpo, product_state_mps, Backend, BondDims, Propagator, TruncConfig, UNLIMITED};
use qnn_core::training::{contrastive_loss, nadam_step, LossConfig, NadamConfig, OptimizerState};
use qnn_core::{NetworkConfig, ParamSet, Pauli};

use crate::commands::ThresholdFailure;

struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
}

fn backends_match_dense(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ParamSet::random(&mut rng);
    let config = NetworkConfig::new(4, 3, 0.1)?;
    let bloch = random_bloch(&mut rng);
    let reference = evolve_dense(&params, &config, &DenseLayerState::product_state(bloch, 4)?, Pauli::X)?;
    let input = product_state_mps(bloch, 4)?;
    let mut worst = 0.0f64;
    for b in [Backend::Mpo, Backend::Sweep] {
        let t = Propagator::new(b, &params, &config, BondDims::unlimited(), &TruncConfig::default())?.trajectory(&input, Pauli::X)?;
        for (x, y) in t.values.iter().zip(&reference) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

fn mpo_trace_defect(seed: u64) -> Result<f64> {
    let params = ParamSet::random(&mut ChaCha8Rng::seed_from_u64(seed));
    let mpo = build_layer_mpo(&params, &NetworkConfig::new(6, 1, 0.1)?, UNLIMITED, &TruncConfig::default())?;
    Ok(mpo.trace_defect()?)
}

fn lindblad_halving_ratio(seed: u64) -> Result<f64> {
    let params = ParamSet::random_masked(&mut ChaCha8Rng::seed_from_u64(seed), &DATASET_II_MASK)?;
    let e = lindblad_limit_error(&params, &NetworkConfig::new(3, 1, 0.1)?, &[0.002, 0.001])?;
    Ok(e[1] / e[0])
}

/// Shot estimate deviation in units of the worst-case standard error.
fn sampler_deviation(seed: u64) -> Result<f64> {
    let params = ParamSet::dataset_i(&A_INITIAL)?;
    let config = NetworkConfig::new(6, 2, 0.1)?;
    let bloch = random_bloch(&mut ChaCha8Rng::seed_from_u64(seed));
    let state = Propagator::new(Backend::Mpo, &params, &config, BondDims::unlimited(), &TruncConfig::default())?.evolve(&product_state_mps(bloch, 6)?)?;
    let shots = 4000;
    let est = estimate_magnetization(&state, shots, StreamKey::root(seed))?;
    Ok((est.value - state.magnetization_expectation(Pauli::X)).abs() / (0.5 / (shots as f64).sqrt()))
}

fn hand_values() -> Result<f64> {
    let loss = contrastive_loss(&[(0.1, Label::A), (0.2, Label::B)], &LossConfig::new(0.25)?)?;
    let cfg = NadamConfig {
        beta1: 0.75,
        beta2: 0.98,
        learning_rate: 0.05,
        delta: 1e-7,
    };
    let f = nadam_step(&mut OptimizerState::new(1), &cfg, &[2.0])?;
    Ok((loss - 0.01125).abs().max((f[0] - 3.5 / (2.0 + 1e-7)).abs()))
}

pub fn run(seed: u64) -> Result<()> {
    let checks = [
        Check {
            name: "tensor-network backends reproduce dense evolution",
            value: backends_match_dense(seed)?,
            limit: 1e-8,
        },
        Check {
            name: "layer MPO preserves the trace",
            value: mpo_trace_defect(seed)?,
            limit: 1e-8,
        },
        Check {
            name: "collision channel approaches the Lindblad limit at second order",
            value: lindblad_halving_ratio(seed)?,
            limit: 0.35,
        },
        Check {
            name: "shot estimate within 5 standard errors",
            value: sampler_deviation(seed)?,
            limit: 5.0,
        },
        Check {
            name: "loss and optimizer hand values",
            value: hand_values()?,
            limit: 1e-12,
        },
    ];
    let mut failed = 0;
    for c in &checks {
        let ok = c.value <= c.limit;
        failed += !ok as usize;
        println!("{} {}: {:.3e} (limit {:.1e})", if ok { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    if failed > 0 {
        return Err(ThresholdFailure(format!("{failed} of {} self-checks failed", checks.len())).into());
    }
    Ok(())
}
