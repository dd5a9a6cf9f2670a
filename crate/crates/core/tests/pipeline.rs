use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qnn_core::config::{Preset, RunConfig};
use qnn_core::data::{Dataset, DatasetTag, Split};
use qnn_core::model::params::A_INITIAL;
use qnn_core::oracle::{evolve_dense, random_bloch, DenseLayerState};
use qnn_core::rng::StreamKey;
use qnn_core::sampler::estimate_magnetization;
use qnn_core::tn::{product_state_mps, Backend, BondDims, Propagator, TruncConfig};
use qnn_core::training::{classify, Centroids, Trainer};
use qnn_core::{NetworkConfig, ParamSet, Pauli};

fn tiny(backend: Backend, exact: bool) -> RunConfig {
    let mut c = RunConfig::preset(Preset::ReducedI);
    for o in ["network.sites=4", "network.layers=2", "data.count=16", "data.train=12", "data.validation=4", "train.minibatch=4", "train.rounds=3", "sampler.shots=50"] {
        c.apply_override(o).unwrap();
    }
    c.backend = backend;
    c.sampler.exact = exact;
    c.validate().unwrap();
    c
}

#[test]
fn training_is_deterministic_and_independent_of_threads() {
    let c = tiny(Backend::Sweep, false);
    let data = c.dataset().unwrap();
    let split = c.split().unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            let mut t = Trainer::new(c.setup(), &data.samples, &split, c.initial_params().unwrap()).unwrap();
            t.run(None).unwrap().clone()
        })
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(2));
    assert_eq!(a.len(), 3);
}

#[test]
fn backends_give_the_same_exact_training_history() {
    let histories: Vec<_> = [Backend::Dense, Backend::Mpo, Backend::Sweep]
        .into_iter()
        .map(|b| {
            let c = tiny(b, true);
            let data = c.dataset().unwrap();
            let split = c.split().unwrap();
            let mut t = Trainer::new(c.setup(), &data.samples, &split, c.initial_params().unwrap()).unwrap();
            t.run(None).unwrap().clone()
        })
        .collect();
    for h in &histories[1..] {
        for (x, y) in h.records.iter().zip(&histories[0].records) {
            assert!((x.validation_loss - y.validation_loss).abs() < 1e-8);
            assert!((x.training_loss - y.training_loss).abs() < 1e-8);
        }
    }
}

#[test]
fn untrained_identity_channel_classifies_at_chance() {
    let data = Dataset::generate(DatasetTag::I, 400, 5).unwrap();
    let split = Split::new(400, 200, 200, 5).unwrap();
    let mut c = tiny(Backend::Mpo, true);
    c.network.sites = 3;
    let t = Trainer::new(c.setup(), &data.samples, &split, ParamSet::zeros()).unwrap();
    let centroids = t.centroids(&ParamSet::zeros()).unwrap();
    let acc = classify(&t.validation_outputs(&ParamSet::zeros()).unwrap(), &centroids).unwrap().accuracy;
    assert!((acc - 0.5).abs() < 0.12, "accuracy {acc}");
}

#[test]
fn exact_and_shot_losses_agree_within_noise() {
    let data = Dataset::generate(DatasetTag::I, 10, 8).unwrap();
    let samples: Vec<_> = data.samples.iter().enumerate().collect();
    let mut c = tiny(Backend::Mpo, true);
    let exact = qnn_core::training::loss_of_params(&c.initial_params().unwrap(), &samples, &c.eval_config(), &c.loss, StreamKey::root(1)).unwrap();
    c.sampler.exact = false;
    c.sampler.shots = 4000;
    let shots = qnn_core::training::loss_of_params(&c.initial_params().unwrap(), &samples, &c.eval_config(), &c.loss, StreamKey::root(1)).unwrap();
    let std = 0.5 / (4000.0f64 * 4.0).sqrt();
    let pairs = (samples.len() * samples.len()) as f64;
    assert!((exact - shots).abs() < 5.0 * pairs * std, "{exact} vs {shots}");
    assert_ne!(exact, shots);
}

#[test]
fn centroids_from_outputs_classify_their_own_points() {
    let outs = [(0.1, qnn_core::data::Label::A), (0.3, qnn_core::data::Label::B)];
    let c = Centroids::from_outputs(&outs).unwrap();
    assert_eq!(classify(&outs, &c).unwrap().accuracy, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tensor_networks_track_the_dense_oracle(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ParamSet::random(&mut rng);
        let config = NetworkConfig::new(n, 3, 0.1).unwrap();
        let bloch = random_bloch(&mut rng);
        let reference = evolve_dense(&p, &config, &DenseLayerState::product_state(bloch, n).unwrap(), Pauli::X).unwrap();
        for b in [Backend::Mpo, Backend::Sweep] {
            let t = Propagator::new(b, &p, &config, BondDims::unlimited(), &TruncConfig::default())
                .unwrap()
                .trajectory(&product_state_mps(bloch, n).unwrap(), Pauli::X)
                .unwrap();
            for (x, y) in t.values.iter().zip(&reference) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shot_estimates_stay_in_range(seed in any::<u64>()) {
        let p = ParamSet::dataset_i(&A_INITIAL).unwrap();
        let config = NetworkConfig::new(5, 2, 0.1).unwrap();
        let bloch = random_bloch(&mut ChaCha8Rng::seed_from_u64(seed));
        let state = Propagator::new(Backend::Mpo, &p, &config, BondDims::new(16, 16), &TruncConfig::default())
            .unwrap()
            .evolve(&product_state_mps(bloch, 5).unwrap())
            .unwrap();
        let est = estimate_magnetization(&state, 100, StreamKey::root(seed)).unwrap();
        prop_assert!(est.value.abs() <= 0.5);
        prop_assert_eq!(est.value, est.outcome_sum as f64 / 1000.0);
    }
}
