use crate::error::{Error, Result};
use crate::model::gate::{boundary_gate, build_gate};
use crate::model::{NetworkConfig, ParamSet};
use crate::tensor::{svd_truncate, DenseTensor};
use crate::vectorization::TRACE_VECTOR;

use super::chain::dims3;
use super::mps::LayerMps;
use super::TruncConfig;

/// Gate superoperators with the fresh qubit fed the vacuum and the
/// outgoing old qubit traced: bulk `(p, b) ← (q, o)` on two sites and the
/// chain-end map `b ← o` on one.
pub(crate) struct ReducedGates {
    bulk: DenseTensor,
    edge: DenseTensor,
}

impl ReducedGates {
    pub(crate) fn new(params: &ParamSet, dt: f64) -> Self {
        let s3 = build_gate(params, dt).superoperator();
        let s2 = boundary_gate(params, dt).superoperator();
        let t = TRACE_VECTOR;
        let bulk = DenseTensor::from_fn_2d(16, 16, |row, col| {
            let (p, b) = (row / 4, row % 4);
            let (q, o) = (col / 4, col % 4);
            (0..4).map(|a| t[a] * s3.at(16 * p + 4 * a + b, 16 * q + 4 * o)).sum()
        });
        let edge = DenseTensor::from_fn_2d(4, 4, |b, o| (0..4).map(|a| t[a] * s2.at(4 * a + b, 4 * o)).sum());
        Self { bulk, edge }
    }
}

/// One layer applied gate by gate on the state itself, sweeping the
/// orthogonality center from the last site to the first and truncating
/// each bond to `chi_mps` as soon as its gate has acted.
pub fn sweep_evolve(state: &LayerMps, params: &ParamSet, config: &NetworkConfig, chi_mps: usize, trunc: &TruncConfig) -> Result<LayerMps> {
    config.validate()?;
    if state.len() != config.sites {
        return Err(Error::Shape(format!("state has {} sites, network {}", state.len(), config.sites)));
    }
    sweep_with(state, &ReducedGates::new(params, config.dt), chi_mps, trunc)
}

pub(crate) fn sweep_with(state: &LayerMps, gates: &ReducedGates, chi_mps: usize, trunc: &TruncConfig) -> Result<LayerMps> {
    if chi_mps == 0 {
        return Err(Error::InvalidArgument("chi_mps must be positive".into()));
    }
    let mut state = state.clone();
    state.left_canonicalize()?;
    let (mut sites, previous) = state.into_parts();
    let policy = trunc.policy(chi_mps);
    let mut weight = 0.0;
    for i in (1..sites.len()).rev() {
        let (a, _, b) = dims3(&sites[i - 1]);
        let (_, _, c) = dims3(&sites[i]);
        let theta = sites[i - 1]
            .clone()
            .reshape(&[a * 4, b])?
            .matmul(&sites[i].clone().reshape(&[b, 4 * c])?)?
            .reshape(&[a, 16, c])?;
        let x = gates
            .bulk
            .contract(&[1], &theta, &[1])?
            .reshape(&[4, 4, a, c])?
            .permute(&[2, 0, 1, 3])?
            .reshape(&[a * 4, 4 * c])?;
        let svd = svd_truncate(&x, &policy)?;
        weight += svd.discarded_weight;
        let m = svd.s.len();
        sites[i - 1] = svd.us().reshape(&[a, 4, m])?;
        sites[i] = svd.v.reshape(&[m, 4, c])?;
    }
    let (a, _, c) = dims3(&sites[0]);
    sites[0] = gates
        .edge
        .contract(&[1], &sites[0], &[1])?
        .permute(&[1, 0, 2])?
        .reshape(&[a, 4, c])?;
    trunc.check_alarm("gate sweep", weight);
    Ok(LayerMps::from_parts(sites, Some(0), chi_mps, previous + weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{layer_step_dense, random_bloch, DenseLayerState};
    use crate::tensor::SvdTruncation;
    use crate::tn::{product_state_mps, UNLIMITED};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_parameters_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = product_state_mps(random_bloch(&mut rng), 5).unwrap();
        let cfg = NetworkConfig::new(5, 1, 0.1).unwrap();
        let out = sweep_evolve(&s, &ParamSet::zeros(), &cfg, 8, &TruncConfig::default()).unwrap();
        assert!(s.to_dense().unwrap().rho().max_abs_diff(out.to_dense().unwrap().rho()) < 1e-12);
    }

    #[test]
    fn matches_dense_layer_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = NetworkConfig::new(4, 1, 0.1).unwrap();
        for _ in 0..3 {
            let p = ParamSet::random(&mut rng);
            let d = DenseLayerState::random_product(&mut rng, 4);
            let s = LayerMps::from_dense(&d, &SvdTruncation::unlimited()).unwrap();
            let out = sweep_evolve(&s, &p, &cfg, UNLIMITED, &TruncConfig::default()).unwrap();
            let expected = layer_step_dense(&p, &cfg, &d).unwrap();
            assert!(out.to_dense().unwrap().rho().max_abs_diff(expected.rho()) < 1e-10);
            assert_eq!(out.center(), Some(0));
        }
    }

    #[test]
    fn respects_bond_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ParamSet::random(&mut rng);
        let cfg = NetworkConfig::new(8, 1, 0.1).unwrap();
        let mut s = product_state_mps(random_bloch(&mut rng), 8).unwrap();
        for _ in 0..4 {
            s = sweep_evolve(&s, &p, &cfg, 6, &TruncConfig::default()).unwrap();
            assert!(s.max_bond() <= 6);
        }
        assert!(s.discarded_weight() > 0.0);
    }
}
