use crate::error::{Error, Result};
use crate::model::gate::{boundary_gate, build_gate};
use crate::model::{NetworkConfig, ParamSet};
use crate::tensor::{svd_truncate, DenseTensor, SvdTruncation, C64, ONE, ZERO};
use crate::vectorization::TRACE_VECTOR;

use super::chain::{self, dims3};
use super::mps::{vec_mat, LayerMps};
use super::{TruncConfig, UNLIMITED};

/// Layer channel as a matrix-product operator with site tensors
/// `(χl, 4 out, 4 in, χr)`.
#[derive(Clone, Debug)]
pub struct LayerMpo {
    sites: Vec<DenseTensor>,
    chi_max: usize,
    discarded_weight: f64,
}

impl LayerMpo {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn chi_max(&self) -> usize {
        self.chi_max
    }

    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|s| s.shape()[3]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Chain of `(χl, 4 in, χr)` tensors obtained by closing every output
    /// leg with the trace vector.
    fn traced_outputs(&self) -> Vec<DenseTensor> {
        self.sites
            .iter()
            .map(|s| {
                let sh = s.shape();
                let (a, b) = (sh[0], sh[3]);
                let mut out = DenseTensor::zeros(&[a, 4, b]);
                for i in 0..a {
                    for p in 0..4 {
                        for j in 0..b {
                            let v = TRACE_VECTOR[0] * s.get(&[i, 0, p, j]) + TRACE_VECTOR[3] * s.get(&[i, 3, p, j]);
                            out.set(&[i, p, j], v);
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// Distance between `tr ∘ Φ` and the trace functional, as a Frobenius
    /// norm relative to the trace functional itself. Exact contraction for
    /// `N ≤ 8`; otherwise through overlaps, which limits the resolution to
    /// roughly 1e-7.
    pub fn trace_defect(&self) -> Result<f64> {
        let traced = self.traced_outputs();
        let n = self.len();
        let scale = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        if n <= 8 {
            let v = chain::contract_to_vector(&traced)?;
            let mut err2 = 0.0;
            for (idx, x) in v.iter().enumerate() {
                let expected = (0..n).all(|k| {
                    let p = (idx >> (2 * (n - 1 - k))) & 3;
                    p == 0 || p == 3
                });
                let e = if expected { ONE } else { ZERO };
                err2 += (x - e).norm_sqr();
            }
            return Ok((err2 / 2f64.powi(n as i32)).sqrt());
        }
        // normalized overlaps <T,T>, <t,T> with t the trace product
        let hat: Vec<DenseTensor> = traced.iter().map(|t| t.scale(scale)).collect();
        let mut env_tt = DenseTensor::identity(1);
        let mut env_t = vec![ONE];
        let t_hat = TRACE_VECTOR.map(|x| x * scale);
        for s in &hat {
            let (a, _, b) = dims3(s);
            // env_tt[b, b'] = Σ env_tt[a, a'] s[a, p, b] conj(s[a', p, b'])
            let left = env_tt.matmul(&s.conj().reshape(&[a, 4 * b])?)?.reshape(&[a * 4, b])?;
            env_tt = s.clone().reshape(&[a * 4, b])?.transpose().matmul(&left)?;
            env_t = vec_mat(&env_t, &super::mps::contract_physical(s, &t_hat.map(|x| x.conj())));
        }
        let tt = env_tt.at(0, 0).re;
        let cross = env_t[0].re;
        Ok((tt - 2.0 * cross + 1.0).max(0.0).sqrt())
    }
}

/// Builds the layer channel as an MPO.
///
/// Gates are absorbed from site `N` down to site 1. Each bulk gate acts on
/// the old qubits of sites `k−1`, `k` and the new qubit of site `k`; the new
/// qubit enters as the vacuum and the old qubit of site `k` is traced out
/// right after the gate, so site `k` is final once its gate is absorbed. The
/// resulting bonds are at most 16 and are compressed to `chi_mpo` at the end.
pub fn build_layer_mpo(params: &ParamSet, config: &NetworkConfig, chi_mpo: usize, trunc: &TruncConfig) -> Result<LayerMpo> {
    config.validate()?;
    if chi_mpo == 0 {
        return Err(Error::InvalidArgument("chi_mpo must be positive".into()));
    }
    let n = config.sites;
    let bulk = build_gate(params, config.dt).superoperator();
    let edge = boundary_gate(params, config.dt).superoperator();
    let t = TRACE_VECTOR;

    // m3[(p, q, b), o] = Σ_a t[a] S[(p, a, b), (q, o, vacuum)]
    let m3 = DenseTensor::from_fn_2d(64, 4, |row, o| {
        let (p, q, b) = (row / 16, (row / 4) % 4, row % 4);
        (0..4).map(|a| t[a] * bulk.at(16 * p + 4 * a + b, 16 * q + 4 * o)).sum()
    });
    let m1 = DenseTensor::from_fn_2d(4, 4, |b, o| (0..4).map(|a| t[a] * edge.at(4 * a + b, 4 * o)).sum());

    let exact = SvdTruncation::new(None, trunc.rel_cutoff);
    let mut discarded = 0.0;
    let mut done: Vec<DenseTensor> = Vec::with_capacity(n);
    // pending tensor of the current site: (o, in, χr)
    let mut pending = DenseTensor::identity(4);
    let mut right = 1;
    for _ in (2..=n).rev() {
        let x = m3.matmul(&pending.reshape(&[4, 4 * right])?)?.reshape(&[16, 16 * right])?;
        let svd = svd_truncate(&x, &exact)?;
        discarded += svd.discarded_weight;
        let m = svd.s.len();
        done.push(svd.sv().reshape(&[m, 4, 4, right])?);
        pending = svd.u;
        right = m;
    }
    let first = m1.matmul(&pending.reshape(&[4, 4 * right])?)?;
    done.push(first.reshape(&[1, 4, 4, right])?);
    done.reverse();

    let mut mpo = LayerMpo {
        sites: done,
        chi_max: chi_mpo,
        discarded_weight: discarded,
    };
    mpo.compress(chi_mpo, trunc)?;
    trunc.check_alarm("layer MPO construction", mpo.discarded_weight);
    Ok(mpo)
}

impl LayerMpo {
    fn compress(&mut self, chi: usize, trunc: &TruncConfig) -> Result<()> {
        let mut flat: Vec<DenseTensor> = self
            .sites
            .drain(..)
            .map(|s| {
                let sh = s.shape().to_vec();
                s.reshape(&[sh[0], 16, sh[3]])
            })
            .collect::<Result<_>>()?;
        chain::right_canonicalize(&mut flat)?;
        self.discarded_weight += chain::truncate_left_to_right(&mut flat, &trunc.policy(chi))?;
        self.sites = flat
            .into_iter()
            .map(|s| {
                let (a, _, b) = dims3(&s);
                s.reshape(&[a, 4, 4, b])
            })
            .collect::<Result<_>>()?;
        self.chi_max = chi;
        Ok(())
    }

    /// The identity channel on `n` sites.
    pub fn identity(n: usize) -> Self {
        let site = DenseTensor::identity(4).reshape(&[1, 4, 4, 1]).expect("16 entries");
        Self {
            sites: vec![site; n],
            chi_max: UNLIMITED,
            discarded_weight: 0.0,
        }
    }
}

/// Applies `mpo` to `state` by a zip-up contraction followed by a
/// truncating sweep, both capped at `chi_mps`. The discarded weight is
/// added to the state's running total.
pub fn apply_mpo(state: &LayerMps, mpo: &LayerMpo, chi_mps: usize, trunc: &TruncConfig) -> Result<LayerMps> {
    if state.len() != mpo.len() {
        return Err(Error::Shape(format!("state has {} sites, MPO {}", state.len(), mpo.len())));
    }
    if chi_mps == 0 {
        return Err(Error::InvalidArgument("chi_mps must be positive".into()));
    }
    let mut state = state.clone();
    state.right_canonicalize()?;
    let (input, previous) = state.into_parts();
    let policy = trunc.policy(chi_mps);
    let n = input.len();
    let mut out = Vec::with_capacity(n);
    let mut weight = 0.0;
    // carry (a, s, o): new bond, state bond, operator bond
    let mut carry = DenseTensor::identity(1).reshape(&[1, 1, 1])?;
    for (k, (a_site, o_site)) in input.iter().zip(mpo.sites()).enumerate() {
        let (a, s, o) = dims3(&carry);
        let (_, _, sr) = dims3(a_site);
        let or = o_site.shape()[3];
        let ca = carry
            .permute(&[0, 2, 1])?
            .reshape(&[a * o, s])?
            .matmul(&a_site.clone().reshape(&[s, 4 * sr])?)?
            .reshape(&[a, o, 4, sr])?;
        // (a, sr, out, or) -> (a, out, sr, or)
        let z = ca.contract(&[1, 2], o_site, &[0, 2])?.permute(&[0, 2, 1, 3])?;
        if k + 1 == n {
            out.push(z.reshape(&[a, 4, 1])?);
        } else {
            let svd = svd_truncate(&z.reshape(&[a * 4, sr * or])?, &policy)?;
            weight += svd.discarded_weight;
            let m = svd.s.len();
            carry = svd.sv().reshape(&[m, sr, or])?;
            out.push(svd.u.reshape(&[a, 4, m])?);
        }
    }
    weight += chain::truncate_right_to_left(&mut out, &policy)?;
    trunc.check_alarm("MPO application", weight);
    Ok(LayerMps::from_parts(out, Some(0), chi_mps, previous + weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_dense_channel, random_bloch, DenseLayerState};
    use crate::tn::product_state_mps;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_mps(rng: &mut ChaCha8Rng, n: usize) -> LayerMps {
        // a superposition of dense product states gives a generic bonded MPS
        let a = DenseLayerState::random_product(rng, n);
        let b = DenseLayerState::random_product(rng, n);
        let mix = a.rho().scale(C64::new(0.3, 0.0)).add(&b.rho().scale(C64::new(0.7, 0.0))).unwrap();
        LayerMps::from_dense(&DenseLayerState::new(mix, n).unwrap(), &SvdTruncation::unlimited()).unwrap()
    }

    #[test]
    fn trivial_parameters_give_identity_channel() {
        let cfg = NetworkConfig::new(4, 1, 0.1).unwrap();
        let mpo = build_layer_mpo(&ParamSet::zeros(), &cfg, 16, &TruncConfig::default()).unwrap();
        assert_eq!(mpo.max_bond(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = product_state_mps(random_bloch(&mut rng), 4).unwrap();
        let out = apply_mpo(&s, &mpo, 16, &TruncConfig::default()).unwrap();
        let (a, b) = (s.to_dense().unwrap(), out.to_dense().unwrap());
        assert!(a.rho().max_abs_diff(b.rho()) < 1e-12);
    }

    #[test]
    fn identity_mpo_leaves_state_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_mps(&mut rng, 4);
        let out = apply_mpo(&s, &LayerMpo::identity(4), UNLIMITED, &TruncConfig::default()).unwrap();
        assert!(s.to_dense().unwrap().rho().max_abs_diff(out.to_dense().unwrap().rho()) < 1e-12);
    }

    #[test]
    fn matches_dense_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = ParamSet::random(&mut rng);
        let cfg = NetworkConfig::new(4, 1, 0.1).unwrap();
        let mpo = build_layer_mpo(&p, &cfg, UNLIMITED, &TruncConfig::default()).unwrap();
        assert!(mpo.max_bond() <= 16);
        let ch = build_dense_channel(&p, &cfg).unwrap();
        for _ in 0..20 {
            let s = random_mps(&mut rng, 4);
            let dense = ch.apply(&s.to_dense().unwrap());
            let out = apply_mpo(&s, &mpo, UNLIMITED, &TruncConfig::default()).unwrap();
            assert!(out.to_dense().unwrap().rho().max_abs_diff(dense.rho()) < 1e-8);
        }
    }

    #[test]
    fn trace_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = ParamSet::random(&mut rng);
        let cfg = NetworkConfig::new(6, 1, 0.1).unwrap();
        let mpo = build_layer_mpo(&p, &cfg, 16, &TruncConfig::default()).unwrap();
        assert!(mpo.trace_defect().unwrap() < 1e-8);
        let big = NetworkConfig::new(20, 1, 0.1).unwrap();
        let mpo = build_layer_mpo(&p, &big, 16, &TruncConfig::default()).unwrap();
        assert!(mpo.trace_defect().unwrap() < 1e-6);
        let mut broken = LayerMpo::identity(3);
        broken.sites[1] = broken.sites[1].scale(C64::new(0.5, 0.0));
        assert!(broken.trace_defect().unwrap() > 0.1);
    }

    #[test]
    fn bond_cap_is_respected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = ParamSet::random(&mut rng);
        let cfg = NetworkConfig::new(6, 1, 0.1).unwrap();
        let mpo = build_layer_mpo(&p, &cfg, 4, &TruncConfig::default()).unwrap();
        assert!(mpo.max_bond() <= 4);
        assert!(mpo.discarded_weight() > 0.0);
        let mut s = product_state_mps(random_bloch(&mut rng), 6).unwrap();
        for _ in 0..3 {
            s = apply_mpo(&s, &mpo, 5, &TruncConfig::default()).unwrap();
            assert!(s.max_bond() <= 5);
        }
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let s = product_state_mps([0.0, 0.0, 0.5], 3).unwrap();
        assert!(apply_mpo(&s, &LayerMpo::identity(4), 8, &TruncConfig::default()).is_err());
    }
}
