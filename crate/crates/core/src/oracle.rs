//! Exact reference implementation of the layer channel for small chains.
//!
//! The layer step is carried out literally on the doubled register of
//! `2N` qubits (old layer followed by new layer): the input is embedded as
//! `ρ ⊗ |0…0⟩⟨0…0|`, every gate is applied by conjugation, and the old layer
//! is traced out. The superoperator form is derived from the same register
//! evolution. Everything here is correctness-first and scales as `4^N`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};
use crate::model::gate::{boundary_gate, build_gate, LocalGate};
use crate::model::lindblad::{guard, lindblad_superoperator, DENSE_MAX_SITES};
use crate::model::{NetworkConfig, ParamSet, Pauli};
use crate::tensor::{eigh, matrix_exp, DenseTensor, C64, ONE, ZERO};
use crate::vectorization::{unvectorize, vec_index, vectorize};

/// Seed of the random input states used by [`lindblad_limit_error`].
pub const ORACLE_STATE_SEED: u64 = 0x5ee_d0f0_ac1e;

/// Density matrix of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayerState {
    rho: DenseTensor,
    sites: usize,
}

impl DenseLayerState {
    /// Wraps `rho` after checking unit trace and Hermiticity to 1e-10.
    pub fn new(rho: DenseTensor, sites: usize) -> Result<Self> {
        let d = 1usize << sites;
        if rho.shape() != [d, d] {
            return Err(Error::Shape(format!("expected {d}x{d} matrix for {sites} sites, got {:?}", rho.shape())));
        }
        if (rho.trace() - ONE).norm() > 1e-10 {
            return Err(Error::InvalidArgument(format!("state trace {} is not 1", rho.trace())));
        }
        if rho.max_abs_diff(&rho.adjoint()) > 1e-10 {
            return Err(Error::InvalidArgument("state is not Hermitian".into()));
        }
        Ok(Self { rho, sites })
    }

    pub(crate) fn new_unchecked(rho: DenseTensor, sites: usize) -> Self {
        Self { rho, sites }
    }

    pub fn rho(&self) -> &DenseTensor {
        &self.rho
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// `⊗_k (1/2 + m·σ)` for a Bloch vector of length 1/2.
    pub fn product_state(bloch: [f64; 3], sites: usize) -> Result<Self> {
        guard(sites, 2 * DENSE_MAX_SITES)?;
        let site = bloch_density_matrix(bloch)?;
        let mut rho = DenseTensor::identity(1);
        for _ in 0..sites {
            rho = rho.kron(&site);
        }
        Ok(Self { rho, sites })
    }

    pub fn vacuum(sites: usize) -> Result<Self> {
        Self::product_state([0.0, 0.0, 0.5], sites)
    }

    /// Product of independent Haar-random pure qubit states.
    pub fn random_product<R: Rng + ?Sized>(rng: &mut R, sites: usize) -> Self {
        let mut rho = DenseTensor::identity(1);
        for _ in 0..sites {
            let b = random_bloch(rng);
            rho = rho.kron(&bloch_density_matrix(b).expect("unit Bloch vector"));
        }
        Self { rho, sites }
    }

    pub fn vectorized(&self) -> Vec<C64> {
        vectorize(&self.rho, self.sites)
    }

    pub fn magnetization(&self, axis: Pauli) -> f64 {
        magnetization(&self.rho, self.sites, axis)
    }

    pub fn purity(&self) -> f64 {
        self.rho.matmul(&self.rho).expect("square").trace().re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let sym = self.rho.add(&self.rho.adjoint())?.scale(C64::new(0.5, 0.0));
        Ok(eigh(&sym)?.0[0])
    }
}

/// `1/2 + m^x σ^x + m^y σ^y + m^z σ^z`.
pub fn bloch_density_matrix(bloch: [f64; 3]) -> Result<DenseTensor> {
    let r = bloch.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (r - 0.5).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("Bloch vector length {r} is not 1/2")));
    }
    let [mx, my, mz] = bloch;
    Ok(DenseTensor::from_rows([
        [C64::new(0.5 + mz, 0.0), C64::new(mx, -my)],
        [C64::new(mx, my), C64::new(0.5 - mz, 0.0)],
    ]))
}

/// Uniformly distributed point on the radius-1/2 Bloch sphere (the image of
/// a Haar-random pure qubit state).
pub fn random_bloch<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ];
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-12 {
            return v.map(|x| 0.5 * x / r);
        }
    }
}

/// Random Hermitian `2^n × 2^n` matrix with unit trace (not necessarily
/// positive).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DenseTensor {
    let d = 1 << n;
    let m = DenseTensor::from_fn_2d(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let mut h = m.add(&m.adjoint()).expect("square");
    let tr = h.trace().re;
    for i in 0..d {
        let k = i * d + i;
        h.data_mut()[k] -= C64::new((tr - 1.0) / d as f64, 0.0);
    }
    h
}

/// `Tr(m̂^α ρ)` with `m̂^α = (1/2N) Σ_k σ^α_k`.
pub fn magnetization(rho: &DenseTensor, sites: usize, axis: Pauli) -> f64 {
    let d = 1usize << sites;
    let s = axis.elements();
    let mut total = ZERO;
    for k in 0..sites {
        let bit = sites - 1 - k;
        for r in 0..d {
            // Tr(σ_k ρ) = Σ_{r,c} σ_k[c][r] ρ[r][c], with c differing from r only at bit k
            for (v, row) in s.iter().enumerate() {
                let c = (r & !(1 << bit)) | (v << bit);
                let sk = row[(r >> bit) & 1];
                if sk != ZERO {
                    total += sk * rho.at(r, c);
                }
            }
        }
    }
    total.re / (2.0 * sites as f64)
}

/// Born probabilities of the x-basis outcomes. Outcome index bit for site
/// `k` (site 1 most significant) is 0 for `+1` and 1 for `−1`.
pub fn x_outcome_probabilities(rho: &DenseTensor, sites: usize) -> Vec<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = DenseTensor::from_rows([[C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]]);
    let mut rotated = rho.clone();
    for q in 0..sites {
        conjugate(&mut rotated, sites, &hadamard, &[q]);
    }
    (0..1usize << sites).map(|i| rotated.at(i, i).re).collect()
}

/// `data ← op · data` on the row index of a `2^nq × cols` matrix, with `op`
/// acting on the qubits at `positions` (position 0 is most significant).
pub(crate) fn apply_left(data: &mut [C64], nq: usize, cols: usize, op: &DenseTensor, positions: &[usize]) {
    let k = positions.len();
    let dim = 1usize << k;
    debug_assert_eq!(op.rows(), dim);
    let bits: Vec<usize> = positions.iter().map(|&p| nq - 1 - p).collect();
    let target_mask: usize = bits.iter().map(|b| 1 << b).sum();
    let offsets: Vec<usize> = (0..dim)
        .map(|t| {
            (0..k)
                .filter(|&q| (t >> (k - 1 - q)) & 1 == 1)
                .map(|q| 1usize << bits[q])
                .sum()
        })
        .collect();
    let mut gathered = vec![ZERO; dim];
    for base in 0..1usize << nq {
        if base & target_mask != 0 {
            continue;
        }
        for c in 0..cols {
            for (t, off) in offsets.iter().enumerate() {
                gathered[t] = data[(base | off) * cols + c];
            }
            for (t, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (s, g) in gathered.iter().enumerate() {
                    acc += op.at(t, s) * g;
                }
                data[(base | off) * cols + c] = acc;
            }
        }
    }
}

/// `data ← data · op†` on the column index of a `rows × 2^nq` matrix.
fn apply_right_adjoint(data: &mut [C64], nq: usize, rows: usize, op: &DenseTensor, positions: &[usize]) {
    let k = positions.len();
    let dim = 1usize << k;
    let cols = 1usize << nq;
    let bits: Vec<usize> = positions.iter().map(|&p| nq - 1 - p).collect();
    let target_mask: usize = bits.iter().map(|b| 1 << b).sum();
    let offsets: Vec<usize> = (0..dim)
        .map(|t| {
            (0..k)
                .filter(|&q| (t >> (k - 1 - q)) & 1 == 1)
                .map(|q| 1usize << bits[q])
                .sum()
        })
        .collect();
    let mut gathered = vec![ZERO; dim];
    for r in 0..rows {
        let row = &mut data[r * cols..(r + 1) * cols];
        for base in 0..cols {
            if base & target_mask != 0 {
                continue;
            }
            for (t, off) in offsets.iter().enumerate() {
                gathered[t] = row[base | off];
            }
            for (t, off) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (s, g) in gathered.iter().enumerate() {
                    acc += op.at(t, s).conj() * g;
                }
                row[base | off] = acc;
            }
        }
    }
}

/// `ρ ← G ρ G†` on a `2^nq × 2^nq` matrix.
fn conjugate(rho: &mut DenseTensor, nq: usize, op: &DenseTensor, positions: &[usize]) {
    let d = 1usize << nq;
    apply_left(rho.data_mut(), nq, d, op, positions);
    apply_right_adjoint(rho.data_mut(), nq, d, op, positions);
}

/// Gates of one layer in application order, with their positions on the
/// doubled register (old qubit `k` at `k−1`, new qubit `k` at `N+k−1`).
///
/// The gate of site `N` acts first and the chain-end gate of site 1 last,
/// so every gate touching an old-layer qubit precedes the swap that moves
/// that qubit's content forward.
pub(crate) fn layer_gates(params: &ParamSet, config: &NetworkConfig) -> Vec<(LocalGate, Vec<usize>)> {
    let n = config.sites;
    let bulk = build_gate(params, config.dt);
    let mut gates = Vec::with_capacity(n);
    for k in (2..=n).rev() {
        gates.push((bulk.clone(), vec![k - 2, k - 1, n + k - 1]));
    }
    gates.push((boundary_gate(params, config.dt), vec![0, n]));
    gates
}

fn register_step(gates: &[(LocalGate, Vec<usize>)], rho: &DenseTensor, n: usize) -> DenseTensor {
    let d = 1usize << n;
    let nq = 2 * n;
    let big_d = 1usize << nq;
    let mut big = DenseTensor::zeros(&[big_d, big_d]);
    for i in 0..d {
        for j in 0..d {
            big.data_mut()[(i << n) * big_d + (j << n)] = rho.at(i, j);
        }
    }
    for (g, pos) in gates {
        conjugate(&mut big, nq, g.matrix(), pos);
    }
    // trace out the old layer
    DenseTensor::from_fn_2d(d, d, |i, j| {
        (0..d).map(|a| big.at((a << n) | i, (a << n) | j)).sum()
    })
}

/// One layer of the network on a dense state.
pub fn layer_step_dense(params: &ParamSet, config: &NetworkConfig, state: &DenseLayerState) -> Result<DenseLayerState> {
    guard(config.sites, DENSE_MAX_SITES)?;
    if state.sites != config.sites {
        return Err(Error::Shape(format!("state has {} sites, network {}", state.sites, config.sites)));
    }
    let gates = layer_gates(params, config);
    Ok(DenseLayerState::new_unchecked(register_step(&gates, &state.rho, config.sites), config.sites))
}

/// Dense layer superoperator acting on vectorized states.
#[derive(Clone, Debug)]
pub struct DenseChannel {
    superop: DenseTensor,
    sites: usize,
}

impl DenseChannel {
    pub fn matrix(&self) -> &DenseTensor {
        &self.superop
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn apply(&self, state: &DenseLayerState) -> DenseLayerState {
        let out = self.superop.matvec(&state.vectorized());
        DenseLayerState::new_unchecked(unvectorize(&out, self.sites), self.sites)
    }

    pub fn apply_vector(&self, v: &[C64]) -> Vec<C64> {
        self.superop.matvec(v)
    }
}

/// Superoperator of the layer channel, derived from the register evolution
/// through its Kraus operators `K_a = (⟨a| ⊗ 1) U (1 ⊗ |0…0⟩)`.
pub fn build_dense_channel(params: &ParamSet, config: &NetworkConfig) -> Result<DenseChannel> {
    let n = config.sites;
    guard(n, 5)?;
    let d = 1usize << n;
    let nq = 2 * n;
    // columns: U |j, 0⟩ for every old-layer basis state j
    let mut cols = vec![ZERO; (1usize << nq) * d];
    for j in 0..d {
        cols[(j << n) * d + j] = ONE;
    }
    for (g, pos) in layer_gates(params, config) {
        apply_left(&mut cols, nq, d, g.matrix(), &pos);
    }
    let kraus = |a: usize, i: usize, j: usize| cols[((a << n) | i) * d + j];
    let dd = d * d;
    let mut superop = DenseTensor::zeros(&[dd, dd]);
    let data = superop.data_mut();
    for i in 0..d {
        for ip in 0..d {
            let row = vec_index(i, ip, n);
            for j in 0..d {
                for jp in 0..d {
                    let mut acc = ZERO;
                    for a in 0..d {
                        acc += kraus(a, i, j) * kraus(a, ip, jp).conj();
                    }
                    data[row * dd + vec_index(j, jp, n)] = acc;
                }
            }
        }
    }
    Ok(DenseChannel { superop, sites: n })
}

/// Distance between one network layer and the Lindblad evolution
/// `exp(L dt)`: for each `dt`, the largest Frobenius-norm difference over ten
/// seeded random product states.
pub fn lindblad_limit_error(params: &ParamSet, config: &NetworkConfig, dt_list: &[f64]) -> Result<Vec<f64>> {
    let n = config.sites;
    guard(n, 4)?;
    let generator = lindblad_superoperator(params, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_STATE_SEED);
    let states: Vec<DenseLayerState> = (0..10).map(|_| DenseLayerState::random_product(&mut rng, n)).collect();
    dt_list
        .iter()
        .map(|&dt| {
            let cfg = config.with_dt(dt);
            let propagator = matrix_exp(&generator, C64::new(dt, 0.0))?;
            let mut worst: f64 = 0.0;
            for s in &states {
                let network = layer_step_dense(params, &cfg, s)?;
                let lindblad = unvectorize(&propagator.matvec(&s.vectorized()), n);
                worst = worst.max(network.rho.sub(&lindblad)?.frobenius_norm());
            }
            Ok(worst)
        })
        .collect()
}

/// Per-layer magnetizations `m^α_ℓ` for `ℓ = 0..=L`.
pub fn evolve_dense(params: &ParamSet, config: &NetworkConfig, input: &DenseLayerState, axis: Pauli) -> Result<Vec<f64>> {
    guard(config.sites, DENSE_MAX_SITES)?;
    let mut state = input.clone();
    let mut out = vec![state.magnetization(axis)];
    for _ in 0..config.layers {
        state = layer_step_dense(params, config, &state)?;
        out.push(state.magnetization(axis));
    }
    Ok(out)
}
