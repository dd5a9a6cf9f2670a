//! Dense Lindblad generator of the layer-to-layer dynamics in the
//! small-time-step limit.

use super::gate::{boundary_operators, bulk_operators};
use super::network::NetworkConfig;
use super::params::ParamSet;
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, C64, I, ONE, ZERO};
use crate::vectorization::{unvectorize, vectorize};

/// Largest chain handled with dense `2^N × 2^N` matrices.
pub const DENSE_MAX_SITES: usize = 6;

pub(crate) fn guard(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::SizeGuard { n, limit });
    }
    Ok(())
}

/// `1_{2^first} ⊗ op ⊗ 1_rest` on an `n`-qubit register.
pub fn embed(op: &DenseTensor, first: usize, n: usize) -> DenseTensor {
    let k = op.rows().trailing_zeros() as usize;
    assert!(first + k <= n);
    DenseTensor::identity(1 << first)
        .kron(op)
        .kron(&DenseTensor::identity(1 << (n - first - k)))
}

/// `(H_k, J_k)` for `k = 1..=N`, each embedded in the full register. Site 1
/// carries the boundary (single-site) operators.
pub fn local_operators(params: &ParamSet, n: usize) -> Vec<(DenseTensor, DenseTensor)> {
    let (hb, jb) = boundary_operators(params);
    let (h2, j2) = bulk_operators(params);
    let mut ops = vec![(embed(&hb, 0, n), embed(&jb, 0, n))];
    for k in 2..=n {
        ops.push((embed(&h2, k - 2, n), embed(&j2, k - 2, n)));
    }
    ops
}

/// `L[ρ] = −i[Σ H_k, ρ] + Σ (J_k ρ J_k† − ½{J_k† J_k, ρ})`.
pub fn lindblad_apply(params: &ParamSet, config: &NetworkConfig, rho: &DenseTensor) -> Result<DenseTensor> {
    let n = config.sites;
    guard(n, DENSE_MAX_SITES)?;
    let d = 1usize << n;
    if rho.shape() != [d, d] {
        return Err(Error::Shape(format!("expected {d}x{d} density matrix, got {:?}", rho.shape())));
    }
    apply_with(&local_operators(params, n), rho)
}

fn apply_with(ops: &[(DenseTensor, DenseTensor)], rho: &DenseTensor) -> Result<DenseTensor> {
    let d = rho.rows();
    let mut h_total = DenseTensor::zeros(&[d, d]);
    for (h, _) in ops {
        h_total.add_assign_scaled(h, ONE);
    }
    let mut out = h_total.matmul(rho)?.sub(&rho.matmul(&h_total)?)?.scale(-I);
    let half = C64::new(0.5, 0.0);
    for (_, j) in ops {
        let jd = j.adjoint();
        let jdj = jd.matmul(j)?;
        out.add_assign_scaled(&j.matmul(rho)?.matmul(&jd)?, ONE);
        out.add_assign_scaled(&jdj.matmul(rho)?, -half);
        out.add_assign_scaled(&rho.matmul(&jdj)?, -half);
    }
    Ok(out)
}

/// The generator as a `4^N × 4^N` matrix on vectorized states, assembled
/// column by column from [`lindblad_apply`].
pub fn lindblad_superoperator(params: &ParamSet, config: &NetworkConfig) -> Result<DenseTensor> {
    let n = config.sites;
    guard(n, 4)?;
    let ops = local_operators(params, n);
    let dd = 1usize << (2 * n);
    let mut sup = DenseTensor::zeros(&[dd, dd]);
    let mut basis = vec![ZERO; dd];
    for col in 0..dd {
        basis[col] = ONE;
        let out = vectorize(&apply_with(&ops, &unvectorize(&basis, n))?, n);
        basis[col] = ZERO;
        for (row, v) in out.into_iter().enumerate() {
            sup.data_mut()[row * dd + col] = v;
        }
    }
    Ok(sup)
}
