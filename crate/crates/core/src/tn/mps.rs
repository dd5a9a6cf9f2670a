use crate::error::{Error, Result};
use crate::model::lindblad::{guard, DENSE_MAX_SITES};
use crate::model::Pauli;
use crate::oracle::{bloch_density_matrix, DenseLayerState};
use crate::tensor::{DenseTensor, SvdTruncation, C64, ONE, ZERO};
use crate::vectorization::{unvectorize, TRACE_VECTOR};

use super::chain::{self, dims3};
use super::UNLIMITED;

/// Vectorized layer state as a matrix-product state with site tensors
/// `(χl, 4, χr)`.
#[derive(Clone, Debug)]
pub struct LayerMps {
    sites: Vec<DenseTensor>,
    center: Option<usize>,
    chi_max: usize,
    discarded_weight: f64,
}

/// Product MPS of the pure state with Bloch vector `bloch` on every site.
pub fn product_state_mps(bloch: [f64; 3], sites: usize) -> Result<LayerMps> {
    if sites == 0 {
        return Err(Error::InvalidArgument("an MPS needs at least one site".into()));
    }
    let rho = bloch_density_matrix(bloch)?;
    let site = DenseTensor::new(vec![1, 4, 1], rho.into_data())?;
    Ok(LayerMps {
        sites: vec![site; sites],
        center: Some(0),
        chi_max: UNLIMITED,
        discarded_weight: 0.0,
    })
}

impl LayerMps {
    pub fn from_sites(sites: Vec<DenseTensor>, chi_max: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("an MPS needs at least one site".into()));
        }
        let mut left = 1;
        for (k, s) in sites.iter().enumerate() {
            if s.rank() != 3 || s.shape()[0] != left || s.shape()[1] != 4 {
                return Err(Error::Shape(format!("site {k} has shape {:?}, left bond {left}", s.shape())));
            }
            left = s.shape()[2];
            if left > chi_max {
                return Err(Error::Shape(format!("bond {left} after site {k} exceeds cap {chi_max}")));
            }
        }
        if left != 1 {
            return Err(Error::Shape(format!("right boundary bond is {left}")));
        }
        Ok(Self {
            sites,
            center: None,
            chi_max,
            discarded_weight: 0.0,
        })
    }

    /// Exact (up to `policy`) MPS of a dense state, by successive SVDs.
    pub fn from_dense(state: &DenseLayerState, policy: &SvdTruncation) -> Result<Self> {
        let n = state.sites();
        let v = state.vectorized();
        let mut sites = Vec::with_capacity(n);
        let mut rest = DenseTensor::new(vec![1, v.len()], v)?;
        let mut discarded = 0.0;
        for _ in 0..n - 1 {
            let (a, len) = (rest.rows(), rest.cols());
            let svd = crate::tensor::svd_truncate(&rest.reshape(&[a * 4, len / 4])?, policy)?;
            discarded += svd.discarded_weight;
            let m = svd.s.len();
            rest = svd.sv();
            sites.push(svd.u.reshape(&[a, 4, m])?);
        }
        let a = rest.rows();
        sites.push(rest.reshape(&[a, 4, 1])?);
        Ok(Self {
            sites,
            center: Some(n - 1),
            chi_max: policy.max_rank.unwrap_or(UNLIMITED),
            discarded_weight: discarded,
        })
    }

    /// Dense density matrix; only for `N ≤ 6`.
    pub fn to_dense(&self) -> Result<DenseLayerState> {
        guard(self.len(), DENSE_MAX_SITES)?;
        let v = chain::contract_to_vector(&self.sites)?;
        Ok(DenseLayerState::new_unchecked(unvectorize(&v, self.len()), self.len()))
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn site(&self, k: usize) -> &DenseTensor {
        &self.sites[k]
    }

    /// Inner bond dimensions (length `N − 1`).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|s| s.shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn chi_max(&self) -> usize {
        self.chi_max
    }

    pub fn discarded_weight(&self) -> f64 {
        self.discarded_weight
    }

    pub(crate) fn into_parts(self) -> (Vec<DenseTensor>, f64) {
        (self.sites, self.discarded_weight)
    }

    pub(crate) fn from_parts(sites: Vec<DenseTensor>, center: Option<usize>, chi_max: usize, discarded_weight: f64) -> Self {
        Self {
            sites,
            center,
            chi_max,
            discarded_weight,
        }
    }

    pub fn left_canonicalize(&mut self) -> Result<()> {
        if self.center != Some(self.len() - 1) {
            chain::left_canonicalize(&mut self.sites)?;
            self.center = Some(self.len() - 1);
        }
        Ok(())
    }

    pub fn right_canonicalize(&mut self) -> Result<()> {
        if self.center != Some(0) {
            chain::right_canonicalize(&mut self.sites)?;
            self.center = Some(0);
        }
        Ok(())
    }

    /// `Σ_p w[p] A[:, p, :]` for site `k`.
    pub(crate) fn site_matrix(&self, k: usize, w: &[C64; 4]) -> DenseTensor {
        contract_physical(&self.sites[k], w)
    }

    /// Contraction of every physical leg with the trace vector.
    pub fn trace(&self) -> C64 {
        let mut env = vec![ONE];
        for k in 0..self.len() {
            env = vec_mat(&env, &self.site_matrix(k, &TRACE_VECTOR));
        }
        env[0]
    }

    /// Rescales to unit trace and returns the trace before rescaling.
    pub fn normalize_trace(&mut self) -> Result<C64> {
        let tr = self.trace();
        if tr.norm() < 1e-12 || !tr.is_finite() {
            return Err(Error::Numerical {
                op: "trace normalization",
                rows: self.len(),
                cols: self.max_bond(),
                msg: format!("trace {tr} cannot be normalized"),
            });
        }
        let k = self.center.unwrap_or(0);
        self.sites[k] = self.sites[k].scale(ONE / tr);
        Ok(tr)
    }

    /// `Tr(m̂^α ρ)` before taking the real part.
    pub fn magnetization_complex(&self, axis: Pauli) -> C64 {
        let f = axis.trace_functional();
        let mut e_id = vec![ONE];
        let mut e_sum = vec![ZERO];
        for k in 0..self.len() {
            let t = self.site_matrix(k, &TRACE_VECTOR);
            let s = self.site_matrix(k, &f);
            let next_sum = vec_mat(&e_sum, &t);
            let from_id = vec_mat(&e_id, &s);
            e_sum = next_sum.iter().zip(&from_id).map(|(a, b)| a + b).collect();
            e_id = vec_mat(&e_id, &t);
        }
        e_sum[0] / (2.0 * self.len() as f64)
    }

    /// `Re Tr(m̂^α ρ)` with `m̂^α = (1/2N) Σ_k σ^α_k`. An imaginary part above
    /// 1e-6 is logged as a warning.
    pub fn magnetization_expectation(&self, axis: Pauli) -> f64 {
        let m = self.magnetization_complex(axis);
        if m.im.abs() > 1e-6 {
            log::warn!("magnetization along {axis} has imaginary part {:.3e}", m.im);
        }
        m.re
    }
}

pub(crate) fn contract_physical(site: &DenseTensor, w: &[C64; 4]) -> DenseTensor {
    let (a, _, b) = dims3(site);
    let data = site.data();
    DenseTensor::from_fn_2d(a, b, |i, j| (0..4).map(|p| w[p] * data[(i * 4 + p) * b + j]).sum())
}

/// Row vector times matrix.
pub(crate) fn vec_mat(v: &[C64], m: &DenseTensor) -> Vec<C64> {
    let cols = m.cols();
    let mut out = vec![ZERO; cols];
    for (x, row) in v.iter().zip(m.data().chunks(cols)) {
        if *x == ZERO {
            continue;
        }
        for (o, y) in out.iter_mut().zip(row) {
            *o += x * y;
        }
    }
    out
}
