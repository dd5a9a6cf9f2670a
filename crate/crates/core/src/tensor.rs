//! Dense complex tensors with the handful of multilinear operations the
//! simulator needs: reshape/permute, pairwise contraction, truncated SVD and
//! the matrix exponential.
//!
//! All tensors are stored row-major. Linear algebra kernels (GEMM, SVD, QR,
//! Hermitian eigensolver) are delegated to LAPACK through `ndarray-linalg`.

use ndarray::{Array2, ArrayView2, ShapeBuilder};
use ndarray_linalg::{Eigh, Inverse, JobSvd, SVDDC, UPLO, QR, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative singular-value cutoff used when a caller only supplies a rank cap.
pub const DEFAULT_REL_CUTOFF: f64 = 1e-12;

/// A dense complex tensor in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if shape.contains(&0) {
            return Err(Error::Shape(format!("zero extent in shape {shape:?}")));
        }
        if expected != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![ZERO; len],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = ONE;
        }
        t
    }

    pub fn from_fn_2d(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self {
            shape: vec![rows, cols],
            data,
        }
    }

    pub fn from_rows<const R: usize, const C: usize>(rows: [[C64; C]; R]) -> Self {
        Self::from_fn_2d(R, C, |r, c| rows[r][c])
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut t = Self::zeros(&[n, n]);
        for (i, v) in values.iter().enumerate() {
            t.data[i * n + i] = *v;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &d)| {
                debug_assert!(i < d);
                acc * d + i
            })
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.flat_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let k = self.flat_index(index);
        self.data[k] = value;
    }

    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.shape[1] + c]
    }

    /// Reinterpret the entry sequence under a new shape.
    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Axis permutation: output axis `a` is input axis `perm[a]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if perm.len() != rank || perm.iter().any(|&p| p >= rank || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Shape(format!(
                "{perm:?} is not a permutation of {rank} axes"
            )));
        }
        if perm.iter().enumerate().all(|(a, &p)| a == p) {
            return Ok(self.clone());
        }
        let mut in_strides = vec![1usize; rank];
        for a in (0..rank.saturating_sub(1)).rev() {
            in_strides[a] = in_strides[a + 1] * self.shape[a + 1];
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut counter = vec![0usize; rank];
        let mut offset = 0usize;
        let inner = rank - 1;
        let inner_len = out_shape[inner];
        let inner_stride = strides[inner];
        'outer: loop {
            let mut o = offset;
            for _ in 0..inner_len {
                data.push(self.data[o]);
                o += inner_stride;
            }
            // advance the multi-index over all axes but the innermost
            let mut a = inner;
            loop {
                if a == 0 {
                    break 'outer;
                }
                a -= 1;
                counter[a] += 1;
                offset += strides[a];
                if counter[a] < out_shape[a] {
                    break;
                }
                offset -= strides[a] * out_shape[a];
                counter[a] = 0;
            }
        }
        Ok(Self {
            shape: out_shape,
            data,
        })
    }

    /// Contract `axes_self` of `self` with `axes_other` of `other`. The
    /// result carries the free axes of `self` followed by those of `other`.
    pub fn contract(&self, axes_self: &[usize], other: &DenseTensor, axes_other: &[usize]) -> Result<Self> {
        if axes_self.len() != axes_other.len() {
            return Err(Error::Shape("contraction axis lists differ in length".into()));
        }
        for (&a, &b) in axes_self.iter().zip(axes_other) {
            if a >= self.rank() || b >= other.rank() || self.shape[a] != other.shape[b] {
                return Err(Error::Shape(format!(
                    "cannot contract axis {a} of {:?} with axis {b} of {:?}",
                    self.shape, other.shape
                )));
            }
        }
        let free_a: Vec<usize> = (0..self.rank()).filter(|a| !axes_self.contains(a)).collect();
        let free_b: Vec<usize> = (0..other.rank()).filter(|b| !axes_other.contains(b)).collect();
        let k: usize = axes_self.iter().map(|&a| self.shape[a]).product();
        let m: usize = free_a.iter().map(|&a| self.shape[a]).product();
        let n: usize = free_b.iter().map(|&b| other.shape[b]).product();

        let perm_a: Vec<usize> = free_a.iter().chain(axes_self).copied().collect();
        let perm_b: Vec<usize> = axes_other.iter().chain(&free_b).copied().collect();
        let a = self.permute(&perm_a)?;
        let b = other.permute(&perm_b)?;
        let data = gemm(&a.data, m, k, &b.data, n);
        let mut shape: Vec<usize> = free_a.iter().map(|&x| self.shape[x]).collect();
        shape.extend(free_b.iter().map(|&x| other.shape[x]));
        if shape.is_empty() {
            shape.push(1);
        }
        Ok(Self { shape, data })
    }

    pub fn matmul(&self, other: &DenseTensor) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 || self.shape[1] != other.shape[0] {
            return Err(Error::Shape(format!(
                "matmul of {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        Ok(Self {
            shape: vec![m, n],
            data: gemm(&self.data, m, k, &other.data, n),
        })
    }

    /// Matrix-vector product for a rank-2 tensor.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        let (m, n) = (self.shape[0], self.shape[1]);
        assert_eq!(v.len(), n);
        (0..m)
            .map(|r| {
                self.data[r * n..(r + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        self.permute(&[1, 0]).expect("rank-2 transpose")
    }

    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    pub fn kron(&self, other: &DenseTensor) -> Self {
        let (ar, ac) = (self.shape[0], self.shape[1]);
        let (br, bc) = (other.shape[0], other.shape[1]);
        Self::from_fn_2d(ar * br, ac * bc, |r, c| {
            self.at(r / br, c / bc) * other.at(r % br, c % bc)
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &DenseTensor, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!(
                "elementwise op on {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add_assign_scaled(&mut self, other: &DenseTensor, s: C64) {
        assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &DenseTensor) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        let n = self.shape[0].min(self.shape[1]);
        (0..n).map(|i| self.at(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn view2(&self) -> ArrayView2<'_, C64> {
        ArrayView2::from_shape((self.shape[0], self.shape[1]), &self.data).expect("rank-2 view")
    }

    fn from_array2(a: Array2<C64>) -> Self {
        let (r, c) = a.dim();
        let data = if a.is_standard_layout() {
            a.into_raw_vec_and_offset().0
        } else {
            a.iter().copied().collect()
        };
        Self {
            shape: vec![r, c],
            data,
        }
    }

    fn require_matrix(&self, op: &'static str) -> Result<(usize, usize)> {
        if self.rank() != 2 {
            return Err(Error::Shape(format!("{op} needs a matrix, got shape {:?}", self.shape)));
        }
        Ok((self.shape[0], self.shape[1]))
    }
}

fn gemm(a: &[C64], m: usize, k: usize, b: &[C64], n: usize) -> Vec<C64> {
    let av = ArrayView2::from_shape((m, k), a).expect("gemm lhs");
    let bv = ArrayView2::from_shape((k, n), b).expect("gemm rhs");
    let c = av.dot(&bv);
    if c.is_standard_layout() {
        c.into_raw_vec_and_offset().0
    } else {
        c.iter().copied().collect()
    }
}

/// Truncation policy for [`svd_truncate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvdTruncation {
    /// Maximum number of singular values kept; `None` means unlimited.
    pub max_rank: Option<usize>,
    /// Singular values below `rel_cutoff * sigma_max` are dropped.
    pub rel_cutoff: f64,
}

impl SvdTruncation {
    pub fn unlimited() -> Self {
        Self {
            max_rank: None,
            rel_cutoff: 0.0,
        }
    }

    pub fn with_max_rank(max_rank: usize) -> Self {
        Self {
            max_rank: Some(max_rank),
            rel_cutoff: DEFAULT_REL_CUTOFF,
        }
    }

    pub fn new(max_rank: Option<usize>, rel_cutoff: f64) -> Self {
        Self { max_rank, rel_cutoff }
    }

    /// Number of leading singular values kept from a descending sequence.
    pub fn kept_rank(&self, s: &[f64]) -> usize {
        let smax = s.first().copied().unwrap_or(0.0);
        let mut k = s.iter().take_while(|&&x| x >= self.rel_cutoff * smax && x > 0.0).count();
        if let Some(cap) = self.max_rank {
            k = k.min(cap);
        }
        k.max(1).min(s.len())
    }
}

impl Default for SvdTruncation {
    fn default() -> Self {
        Self {
            max_rank: None,
            rel_cutoff: DEFAULT_REL_CUTOFF,
        }
    }
}

/// Result of a truncated SVD: `matrix ≈ u · diag(s) · v`.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// rows × k with orthonormal columns.
    pub u: DenseTensor,
    /// Descending singular values, length k.
    pub s: Vec<f64>,
    /// k × cols with orthonormal rows.
    pub v: DenseTensor,
    /// Dropped squared singular values over the total squared weight.
    pub discarded_weight: f64,
}

impl TruncatedSvd {
    /// `u · diag(s)`.
    pub fn us(&self) -> DenseTensor {
        scale_columns(&self.u, &self.s)
    }

    /// `diag(s) · v`.
    pub fn sv(&self) -> DenseTensor {
        scale_rows(&self.v, &self.s)
    }

    pub fn reconstruct(&self) -> DenseTensor {
        self.us().matmul(&self.v).expect("svd factors are conformant")
    }
}

pub fn scale_columns(m: &DenseTensor, s: &[f64]) -> DenseTensor {
    let cols = m.cols();
    assert_eq!(cols, s.len());
    let mut out = m.clone();
    for row in out.data.chunks_mut(cols) {
        for (x, &w) in row.iter_mut().zip(s) {
            *x *= w;
        }
    }
    out
}

pub fn scale_rows(m: &DenseTensor, s: &[f64]) -> DenseTensor {
    let cols = m.cols();
    assert_eq!(m.rows(), s.len());
    let mut out = m.clone();
    for (row, &w) in out.data.chunks_mut(cols).zip(s) {
        for x in row {
            *x *= w;
        }
    }
    out
}

/// Singular value decomposition truncated according to `trunc`.
pub fn svd_truncate(matrix: &DenseTensor, trunc: &SvdTruncation) -> Result<TruncatedSvd> {
    let (rows, cols) = matrix.require_matrix("svd_truncate")?;
    if !matrix.is_finite() {
        return Err(Error::Numerical {
            op: "svd",
            rows,
            cols,
            msg: "non-finite input".into(),
        });
    }
    let view = matrix.view2();
    let (u, s, vt) = match view.svddc(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => (u, s, vt),
        // gesdd occasionally fails to converge where gesvd succeeds
        _ => match view.svd(true, true) {
            Ok((Some(u), s, Some(vt))) => {
                let k = s.len();
                let u = u.slice(ndarray::s![.., ..k]).to_owned();
                let vt = vt.slice(ndarray::s![..k, ..]).to_owned();
                (u, s, vt)
            }
            Ok(_) => unreachable!("singular vectors were requested"),
            Err(e) => {
                return Err(Error::Numerical {
                    op: "svd",
                    rows,
                    cols,
                    msg: e.to_string(),
                })
            }
        },
    };
    let s: Vec<f64> = s.to_vec();
    let k = trunc.kept_rank(&s);
    let total: f64 = s.iter().map(|x| x * x).sum();
    let dropped: f64 = s[k..].iter().map(|x| x * x).sum();
    let discarded_weight = if total > 0.0 { dropped / total } else { 0.0 };
    let u = DenseTensor::from_array2(u.slice(ndarray::s![.., ..k]).to_owned());
    let v = DenseTensor::from_array2(vt.slice(ndarray::s![..k, ..]).to_owned());
    Ok(TruncatedSvd {
        u,
        s: s[..k].to_vec(),
        v,
        discarded_weight,
    })
}

/// Thin QR decomposition: `matrix = q · r` with `q` having orthonormal columns.
pub fn qr(matrix: &DenseTensor) -> Result<(DenseTensor, DenseTensor)> {
    let (rows, cols) = matrix.require_matrix("qr")?;
    let (q, r) = matrix.view2().qr().map_err(|e| Error::Numerical {
        op: "qr",
        rows,
        cols,
        msg: e.to_string(),
    })?;
    Ok((DenseTensor::from_array2(q), DenseTensor::from_array2(r)))
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and the
/// matrix of eigenvectors (as columns).
pub fn eigh(matrix: &DenseTensor) -> Result<(Vec<f64>, DenseTensor)> {
    let (rows, cols) = matrix.require_matrix("eigh")?;
    if rows != cols {
        return Err(Error::Shape(format!("eigh of non-square {rows}x{cols}")));
    }
    // LAPACK sees a row-major Hermitian matrix as its conjugate
    let mut fortran = Array2::<C64>::zeros((rows, cols).f());
    fortran.assign(&matrix.view2());
    let (w, v) = fortran.eigh(UPLO::Upper).map_err(|e| Error::Numerical {
        op: "eigh",
        rows,
        cols,
        msg: e.to_string(),
    })?;
    Ok((w.to_vec(), DenseTensor::from_array2(v)))
}

pub fn inverse(matrix: &DenseTensor) -> Result<DenseTensor> {
    let (rows, cols) = matrix.require_matrix("inverse")?;
    let inv = matrix.view2().inv().map_err(|e| Error::Numerical {
        op: "inverse",
        rows,
        cols,
        msg: e.to_string(),
    })?;
    Ok(DenseTensor::from_array2(inv))
}

/// Largest entrywise deviation from Hermiticity, relative to the largest entry.
fn hermitian_defect(m: &DenseTensor, sign: f64) -> f64 {
    let n = m.rows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m.at(r, c) - m.at(c, r).conj() * sign).norm());
        }
    }
    worst / m.max_abs().max(f64::MIN_POSITIVE)
}

/// `exp(scale * matrix)`.
///
/// Hermitian and anti-Hermitian arguments go through the Hermitian
/// eigensolver (exactly unitary output for anti-Hermitian input); anything
/// else uses degree-13 Padé approximation with scaling and squaring.
pub fn matrix_exp(matrix: &DenseTensor, scale: C64) -> Result<DenseTensor> {
    let (rows, cols) = matrix.require_matrix("matrix_exp")?;
    if rows != cols {
        return Err(Error::Shape(format!("matrix_exp of non-square {rows}x{cols}")));
    }
    if !matrix.is_finite() {
        return Err(Error::Numerical {
            op: "matrix_exp",
            rows,
            cols,
            msg: "non-finite input".into(),
        });
    }
    let a = matrix.scale(scale);
    if a.max_abs() == 0.0 {
        return Ok(DenseTensor::identity(rows));
    }
    let out = if hermitian_defect(&a, 1.0) < 1e-14 {
        exp_via_eigh(&a, ONE)?
    } else if hermitian_defect(&a, -1.0) < 1e-14 {
        // a = i·k with k Hermitian
        exp_via_eigh(&a.scale(-I), I)?
    } else {
        exp_pade13(&a)?
    };
    if !out.is_finite() {
        return Err(Error::Numerical {
            op: "matrix_exp",
            rows,
            cols,
            msg: "overflow".into(),
        });
    }
    Ok(out)
}

/// `exp(phase * k)` for Hermitian `k`.
fn exp_via_eigh(k: &DenseTensor, phase: C64) -> Result<DenseTensor> {
    // symmetrize so the solver sees an exactly Hermitian matrix
    let kh = k.add(&k.adjoint())?.scale(C64::new(0.5, 0.0));
    let (w, v) = eigh(&kh)?;
    let n = w.len();
    let d: Vec<C64> = w.iter().map(|&x| (phase * x).exp()).collect();
    let mut vd = v.clone();
    for row in vd.data.chunks_mut(n) {
        for (x, e) in row.iter_mut().zip(&d) {
            *x *= e;
        }
    }
    vd.matmul(&v.adjoint())
}

fn exp_pade13(a: &DenseTensor) -> Result<DenseTensor> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.rows();
    let norm1 = (0..n)
        .map(|c| (0..n).map(|r| a.at(r, c).norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(C64::new(2f64.powi(-squarings), 0.0));
    let id = DenseTensor::identity(n);
    let a2 = a.matmul(&a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;
    let c = |i: usize| C64::new(B[i], 0.0);

    let mut u_inner = a6.scale(c(13));
    u_inner.add_assign_scaled(&a4, c(11));
    u_inner.add_assign_scaled(&a2, c(9));
    let mut u = a6.matmul(&u_inner)?;
    u.add_assign_scaled(&a6, c(7));
    u.add_assign_scaled(&a4, c(5));
    u.add_assign_scaled(&a2, c(3));
    u.add_assign_scaled(&id, c(1));
    let u = a.matmul(&u)?;

    let mut v_inner = a6.scale(c(12));
    v_inner.add_assign_scaled(&a4, c(10));
    v_inner.add_assign_scaled(&a2, c(8));
    let mut v = a6.matmul(&v_inner)?;
    v.add_assign_scaled(&a6, c(6));
    v.add_assign_scaled(&a4, c(4));
    v.add_assign_scaled(&a2, c(2));
    v.add_assign_scaled(&id, c(0));

    let p = v.add(&u)?;
    let q = v.sub(&u)?;
    let mut r = inverse(&q)?.matmul(&p)?;
    for _ in 0..squarings {
        r = r.matmul(&r)?;
    }
    Ok(r)
}
