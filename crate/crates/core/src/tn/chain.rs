//! Gauge and truncation sweeps on chains of rank-3 tensors `(χl, d, χr)`.

use crate::error::Result;
use crate::tensor::{qr, svd_truncate, DenseTensor, SvdTruncation};

/// `m · site` for `m: (a, b)`, `site: (b, d, c)`.
pub(crate) fn absorb_left(m: &DenseTensor, site: &DenseTensor) -> Result<DenseTensor> {
    let (b, d, c) = dims3(site);
    let out = m.matmul(&site.clone().reshape(&[b, d * c])?)?;
    out.reshape(&[m.rows(), d, c])
}

/// `site · m` for `site: (a, d, b)`, `m: (b, c)`.
pub(crate) fn absorb_right(site: &DenseTensor, m: &DenseTensor) -> Result<DenseTensor> {
    let (a, d, b) = dims3(site);
    let out = site.clone().reshape(&[a * d, b])?.matmul(m)?;
    out.reshape(&[a, d, m.cols()])
}

pub(crate) fn dims3(t: &DenseTensor) -> (usize, usize, usize) {
    let s = t.shape();
    debug_assert_eq!(s.len(), 3, "expected a rank-3 site tensor, got {s:?}");
    (s[0], s[1], s[2])
}

/// Moves the orthogonality center to the last site using QR.
pub(crate) fn left_canonicalize(sites: &mut [DenseTensor]) -> Result<()> {
    for k in 0..sites.len().saturating_sub(1) {
        let (a, d, b) = dims3(&sites[k]);
        let (q, r) = qr(&sites[k].clone().reshape(&[a * d, b])?)?;
        let m = q.cols();
        sites[k] = q.reshape(&[a, d, m])?;
        sites[k + 1] = absorb_left(&r, &sites[k + 1])?;
    }
    Ok(())
}

/// Moves the orthogonality center to the first site using QR.
pub(crate) fn right_canonicalize(sites: &mut [DenseTensor]) -> Result<()> {
    for k in (1..sites.len()).rev() {
        let (a, d, b) = dims3(&sites[k]);
        let (q, r) = qr(&sites[k].clone().reshape(&[a, d * b])?.adjoint())?;
        let m = q.cols();
        sites[k] = q.adjoint().reshape(&[m, d, b])?;
        sites[k - 1] = absorb_right(&sites[k - 1], &r.adjoint())?;
    }
    Ok(())
}

/// Truncating SVD sweep from the first to the last site. Expects the center
/// at site 0 and leaves it at the last site. Returns the summed discarded
/// weight.
pub(crate) fn truncate_left_to_right(sites: &mut [DenseTensor], policy: &SvdTruncation) -> Result<f64> {
    let mut discarded = 0.0;
    for k in 0..sites.len().saturating_sub(1) {
        let (a, d, b) = dims3(&sites[k]);
        let svd = svd_truncate(&sites[k].clone().reshape(&[a * d, b])?, policy)?;
        discarded += svd.discarded_weight;
        let m = svd.s.len();
        sites[k + 1] = absorb_left(&svd.sv(), &sites[k + 1])?;
        sites[k] = svd.u.reshape(&[a, d, m])?;
    }
    Ok(discarded)
}

/// Truncating SVD sweep from the last to the first site. Expects the center
/// at the last site and leaves it at site 0.
pub(crate) fn truncate_right_to_left(sites: &mut [DenseTensor], policy: &SvdTruncation) -> Result<f64> {
    let mut discarded = 0.0;
    for k in (1..sites.len()).rev() {
        let (a, d, b) = dims3(&sites[k]);
        let svd = svd_truncate(&sites[k].clone().reshape(&[a, d * b])?, policy)?;
        discarded += svd.discarded_weight;
        let m = svd.s.len();
        sites[k - 1] = absorb_right(&sites[k - 1], &svd.us())?;
        sites[k] = svd.v.reshape(&[m, d, b])?;
    }
    Ok(discarded)
}

/// Full contraction into a flat vector (site 0 most significant).
pub(crate) fn contract_to_vector(sites: &[DenseTensor]) -> Result<Vec<crate::tensor::C64>> {
    let mut acc = DenseTensor::identity(1);
    for s in sites {
        let (b, d, c) = dims3(s);
        let rows = acc.rows();
        acc = acc.matmul(&s.clone().reshape(&[b, d * c])?)?.reshape(&[rows * d, c])?;
    }
    Ok(acc.into_data())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{C64, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_chain(rng: &mut ChaCha8Rng, bonds: &[usize], d: usize) -> Vec<DenseTensor> {
        bonds
            .windows(2)
            .map(|w| {
                let data = (0..w[0] * d * w[1])
                    .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                    .collect();
                DenseTensor::new(vec![w[0], d, w[1]], data).unwrap()
            })
            .collect()
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn canonicalization_preserves_the_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chain = random_chain(&mut rng, &[1, 3, 5, 4, 1], 4);
        let v = contract_to_vector(&chain).unwrap();
        let mut left = chain.clone();
        left_canonicalize(&mut left).unwrap();
        assert!(max_diff(&v, &contract_to_vector(&left).unwrap()) < 1e-12);
        let mut right = chain;
        right_canonicalize(&mut right).unwrap();
        assert!(max_diff(&v, &contract_to_vector(&right).unwrap()) < 1e-12);
        // right-isometric sites: A A† = 1
        for s in &right[1..] {
            let (a, d, b) = dims3(s);
            let m = s.clone().reshape(&[a, d * b]).unwrap();
            let g = m.matmul(&m.adjoint()).unwrap();
            assert!(g.max_abs_diff(&DenseTensor::identity(a)) < 1e-12);
        }
    }

    #[test]
    fn exact_sweeps_preserve_the_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut chain = random_chain(&mut rng, &[1, 2, 6, 3, 1], 4);
        let v = contract_to_vector(&chain).unwrap();
        right_canonicalize(&mut chain).unwrap();
        let w = truncate_left_to_right(&mut chain, &SvdTruncation::unlimited()).unwrap();
        assert!(w < 1e-28);
        let w = truncate_right_to_left(&mut chain, &SvdTruncation::unlimited()).unwrap();
        assert!(w < 1e-28);
        assert!(max_diff(&v, &contract_to_vector(&chain).unwrap()) < 1e-12);
    }

    #[test]
    fn truncation_error_matches_discarded_weight() {
        // at the center, dropping weight w changes the normalized vector by sqrt(w)
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut chain = random_chain(&mut rng, &[1, 4, 4, 1], 4);
        right_canonicalize(&mut chain).unwrap();
        let v = contract_to_vector(&chain).unwrap();
        let norm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        let mut cut = chain.clone();
        let (a, d, b) = dims3(&cut[0]);
        let svd = svd_truncate(&cut[0].clone().reshape(&[a * d, b]).unwrap(), &SvdTruncation::with_max_rank(2)).unwrap();
        cut[1] = absorb_left(&svd.sv(), &cut[1]).unwrap();
        cut[0] = svd.u.reshape(&[a, d, 2]).unwrap();
        let u = contract_to_vector(&cut).unwrap();
        let err2: f64 = v.iter().zip(&u).map(|(x, y)| (x - y).norm_sqr()).sum();
        assert!((err2 / norm2 - svd.discarded_weight).abs() < 1e-12);
        assert!(u.iter().any(|x| *x != ZERO));
    }
}
