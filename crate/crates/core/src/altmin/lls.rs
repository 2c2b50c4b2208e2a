use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::psd_min_norm_solve;
use crate::pencil::tri_len;
use crate::{ActiveCertificate, Dataset, Error, Pencil, Result};

const SQRT_2: f64 = core::f64::consts::SQRT_2;

// vech_scaled of u uᵀ for the active block vector u.
pub(crate) fn rank_one_vech(u: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let k = u.len();
    for i in 0..k {
        out.push(u[i] * u[i]);
        for j in (i + 1)..k {
            out.push(SQRT_2 * u[i] * u[j]);
        }
    }
}

fn check_inputs(certs: &[ActiveCertificate], dataset: &Dataset, d: usize, m: usize, k: usize) -> Result<()> {
    if dataset.n() == 0 || certs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if certs.len() != dataset.n() {
        return Err(Error::DimensionMismatch {
            what: "certificate count",
            expected: dataset.n(),
            found: certs.len(),
        });
    }
    if dataset.d() != d {
        return Err(Error::DimensionMismatch {
            what: "covariate dimension",
            expected: d,
            found: dataset.d(),
        });
    }
    if m == 0 || k == 0 || m % k != 0 {
        return Err(Error::InvalidShape { m, k });
    }
    for (i, c) in certs.iter().enumerate() {
        if c.u.len() != m || c.block_index >= m / k {
            return Err(Error::DimensionMismatch {
                what: "certificate vector length",
                expected: m,
                found: c.u.len(),
            }
            .at_sample(i));
        }
    }
    Ok(())
}

/// Least-squares update with the eigenvector certificates held fixed.
///
/// Minimizes `(1/n) Σᵢ (yᵢ − ⟨uᵢuᵢᵀ, A[ξᵢ]⟩)² + ridge·‖A‖²_F` over
/// block-symmetric pencils of shape `(d, m, k)`, where `ξᵢ = (xᵢ, 1)` or
/// `ξᵢ = xᵢ` when `homogeneous`. Parameters are the concatenated scaled-vech
/// coordinates of each matrix, so the feature of sample `i` for matrix `j`
/// is `ξᵢⱼ · vech_scaled(uᵢuᵢᵀ)`, nonzero only on the active block.
///
/// Rank-deficient problems with `ridge = 0` return the minimum-norm
/// minimizer.
pub fn lls_update(
    certs: &[ActiveCertificate],
    dataset: &Dataset,
    shape: (usize, usize, usize),
    homogeneous: bool,
    ridge: f64,
) -> Result<Pencil> {
    let (d, m, k) = shape;
    check_inputs(certs, dataset, d, m, k)?;
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidConfig("ridge must be finite and nonnegative"));
    }
    let slots = d + usize::from(!homogeneous);
    if slots == 0 {
        return Err(Error::InvalidConfig("a homogeneous pencil needs d ≥ 1"));
    }
    let s = tri_len(k);
    let nb = m / k;
    let per = nb * s;
    let p = slots * per;
    let inv_n = 1.0 / dataset.n() as f64;

    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut local = Vec::with_capacity(s);
    let mut xi = vec![0.0; slots];
    // column indices and values of the nonzero features of one sample
    let mut cols = vec![0usize; slots * s];
    let mut vals = vec![0.0; slots * s];

    for (i, cert) in certs.iter().enumerate() {
        let row = dataset.row(i);
        xi[..d].copy_from_slice(row);
        if !homogeneous {
            xi[d] = 1.0;
        }
        rank_one_vech(cert.block_vector(k), &mut local);
        let base = cert.block_index * s;
        for j in 0..slots {
            for t in 0..s {
                cols[j * s + t] = j * per + base + t;
                vals[j * s + t] = xi[j] * local[t];
            }
        }
        let yi = dataset.y()[i];
        for a in 0..cols.len() {
            let (ca, va) = (cols[a], vals[a]);
            if va == 0.0 {
                continue;
            }
            rhs[ca] += va * yi * inv_n;
            for b in a..cols.len() {
                let cb = cols[b];
                let (lo, hi) = if ca <= cb { (ca, cb) } else { (cb, ca) };
                gram[lo * p + hi] += va * vals[b] * inv_n;
            }
        }
    }
    for i in 0..p {
        gram[i * p + i] += ridge;
        for j in (i + 1)..p {
            gram[j * p + i] = gram[i * p + j];
        }
    }

    let theta = psd_min_norm_solve(&gram, p, &rhs).map_err(|_| Error::Diverged)?;
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged);
    }
    Pencil::from_params(d, m, k, homogeneous, &theta)
}

/// The least-squares objective of [`lls_update`] evaluated at `pencil`, with
/// the certificates held fixed.
pub fn surrogate_objective(
    certs: &[ActiveCertificate],
    dataset: &Dataset,
    pencil: &Pencil,
    ridge: f64,
) -> Result<f64> {
    check_inputs(certs, dataset, pencil.d(), pencil.m(), pencil.k())?;
    let mut acc = 0.0;
    let mut mat = crate::BlockSymMatrix::zeros(pencil.m(), pencil.k())?;
    for (i, cert) in certs.iter().enumerate() {
        pencil.assemble_into(dataset.row(i), &mut mat);
        let r = dataset.y()[i] - cert.quadratic_form(&mat);
        acc += r * r;
    }
    let reg = pencil.frobenius_norm();
    Ok(acc / dataset.n() as f64 + ridge * reg * reg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_interpolation_in_one_dimension() {
        let ds = Dataset::new(1, vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        let cert = ActiveCertificate {
            lambda: 0.0,
            u: vec![1.0],
            block_index: 0,
        };
        let p = lls_update(&[cert.clone(), cert], &ds, (1, 1, 1), false, 0.0).unwrap();
        assert!((p.slopes()[0].as_block_data()[0] - 2.0).abs() < 1e-12);
        assert!((p.offset().unwrap().as_block_data()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_response_with_ridge_gives_zero_pencil() {
        let ds = Dataset::new(2, vec![0.3, -1.0, 2.0, 0.5, -0.7, 0.1], vec![0.0; 3]).unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let certs: Vec<_> = (0..3)
            .map(|_| ActiveCertificate {
                lambda: 0.0,
                u: vec![h, h],
                block_index: 0,
            })
            .collect();
        let p = lls_update(&certs, &ds, (2, 2, 2), false, 0.1).unwrap();
        assert_eq!(p.frobenius_norm(), 0.0);
    }

    #[test]
    fn inactive_blocks_are_zeroed() {
        // only block 0 is ever active, so block 1 has no data and min-norm pins it to 0
        let ds = Dataset::new(1, vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 3.0]).unwrap();
        let cert = ActiveCertificate {
            lambda: 0.0,
            u: vec![1.0, 0.0],
            block_index: 0,
        };
        let p = lls_update(&[cert.clone(), cert.clone(), cert], &ds, (1, 2, 1), false, 0.0).unwrap();
        assert_eq!(p.slopes()[0].block(1), &[0.0]);
        assert_eq!(p.offset().unwrap().block(1), &[0.0]);
        assert!((p.slopes()[0].block(0)[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_certificates() {
        let ds = Dataset::new(1, vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        let cert = ActiveCertificate {
            lambda: 0.0,
            u: vec![1.0],
            block_index: 0,
        };
        assert!(matches!(
            lls_update(&[cert], &ds, (1, 1, 1), false, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
