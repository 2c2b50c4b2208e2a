//! Independent reference implementations used by the integration tests.
//! Nothing here calls into the library's numerical routines.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use specreg_core::{ActiveCertificate, BlockSimilarity, BlockSymMatrix, Dataset, Pencil};

/// Largest eigenvalue of a symmetric `m × m` matrix (m ≤ 3) from the roots
/// of its characteristic polynomial.
pub fn lambda_max_closed_form(a: &[f64], m: usize) -> f64 {
    match m {
        1 => a[0],
        2 => {
            let (p, q, r) = (a[0], a[1], a[3]);
            0.5 * (p + r) + (0.25 * (p - r) * (p - r) + q * q).sqrt()
        }
        3 => {
            let at = |i: usize, j: usize| a[i * 3 + j];
            let p1 = at(0, 1).powi(2) + at(0, 2).powi(2) + at(1, 2).powi(2);
            let q = (at(0, 0) + at(1, 1) + at(2, 2)) / 3.0;
            let p2 = (at(0, 0) - q).powi(2) + (at(1, 1) - q).powi(2) + (at(2, 2) - q).powi(2) + 2.0 * p1;
            if p2 == 0.0 {
                return q;
            }
            let p = (p2 / 6.0).sqrt();
            let b = |i: usize, j: usize| (at(i, j) - if i == j { q } else { 0.0 }) / p;
            let det = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
                + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
            let r = (det / 2.0).clamp(-1.0, 1.0);
            q + 2.0 * p * (r.acos() / 3.0).cos()
        }
        _ => panic!("closed form only for m ≤ 3"),
    }
}

/// Dense full-Kronecker least squares: each slot `j` gets an unconstrained
/// `m × m` matrix `Mⱼ`, sample `i` has features `ξᵢⱼ · vec(uᵢuᵢᵀ)`. Solves the
/// normal equations by SVD pseudo-inverse and returns the symmetrized
/// matrices (dense row-major, one per slot).
pub fn kronecker_lls(
    certs: &[ActiveCertificate],
    ds: &Dataset,
    m: usize,
    homogeneous: bool,
    ridge: f64,
) -> Vec<DMatrix<f64>> {
    let d = ds.d();
    let slots = d + usize::from(!homogeneous);
    let p = slots * m * m;
    let n = ds.n();
    let mut phi = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        let x = ds.row(i);
        let xi: Vec<f64> = (0..slots).map(|j| if j < d { x[j] } else { 1.0 }).collect();
        let u = &certs[i].u;
        for j in 0..slots {
            for a in 0..m {
                for b in 0..m {
                    phi[(i, j * m * m + a * m + b)] = xi[j] * u[a] * u[b];
                }
            }
        }
    }
    let y = DVector::from_column_slice(ds.y());
    let g = phi.transpose() * &phi / n as f64 + DMatrix::identity(p, p) * ridge;
    let rhs = phi.transpose() * y / n as f64;
    let svd = g.svd(true, true);
    let cutoff = 1e-12 * svd.singular_values.max();
    let theta = svd.solve(&rhs, cutoff).expect("svd solve");
    (0..slots)
        .map(|j| {
            let mj = DMatrix::from_fn(m, m, |a, b| theta[j * m * m + a * m + b]);
            (&mj + mj.transpose()) * 0.5
        })
        .collect()
}

/// `Σⱼ ξⱼ uᵀ Mⱼ u` for the dense oracle matrices.
pub fn kronecker_prediction(mats: &[DMatrix<f64>], x: &[f64], u: &[f64]) -> f64 {
    let uv = DVector::from_column_slice(u);
    mats.iter()
        .enumerate()
        .map(|(j, mj)| {
            let xi = if j < x.len() { x[j] } else { 1.0 };
            xi * (uv.transpose() * mj * &uv)[(0, 0)]
        })
        .sum()
}

/// Affine pieces `(slope, offset)` of a max-affine function.
pub type Pieces = Vec<(Vec<f64>, f64)>;

pub fn max_affine_eval(pieces: &Pieces, x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (j, (a, b)) in pieces.iter().enumerate() {
        let v: f64 = a.iter().zip(x).map(|(s, t)| s * t).sum::<f64>() + b;
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

pub fn max_affine_mse(pieces: &Pieces, ds: &Dataset) -> f64 {
    ds.rows()
        .zip(ds.y())
        .map(|(x, y)| (y - max_affine_eval(pieces, x).1).powi(2))
        .sum::<f64>()
        / ds.n() as f64
}

/// One round of partition-then-regress: assign each sample to its argmax
/// piece, then refit every piece by minimum-norm least squares on its cell.
/// Empty cells become the zero piece.
pub fn max_affine_step(pieces: &Pieces, ds: &Dataset) -> Pieces {
    let d = ds.d();
    let mut cells: Vec<Vec<usize>> = vec![Vec::new(); pieces.len()];
    for (i, x) in ds.rows().enumerate() {
        cells[max_affine_eval(pieces, x).0].push(i);
    }
    cells
        .iter()
        .map(|cell| {
            if cell.is_empty() {
                return (vec![0.0; d], 0.0);
            }
            let a = DMatrix::from_fn(cell.len(), d + 1, |r, c| if c < d { ds.row(cell[r])[c] } else { 1.0 });
            let b = DVector::from_iterator(cell.len(), cell.iter().map(|&i| ds.y()[i]));
            let svd = a.svd(true, true);
            let cutoff = 1e-12 * svd.singular_values.max();
            let sol = svd.solve(&b, cutoff).expect("svd solve");
            (sol.rows(0, d).iter().copied().collect(), sol[d])
        })
        .collect()
}

/// Reads the pieces of a `k = 1` pencil.
pub fn pieces_of(p: &Pencil) -> Pieces {
    (0..p.m())
        .map(|j| {
            let slope = p.slopes().iter().map(|a| a.block(j)[0]).collect();
            let off = p.offset().map_or(0.0, |b| b.block(j)[0]);
            (slope, off)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| StandardNormal.sample(rng)).collect()
}

/// Dataset with covariates `x ~ N(0, I_d)` and noiseless responses `f(x)`.
pub fn realizable(truth: &Pencil, n: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let x = gaussian_rows(&mut r, n, truth.d());
    let y = x.chunks(truth.d()).map(|row| truth.eval(row).unwrap()).collect();
    Dataset::new(truth.d(), x, y).unwrap()
}

/// Random orthogonal `k × k` matrix (QR of a Gaussian matrix), row-major.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(rng));
    let q = g.qr().q();
    let mut out = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            out.push(q[(i, j)]);
        }
    }
    out
}

/// Random block permutation composed with random in-block rotations.
pub fn random_similarity(rng: &mut ChaCha8Rng, m: usize, k: usize) -> BlockSimilarity {
    let nb = m / k;
    let mut source: Vec<usize> = (0..nb).collect();
    for i in (1..nb).rev() {
        source.swap(i, rng.random_range(0..=i));
    }
    let rotations = (0..nb).flat_map(|_| random_orthogonal(rng, k)).collect();
    BlockSimilarity::new(k, source, rotations).unwrap()
}

/// `A₁ = [[1,0],[0,0]]`, `A₂ = [[0,½],[½,0]]`, optionally with `B = 0`.
pub fn unit_gap_pencil(homogeneous: bool) -> Pencil {
    let a1 = BlockSymMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let a2 = BlockSymMatrix::new(2, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
    let b = (!homogeneous).then(|| BlockSymMatrix::zeros(2, 2).unwrap());
    Pencil::new(vec![a1, a2], b).unwrap()
}

/// `A₁ = diag(1, −1)`, `A₂ = [[0,1],[1,0]]`: represents `‖x‖₂`.
pub fn norm_pencil() -> Pencil {
    let a1 = BlockSymMatrix::new(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
    let a2 = BlockSymMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    Pencil::new(vec![a1, a2], None).unwrap()
}

/// Adds a random perturbation of Frobenius norm exactly `size`.
pub fn perturb(p: &Pencil, size: f64, rng: &mut ChaCha8Rng) -> Pencil {
    let params = p.to_params();
    let dir: Vec<f64> = (0..params.len()).map(|_| StandardNormal.sample(rng)).collect();
    let q = Pencil::from_params(p.d(), p.m(), p.k(), p.is_homogeneous(), &dir).unwrap();
    let scale = size / q.frobenius_norm();
    let moved: Vec<f64> = params.iter().zip(&dir).map(|(a, b)| a + scale * b).collect();
    Pencil::from_params(p.d(), p.m(), p.k(), p.is_homogeneous(), &moved).unwrap()
}
