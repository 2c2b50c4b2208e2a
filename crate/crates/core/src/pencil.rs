//! Block-diagonal symmetric matrices and affine matrix pencils.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::sym_eigen;
use crate::math::sqrt;
use crate::{Error, Result};

const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// Coordinates with magnitude at or below this are skipped when fixing the
/// sign of an eigenvector.
pub const SIGN_EPS: f64 = 1e-10;

/// Tolerance on `OᵀO - I` accepted by [`BlockSimilarity`].
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

fn check_shape(m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 || m % k != 0 {
        return Err(Error::InvalidShape { m, k });
    }
    Ok(())
}

/// Number of entries of `vech` for a `k × k` block.
#[inline]
pub fn tri_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// An `m × m` real symmetric matrix that is block-diagonal with `k × k`
/// blocks. Only the `m / k` diagonal blocks are stored, each row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BlockSymMatrix {
    m: usize,
    k: usize,
    data: Vec<f64>,
}

impl BlockSymMatrix {
    /// Builds a matrix from its concatenated row-major blocks.
    ///
    /// Every block must be exactly symmetric and every entry finite.
    pub fn new(m: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(m, k)?;
        let expected = m * k;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "block data length",
                expected,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        for b in 0..m / k {
            let blk = &data[b * k * k..(b + 1) * k * k];
            for i in 0..k {
                for j in (i + 1)..k {
                    if blk[i * k + j] != blk[j * k + i] {
                        return Err(Error::NotSymmetric { block: b, row: i, col: j });
                    }
                }
            }
        }
        Ok(BlockSymMatrix { m, k, data })
    }

    /// Like [`BlockSymMatrix::new`] but replaces every block `X` by `(X + Xᵀ) / 2`.
    pub fn symmetrized(m: usize, k: usize, mut data: Vec<f64>) -> Result<Self> {
        check_shape(m, k)?;
        if data.len() != m * k {
            return Err(Error::DimensionMismatch {
                what: "block data length",
                expected: m * k,
                found: data.len(),
            });
        }
        for b in 0..m / k {
            let blk = &mut data[b * k * k..(b + 1) * k * k];
            for i in 0..k {
                for j in (i + 1)..k {
                    let avg = 0.5 * (blk[i * k + j] + blk[j * k + i]);
                    blk[i * k + j] = avg;
                    blk[j * k + i] = avg;
                }
            }
        }
        Self::new(m, k, data)
    }

    /// Builds a matrix from a list of row-major blocks.
    pub fn from_blocks(k: usize, blocks: &[&[f64]]) -> Result<Self> {
        let mut data = Vec::with_capacity(blocks.len() * k * k);
        for blk in blocks {
            if blk.len() != k * k {
                return Err(Error::DimensionMismatch {
                    what: "block length",
                    expected: k * k,
                    found: blk.len(),
                });
            }
            data.extend_from_slice(blk);
        }
        Self::new(blocks.len() * k, k, data)
    }

    /// A diagonal matrix (`k = 1`).
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    /// The zero matrix.
    pub fn zeros(m: usize, k: usize) -> Result<Self> {
        check_shape(m, k)?;
        Ok(BlockSymMatrix { m, k, data: vec![0.0; m * k] })
    }

    /// The identity matrix.
    pub fn identity(m: usize, k: usize) -> Result<Self> {
        let mut out = Self::zeros(m, k)?;
        for b in 0..m / k {
            for i in 0..k {
                out.data[b * k * k + i * k + i] = 1.0;
            }
        }
        Ok(out)
    }

    /// Matrix order.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Block size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of diagonal blocks, `m / k`.
    pub fn n_blocks(&self) -> usize {
        self.m / self.k
    }

    /// Row-major entries of block `b`.
    pub fn block(&self, b: usize) -> &[f64] {
        let kk = self.k * self.k;
        &self.data[b * kk..(b + 1) * kk]
    }

    /// Concatenated blocks.
    pub fn as_block_data(&self) -> &[f64] {
        &self.data
    }

    /// Entry `(i, j)` of the full `m × m` matrix.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (bi, bj) = (i / self.k, j / self.k);
        if bi != bj {
            return 0.0;
        }
        self.block(bi)[(i % self.k) * self.k + j % self.k]
    }

    /// The full `m × m` matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.m;
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] = self.get(i, j);
            }
        }
        out
    }

    /// Frobenius inner product `⟨self, other⟩`.
    pub fn frobenius_dot(&self, other: &BlockSymMatrix) -> f64 {
        debug_assert_eq!((self.m, self.k), (other.m, other.k));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// Squared Frobenius norm.
    pub fn frobenius_norm_sq(&self) -> f64 {
        self.frobenius_dot(self)
    }

    pub(crate) fn set_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    // self += alpha * other; keeps symmetry since both operands are symmetric.
    pub(crate) fn add_scaled(&mut self, alpha: f64, other: &BlockSymMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// Symmetric vectorization with off-diagonal entries scaled by `√2`.
    ///
    /// Blocks are visited in order; within a block the upper triangle is read
    /// row by row. The map is an isometry from the Frobenius inner product to
    /// the Euclidean one.
    pub fn vech_scaled(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_blocks() * tri_len(self.k));
        self.write_vech_scaled(&mut out);
        out
    }

    pub(crate) fn write_vech_scaled(&self, out: &mut Vec<f64>) {
        let k = self.k;
        for b in 0..self.n_blocks() {
            let blk = self.block(b);
            for i in 0..k {
                out.push(blk[i * k + i]);
                for j in (i + 1)..k {
                    out.push(SQRT_2 * blk[i * k + j]);
                }
            }
        }
    }

    /// Inverse of [`BlockSymMatrix::vech_scaled`].
    pub fn from_vech_scaled(m: usize, k: usize, v: &[f64]) -> Result<Self> {
        check_shape(m, k)?;
        let t = tri_len(k);
        if v.len() != (m / k) * t {
            return Err(Error::DimensionMismatch {
                what: "vech length",
                expected: (m / k) * t,
                found: v.len(),
            });
        }
        let mut data = vec![0.0; m * k];
        let mut idx = 0;
        for b in 0..m / k {
            let blk = &mut data[b * k * k..(b + 1) * k * k];
            for i in 0..k {
                blk[i * k + i] = v[idx];
                idx += 1;
                for j in (i + 1)..k {
                    let val = v[idx] / SQRT_2;
                    blk[i * k + j] = val;
                    blk[j * k + i] = val;
                    idx += 1;
                }
            }
        }
        Self::new(m, k, data)
    }

    /// All `m` eigenvalues, unsorted, gathered block by block.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.m);
        for b in 0..self.n_blocks() {
            let e = sym_eigen(self.block(b), self.k).map_err(|_| Error::EigenNotConverged { block: b })?;
            out.extend_from_slice(&e.values);
        }
        Ok(out)
    }

    /// Largest eigenvalue and a unit eigenvector for it.
    ///
    /// Blocks are solved independently. Ties across blocks go to the lowest
    /// block index; the eigenvector's first coordinate of magnitude above
    /// [`SIGN_EPS`] is made positive.
    pub fn top_eigenpair(&self) -> Result<ActiveCertificate> {
        let k = self.k;
        let mut best_lambda = f64::NEG_INFINITY;
        let mut best_block = 0;
        let mut best_vec: Vec<f64> = Vec::new();
        for b in 0..self.n_blocks() {
            let blk = self.block(b);
            let (lam, vec) = if k == 1 {
                (blk[0], vec![1.0])
            } else {
                let e = sym_eigen(blk, k).map_err(|_| Error::EigenNotConverged { block: b })?;
                let mut j = 0;
                for t in 1..k {
                    if e.values[t] > e.values[j] {
                        j = t;
                    }
                }
                (e.values[j], e.vector(j))
            };
            if lam > best_lambda {
                best_lambda = lam;
                best_block = b;
                best_vec = vec;
            }
        }
        if !best_lambda.is_finite() {
            return Err(Error::EigenNotConverged { block: best_block });
        }
        if let Some(first) = best_vec.iter().find(|v| v.abs() > SIGN_EPS) {
            if *first < 0.0 {
                best_vec.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let mut u = vec![0.0; self.m];
        u[best_block * k..(best_block + 1) * k].copy_from_slice(&best_vec);
        Ok(ActiveCertificate {
            lambda: best_lambda,
            u,
            block_index: best_block,
        })
    }
}

/// Top eigenpair of one sample's assembled matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveCertificate {
    /// Largest eigenvalue.
    pub lambda: f64,
    /// Unit eigenvector in `ℝᵐ`, zero outside the active block.
    pub u: Vec<f64>,
    /// Block holding the largest eigenvalue.
    pub block_index: usize,
}

impl ActiveCertificate {
    /// The part of `u` inside the active block.
    pub fn block_vector(&self, k: usize) -> &[f64] {
        &self.u[self.block_index * k..(self.block_index + 1) * k]
    }

    /// `⟨u uᵀ, M⟩ = uᵀ M u`.
    pub fn quadratic_form(&self, mat: &BlockSymMatrix) -> f64 {
        let k = mat.k();
        let u = self.block_vector(k);
        let blk = mat.block(self.block_index);
        let mut acc = 0.0;
        for i in 0..k {
            let mut row = 0.0;
            for j in 0..k {
                row += blk[i * k + j] * u[j];
            }
            acc += u[i] * row;
        }
        acc
    }
}

/// An orthogonal `m × m` matrix that maps `k`-blocks onto `k`-blocks: block
/// row `i` holds a single orthogonal `k × k` block in block column
/// `source[i]`. Conjugation by it preserves the block-diagonal structure.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSimilarity {
    k: usize,
    source: Vec<usize>,
    rotations: Vec<f64>,
}

impl BlockSimilarity {
    /// The identity on `m / k` blocks.
    pub fn identity(m: usize, k: usize) -> Result<Self> {
        check_shape(m, k)?;
        let nb = m / k;
        let mut rotations = vec![0.0; nb * k * k];
        for b in 0..nb {
            for i in 0..k {
                rotations[b * k * k + i * k + i] = 1.0;
            }
        }
        Ok(BlockSimilarity {
            k,
            source: (0..nb).collect(),
            rotations,
        })
    }

    /// Builds a similarity from a block permutation and one orthogonal
    /// `k × k` block per block row (row-major, concatenated).
    pub fn new(k: usize, source: Vec<usize>, rotations: Vec<f64>) -> Result<Self> {
        let nb = source.len();
        check_shape(nb * k, k)?;
        if rotations.len() != nb * k * k {
            return Err(Error::DimensionMismatch {
                what: "rotation data length",
                expected: nb * k * k,
                found: rotations.len(),
            });
        }
        let mut seen = vec![false; nb];
        for &s in &source {
            if s >= nb || seen[s] {
                return Err(Error::NotOrthogonal { deviation: 1.0 });
            }
            seen[s] = true;
        }
        let mut dev: f64 = 0.0;
        for b in 0..nb {
            let r = &rotations[b * k * k..(b + 1) * k * k];
            for i in 0..k {
                for j in 0..k {
                    let dot: f64 = (0..k).map(|t| r[t * k + i] * r[t * k + j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    dev = dev.max((dot - want).abs());
                }
            }
        }
        if !(dev <= ORTHOGONALITY_TOL) {
            return Err(Error::NotOrthogonal { deviation: dev });
        }
        Ok(BlockSimilarity { k, source, rotations })
    }

    /// Permutes whole blocks: block `i` of the result is block `source[i]`.
    pub fn block_permutation(k: usize, source: Vec<usize>) -> Result<Self> {
        let nb = source.len();
        let mut rotations = vec![0.0; nb * k * k];
        for b in 0..nb {
            for i in 0..k {
                rotations[b * k * k + i * k + i] = 1.0;
            }
        }
        Self::new(k, source, rotations)
    }

    /// Decomposes a dense row-major `m × m` orthogonal matrix.
    ///
    /// Fails unless the matrix is orthogonal and each block row has exactly
    /// one nonzero `k × k` block.
    pub fn from_dense(m: usize, k: usize, o: &[f64]) -> Result<Self> {
        check_shape(m, k)?;
        if o.len() != m * m {
            return Err(Error::DimensionMismatch {
                what: "dense matrix length",
                expected: m * m,
                found: o.len(),
            });
        }
        if o.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("similarity matrix"));
        }
        let nb = m / k;
        let mut source = Vec::with_capacity(nb);
        let mut rotations = Vec::with_capacity(nb * k * k);
        for bi in 0..nb {
            let mut norms: Vec<(usize, f64)> = (0..nb)
                .map(|bj| {
                    let mut s = 0.0;
                    for i in 0..k {
                        for j in 0..k {
                            let v = o[(bi * k + i) * m + bj * k + j];
                            s += v * v;
                        }
                    }
                    (bj, s)
                })
                .collect();
            norms.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(core::cmp::Ordering::Equal));
            let (bj, _) = norms[0];
            let leak: f64 = norms[1..].iter().map(|x| x.1).sum();
            if leak > ORTHOGONALITY_TOL * ORTHOGONALITY_TOL {
                return Err(Error::NotOrthogonal { deviation: sqrt(leak) });
            }
            source.push(bj);
            for i in 0..k {
                for j in 0..k {
                    rotations.push(o[(bi * k + i) * m + bj * k + j]);
                }
            }
        }
        Self::new(k, source, rotations)
    }

    /// Block size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Matrix order.
    pub fn m(&self) -> usize {
        self.source.len() * self.k
    }

    /// `O M Oᵀ`.
    pub fn conjugate(&self, mat: &BlockSymMatrix) -> Result<BlockSymMatrix> {
        let k = self.k;
        if mat.k() != k || mat.m() != self.m() {
            return Err(Error::InvalidShape { m: mat.m(), k: mat.k() });
        }
        let mut data = vec![0.0; mat.m() * k];
        let mut tmp = vec![0.0; k * k];
        for (b, &src) in self.source.iter().enumerate() {
            let r = &self.rotations[b * k * k..(b + 1) * k * k];
            let x = mat.block(src);
            // tmp = R X
            for i in 0..k {
                for j in 0..k {
                    tmp[i * k + j] = (0..k).map(|t| r[i * k + t] * x[t * k + j]).sum();
                }
            }
            let out = &mut data[b * k * k..(b + 1) * k * k];
            // out = tmp Rᵀ, computed on the upper triangle and mirrored
            for i in 0..k {
                for j in i..k {
                    let v: f64 = (0..k).map(|t| tmp[i * k + t] * r[j * k + t]).sum();
                    out[i * k + j] = v;
                    out[j * k + i] = v;
                }
            }
        }
        BlockSymMatrix::new(mat.m(), k, data)
    }
}

/// Parameters `(A₁, …, A_d, B)` of a spectrahedral function
/// `x ↦ λ_max(Σᵢ xᵢ Aᵢ + B)`. The offset `B` is absent in homogeneous mode,
/// where the function is positively homogeneous (a support function).
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    m: usize,
    k: usize,
    slopes: Vec<BlockSymMatrix>,
    offset: Option<BlockSymMatrix>,
}

impl Pencil {
    /// Builds a pencil; every matrix must share the same `(m, k)`.
    pub fn new(slopes: Vec<BlockSymMatrix>, offset: Option<BlockSymMatrix>) -> Result<Self> {
        let first = slopes.first().or(offset.as_ref()).ok_or(Error::InvalidConfig(
            "a pencil needs at least one matrix",
        ))?;
        let (m, k) = (first.m(), first.k());
        for mat in slopes.iter().chain(offset.iter()) {
            if mat.m() != m || mat.k() != k {
                return Err(Error::InvalidShape { m: mat.m(), k: mat.k() });
            }
        }
        Ok(Pencil { m, k, slopes, offset })
    }

    /// The all-zero pencil of the given shape.
    pub fn zeros(d: usize, m: usize, k: usize, homogeneous: bool) -> Result<Self> {
        check_shape(m, k)?;
        let z = BlockSymMatrix::zeros(m, k)?;
        Ok(Pencil {
            m,
            k,
            slopes: vec![z.clone(); d],
            offset: if homogeneous { None } else { Some(z) },
        })
    }

    /// A pencil with i.i.d. `N(0, scale²)` entries, each block symmetrized.
    pub fn random<R: rand::Rng + ?Sized>(
        d: usize,
        m: usize,
        k: usize,
        homogeneous: bool,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        check_shape(m, k)?;
        let mut draw = || -> Result<BlockSymMatrix> {
            let data: Vec<f64> = (0..m * k)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    scale * z
                })
                .collect();
            BlockSymMatrix::symmetrized(m, k, data)
        };
        let mut slopes = Vec::with_capacity(d);
        for _ in 0..d {
            slopes.push(draw()?);
        }
        let offset = if homogeneous { None } else { Some(draw()?) };
        if slopes.is_empty() && offset.is_none() {
            return Err(Error::InvalidConfig("a homogeneous pencil needs d ≥ 1"));
        }
        Ok(Pencil { m, k, slopes, offset })
    }

    /// Input dimension `d`.
    pub fn d(&self) -> usize {
        self.slopes.len()
    }

    /// Matrix order.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Block size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// True when there is no offset matrix.
    pub fn is_homogeneous(&self) -> bool {
        self.offset.is_none()
    }

    /// The slope matrices `A₁, …, A_d`.
    pub fn slopes(&self) -> &[BlockSymMatrix] {
        &self.slopes
    }

    /// The offset `B`, if any.
    pub fn offset(&self) -> Option<&BlockSymMatrix> {
        self.offset.as_ref()
    }

    /// Slopes followed by the offset.
    pub fn matrices(&self) -> impl Iterator<Item = &BlockSymMatrix> {
        self.slopes.iter().chain(self.offset.iter())
    }

    /// Number of matrices, `d` or `d + 1`.
    pub fn n_slots(&self) -> usize {
        self.slopes.len() + usize::from(self.offset.is_some())
    }

    /// Free parameters per matrix, `(m / k) · k(k + 1) / 2`.
    pub fn params_per_matrix(&self) -> usize {
        (self.m / self.k) * tri_len(self.k)
    }

    /// All parameters in scaled-vech coordinates, matrix by matrix.
    pub fn to_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_slots() * self.params_per_matrix());
        for mat in self.matrices() {
            mat.write_vech_scaled(&mut out);
        }
        out
    }

    /// Inverse of [`Pencil::to_params`].
    pub fn from_params(d: usize, m: usize, k: usize, homogeneous: bool, params: &[f64]) -> Result<Self> {
        check_shape(m, k)?;
        let per = (m / k) * tri_len(k);
        let slots = d + usize::from(!homogeneous);
        if slots == 0 {
            return Err(Error::InvalidConfig("a homogeneous pencil needs d ≥ 1"));
        }
        if params.len() != per * slots {
            return Err(Error::DimensionMismatch {
                what: "parameter vector length",
                expected: per * slots,
                found: params.len(),
            });
        }
        let mut mats = Vec::with_capacity(slots);
        for s in 0..slots {
            mats.push(BlockSymMatrix::from_vech_scaled(m, k, &params[s * per..(s + 1) * per])?);
        }
        let offset = if homogeneous { None } else { mats.pop() };
        Ok(Pencil { m, k, slopes: mats, offset })
    }

    /// Frobenius distance between two parameter tuples of equal shape.
    pub fn frobenius_distance(&self, other: &Pencil) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.matrices().zip(other.matrices()) {
            for (x, y) in a.as_block_data().iter().zip(b.as_block_data()) {
                acc += (x - y) * (x - y);
            }
        }
        sqrt(acc)
    }

    /// Frobenius norm of the whole parameter tuple.
    pub fn frobenius_norm(&self) -> f64 {
        sqrt(self.matrices().map(BlockSymMatrix::frobenius_norm_sq).sum())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                what: "input dimension",
                expected: self.d(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input point"));
        }
        Ok(())
    }

    /// `Σᵢ xᵢ Aᵢ + B` (without `B` in homogeneous mode).
    pub fn assemble(&self, x: &[f64]) -> Result<BlockSymMatrix> {
        self.check_input(x)?;
        let mut out = BlockSymMatrix::zeros(self.m, self.k)?;
        self.assemble_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn assemble_into(&self, x: &[f64], out: &mut BlockSymMatrix) {
        match &self.offset {
            Some(b) => out.data.copy_from_slice(&b.data),
            None => out.set_zero(),
        }
        for (xi, a) in x.iter().zip(&self.slopes) {
            out.add_scaled(*xi, a);
        }
    }

    /// `λ_max(Σᵢ xᵢ Aᵢ + B)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.assemble(x)?.top_eigenpair()?.lambda)
    }

    /// Top eigenpair of the assembled matrix at `x`.
    pub fn certificate(&self, x: &[f64]) -> Result<ActiveCertificate> {
        self.assemble(x)?.top_eigenpair()
    }

    /// Sampled estimate of `inf_{‖u‖=1} λ₁(A[u]) − λ₂(A[u])` over the
    /// homogeneous part, using `n_dirs` directions drawn uniformly from the
    /// sphere. This is a diagnostic upper estimate, not a certified infimum.
    pub fn eigengap_inf(&self, n_dirs: usize, seed: u64) -> Result<f64> {
        if self.m < 2 {
            return Err(Error::UndefinedEigengap);
        }
        if n_dirs == 0 || self.d() == 0 {
            return Err(Error::InvalidConfig("eigengap needs d ≥ 1 and at least one direction"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let homogeneous = Pencil {
            m: self.m,
            k: self.k,
            slopes: self.slopes.clone(),
            offset: None,
        };
        let mut u = vec![0.0; self.d()];
        let mut worst = f64::INFINITY;
        let mut drawn = 0;
        while drawn < n_dirs {
            for v in u.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let norm = sqrt(u.iter().map(|v| v * v).sum());
            if norm == 0.0 {
                continue;
            }
            u.iter_mut().for_each(|v| *v /= norm);
            let vals = homogeneous.assemble(&u)?.eigenvalues()?;
            worst = worst.min(gap_of(&vals));
            drawn += 1;
        }
        Ok(worst)
    }

    /// Conjugates every matrix by `o`: `(O A₁ Oᵀ, …, O B Oᵀ)`.
    pub fn apply_similarity(&self, o: &BlockSimilarity) -> Result<Pencil> {
        let slopes = self
            .slopes
            .iter()
            .map(|a| o.conjugate(a))
            .collect::<Result<Vec<_>>>()?;
        let offset = self.offset.as_ref().map(|b| o.conjugate(b)).transpose()?;
        Ok(Pencil {
            m: self.m,
            k: self.k,
            slopes,
            offset,
        })
    }
}

// λ₁ − λ₂ of an unsorted spectrum with at least two entries.
pub(crate) fn gap_of(vals: &[f64]) -> f64 {
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in vals {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    first - second
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_gap_pencil() -> Pencil {
        let a1 = BlockSymMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let a2 = BlockSymMatrix::new(2, 2, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        Pencil::new(vec![a1, a2], Some(BlockSymMatrix::zeros(2, 2).unwrap())).unwrap()
    }

    fn norm_pencil() -> Pencil {
        let a1 = BlockSymMatrix::new(2, 2, vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let a2 = BlockSymMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        Pencil::new(vec![a1, a2], None).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_asymmetry() {
        assert_eq!(
            BlockSymMatrix::zeros(3, 2).unwrap_err(),
            Error::InvalidShape { m: 3, k: 2 }
        );
        assert!(matches!(
            BlockSymMatrix::new(2, 2, vec![1.0, 2.0, 2.5, 1.0]),
            Err(Error::NotSymmetric { block: 0, row: 0, col: 1 })
        ));
        assert!(matches!(
            BlockSymMatrix::new(1, 1, vec![f64::NAN]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn assemble_scalar_case() {
        let p = Pencil::new(
            vec![BlockSymMatrix::diagonal(&[2.0]).unwrap()],
            Some(BlockSymMatrix::diagonal(&[1.0]).unwrap()),
        )
        .unwrap();
        assert_eq!(p.assemble(&[3.0]).unwrap().as_block_data(), &[7.0]);
    }

    #[test]
    fn assemble_unit_gap_and_norm_pencils() {
        let r = unit_gap_pencil().assemble(&[1.0, 0.0]).unwrap();
        assert_eq!(r.to_dense(), vec![1.0, 0.0, 0.0, 0.0]);
        let n = norm_pencil().assemble(&[3.0, 4.0]).unwrap();
        assert_eq!(n.to_dense(), vec![3.0, 4.0, 4.0, -3.0]);
    }

    #[test]
    fn assemble_dimension_mismatch() {
        assert!(matches!(
            norm_pencil().assemble(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1, .. })
        ));
    }

    #[test]
    fn top_eigenpair_examples() {
        let c = BlockSymMatrix::identity(2, 2).unwrap().top_eigenpair().unwrap();
        assert_eq!((c.lambda, c.block_index), (1.0, 0));
        assert_eq!(c.u, vec![1.0, 0.0]);

        let c = BlockSymMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0])
            .unwrap()
            .top_eigenpair()
            .unwrap();
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!((c.lambda - 3.0).abs() < 1e-14);
        assert!((c.u[0] - h).abs() < 1e-14 && (c.u[1] - h).abs() < 1e-14);

        let c = BlockSymMatrix::diagonal(&[1.0, 5.0, 3.0]).unwrap().top_eigenpair().unwrap();
        assert_eq!((c.lambda, c.block_index), (5.0, 1));
        assert_eq!(c.u, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn top_eigenpair_tie_goes_to_lowest_block() {
        let c = BlockSymMatrix::diagonal(&[2.0, 2.0, -1.0]).unwrap().top_eigenpair().unwrap();
        assert_eq!(c.block_index, 0);
    }

    #[test]
    fn eval_examples() {
        assert!((norm_pencil().eval(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-14);
        let r = unit_gap_pencil();
        assert!((r.eval(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);
        assert!((r.eval(&[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-14);
        let maxaff = Pencil::new(
            vec![BlockSymMatrix::diagonal(&[1.0, -1.0]).unwrap()],
            Some(BlockSymMatrix::diagonal(&[0.0, 0.0]).unwrap()),
        )
        .unwrap();
        assert_eq!(maxaff.eval(&[2.0]).unwrap(), 2.0);
    }

    #[test]
    fn eigengap_examples() {
        assert!((unit_gap_pencil().eigengap_inf(200, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!((norm_pencil().eigengap_inf(200, 2).unwrap() - 2.0).abs() < 1e-12);
        let i = BlockSymMatrix::identity(2, 2).unwrap();
        let p = Pencil::new(vec![i.clone(), i], None).unwrap();
        assert_eq!(p.eigengap_inf(50, 3).unwrap(), 0.0);
        let scalar = Pencil::new(vec![BlockSymMatrix::diagonal(&[1.0]).unwrap()], None).unwrap();
        assert_eq!(scalar.eigengap_inf(5, 0).unwrap_err(), Error::UndefinedEigengap);
    }

    #[test]
    fn vech_scaled_examples() {
        assert_eq!(BlockSymMatrix::identity(2, 2).unwrap().vech_scaled(), vec![1.0, 0.0, 1.0]);
        let v = BlockSymMatrix::new(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap().vech_scaled();
        assert_eq!(v, vec![2.0, SQRT_2, 2.0]);
        assert_eq!(BlockSymMatrix::diagonal(&[3.0, 4.0]).unwrap().vech_scaled(), vec![3.0, 4.0]);
    }

    #[test]
    fn similarity_examples() {
        let r = unit_gap_pencil();
        let id = BlockSimilarity::identity(2, 2).unwrap();
        assert_eq!(r.apply_similarity(&id).unwrap(), r);

        let swap = BlockSimilarity::from_dense(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let s = r.apply_similarity(&swap).unwrap();
        assert!((s.eval(&[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);

        let neg = BlockSimilarity::from_dense(2, 2, &[-1.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(r.apply_similarity(&neg).unwrap(), r);
    }

    #[test]
    fn similarity_rejects_non_orthogonal() {
        assert!(matches!(
            BlockSimilarity::from_dense(2, 2, &[1.0, 0.1, 0.0, 1.0]),
            Err(Error::NotOrthogonal { .. })
        ));
        // orthogonal but mixes two 1×1 blocks
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert!(matches!(
            BlockSimilarity::from_dense(2, 1, &[h, h, -h, h]),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn block_permutation_moves_blocks() {
        let m = BlockSymMatrix::diagonal(&[1.0, 2.0, 3.0]).unwrap();
        let p = BlockSimilarity::block_permutation(1, vec![2, 0, 1]).unwrap();
        assert_eq!(p.conjugate(&m).unwrap().as_block_data(), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn params_round_trip() {
        let r = unit_gap_pencil();
        let back = Pencil::from_params(2, 2, 2, false, &r.to_params()).unwrap();
        assert!(r.frobenius_distance(&back) < 1e-15);
    }
}
