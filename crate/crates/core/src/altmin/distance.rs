use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::sym_eigen;
use crate::math::sqrt;
use crate::Pencil;

/// Default cap on the number of block permutations probed.
pub const DEFAULT_PROBES: usize = 720;

// Largest k for which all 2^k eigenvector sign patterns are tried.
const MAX_SIGN_ENUM: usize = 6;

/// Heuristic distance between two pencils modulo simultaneous orthogonal
/// conjugation.
///
/// The result is `min ‖p1 − O(p2)‖_F` over a finite probe set of
/// block-structured orthogonal `O`: block permutations (at most `n_probes`,
/// identity first) combined, per block, with either the identity or a
/// rotation aligning the eigenbases of the offset (or first slope) blocks,
/// over all eigenvector sign patterns. Every probe is a genuine similarity,
/// so the value is an upper bound on the true distance modulo similarity.
///
/// Shape mismatches give `f64::INFINITY`.
pub fn param_distance_mod_similarity(p1: &Pencil, p2: &Pencil, n_probes: usize) -> f64 {
    if p1.d() != p2.d()
        || p1.m() != p2.m()
        || p1.k() != p2.k()
        || p1.is_homogeneous() != p2.is_homogeneous()
    {
        return f64::INFINITY;
    }
    let k = p1.k();
    let nb = p1.m() / k;
    let m1: Vec<_> = p1.matrices().collect();
    let m2: Vec<_> = p2.matrices().collect();

    // cost[a][b]: best squared distance between block a of p1 and block b of p2
    let mut cost = vec![0.0; nb * nb];
    for a in 0..nb {
        for b in 0..nb {
            let blocks1: Vec<&[f64]> = m1.iter().map(|mat| mat.block(a)).collect();
            let blocks2: Vec<&[f64]> = m2.iter().map(|mat| mat.block(b)).collect();
            cost[a * nb + b] = best_block_cost(&blocks1, &blocks2, k);
        }
    }

    let mut perm: Vec<usize> = (0..nb).collect();
    let mut best = f64::INFINITY;
    let mut tried = 0;
    loop {
        let total: f64 = (0..nb).map(|a| cost[a * nb + perm[a]]).sum();
        best = best.min(total);
        tried += 1;
        if tried >= n_probes.max(1) || !next_permutation(&mut perm) {
            break;
        }
    }
    sqrt(best.max(0.0))
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

// R X Rᵀ for row-major k×k R and X.
fn conjugate(r: &[f64], x: &[f64], k: usize, tmp: &mut [f64], out: &mut [f64]) {
    for i in 0..k {
        for j in 0..k {
            tmp[i * k + j] = (0..k).map(|t| r[i * k + t] * x[t * k + j]).sum();
        }
    }
    for i in 0..k {
        for j in 0..k {
            out[i * k + j] = (0..k).map(|t| tmp[i * k + t] * r[j * k + t]).sum();
        }
    }
}

fn best_block_cost(b1: &[&[f64]], b2: &[&[f64]], k: usize) -> f64 {
    let identity: f64 = b1.iter().zip(b2).map(|(x, y)| sq_dist(x, y)).sum();
    if k == 1 {
        return identity;
    }
    let mut best = identity;
    let mut tmp = vec![0.0; k * k];
    let mut conj = vec![0.0; k * k];
    let mut r = vec![0.0; k * k];

    // alignment sources: the offset (last matrix) and the first slope
    let mut sources = vec![b1.len() - 1];
    if b1.len() > 1 {
        sources.push(0);
    }
    for &src in &sources {
        let (Ok(e1), Ok(e2)) = (sym_eigen(b1[src], k), sym_eigen(b2[src], k)) else {
            continue;
        };
        let order1 = sorted_order(&e1.values);
        let order2 = sorted_order(&e2.values);
        let patterns: u32 = if k <= MAX_SIGN_ENUM { 1 << k } else { 1 };
        for signs in 0..patterns {
            // R = Σ_t s_t v1_t v2_tᵀ maps p2's eigenbasis onto p1's
            r.iter_mut().for_each(|v| *v = 0.0);
            for t in 0..k {
                let s = if signs & (1 << t) != 0 { -1.0 } else { 1.0 };
                let (c1, c2) = (order1[t], order2[t]);
                for i in 0..k {
                    for j in 0..k {
                        r[i * k + j] += s * e1.vectors[i * k + c1] * e2.vectors[j * k + c2];
                    }
                }
            }
            let mut total = 0.0;
            for (x, y) in b1.iter().zip(b2) {
                conjugate(&r, y, k, &mut tmp, &mut conj);
                total += sq_dist(x, &conj);
                if total >= best {
                    break;
                }
            }
            best = best.min(total);
        }
    }
    best
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(core::cmp::Ordering::Equal));
    idx
}
