mod oracle;

use oracle::{gaussian_rows, kronecker_lls, kronecker_prediction, max_affine_mse, max_affine_step, pieces_of, rng};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use specreg_core::{assign_certificates, fit_with_init, lls_update, ActiveCertificate, Dataset, FitConfig, Pencil};

fn random_certificates(r: &mut ChaCha8Rng, n: usize, m: usize, k: usize) -> Vec<ActiveCertificate> {
    (0..n)
        .map(|_| {
            let block = r.random_range(0..m / k);
            let mut u = vec![0.0; m];
            let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(r)).collect();
            let norm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
            for t in 0..k {
                u[block * k + t] = v[t] / norm;
            }
            ActiveCertificate {
                lambda: 0.0,
                u,
                block_index: block,
            }
        })
        .collect()
}

fn linearized(p: &Pencil, x: &[f64], c: &ActiveCertificate) -> f64 {
    c.quadratic_form(&p.assemble(x).unwrap())
}

#[test]
fn lls_matches_dense_kronecker_normal_equations() {
    let mut r = rng(2024);
    for trial in 0..200 {
        let n = r.random_range(1..=30);
        let d = r.random_range(1..=3);
        let m = r.random_range(1..=3);
        let divisors: Vec<usize> = (1..=m).filter(|k| m % k == 0).collect();
        let k = divisors[r.random_range(0..divisors.len())];
        let homogeneous = r.random_bool(0.3);
        let ridge = if r.random_bool(0.5) { 0.0 } else { 0.05 };
        let x = gaussian_rows(&mut r, n, d);
        let y = gaussian_rows(&mut r, n, 1);
        let ds = Dataset::new(d, x, y).unwrap();
        let certs = random_certificates(&mut r, n, m, k);

        let ours = lls_update(&certs, &ds, (d, m, k), homogeneous, ridge).unwrap();
        let dense = kronecker_lls(&certs, &ds, m, homogeneous, ridge);
        for (i, c) in certs.iter().enumerate() {
            let a = linearized(&ours, ds.row(i), c);
            let b = kronecker_prediction(&dense, ds.row(i), &c.u);
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "trial {trial}, sample {i}: {a} vs {b}");
        }
    }
}

#[test]
fn lls_with_ridge_matches_dense_parameters() {
    let mut r = rng(7);
    let (n, d, m, k) = (6, 2, 2, 2);
    let x = gaussian_rows(&mut r, n, d);
    let y = gaussian_rows(&mut r, n, 1);
    let ds = Dataset::new(d, x, y).unwrap();
    let certs = random_certificates(&mut r, n, m, k);
    let ours = lls_update(&certs, &ds, (d, m, k), false, 0.1).unwrap();
    let dense = kronecker_lls(&certs, &ds, m, false, 0.1);
    for (mat, want) in ours.matrices().zip(&dense) {
        let got = mat.to_dense();
        for a in 0..m {
            for b in 0..m {
                assert!((got[a * m + b] - want[(a, b)]).abs() < 1e-10);
            }
        }
    }
}

// Runs `steps` partition-then-regress rounds and returns the pieces with the
// lowest training MSE among the start and every iterate.
fn max_affine_best(start: &Pencil, ds: &Dataset, steps: usize) -> (f64, oracle::Pieces) {
    let mut cur = pieces_of(start);
    let mut best = (max_affine_mse(&cur, ds), cur.clone());
    for _ in 0..steps {
        cur = max_affine_step(&cur, ds);
        let e = max_affine_mse(&cur, ds);
        if e < best.0 {
            best = (e, cur.clone());
        }
    }
    best
}

#[test]
fn k_one_step_is_partition_then_regress() {
    let mut r = rng(11);
    for _ in 0..50 {
        let d = r.random_range(1..=3);
        let m = r.random_range(1..=5);
        let n = 40;
        let x = gaussian_rows(&mut r, n, d);
        let y: Vec<f64> = x.chunks(d).map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).collect();
        let ds = Dataset::new(d, x, y).unwrap();
        let p = Pencil::random(d, m, 1, false, 1.0, &mut r).unwrap();

        let certs = assign_certificates(&p, &ds).unwrap();
        let ours = lls_update(&certs, &ds, (d, m, 1), false, 0.0).unwrap();
        let theirs = max_affine_step(&pieces_of(&p), &ds);
        for (j, (slope, off)) in theirs.iter().enumerate() {
            let got = &pieces_of(&ours)[j];
            for t in 0..d {
                assert!((got.0[t] - slope[t]).abs() < 1e-8, "{:?} vs {:?}", got, (slope, off));
            }
            assert!((got.1 - off).abs() < 1e-8);
        }
    }
}

#[test]
fn k_one_fit_agrees_with_independent_max_affine() {
    let mut r = rng(12);
    for trial in 0..20 {
        let d = 2;
        let m = 4;
        let n = 120;
        let x = gaussian_rows(&mut r, n, d);
        let y: Vec<f64> = x.chunks(d).map(|row| (row[0] * row[0] + row[1] * row[1]).sqrt()).collect();
        let ds = Dataset::new(d, x, y).unwrap();
        let init = Pencil::random(d, m, 1, false, 1.0, &mut r).unwrap();

        let mut cfg = FitConfig::new(m, 1);
        cfg.max_iters = 15;
        cfg.param_tol = 1e-300;
        cfg.objective_tol = 1e-300;
        let report = fit_with_init(&ds, &cfg, &init, None).unwrap();
        let iters = report.per_restart[0].iters_used;
        let (oracle_mse, pieces) = max_affine_best(&init, &ds, iters);
        assert!(
            (report.best_train_mse - oracle_mse).abs() <= 1e-8 * oracle_mse.max(1.0),
            "trial {trial}: {} vs {oracle_mse}",
            report.best_train_mse
        );
        for xrow in ds.rows() {
            let a = report.best_pencil.eval(xrow).unwrap();
            let b = oracle::max_affine_eval(&pieces, xrow).1;
            assert!((a - b).abs() < 1e-8, "trial {trial}: {a} vs {b}");
        }
    }
}
