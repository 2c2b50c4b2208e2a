//! Error metrics, hold-out model selection and benchmark table rows.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::altmin::{fit, FitConfig, FitReport};
use crate::data::split;
use crate::math::sqrt;
use crate::pencil::tri_len;
use crate::{Dataset, Error, Pencil, Result};

/// Version tag written into serialized benchmark tables.
pub const FORMAT_VERSION: &str = "1";

/// Mean squared error of `pencil` on `dataset`.
pub fn mse(pencil: &Pencil, dataset: &Dataset) -> Result<f64> {
    if dataset.d() != pencil.d() {
        return Err(Error::DimensionMismatch {
            what: "covariate dimension",
            expected: pencil.d(),
            found: dataset.d(),
        });
    }
    let mut acc = 0.0;
    for (i, (x, y)) in dataset.rows().zip(dataset.y()).enumerate() {
        let r = y - pencil.eval(x).map_err(|e| e.at_sample(i))?;
        acc += r * r;
    }
    Ok(acc / dataset.n() as f64)
}

/// Root-mean-squared error of `pencil` on `dataset`.
pub fn rmse(pencil: &Pencil, dataset: &Dataset) -> Result<f64> {
    mse(pencil, dataset).map(sqrt)
}

/// Free parameters per coefficient matrix: `(m / k) · k(k + 1) / 2`.
pub fn dof_per_dim(m: usize, k: usize) -> usize {
    (m / k) * tri_len(k)
}

/// The order `m` with `m(m + 1) / 2 = dof`.
pub fn dof_level_order(dof: usize) -> Result<usize> {
    (1..=dof)
        .find(|&m| tri_len(m) == dof)
        .ok_or(Error::InvalidDofLevel(dof))
}

/// Which family a fitted shape belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Estimator {
    /// Blocks larger than 1×1.
    Spectrahedral,
    /// Diagonal pencil, i.e. max-affine.
    Polyhedral,
}

impl Estimator {
    /// Classifies a shape by its block size.
    pub fn of_shape(_m: usize, k: usize) -> Self {
        if k == 1 {
            Estimator::Polyhedral
        } else {
            Estimator::Spectrahedral
        }
    }

    /// Lower-case name.
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimator::Spectrahedral => "spectrahedral",
            Estimator::Polyhedral => "polyhedral",
        }
    }
}

/// One cell of a benchmark or hold-out table.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkRow {
    /// Data source tag.
    pub model: String,
    /// `(m / k) · k(k + 1) / 2`.
    pub dof_per_dim: usize,
    /// Estimator family.
    pub estimator: Estimator,
    /// Matrix order.
    pub m: usize,
    /// Block size.
    pub k: usize,
    /// RMSE on the training split.
    pub train_rmse: f64,
    /// RMSE on the held-out split.
    pub test_rmse: f64,
    /// Wall-clock seconds spent fitting; zero when not measured.
    pub wall_time_s: f64,
    /// Restarts used.
    pub restarts: usize,
    /// Seed of the fit.
    pub seed: u64,
}

/// A table of benchmark cells.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkResult {
    /// Always [`FORMAT_VERSION`].
    pub format_version: String,
    /// Cells in emission order.
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkResult {
    /// An empty table.
    pub fn new() -> Self {
        BenchmarkResult {
            format_version: FORMAT_VERSION.to_string(),
            rows: Vec::new(),
        }
    }
}

impl Default for BenchmarkResult {
    fn default() -> Self {
        Self::new()
    }
}

/// Fits `config`'s shape on `train` and scores it on `train` and `test`.
pub fn score_candidate(
    model: &str,
    train: &Dataset,
    test: &Dataset,
    config: &FitConfig,
) -> Result<(BenchmarkRow, FitReport)> {
    let report = fit(train, config)?;
    let row = BenchmarkRow {
        model: model.to_string(),
        dof_per_dim: dof_per_dim(config.m, config.k),
        estimator: Estimator::of_shape(config.m, config.k),
        m: config.m,
        k: config.k,
        train_rmse: rmse(&report.best_pencil, train)?,
        test_rmse: rmse(&report.best_pencil, test)?,
        wall_time_s: 0.0,
        restarts: config.restarts,
        seed: config.seed,
    };
    Ok((row, report))
}

/// A candidate that could not be fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFailure {
    /// Matrix order.
    pub m: usize,
    /// Block size.
    pub k: usize,
    /// What went wrong.
    pub error: Error,
}

/// Outcome of [`holdout_select`].
#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutSelection {
    /// Winning `(m, k)`.
    pub best: (usize, usize),
    /// One row per surviving candidate, in candidate order.
    pub table: BenchmarkResult,
    /// Candidates that failed.
    pub failures: Vec<CandidateFailure>,
}

/// Index of the best row: lowest test RMSE, then fewer degrees of freedom,
/// then smaller block size.
pub fn select_best(rows: &[BenchmarkRow]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in rows.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &rows[b];
                let key = (r.test_rmse, r.dof_per_dim, r.k);
                let cur_key = (cur.test_rmse, cur.dof_per_dim, cur.k);
                if key.partial_cmp(&cur_key) == Some(core::cmp::Ordering::Less) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Splits once, fits every candidate `(m, k)` on the training part and
/// returns the one with the lowest held-out RMSE together with the table.
///
/// `config.m` and `config.k` are overridden per candidate. Candidates that
/// fail are listed in `failures` and skipped.
pub fn holdout_select(
    dataset: &Dataset,
    candidates: &[(usize, usize)],
    config: &FitConfig,
    test_fraction: f64,
    seed: u64,
) -> Result<HoldoutSelection> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("holdout selection needs at least one candidate"));
    }
    let (train, test) = split(dataset, test_fraction, seed)?;
    let tag = if dataset.meta.source.is_empty() {
        "dataset"
    } else {
        dataset.meta.source.as_str()
    };
    let mut table = BenchmarkResult::new();
    let mut failures = Vec::new();
    for &(m, k) in candidates {
        let mut cfg = config.clone();
        cfg.m = m;
        cfg.k = k;
        match score_candidate(tag, &train, &test, &cfg) {
            Ok((row, _)) => table.rows.push(row),
            Err(error) => failures.push(CandidateFailure { m, k, error }),
        }
    }
    let best = select_best(&table.rows).ok_or(Error::NoSurvivingCandidate)?;
    let best = (table.rows[best].m, table.rows[best].k);
    Ok(HoldoutSelection {
        best,
        table,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::BlockSymMatrix;
    use alloc::vec;

    #[test]
    fn rmse_examples() {
        let c = 1.5;
        let p = Pencil::new(vec![], Some(BlockSymMatrix::diagonal(&[c]).unwrap())).unwrap();
        let ds = Dataset::new(0, vec![], vec![c + 1.0, c - 1.0]).unwrap();
        assert!((rmse(&p, &ds).unwrap() - 1.0).abs() < 1e-15);
        let exact = Dataset::new(0, vec![], vec![c, c]).unwrap();
        assert_eq!(rmse(&p, &exact).unwrap(), 0.0);
    }

    #[test]
    fn dof_accounting() {
        assert_eq!(dof_per_dim(3, 3), 6);
        assert_eq!(dof_per_dim(6, 1), 6);
        assert_eq!(dof_per_dim(6, 2), 9);
        assert_eq!(dof_level_order(3).unwrap(), 2);
        assert_eq!(dof_level_order(6).unwrap(), 3);
        assert_eq!(dof_level_order(10).unwrap(), 4);
        assert_eq!(dof_level_order(7).unwrap_err(), Error::InvalidDofLevel(7));
        for (m, k) in [(1, 1), (4, 2), (6, 3), (5, 5), (8, 4)] {
            let p = Pencil::zeros(1, m, k, true).unwrap();
            assert_eq!(p.params_per_matrix(), dof_per_dim(m, k));
        }
    }

    fn row(test_rmse: f64, dof: usize, k: usize) -> BenchmarkRow {
        BenchmarkRow {
            model: "t".to_string(),
            dof_per_dim: dof,
            estimator: Estimator::of_shape(dof, k),
            m: dof,
            k,
            train_rmse: 0.0,
            test_rmse,
            wall_time_s: 0.0,
            restarts: 1,
            seed: 0,
        }
    }

    #[test]
    fn ties_prefer_smaller_models() {
        let rows = vec![row(0.5, 6, 3), row(0.5, 3, 2), row(0.7, 1, 1)];
        assert_eq!(select_best(&rows), Some(1));
        let rows = vec![row(0.5, 6, 3), row(0.5, 6, 1)];
        assert_eq!(select_best(&rows), Some(1));
        assert_eq!(select_best(&[]), None);
    }

    #[test]
    fn single_candidate_is_returned() {
        let x: Vec<f64> = (0..40).map(|i| i as f64 / 40.0 - 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let ds = Dataset::new(1, x, y).unwrap();
        let mut cfg = FitConfig::new(2, 1);
        cfg.restarts = 4;
        let sel = holdout_select(&ds, &[(2, 1)], &cfg, 0.2, 1).unwrap();
        assert_eq!(sel.best, (2, 1));
        assert_eq!(sel.table.rows.len(), 1);
        assert!(sel.table.rows[0].test_rmse >= 0.0);
    }

    #[test]
    fn failed_candidates_are_recorded() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ds = Dataset::new(1, x.clone(), x).unwrap();
        let mut cfg = FitConfig::new(1, 1);
        cfg.restarts = 2;
        let sel = holdout_select(&ds, &[(3, 2), (1, 1)], &cfg, 0.2, 0).unwrap();
        assert_eq!(sel.best, (1, 1));
        assert_eq!(sel.failures.len(), 1);
        assert_eq!(sel.failures[0].error, Error::InvalidShape { m: 3, k: 2 });
    }
}
