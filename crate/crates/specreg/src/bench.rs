//! Benchmark harness pairing `(m, m)`-spectrahedral with `m(m+1)/2`-polyhedral fits.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use specreg_core::data::GenSpec;
use specreg_core::eval::{dof_level_order, dof_per_dim, BenchmarkResult, BenchmarkRow, Estimator};
use specreg_core::data::DEFAULT_EXP_B;
use specreg_core::{generate, rmse, split, Dataset, FitConfig, Model, Pencil};

use crate::csvio::{load_csv, ColumnSpec};
use crate::error::{Error, Result};
use crate::parallel::fit_parallel;

/// Degree-of-freedom levels of the published tables.
pub const DEFAULT_DOF_LEVELS: [usize; 3] = [3, 6, 10];

/// Benchmark data source.
#[derive(Debug, Clone)]
pub enum Suite {
    /// Models `l2norm` and `expmodel`: noisy training draw, noiseless test draw.
    Synthetic,
    /// Noiseless circuit samples with a hold-out split.
    Circuit,
    /// A CSV file with a hold-out split.
    Csv { path: PathBuf, columns: ColumnSpec },
}

/// Data protocol and fit settings of a benchmark.
#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Restarts, iteration cap, tolerances and seed; `m` and `k` are set per cell.
    pub fit: FitConfig,
    /// Training samples per synthetic model, and total samples for the circuit suite.
    pub n_train: usize,
    /// Noiseless test samples per synthetic model.
    pub n_test: usize,
    /// Training noise of the synthetic suite.
    pub sigma: f64,
    /// Hold-out fraction for the circuit and CSV suites.
    pub test_fraction: f64,
    /// Exponent of `expmodel`.
    pub exp_b: f64,
    /// Record wall-clock time per cell; otherwise `wall_time_s` is 0 and the
    /// output is a pure function of the inputs.
    pub timing: bool,
}

impl BenchConfig {
    pub fn new(fit: FitConfig) -> Self {
        BenchConfig {
            fit,
            n_train: 200,
            n_test: 200,
            sigma: 0.1,
            test_fraction: 0.2,
            exp_b: DEFAULT_EXP_B,
            timing: false,
        }
    }
}

// SplitMix64 finalizer, used to derive independent sub-seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `stream`-th data draw for `model`, derived from the master seed.
pub fn data_seed(seed: u64, model: &str, stream: u64) -> u64 {
    let tag = model.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    mix(mix(seed ^ tag) ^ stream)
}

/// Train and test data of every model in `suite`.
pub fn suite_data(suite: &Suite, cfg: &BenchConfig) -> Result<Vec<(String, Dataset, Dataset)>> {
    let seed = cfg.fit.seed;
    match suite {
        Suite::Synthetic => [Model::L2Norm, Model::ExpModel { b: cfg.exp_b }]
            .into_iter()
            .map(|model| {
                let tag = model.tag().to_string();
                let train = generate(&GenSpec {
                    model: model.clone(),
                    n: cfg.n_train,
                    sigma: cfg.sigma,
                    seed: data_seed(seed, &tag, 0),
                })?;
                let test = generate(&GenSpec {
                    model,
                    n: cfg.n_test,
                    sigma: 0.0,
                    seed: data_seed(seed, &tag, 1),
                })?;
                Ok((tag, train, test))
            })
            .collect(),
        Suite::Circuit => {
            let all = generate(&GenSpec {
                model: Model::circuit(),
                n: cfg.n_train,
                sigma: 0.0,
                seed: data_seed(seed, "circuit", 0),
            })?;
            let (train, test) = split(&all, cfg.test_fraction, data_seed(seed, "circuit", 1))?;
            Ok(vec![("circuit".to_string(), train, test)])
        }
        Suite::Csv { path, columns } => {
            let all = load_csv(path, columns)?;
            let (train, test) = split(&all, cfg.test_fraction, data_seed(seed, "csv", 1))?;
            let tag = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".to_string());
            Ok(vec![(tag, train, test)])
        }
    }
}

/// The `(m, k)` shapes compared at a degree-of-freedom level.
pub fn level_shapes(dof: usize) -> Result<[(usize, usize); 2]> {
    let m = dof_level_order(dof)?;
    Ok([(m, m), (dof, 1)])
}

/// Fits and scores one cell.
pub fn run_cell(model: &str, train: &Dataset, test: &Dataset, fit: &FitConfig, timing: bool) -> Result<BenchmarkRow> {
    fit_cell(model, train, test, fit, timing).map(|(row, _)| row)
}

/// Like [`run_cell`], also returning the selected pencil.
pub fn fit_cell(
    model: &str,
    train: &Dataset,
    test: &Dataset,
    fit: &FitConfig,
    timing: bool,
) -> Result<(BenchmarkRow, Pencil)> {
    let start = Instant::now();
    let report = fit_parallel(train, fit)?;
    let elapsed = start.elapsed().as_secs_f64();
    let row = BenchmarkRow {
        model: model.to_string(),
        dof_per_dim: dof_per_dim(fit.m, fit.k),
        estimator: Estimator::of_shape(fit.m, fit.k),
        m: fit.m,
        k: fit.k,
        train_rmse: rmse(&report.best_pencil, train)?,
        test_rmse: rmse(&report.best_pencil, test)?,
        wall_time_s: if timing { elapsed } else { 0.0 },
        restarts: fit.restarts,
        seed: fit.seed,
    };
    Ok((row, report.best_pencil))
}

/// Runs every model × dof level × estimator cell, in that order.
pub fn run_benchmark(suite: &Suite, dof_levels: &[usize], cfg: &BenchConfig) -> Result<BenchmarkResult> {
    if dof_levels.is_empty() {
        return Err(Error::Usage("at least one dof level is required".into()));
    }
    let shapes = dof_levels.iter().map(|&v| level_shapes(v)).collect::<Result<Vec<_>>>()?;
    let data = suite_data(suite, cfg)?;
    let mut out = BenchmarkResult::new();
    for (tag, train, test) in &data {
        for pair in &shapes {
            for &(m, k) in pair {
                let mut fit = cfg.fit.clone();
                fit.m = m;
                fit.k = k;
                out.rows.push(run_cell(tag, train, test, &fit, cfg.timing)?);
            }
        }
    }
    Ok(out)
}

/// Column order of the benchmark CSV.
pub const CSV_HEADER: [&str; 9] = [
    "model", "dof", "estimator", "m", "k", "train_rmse", "test_rmse", "wall_time_s", "seed",
];

/// Renders a table as CSV text.
pub fn benchmark_csv(result: &BenchmarkResult) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &result.rows {
        w.write_record([
            r.model.clone(),
            r.dof_per_dim.to_string(),
            r.estimator.as_str().to_string(),
            r.m.to_string(),
            r.k.to_string(),
            r.train_rmse.to_string(),
            r.test_rmse.to_string(),
            r.wall_time_s.to_string(),
            r.seed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

/// Writes `<prefix>.csv` and `<prefix>.json`; returns both paths.
pub fn write_benchmark(prefix: &Path, result: &BenchmarkResult) -> Result<(PathBuf, PathBuf)> {
    let with_ext = |ext: &str| {
        let mut s = prefix.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    let csv_path = with_ext(".csv");
    let json_path = with_ext(".json");
    std::fs::write(&csv_path, benchmark_csv(result)?).map_err(|e| Error::io(&csv_path, e))?;
    let mut json = serde_json::to_vec_pretty(result)?;
    json.push(b'\n');
    let mut f = std::fs::File::create(&json_path).map_err(|e| Error::io(&json_path, e))?;
    f.write_all(&json).map_err(|e| Error::io(&json_path, e))?;
    Ok((csv_path, json_path))
}
