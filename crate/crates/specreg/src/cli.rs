//! Subcommands of the `specreg` binary.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use specreg_core::data::GenSpec;
use specreg_core::eval::mse;
use specreg_core::{generate, normalize_directions, FitConfig, Model, Pencil};

use crate::bench::{run_benchmark, write_benchmark, BenchConfig, Suite};
use crate::csvio::{default_x_names, load_csv, parse_transforms, write_dataset, write_rows, ColumnSpec, Table};
use crate::error::{Error, Result};
use crate::grid::grid;
use crate::model_file::{DatasetProvenance, ModelFile, ModelMeta};
use crate::parallel::fit_parallel;

#[derive(Debug, Parser)]
#[command(name = "specreg", version, about = "Spectrahedral regression: fit λ_max of affine matrix pencils to data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic dataset and write it as CSV.
    Synth(SynthArgs),
    /// Fit a pencil to a CSV dataset and write a model file.
    Fit(FitArgs),
    /// Append model predictions to a CSV file.
    Predict(PredictArgs),
    /// Print the error of a model on a CSV dataset.
    Eval(EvalArgs),
    /// Evaluate a model on a regular lattice.
    Grid(GridArgs),
    /// Compare spectrahedral and polyhedral fits at matched degrees of freedom.
    Benchmark(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// l2norm, expmodel or circuit.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub n: usize,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exponent of expmodel.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ColumnArgs {
    /// Comma-separated covariate columns; defaults to every column except the response.
    #[arg(long, value_delimiter = ',')]
    pub x_cols: Option<Vec<String>>,
    #[arg(long, default_value = "y")]
    pub y_col: String,
    /// Per-column transforms, e.g. "educ=expbase:1.2;wage=log".
    #[arg(long)]
    pub transforms: Option<String>,
}

impl ColumnArgs {
    fn spec(&self) -> Result<ColumnSpec> {
        Ok(ColumnSpec {
            x_columns: self.x_cols.clone(),
            y_column: self.y_col.clone(),
            transforms: match &self.transforms {
                Some(t) => parse_transforms(t)?,
                None => Default::default(),
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub columns: ColumnArgs,
    /// Matrix order.
    #[arg(long)]
    pub m: usize,
    /// Block size; must divide m.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub param_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub objective_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    pub init_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fit without an offset matrix (support-function mode).
    #[arg(long)]
    pub homogeneous: bool,
    /// Rescale covariate rows onto the unit sphere before fitting.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    #[arg(long)]
    pub out_model: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub columns: ColumnArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mins: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub maxs: Vec<f64>,
    /// Points per axis; a single value applies to every axis.
    #[arg(long, value_delimiter = ',')]
    pub steps: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// synthetic, circuit or csv.
    #[arg(long)]
    pub suite: String,
    /// Dataset for the csv suite.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub columns: ColumnArgs,
    #[arg(long, value_delimiter = ',', default_value = "3,6,10")]
    pub dof_levels: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training samples (synthetic) or total samples (circuit).
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Record wall-clock time per cell.
    #[arg(long)]
    pub timing: bool,
    /// Output prefix; `.csv` and `.json` are appended.
    #[arg(long)]
    pub out: PathBuf,
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out).map_err(|e| Error::io("<stdout>", e))
}

fn load_model(path: &std::path::Path) -> Result<(ModelFile, Pencil)> {
    let file = ModelFile::read(path)?;
    let pencil = file.to_pencil()?;
    Ok((file, pencil))
}

/// Runs a parsed command line, writing reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Fit(a) => fit(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Grid(a) => grid_cmd(a, out),
        Command::Benchmark(a) => benchmark(a, out),
    }
}

fn synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    if a.n == 0 {
        return Err(Error::Usage("--n must be at least 1".into()));
    }
    let mut model: Model = a
        .model
        .parse()
        .map_err(|_| Error::Usage(format!("unknown model `{}` (expected l2norm, expmodel or circuit)", a.model)))?;
    if let Some(b) = a.b {
        match &mut model {
            Model::ExpModel { b: slot } => *slot = b,
            _ => return Err(Error::Usage("--b applies only to expmodel".into())),
        }
    }
    let ds = generate(&GenSpec {
        model,
        n: a.n,
        sigma: a.sigma,
        seed: a.seed,
    })?;
    write_dataset(&a.out, &ds)?;
    writeln!(out, "{}", ds.n()).map_err(|e| Error::io("<stdout>", e))
}

#[derive(Serialize)]
struct RestartSummary {
    restart: usize,
    iters_used: usize,
    final_mse: Option<f64>,
    stop_reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

#[derive(Serialize)]
struct FitOutput {
    train_rmse: f64,
    best_train_mse: f64,
    d: usize,
    m: usize,
    k: usize,
    n: usize,
    dropped_rows: usize,
    seed: u64,
    restarts_summary: Vec<RestartSummary>,
}

fn fit(a: FitArgs, out: &mut dyn Write) -> Result<()> {
    let config = FitConfig {
        m: a.m,
        k: a.k,
        restarts: a.restarts,
        max_iters: a.max_iters,
        param_tol: a.param_tol,
        objective_tol: a.objective_tol,
        ridge: a.ridge,
        init_scale: a.init_scale,
        seed: a.seed,
        homogeneous: a.homogeneous,
    };
    config.validate()?;
    let spec = a.columns.spec()?;
    let mut ds = load_csv(&a.data, &spec)?;
    if a.normalize {
        ds = normalize_directions(&ds)?;
    }
    let x_columns = spec
        .x_columns
        .clone()
        .unwrap_or_else(|| Table::read(&a.data).map(|t| t.headers).unwrap_or_default().into_iter().filter(|h| *h != spec.y_column).collect());

    let report = fit_parallel(&ds, &config)?;
    let train_rmse = specreg_core::rmse(&report.best_pencil, &ds)?;
    let meta = ModelMeta {
        created_by: format!("specreg {}", env!("CARGO_PKG_VERSION")),
        seed: Some(a.seed),
        train_rmse: Some(train_rmse),
        dataset: DatasetProvenance::of(&ds),
        x_columns,
    };
    ModelFile::from_pencil(&report.best_pencil, meta).write(&a.out_model)?;

    let restarts_summary = report
        .per_restart
        .iter()
        .map(|r| RestartSummary {
            restart: r.restart,
            iters_used: r.iters_used,
            final_mse: r.final_mse.is_finite().then_some(r.final_mse),
            stop_reason: r.stop_reason.as_str(),
            failure: r.failure.clone(),
        })
        .collect();
    emit(
        out,
        &FitOutput {
            train_rmse,
            best_train_mse: report.best_train_mse,
            d: ds.d(),
            m: a.m,
            k: a.k,
            n: ds.n(),
            dropped_rows: ds.meta.dropped_rows,
            seed: a.seed,
            restarts_summary,
        },
    )
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let (_, pencil) = load_model(&a.model)?;
    let spec = a.columns.spec()?;
    let table = Table::read(&a.data)?;
    let x_names: Vec<String> = match &spec.x_columns {
        Some(c) => c.clone(),
        None => table
            .headers
            .iter()
            .filter(|h| **h != spec.y_column && *h != "yhat")
            .cloned()
            .collect(),
    };
    if x_names.len() != pencil.d() {
        return Err(Error::Shape {
            model_d: pencil.d(),
            data_d: x_names.len(),
        });
    }
    let x_idx = x_names.iter().map(|c| table.column(c)).collect::<Result<Vec<_>>>()?;
    let transforms: Vec<_> = x_names
        .iter()
        .map(|n| spec.transforms.get(n).copied().unwrap_or(specreg_core::Transform::Identity))
        .collect();

    let mut header = table.headers.clone();
    header.push("yhat".into());
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&a.out)?;
    w.write_record(&header)?;
    let mut x = vec![0.0; x_idx.len()];
    let mut skipped = 0usize;
    for r in 0..table.rows.len() {
        for (j, &c) in x_idx.iter().enumerate() {
            x[j] = transforms[j].apply(table.value(r, c)?);
        }
        let mut cells = table.rows[r].1.clone();
        if x.iter().all(|v| v.is_finite()) {
            cells.push(pencil.eval(&x)?.to_string());
        } else {
            skipped += 1;
            cells.push(String::new());
        }
        w.write_record(&cells)?;
    }
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    #[derive(Serialize)]
    struct PredictOutput {
        n: usize,
        skipped: usize,
    }
    emit(
        out,
        &PredictOutput {
            n: table.rows.len(),
            skipped,
        },
    )
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let (_, pencil) = load_model(&a.model)?;
    let ds = load_csv(&a.data, &a.columns.spec()?)?;
    if ds.d() != pencil.d() {
        return Err(Error::Shape {
            model_d: pencil.d(),
            data_d: ds.d(),
        });
    }
    let m = mse(&pencil, &ds)?;
    #[derive(Serialize)]
    struct EvalOutput {
        n: usize,
        rmse: f64,
        mse: f64,
    }
    emit(
        out,
        &EvalOutput {
            n: ds.n(),
            rmse: m.sqrt(),
            mse: m,
        },
    )
}

fn grid_cmd(a: GridArgs, out: &mut dyn Write) -> Result<()> {
    let (file, pencil) = load_model(&a.model)?;
    let d = pencil.d();
    let steps = if a.steps.len() == 1 { vec![a.steps[0]; d] } else { a.steps };
    let rows = grid(&pencil, &a.mins, &a.maxs, &steps)?;
    let mut header = if file.meta.x_columns.len() == d {
        file.meta.x_columns.clone()
    } else {
        default_x_names(d)
    };
    header.push("value".into());
    let n = rows.len();
    write_rows(&a.out, &header, rows)?;
    writeln!(out, "{n}").map_err(|e| Error::io("<stdout>", e))
}

fn benchmark(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let suite = match (a.suite.as_str(), &a.data) {
        ("synthetic", None) => Suite::Synthetic,
        ("circuit", None) => Suite::Circuit,
        ("csv", Some(path)) => Suite::Csv {
            path: path.clone(),
            columns: a.columns.spec()?,
        },
        ("csv", None) => return Err(Error::Usage("--suite csv requires --data".into())),
        ("synthetic" | "circuit", Some(_)) => {
            return Err(Error::Usage("--data applies only to --suite csv".into()))
        }
        (other, _) => {
            return Err(Error::Usage(format!(
                "unknown suite `{other}` (expected synthetic, circuit or csv)"
            )))
        }
    };
    let mut fit = FitConfig::new(1, 1);
    fit.restarts = a.restarts;
    fit.max_iters = a.max_iters;
    fit.seed = a.seed;
    let mut cfg = BenchConfig::new(fit);
    cfg.n_train = a.n;
    cfg.timing = a.timing;
    let result = run_benchmark(&suite, &a.dof_levels, &cfg)?;
    let (csv_path, json_path) = write_benchmark(&a.out, &result)?;
    writeln!(out, "{}\n{}", csv_path.display(), json_path.display()).map_err(|e| Error::io("<stdout>", e))
}
