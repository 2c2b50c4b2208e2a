//! Alternating minimization for spectrahedral regression.
//!
//! Each iteration has two steps:
//!
//! 1. for every sample compute the top eigenpair `(λᵢ, uᵢ)` of the assembled
//!    matrix; `uᵢuᵢᵀ` certifies the active linear piece at that sample;
//! 2. with the certificates frozen, the model is linear in the parameters, so
//!    the pencil is refit by ordinary least squares ([`lls_update`]).
//!
//! Step 2 minimizes a surrogate; the true training error is only dominated by
//! it, so the driver keeps the best iterate seen rather than the last one.

mod distance;
mod lls;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use distance::{param_distance_mod_similarity, DEFAULT_PROBES};
pub use lls::{lls_update, surrogate_objective};

use crate::{ActiveCertificate, BlockSymMatrix, Dataset, Error, Pencil, Result};

/// Hyperparameters of [`fit`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitConfig {
    /// Matrix order.
    pub m: usize,
    /// Block size; must divide `m`.
    pub k: usize,
    /// Number of random initializations.
    pub restarts: usize,
    /// Iteration cap per restart.
    pub max_iters: usize,
    /// Stop when the relative Frobenius change of the parameters drops below this.
    pub param_tol: f64,
    /// Stop when the relative training-MSE change over two iterations drops below this.
    pub objective_tol: f64,
    /// Tikhonov weight on `‖A‖²_F` in the least-squares step.
    pub ridge: f64,
    /// Standard deviation of the random initial entries.
    pub init_scale: f64,
    /// Master seed; restart `r` uses stream `r` of a ChaCha8 generator.
    pub seed: u64,
    /// Fit a support function (no offset matrix).
    pub homogeneous: bool,
}

impl FitConfig {
    /// Defaults: 50 restarts of at most 200 iterations.
    pub fn new(m: usize, k: usize) -> Self {
        FitConfig {
            m,
            k,
            restarts: 50,
            max_iters: 200,
            param_tol: 1e-8,
            objective_tol: 1e-10,
            ridge: 0.0,
            init_scale: 1.0,
            seed: 0,
            homogeneous: false,
        }
    }

    /// Checks ranges and the `(m, k)` shape.
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.m % self.k != 0 {
            return Err(Error::InvalidShape { m: self.m, k: self.k });
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1"));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1"));
        }
        if !(self.param_tol > 0.0) || !(self.objective_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive"));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::InvalidConfig("ridge must be finite and nonnegative"));
        }
        if !(self.init_scale > 0.0) || !self.init_scale.is_finite() {
            return Err(Error::InvalidConfig("init_scale must be positive"));
        }
        Ok(())
    }
}

/// Why a restart stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StopReason {
    /// Relative parameter change fell below `param_tol`.
    ParamTol,
    /// Relative MSE change over two iterations fell below `objective_tol`.
    ObjectiveTol,
    /// Hit `max_iters`.
    MaxIters,
    /// The active-piece assignment repeated an earlier one.
    CycleDetected,
    /// The restart raised an error and was skipped.
    Failed,
}

impl StopReason {
    /// Snake-case name.
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ParamTol => "param_tol",
            StopReason::ObjectiveTol => "objective_tol",
            StopReason::MaxIters => "max_iters",
            StopReason::CycleDetected => "cycle_detected",
            StopReason::Failed => "failed",
        }
    }
}

/// Diagnostics of one restart.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RestartReport {
    /// Restart index.
    pub restart: usize,
    /// Least-squares updates performed.
    pub iters_used: usize,
    /// Training MSE of the initial pencil followed by that of every iterate.
    pub mse_trajectory: Vec<f64>,
    /// Distance modulo similarity to a reference pencil, aligned with
    /// `mse_trajectory`; empty unless a reference was supplied.
    pub param_error_trajectory: Vec<f64>,
    /// Training MSE of the best iterate (infinite when the restart failed).
    pub final_mse: f64,
    /// Why the restart stopped.
    pub stop_reason: StopReason,
    /// Error message of a failed restart.
    pub failure: Option<String>,
}

/// Result of a restart: its diagnostics and best iterate.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    /// Diagnostics.
    pub report: RestartReport,
    /// Best iterate, absent when the restart failed.
    pub best: Option<Pencil>,
}

/// Result of a fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Pencil with the lowest training MSE over all restarts and iterations.
    pub best_pencil: Pencil,
    /// Its training MSE.
    pub best_train_mse: f64,
    /// One entry per restart, in restart order.
    pub per_restart: Vec<RestartReport>,
    /// Master seed.
    pub seed: u64,
}

/// Step 1: top eigenpair of the assembled matrix at every sample.
pub fn assign_certificates(pencil: &Pencil, dataset: &Dataset) -> Result<Vec<ActiveCertificate>> {
    if dataset.d() != pencil.d() {
        return Err(Error::DimensionMismatch {
            what: "covariate dimension",
            expected: pencil.d(),
            found: dataset.d(),
        });
    }
    let mut mat = BlockSymMatrix::zeros(pencil.m(), pencil.k())?;
    dataset
        .rows()
        .enumerate()
        .map(|(i, x)| {
            pencil.assemble_into(x, &mut mat);
            mat.top_eigenpair().map_err(|e| e.at_sample(i))
        })
        .collect()
}

fn mse_of(certs: &[ActiveCertificate], y: &[f64]) -> f64 {
    let sum: f64 = certs
        .iter()
        .zip(y)
        .map(|(c, yi)| (yi - c.lambda) * (yi - c.lambda))
        .sum();
    sum / y.len() as f64
}

fn assignment_hash(assignment: &[usize]) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &a in assignment {
        for byte in (a as u64).to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

struct RunOutput {
    best: Pencil,
    best_mse: f64,
    iters: usize,
    trajectory: Vec<f64>,
    errors: Vec<f64>,
    stop: StopReason,
}

fn run(dataset: &Dataset, config: &FitConfig, init: Pencil, reference: Option<&Pencil>) -> Result<RunOutput> {
    let shape = (dataset.d(), config.m, config.k);
    let distance = |p: &Pencil| reference.map(|r| param_distance_mod_similarity(r, p, DEFAULT_PROBES));

    let mut current = init;
    let mut certs = assign_certificates(&current, dataset)?;
    let mut mse = mse_of(&certs, dataset.y());
    if !mse.is_finite() {
        return Err(Error::Diverged);
    }
    let mut trajectory = Vec::with_capacity(config.max_iters + 1);
    let mut errors = Vec::new();
    trajectory.push(mse);
    errors.extend(distance(&current));
    let mut best = current.clone();
    let mut best_mse = mse;

    // Exact assignment cycling only implies a cycle of iterates when k = 1,
    // where the assignment fully determines the next least-squares problem.
    let track_cycles = config.k == 1;
    let mut seen: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut assignments: Vec<Vec<usize>> = Vec::new();
    if track_cycles {
        assignments.push(certs.iter().map(|c| c.block_index).collect());
    }

    let mut stop = StopReason::MaxIters;
    let mut iters = 0;
    for it in 1..=config.max_iters {
        let next = lls_update(&certs, dataset, shape, config.homogeneous, config.ridge)?;
        certs = assign_certificates(&next, dataset)?;
        mse = mse_of(&certs, dataset.y());
        if !mse.is_finite() {
            return Err(Error::Diverged);
        }
        iters = it;
        trajectory.push(mse);
        errors.extend(distance(&next));
        if mse < best_mse {
            best_mse = mse;
            best = next.clone();
        }

        let change = next.frobenius_distance(&current);
        let scale = current.frobenius_norm().max(f64::MIN_POSITIVE);
        current = next;
        if change <= config.param_tol * scale {
            stop = StopReason::ParamTol;
            break;
        }
        if it >= 2 {
            let older = trajectory[it - 2];
            if (older - mse).abs() <= config.objective_tol * older {
                stop = StopReason::ObjectiveTol;
                break;
            }
        }
        if track_cycles {
            let assignment: Vec<usize> = certs.iter().map(|c| c.block_index).collect();
            // `seen` holds every earlier assignment except the immediately
            // preceding one; an immediate repeat is a fixed point, which
            // param_tol catches on the next round.
            let cycled = seen
                .get(&assignment_hash(&assignment))
                .is_some_and(|idx| idx.iter().any(|&j| assignments[j] == assignment));
            let prev = assignments.len() - 1;
            seen.entry(assignment_hash(&assignments[prev])).or_default().push(prev);
            assignments.push(assignment);
            if cycled {
                stop = StopReason::CycleDetected;
                break;
            }
        }
    }
    Ok(RunOutput {
        best,
        best_mse,
        iters,
        trajectory,
        errors,
        stop,
    })
}

fn outcome(restart: usize, result: Result<RunOutput>) -> RestartOutcome {
    match result {
        Ok(out) => RestartOutcome {
            report: RestartReport {
                restart,
                iters_used: out.iters,
                mse_trajectory: out.trajectory,
                param_error_trajectory: out.errors,
                final_mse: out.best_mse,
                stop_reason: out.stop,
                failure: None,
            },
            best: Some(out.best),
        },
        Err(e) => RestartOutcome {
            report: RestartReport {
                restart,
                iters_used: 0,
                mse_trajectory: Vec::new(),
                param_error_trajectory: Vec::new(),
                final_mse: f64::INFINITY,
                stop_reason: StopReason::Failed,
                failure: Some(e.to_string()),
            },
            best: None,
        },
    }
}

fn check_fit_inputs(dataset: &Dataset, config: &FitConfig) -> Result<()> {
    config.validate()?;
    if dataset.n() == 0 {
        return Err(Error::EmptyDataset);
    }
    if config.homogeneous && dataset.d() == 0 {
        return Err(Error::InvalidConfig("a homogeneous fit needs d ≥ 1"));
    }
    Ok(())
}

/// Runs restart `restart` of a fit from its seeded random initialization.
///
/// Restarts only share the immutable dataset and configuration, so they may
/// run in any order or concurrently; [`reduce_restarts`] combines them.
pub fn fit_restart(dataset: &Dataset, config: &FitConfig, restart: usize) -> Result<RestartOutcome> {
    check_fit_inputs(dataset, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(restart as u64);
    let result = Pencil::random(
        dataset.d(),
        config.m,
        config.k,
        config.homogeneous,
        config.init_scale,
        &mut rng,
    )
    .and_then(|init| run(dataset, config, init, None));
    Ok(outcome(restart, result))
}

/// Picks the restart with the lowest training MSE; ties go to the lower
/// restart index. `outcomes` must be in restart order.
pub fn reduce_restarts(outcomes: Vec<RestartOutcome>, seed: u64) -> Result<FitReport> {
    let restarts = outcomes.len();
    let mut best: Option<(Pencil, f64)> = None;
    let mut per_restart = Vec::with_capacity(restarts);
    for o in outcomes {
        if let Some(p) = o.best {
            let better = match &best {
                Some((_, mse)) => o.report.final_mse < *mse,
                None => true,
            };
            if better {
                best = Some((p, o.report.final_mse));
            }
        }
        per_restart.push(o.report);
    }
    let (best_pencil, best_train_mse) = best.ok_or(Error::AllRestartsFailed { restarts })?;
    Ok(FitReport {
        best_pencil,
        best_train_mse,
        per_restart,
        seed,
    })
}

/// Fits an `(m, k)`-spectrahedral function by alternating minimization from
/// `config.restarts` random initializations and keeps the best.
///
/// A restart that errors is recorded as [`StopReason::Failed`]; the fit fails
/// only if every restart does.
pub fn fit(dataset: &Dataset, config: &FitConfig) -> Result<FitReport> {
    check_fit_inputs(dataset, config)?;
    let outcomes = (0..config.restarts)
        .map(|r| fit_restart(dataset, config, r))
        .collect::<Result<Vec<_>>>()?;
    reduce_restarts(outcomes, config.seed)
}

/// A single run from `init` (no restarts). When `reference` is given, the
/// distance modulo similarity from each iterate to it is recorded.
pub fn fit_with_init(
    dataset: &Dataset,
    config: &FitConfig,
    init: &Pencil,
    reference: Option<&Pencil>,
) -> Result<FitReport> {
    check_fit_inputs(dataset, config)?;
    if init.d() != dataset.d()
        || init.m() != config.m
        || init.k() != config.k
        || init.is_homogeneous() != config.homogeneous
    {
        return Err(Error::InvalidConfig(
            "initial pencil does not match the dataset dimension and configured shape",
        ));
    }
    let out = run(dataset, config, init.clone(), reference)?;
    reduce_restarts(alloc::vec![outcome(0, Ok(out))], config.seed)
}
