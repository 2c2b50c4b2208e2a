//! Restarts fanned out over the rayon pool.

use rayon::prelude::*;
use specreg_core::altmin::{fit_restart, reduce_restarts};
use specreg_core::{Dataset, FitConfig, FitReport};

/// Same result as [`specreg_core::fit`], with restarts run concurrently.
///
/// Outcomes are collected in restart order before the reduction, so the
/// thread count never changes the returned report.
pub fn fit_parallel(dataset: &Dataset, config: &FitConfig) -> specreg_core::Result<FitReport> {
    config.validate()?;
    let outcomes = (0..config.restarts)
        .into_par_iter()
        .map(|r| fit_restart(dataset, config, r))
        .collect::<specreg_core::Result<Vec<_>>>()?;
    reduce_restarts(outcomes, config.seed)
}
