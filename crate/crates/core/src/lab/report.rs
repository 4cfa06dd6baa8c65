use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runner::{read_manifest, Aggregate, RunRecord, Verdict};
use crate::dyson::solve_free_stieltjes;
use crate::ensembles::{build_variance_profile, sample_with_profile, EnsembleSpec};
use crate::formats::format_complex;
use crate::hermitization::shift;
use crate::metrics::stieltjes_error_envelope;
use crate::spectra::{singular_values, stieltjes_from_singular_values};
use crate::{LabError, Result, C64};

/// Aggregates and threshold verdicts of one run, printable as a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub aggregates: Vec<Aggregate>,
    pub verdicts: Vec<Verdict>,
    pub trials: usize,
    pub failed_trials: usize,
    pub pass: bool,
}

pub fn summarize(record: &RunRecord) -> Report {
    Report {
        aggregates: record.aggregates.clone(),
        verdicts: record.verdicts.clone(),
        trials: record.trials,
        failed_trials: record.failed_trials,
        pass: record.verdicts.iter().all(|v| v.pass),
    }
}

/// Summarize the run persisted in `dir`.
pub fn summarize_dir(dir: &Path) -> Result<Report> {
    Ok(summarize(&read_manifest(dir)?.record))
}

fn z_cell(z: Option<C64>) -> String {
    z.map(format_complex).unwrap_or_else(|| "-".into())
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "trials: {} ({} failed)", self.trials, self.failed_trials)?;
        writeln!(
            f,
            "{:<34} {:>12} {:>5} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
            "metric", "z", "n", "mean", "std", "min", "q05", "q50", "q95", "max"
        )?;
        for a in &self.aggregates {
            writeln!(
                f,
                "{:<34} {:>12} {:>5} {:>12.6e} {:>12.4e} {:>12.6e} {:>12.6e} {:>12.6e} {:>12.6e} {:>12.6e}",
                a.metric,
                z_cell(a.z),
                a.count,
                a.mean,
                a.std,
                a.min,
                a.q05,
                a.q50,
                a.q95,
                a.max
            )?;
        }
        for v in &self.verdicts {
            let observed = v.observed_max.map_or("none".to_string(), |m| format!("{m:.6e}"));
            writeln!(
                f,
                "{} {}: max {} vs threshold {:.6e}",
                if v.pass { "PASS" } else { "FAIL" },
                v.metric,
                observed,
                v.threshold
            )?;
        }
        let failing: Vec<&str> = self.verdicts.iter().filter(|v| !v.pass).map(|v| v.metric.as_str()).collect();
        if failing.is_empty() {
            writeln!(f, "overall: PASS")
        } else {
            writeln!(f, "overall: FAIL ({})", failing.join(", "))
        }
    }
}

/// Inputs of a Monte Carlo comparison against the free Stieltjes transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeComparisonInputs {
    pub ensemble: EnsembleSpec,
    pub shifts: Vec<C64>,
    pub eta_grid: Vec<C64>,
    pub trials: usize,
    pub master_seed: u64,
    /// Constant in front of the fluctuation term (log n)³/(√b (Im η)²).
    pub c_fluct: f64,
    /// Constant in front of the bias term 1/(b (Im η)⁵).
    pub c_bias: f64,
}

impl FreeComparisonInputs {
    pub fn new(ensemble: EnsembleSpec, shifts: Vec<C64>, eta_grid: Vec<C64>, trials: usize, master_seed: u64) -> Self {
        FreeComparisonInputs {
            ensemble,
            shifts,
            eta_grid,
            trials,
            master_seed,
            c_fluct: 1.0,
            c_bias: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeComparisonRow {
    pub z: C64,
    pub eta: C64,
    pub empirical_mean: C64,
    pub free: C64,
    pub deviation: f64,
    pub envelope: f64,
    pub within_envelope: bool,
}

/// |mean over trials of m_z(η) − m_free(z, η)| per grid point, next to the
/// error envelope for the ensemble's size and bandwidth.
pub fn compare_to_free(inputs: &FreeComparisonInputs) -> Result<Vec<FreeComparisonRow>> {
    if inputs.trials == 0 {
        return Err(LabError::invalid_arg("trials must be at least 1"));
    }
    if let Some(eta) = inputs.eta_grid.iter().find(|e| !(e.im > 0.0)) {
        return Err(LabError::invalid_arg(format!("eta grid point {eta} needs Im > 0")));
    }
    let profile = build_variance_profile(&inputs.ensemble)?;
    let n = profile.n();
    let bandwidth = profile.bandwidth();
    let free: Vec<Vec<C64>> = inputs
        .shifts
        .iter()
        .map(|&z| {
            inputs
                .eta_grid
                .iter()
                .map(|&eta| solve_free_stieltjes(z, eta, 1e-12).map(|s| s.m))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let per_trial: Vec<Vec<Vec<C64>>> = (0..inputs.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<Vec<C64>>> {
            let x = sample_with_profile(&inputs.ensemble, &profile, inputs.master_seed, t).values;
            inputs
                .shifts
                .iter()
                .map(|&z| {
                    let sv = singular_values(&shift(&x, z)?)?;
                    inputs
                        .eta_grid
                        .iter()
                        .map(|&eta| stieltjes_from_singular_values(&sv, eta))
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (zi, &z) in inputs.shifts.iter().enumerate() {
        for (ei, &eta) in inputs.eta_grid.iter().enumerate() {
            let mean = per_trial.iter().map(|t| t[zi][ei]).sum::<C64>() / inputs.trials as f64;
            let deviation = (mean - free[zi][ei]).norm();
            let envelope = stieltjes_error_envelope(n, bandwidth, eta, inputs.c_fluct, inputs.c_bias);
            rows.push(FreeComparisonRow {
                z,
                eta,
                empirical_mean: mean,
                free: free[zi][ei],
                deviation,
                envelope,
                within_envelope: deviation <= envelope,
            });
        }
    }
    Ok(rows)
}
