use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::registry::{base_name, MetricKind, MetricScope, RIGIDITY_RANGE, RIGIDITY_STEP, RIGIDITY_WINDOW, TAIL_EXPONENT};
use crate::dyson::solve_free_stieltjes;
use crate::ensembles::{build_variance_profile, sample_with_profile, trial_seed, EnsembleSpec, VarianceProfile};
use crate::formats::{write_spectrum_csv, Num};
use crate::hermitization::shift;
use crate::metrics::{
    disk_law_distance, general_truncation_threshold, gaussian_truncation_threshold, kolmogorov_distance,
    log_potential, replacement_gap, uniform_disk_log_potential, EmpiricalMeasure,
};
use crate::spectra::{eigenvalues, eigenvector_infnorms, max_window_count, singular_values, SpectralSample};
use crate::{CMat, LabError, Result, C64};

pub const METRICS_HEADER: &str = "trial,z_re,z_im,metric,value,status";

/// Seeds of the reference Gaussian samples are keyed by the master seed
/// xor this constant, so they never coincide with the ensemble's draws.
pub const REFERENCE_SALT: u64 = 0x5EED_0F_6A55_1A4E;

pub const SEED_RULE: &str = "trial_seed(t) = splitmix64(master_seed ^ splitmix64(t)); \
ChaCha8 keyed by four successive splitmix64 outputs of trial_seed(t), stream = row index; \
reference Gaussian uses master_seed ^ 0x5eed0f6a551a4e";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

/// One metrics.csv line. A failed trial contributes a single row with
/// metric `trial`, no value and status `failed`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub trial: u64,
    pub z: Option<C64>,
    pub metric: String,
    pub value: Option<f64>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    pub z: Option<C64>,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub metric: String,
    pub threshold: f64,
    /// Largest value over successful trials, shifts and η; None when the
    /// metric produced no values.
    pub observed_max: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_digest: String,
    pub seed_rule: String,
    pub trial_seeds: Vec<u64>,
    pub trials: usize,
    pub failed_trials: usize,
    pub failures: Vec<TrialFailure>,
    pub aggregates: Vec<Aggregate>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub rows: Vec<MetricRow>,
}

/// Contents of `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub record: RunRecord,
}

struct TrialOutcome {
    rows: Vec<MetricRow>,
    failure: Option<String>,
    spectra: Option<SpectralSample>,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    kinds: Vec<MetricKind>,
    profile: VarianceProfile,
    reference: Option<(EnsembleSpec, VarianceProfile)>,
    free: BTreeMap<(usize, usize), C64>,
    tail_threshold: f64,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let kinds = cfg.metric_kinds()?;
        let profile = build_variance_profile(&cfg.ensemble).map_err(|e| LabError::Config(e.to_string()))?;
        let reference = if kinds.iter().any(|k| k.needs_reference()) {
            let spec = EnsembleSpec::iid_gaussian(profile.n());
            let p = build_variance_profile(&spec)?;
            Some((spec, p))
        } else {
            None
        };
        let mut free = BTreeMap::new();
        if kinds.contains(&MetricKind::StieltjesDeviation) {
            for (zi, z) in cfg.shifts.iter().enumerate() {
                for (ei, eta) in cfg.eta_grid.iter().enumerate() {
                    free.insert((zi, ei), solve_free_stieltjes(*z, *eta, 1e-12)?.m);
                }
            }
        }
        let n = profile.n();
        let bandwidth = profile.bandwidth();
        let tail_threshold = if cfg.ensemble.atom.is_gaussian() {
            gaussian_truncation_threshold(bandwidth, n, TAIL_EXPONENT)
        } else {
            general_truncation_threshold(bandwidth, n, TAIL_EXPONENT)
        };
        Ok(Context {
            cfg,
            kinds,
            profile,
            reference,
            free,
            tail_threshold,
        })
    }

    fn wants(&self, k: MetricKind) -> bool {
        self.kinds.contains(&k)
    }

    fn run_trial(&self, trial: u64) -> TrialOutcome {
        let mut rows = Vec::new();
        let mut spectra = None;
        match self.trial_rows(trial, &mut rows, &mut spectra) {
            Ok(()) => TrialOutcome {
                rows,
                failure: None,
                spectra,
            },
            Err(e) => TrialOutcome {
                rows: vec![MetricRow {
                    trial,
                    z: None,
                    metric: "trial".into(),
                    value: None,
                    status: RowStatus::Failed,
                }],
                failure: Some(e.to_string()),
                spectra: None,
            },
        }
    }

    fn trial_rows(&self, trial: u64, rows: &mut Vec<MetricRow>, spectra: &mut Option<SpectralSample>) -> Result<()> {
        let cfg = self.cfg;
        let x = sample_with_profile(&cfg.ensemble, &self.profile, cfg.master_seed, trial).values;
        let mut push = |z: Option<C64>, metric: String, value: f64| {
            rows.push(MetricRow {
                trial,
                z,
                metric,
                value: Some(value),
                status: RowStatus::Ok,
            })
        };

        let want_vectors = self.wants(MetricKind::EigenvectorMaxInfnorm);
        let want_eigs = want_vectors
            || cfg.save_spectra
            || self.wants(MetricKind::DiskLawDistance)
            || self.wants(MetricKind::AngularMean);
        let (eigs, infnorms) = if want_vectors {
            let (e, v) = eigenvector_infnorms(&x)?;
            (e, Some(v))
        } else if want_eigs {
            (eigenvalues(&x)?, None)
        } else {
            (Vec::new(), None)
        };
        for &k in &self.kinds {
            let value = match k {
                MetricKind::DiskLawDistance => disk_law_distance(&eigs)?,
                MetricKind::AngularMean => crate::metrics::angular_mean(&eigs).norm(),
                MetricKind::EigenvectorMaxInfnorm => {
                    infnorms.as_ref().map(|v| v.iter().copied().fold(0.0, f64::max)).unwrap_or(0.0)
                }
                _ => continue,
            };
            push(None, k.name().to_string(), value);
        }

        let reference = match &self.reference {
            Some((spec, p)) => Some(sample_with_profile(spec, p, cfg.master_seed ^ REFERENCE_SALT, trial).values),
            None => None,
        };
        let shift_kinds: Vec<MetricKind> = self.kinds.iter().copied().filter(|k| k.scope() != MetricScope::Trial).collect();
        if !shift_kinds.is_empty() {
            let n = x.nrows();
            for (zi, &z) in cfg.shifts.iter().enumerate() {
                let sv = singular_values(&shift(&x, z)?)?;
                let sv_ref = match &reference {
                    Some(g) => Some(singular_values(&shift(g, z)?)?),
                    None => None,
                };
                let zs = Some(z);
                for &k in &shift_kinds {
                    match k {
                        MetricKind::LogPotential => push(zs, k.name().into(), log_potential(&sv)?),
                        MetricKind::LogPotentialError => push(
                            zs,
                            k.name().into(),
                            (log_potential(&sv)? - uniform_disk_log_potential(z)).abs(),
                        ),
                        MetricKind::ReplacementGap => {
                            push(zs, k.name().into(), replacement_gap(&sv, sv_ref.as_deref().unwrap_or(&[]))?)
                        }
                        MetricKind::Kolmogorov => {
                            let mu = EmpiricalMeasure::squared_singular_values(&sv)?;
                            let nu = EmpiricalMeasure::squared_singular_values(sv_ref.as_deref().unwrap_or(&[]))?;
                            push(zs, k.name().into(), kolmogorov_distance(&mu, &nu))
                        }
                        MetricKind::LogSmin => {
                            let smin = sv.last().copied().unwrap_or(0.0);
                            if smin == 0.0 {
                                return Err(LabError::SingularSample);
                            }
                            push(zs, k.name().into(), smin.ln())
                        }
                        MetricKind::TailCount => {
                            let count = sv.iter().filter(|s| **s <= self.tail_threshold).count();
                            push(zs, k.name().into(), count as f64)
                        }
                        MetricKind::Rigidity => {
                            let mut dil: Vec<f64> = sv.iter().flat_map(|s| [*s, -*s]).collect();
                            dil.sort_by(f64::total_cmp);
                            let count =
                                max_window_count(&dil, -RIGIDITY_RANGE, RIGIDITY_RANGE, RIGIDITY_WINDOW, RIGIDITY_STEP)?;
                            push(zs, k.name().into(), count as f64 / (n as f64 * RIGIDITY_WINDOW))
                        }
                        MetricKind::StieltjesDeviation => {
                            for (ei, &eta) in cfg.eta_grid.iter().enumerate() {
                                let m = crate::spectra::stieltjes_from_singular_values(&sv, eta)?;
                                let free = self.free[&(zi, ei)];
                                push(zs, k.label(Some(eta)), (m - free).norm());
                            }
                        }
                        _ => {}
                    }
                }
            }
        }

        if cfg.save_spectra {
            *spectra = Some(SpectralSample {
                eigenvalues: eigs,
                singular_values: singular_values(&x)?,
                eigenvector_infnorms: infnorms,
                spec: Some(cfg.ensemble.clone()),
                seed: Some(cfg.master_seed),
                trial: Some(trial),
            });
        }
        Ok(())
    }
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn aggregate(metric: &str, z: Option<C64>, values: &[f64]) -> Aggregate {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count = sorted.len();
    let mean = sorted.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Aggregate {
        metric: metric.to_string(),
        z,
        count,
        mean,
        std,
        min: sorted[0],
        max: sorted[count - 1],
        q05: quantile(&sorted, 0.05),
        q50: quantile(&sorted, 0.5),
        q95: quantile(&sorted, 0.95),
    }
}

/// Per (metric label, z) aggregates, in first-appearance order.
pub fn aggregate_rows(rows: &[MetricRow]) -> Vec<Aggregate> {
    let mut order: Vec<(String, Option<(u64, u64)>, Option<C64>)> = Vec::new();
    let mut groups: BTreeMap<(String, Option<(u64, u64)>), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let Some(v) = r.value else { continue };
        let zkey = r.z.map(|z| (z.re.to_bits(), z.im.to_bits()));
        let key = (r.metric.clone(), zkey);
        let entry = groups.entry(key).or_insert_with(|| {
            order.push((r.metric.clone(), zkey, r.z));
            Vec::new()
        });
        entry.push(v);
    }
    order
        .into_iter()
        .map(|(metric, zkey, z)| aggregate(&metric, z, &groups[&(metric.clone(), zkey)]))
        .collect()
}

pub fn threshold_verdicts(rows: &[MetricRow], thresholds: &BTreeMap<String, f64>) -> Vec<Verdict> {
    thresholds
        .iter()
        .map(|(name, &threshold)| {
            let observed_max = rows
                .iter()
                .filter(|r| base_name(&r.metric) == name)
                .filter_map(|r| r.value)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
            Verdict {
                metric: name.clone(),
                threshold,
                observed_max,
                pass: observed_max.is_some_and(|m| m <= threshold),
            }
        })
        .collect()
}

pub fn write_metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(out, "{},", r.trial);
        match r.z {
            Some(z) => {
                let _ = write!(out, "{},{},", Num(z.re), Num(z.im));
            }
            None => out.push_str(",,"),
        }
        let _ = write!(out, "{},", r.metric);
        if let Some(v) = r.value {
            let _ = write!(out, "{}", Num(v));
        }
        out.push_str(match r.status {
            RowStatus::Ok => ",ok\n",
            RowStatus::Failed => ",failed\n",
        });
    }
    out
}

/// Parse metrics.csv back into rows.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRow>> {
    let perr = |line: usize, msg: String| LabError::Parse { line, msg };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    match lines.next() {
        Some((_, h)) if h.trim() == METRICS_HEADER => {}
        _ => return Err(perr(1, "missing metrics.csv header".into())),
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(perr(lineno, format!("expected 6 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                return Ok(None);
            }
            let v: f64 = s.parse().map_err(|_| perr(lineno, format!("bad number {s:?}")))?;
            if v.is_nan() {
                return Err(perr(lineno, "NaN value".into()));
            }
            Ok(Some(v))
        };
        let trial: u64 = f[0].parse().map_err(|_| perr(lineno, format!("bad trial {:?}", f[0])))?;
        let z = match (num(f[1])?, num(f[2])?) {
            (Some(re), Some(im)) => Some(C64::new(re, im)),
            (None, None) => None,
            _ => return Err(perr(lineno, "half of z is missing".into())),
        };
        if f[3].is_empty() {
            return Err(perr(lineno, "empty metric name".into()));
        }
        let status = match f[5] {
            "ok" => RowStatus::Ok,
            "failed" => RowStatus::Failed,
            s => return Err(perr(lineno, format!("unknown status {s:?}"))),
        };
        rows.push(MetricRow {
            trial,
            z,
            metric: f[3].to_string(),
            value: num(f[4])?,
            status,
        });
    }
    Ok(rows)
}

fn execute(cfg: &ExperimentConfig) -> Result<(RunRecord, Vec<(u64, SpectralSample)>)> {
    let start = Instant::now();
    let ctx = Context::new(cfg)?;
    let trial_ids: Vec<u64> = (0..cfg.trials as u64).collect();
    let outcomes: Vec<TrialOutcome> = if cfg.parallel {
        trial_ids.par_iter().map(|&t| ctx.run_trial(t)).collect()
    } else {
        trial_ids.iter().map(|&t| ctx.run_trial(t)).collect()
    };
    Ok(assemble(cfg, outcomes, start))
}

/// Run every trial and collect rows in trial order, without touching disk.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<RunRecord> {
    Ok(execute(cfg)?.0)
}

fn assemble(cfg: &ExperimentConfig, outcomes: Vec<TrialOutcome>, start: Instant) -> (RunRecord, Vec<(u64, SpectralSample)>) {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut spectra = Vec::new();
    for (t, o) in outcomes.into_iter().enumerate() {
        let t = t as u64;
        if let Some(error) = o.failure {
            failures.push(TrialFailure { trial: t, error });
        }
        if let Some(s) = o.spectra {
            spectra.push((t, s));
        }
        rows.extend(o.rows);
    }
    let aggregates = aggregate_rows(&rows);
    let verdicts = threshold_verdicts(&rows, &cfg.thresholds);
    let pass = verdicts.iter().all(|v| v.pass);
    let record = RunRecord {
        config_digest: cfg.digest(),
        seed_rule: SEED_RULE.to_string(),
        trial_seeds: (0..cfg.trials as u64).map(|t| trial_seed(cfg.master_seed, t)).collect(),
        trials: cfg.trials,
        failed_trials: failures.len(),
        failures,
        aggregates,
        verdicts,
        pass,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        rows,
    };
    (record, spectra)
}

/// Run the experiment and persist `manifest.json`, `metrics.csv` and, when
/// requested, `trials/<t>/spectra.csv` under the output directory.
///
/// Fails with [`LabError::TooManyFailures`] when fewer than half of the
/// trials succeed; the output files are written either way.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let (record, spectra) = execute(cfg)?;
    write_outputs(cfg, &record, &spectra)?;
    let succeeded = record.trials - record.failed_trials;
    if 2 * succeeded < record.trials {
        return Err(LabError::TooManyFailures {
            failed: record.failed_trials,
            total: record.trials,
        });
    }
    Ok(record)
}

fn write_outputs(cfg: &ExperimentConfig, record: &RunRecord, spectra: &[(u64, SpectralSample)]) -> Result<()> {
    let dir = &cfg.output_directory;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("metrics.csv"), write_metrics_csv(&record.rows))?;
    let manifest = Manifest {
        config: cfg.clone(),
        record: record.clone(),
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    for (t, s) in spectra {
        let tdir = dir.join("trials").join(t.to_string());
        std::fs::create_dir_all(&tdir)?;
        std::fs::write(tdir.join("spectra.csv"), write_spectrum_csv(s))?;
    }
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}

/// Draw one matrix exactly as trial `trial` of `cfg` would.
pub fn replay_trial(cfg: &ExperimentConfig, trial: u64) -> Result<CMat> {
    let profile = build_variance_profile(&cfg.ensemble)?;
    Ok(sample_with_profile(&cfg.ensemble, &profile, cfg.master_seed, trial).values)
}
