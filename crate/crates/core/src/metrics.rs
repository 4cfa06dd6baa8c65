//! Quantitative functionals: Kolmogorov distances, log-potentials, the
//! log-window comparison bound, circular-law distance, least-singular-value
//! floors and delocalization thresholds.
//!
//! Floors are carried as natural logarithms. The literal block-band floor
//! (3b)^(−25n/b) underflows `f64` for every interesting size.

use serde::{Deserialize, Serialize};

use crate::ensembles::VarianceProfile;
use crate::{LabError, Result, C64};

/// Magnitudes are clamped to this before taking logarithms of eigenvalues.
pub const LOG_FLOOR: f64 = 1e-300;

/// Point masses on the real line with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(LabError::invalid_arg(format!(
                "measure needs matching nonempty points/weights, got {} and {}",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(LabError::invalid_arg(format!("support point {p} is not finite")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(LabError::invalid_arg(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(LabError::invalid_arg(format!("weights sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (points, weights) = pairs.into_iter().unzip();
        Ok(EmpiricalMeasure { points, weights })
    }

    /// (1/n)·Σ δ_{x_i}.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(LabError::invalid_arg("measure needs at least one point"));
        }
        let w = 1.0 / n as f64;
        let mut pts = points;
        if let Some(p) = pts.iter().find(|p| !p.is_finite()) {
            return Err(LabError::invalid_arg(format!("support point {p} is not finite")));
        }
        pts.sort_by(f64::total_cmp);
        Ok(EmpiricalMeasure {
            weights: vec![w; n],
            points: pts,
        })
    }

    /// ν_{X_z} = (1/n)·Σ δ_{σ_i²}.
    pub fn squared_singular_values(sv: &[f64]) -> Result<Self> {
        EmpiricalMeasure::uniform(sv.iter().map(|s| s * s).collect())
    }

    /// Support points in increasing order.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Sup of |F_μ − F_ν| over the given range, with F(x) = mass of [lo, x].
///
/// Both measures are step functions, so the sup is attained as a value or a
/// left limit at one of the merged atoms; both are checked.
fn sup_cdf_gap(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, lo: f64, hi: f64) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mp, mw) = (mu.points(), mu.weights());
    let (np, nw) = (nu.points(), nu.weights());
    while i < mp.len() && mp[i] < lo {
        i += 1;
    }
    while j < np.len() && np[j] < lo {
        j += 1;
    }
    let (mut fm, mut fn_) = (0.0f64, 0.0f64);
    let mut best = 0.0f64;
    loop {
        let next_m = mp.get(i).copied().filter(|x| *x <= hi);
        let next_n = np.get(j).copied().filter(|x| *x <= hi);
        let t = match (next_m, next_n) {
            (None, None) => break,
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) => a.min(b),
        };
        // left limit at t (only meaningful inside the range)
        if t > lo {
            best = best.max((fm - fn_).abs());
        }
        while i < mp.len() && mp[i] == t {
            fm += mw[i];
            i += 1;
        }
        while j < np.len() && np[j] == t {
            fn_ += nw[j];
            j += 1;
        }
        best = best.max((fm - fn_).abs());
    }
    best.min(1.0)
}

/// sup_{x ≥ 0} |μ([0, x]) − ν([0, x])|, computed exactly.
pub fn kolmogorov_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    sup_cdf_gap(mu, nu, 0.0, f64::INFINITY)
}

fn check_positive_list(sv: &[f64]) -> Result<()> {
    if sv.is_empty() {
        return Err(LabError::invalid_arg("empty singular value list"));
    }
    if let Some(s) = sv.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(LabError::invalid_arg(format!("singular value {s} is not a nonnegative number")));
    }
    if sv.iter().any(|s| *s == 0.0) {
        return Err(LabError::SingularSample);
    }
    Ok(())
}

/// (1/n)·Σ log σ_i = (1/n)·log|det|.
pub fn log_potential(sv: &[f64]) -> Result<f64> {
    check_positive_list(sv)?;
    Ok(sv.iter().map(|s| s.ln()).sum::<f64>() / sv.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSplit {
    /// (1/n)·Σ log σ_i over σ_i > threshold.
    pub head: f64,
    /// (1/n)·Σ log σ_i over σ_i ≤ threshold.
    pub tail: f64,
    pub tail_count: usize,
}

/// Split the log-potential at a threshold into bulk and small-σ parts.
pub fn truncated_log_split(sv: &[f64], threshold: f64) -> Result<LogSplit> {
    if !(threshold > 0.0) {
        return Err(LabError::invalid_arg(format!("threshold must be positive, got {threshold}")));
    }
    check_positive_list(sv)?;
    let n = sv.len() as f64;
    let (mut head, mut tail, mut tail_count) = (0.0, 0.0, 0);
    for s in sv {
        if *s > threshold {
            head += s.ln();
        } else {
            tail += s.ln();
            tail_count += 1;
        }
    }
    Ok(LogSplit {
        head: head / n,
        tail: tail / n,
        tail_count,
    })
}

/// Small-singular-value cutoff b_n^(−1/5)·n^c (gaussian entries).
pub fn gaussian_truncation_threshold(bandwidth: f64, n: usize, c: f64) -> f64 {
    bandwidth.powf(-0.2) * (n as f64).powf(c)
}

/// Small-singular-value cutoff b_n^(−1/8)·n^c (general entries).
pub fn general_truncation_threshold(bandwidth: f64, n: usize, c: f64) -> f64 {
    bandwidth.powf(-0.125) * (n as f64).powf(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compare |∫_a^b log x d(μ − ν)| with 2(|log b| + |log a|)·sup_{x∈[a,b]} |(μ − ν)([a, x])|.
pub fn log_window_bound_check(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, a: f64, b: f64) -> Result<WindowBound> {
    if !(a > 0.0 && a < b && b.is_finite()) {
        return Err(LabError::invalid_arg(format!("window needs 0 < a < b, got [{a}, {b}]")));
    }
    let integral = |m: &EmpiricalMeasure| -> f64 {
        m.points()
            .iter()
            .zip(m.weights())
            .filter(|(x, _)| **x >= a && **x <= b)
            .map(|(x, w)| w * x.ln())
            .sum()
    };
    let lhs = (integral(mu) - integral(nu)).abs();
    let rhs = 2.0 * (b.ln().abs() + a.ln().abs()) * sup_cdf_gap(mu, nu, a, b);
    Ok(WindowBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// Radii r = 0.01, 0.02, …, 1.50 at which the radial CDF is compared.
pub fn disk_radius_grid() -> impl Iterator<Item = f64> {
    (1..=150).map(|k| k as f64 / 100.0)
}

/// sup over the radius grid of |#{|λ| ≤ r}/n − min(r², 1)|.
pub fn disk_law_distance(eigs: &[C64]) -> Result<f64> {
    if eigs.is_empty() {
        return Err(LabError::invalid_arg("no eigenvalues"));
    }
    let mut radii: Vec<f64> = eigs.iter().map(|l| l.norm()).collect();
    radii.sort_by(f64::total_cmp);
    let n = radii.len() as f64;
    Ok(disk_radius_grid()
        .map(|r| {
            let inside = radii.partition_point(|x| *x <= r) as f64 / n;
            (inside - (r * r).min(1.0)).abs()
        })
        .fold(0.0, f64::max))
}

/// Mean of e^{iθ} over the nonzero eigenvalues; near 0 for rotation-invariant
/// spectra. Reported as a diagnostic only.
pub fn angular_mean(eigs: &[C64]) -> C64 {
    let nonzero: Vec<C64> = eigs.iter().filter(|l| l.norm() > 0.0).map(|l| l / l.norm()).collect();
    if nonzero.is_empty() {
        return C64::new(0.0, 0.0);
    }
    nonzero.iter().sum::<C64>() / nonzero.len() as f64
}

/// ∫ log|z − w| dw over the uniform measure on the unit disk.
pub fn uniform_disk_log_potential(z: C64) -> f64 {
    let r = z.norm();
    if r > 1.0 {
        r.ln()
    } else {
        (r * r - 1.0) / 2.0
    }
}

/// |(1/n)Σ log σ_i(X_z) − (1/n)Σ log σ_i(G_z)|.
pub fn replacement_gap(sv_x: &[f64], sv_g: &[f64]) -> Result<f64> {
    if sv_x.len() != sv_g.len() {
        return Err(LabError::DimensionMismatch(format!(
            "singular value lists have lengths {} and {}",
            sv_x.len(),
            sv_g.len()
        )));
    }
    Ok((log_potential(sv_x)? - log_potential(sv_g)?).abs())
}

/// Which least-singular-value floor to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FloorParams {
    /// (3b)^(−25·n/b), b the block size.
    BlockBand { n: usize, b: usize },
    /// n^(−25·m) for the m-block product linearization.
    Product { n: usize, m: usize },
    /// |z|·exp(−R²·n^(3κ)·(√n·σ*/σ)²) for A = V ⊙ W with density-bounded
    /// sub-Gaussian W; needs |z| > max(σ*·n^(2κ), σ/R), R > 1, κ ∈ (0, 1].
    Hadamard {
        n: usize,
        sigma_star: f64,
        sigma: f64,
        r: f64,
        kappa: f64,
        z_abs: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFloor {
    pub log_value: f64,
    /// exp(log_value) when it is a normal `f64`.
    pub value: Option<f64>,
}

pub fn theoretical_smin_floor(params: FloorParams) -> Result<LogFloor> {
    let log_value = match params {
        FloorParams::BlockBand { n, b } => {
            if n == 0 || b == 0 {
                return Err(LabError::invalid_arg("block-band floor needs positive n and b"));
            }
            -25.0 * (n as f64 / b as f64) * (3.0 * b as f64).ln()
        }
        FloorParams::Product { n, m } => {
            if n == 0 || m == 0 {
                return Err(LabError::invalid_arg("product floor needs positive n and m"));
            }
            -25.0 * m as f64 * (n as f64).ln()
        }
        FloorParams::Hadamard {
            n,
            sigma_star,
            sigma,
            r,
            kappa,
            z_abs,
        } => {
            if n == 0 || !(sigma_star > 0.0 && sigma > 0.0) {
                return Err(LabError::invalid_arg("hadamard floor needs positive n, σ*, σ"));
            }
            if !(r > 1.0) {
                return Err(LabError::invalid_arg(format!("hadamard floor needs R > 1, got {r}")));
            }
            if !(kappa > 0.0 && kappa <= 1.0) {
                return Err(LabError::invalid_arg(format!("hadamard floor needs κ in (0, 1], got {kappa}")));
            }
            let nf = n as f64;
            let spread = sigma_star * nf.powf(2.0 * kappa);
            let scale = sigma / r;
            if !(z_abs > spread) {
                return Err(LabError::invalid_arg(format!(
                    "hadamard floor needs |z| > σ*·n^(2κ): {z_abs} <= {spread}"
                )));
            }
            if !(z_abs > scale) {
                return Err(LabError::invalid_arg(format!(
                    "hadamard floor needs |z| > σ/R: {z_abs} <= {scale}"
                )));
            }
            let ratio = nf.sqrt() * sigma_star / sigma;
            z_abs.ln() - r * r * nf.powf(3.0 * kappa) * ratio * ratio
        }
    };
    let value = if log_value >= f64::MIN_POSITIVE.ln() {
        Some(log_value.exp())
    } else {
        None
    };
    Ok(LogFloor { log_value, value })
}

/// (σ*, σ) of a Hadamard-product profile: the largest entry and the largest
/// row or column ℓ² norm.
pub fn hadamard_parameters(profile: &VarianceProfile) -> (f64, f64) {
    let n = profile.n();
    let mut sigma_star = 0.0f64;
    let mut col = vec![0.0f64; n];
    let mut row_max = 0.0f64;
    for i in 0..n {
        let mut row = 0.0;
        for (j, v) in profile.row(i).iter().enumerate() {
            sigma_star = sigma_star.max(*v);
            row += v * v;
            col[j] += v * v;
        }
        row_max = row_max.max(row);
    }
    let col_max = col.into_iter().fold(0.0f64, f64::max);
    (sigma_star, row_max.max(col_max).sqrt())
}

/// b^(−1/10)·n^c for gaussian atoms, b^(−1/16)·n^c otherwise.
pub fn delocalization_threshold(b: f64, n: usize, c: f64, gaussian: bool) -> Result<f64> {
    if !(b >= 1.0) {
        return Err(LabError::invalid_arg(format!("bandwidth must be at least 1, got {b}")));
    }
    let exponent = if gaussian { -0.1 } else { -1.0 / 16.0 };
    Ok(b.powf(exponent) * (n as f64).powf(c))
}

/// Envelope c_fluct·(log n)³/(√b·(Im η)²) + c_bias/(b·(Im η)⁵) for the
/// deviation of the empirical Stieltjes transform from its free limit.
pub fn stieltjes_error_envelope(n: usize, bandwidth: f64, eta: C64, c_fluct: f64, c_bias: f64) -> f64 {
    let y = eta.im;
    let logn = (n.max(1) as f64).ln();
    c_fluct * logn.powi(3) / (bandwidth.sqrt() * y * y) + c_bias / (bandwidth * y.powi(5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(points: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(points.to_vec()).unwrap()
    }

    #[test]
    fn measure_validation() {
        assert!(EmpiricalMeasure::new(vec![1.0], vec![0.5]).is_err());
        assert!(EmpiricalMeasure::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(EmpiricalMeasure::new(vec![], vec![]).is_err());
        assert!(EmpiricalMeasure::new(vec![f64::NAN], vec![1.0]).is_err());
        let mu = EmpiricalMeasure::new(vec![2.0, 1.0], vec![0.25, 0.75]).unwrap();
        assert_eq!(mu.points(), &[1.0, 2.0]);
        assert_eq!(mu.weights(), &[0.75, 0.25]);
    }

    #[test]
    fn kolmogorov_examples() {
        let mu = m(&[0.5, 1.0, 3.0]);
        assert_eq!(kolmogorov_distance(&mu, &mu), 0.0);
        assert_eq!(kolmogorov_distance(&m(&[1.0]), &m(&[2.0])), 1.0);
        assert_eq!(kolmogorov_distance(&m(&[1.0, 2.0]), &m(&[1.5, 2.0])), 0.5);
    }

    #[test]
    fn kolmogorov_with_shared_atoms() {
        // CDFs: mu jumps 2/3 at 1; nu jumps 1/3 at 1 and 1/3 at 1.5
        let mu = m(&[1.0, 1.0, 2.0]);
        let nu = m(&[1.0, 1.5, 2.0]);
        assert!((kolmogorov_distance(&mu, &nu) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn log_potential_examples() {
        assert_eq!(log_potential(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!((log_potential(&[2.0, 2.0, 2.0]).unwrap() - 2.0f64.ln()).abs() < 1e-15);
        assert!(matches!(log_potential(&[1.0, 0.0]), Err(LabError::SingularSample)));
        assert!(log_potential(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn truncated_split_examples() {
        let s = truncated_log_split(&[3.0, 2.0], 0.5).unwrap();
        assert_eq!((s.tail, s.tail_count), (0.0, 0));
        let s = truncated_log_split(&[2.0, 1e-3], 0.01).unwrap();
        assert!((s.head - 0.5 * 2.0f64.ln()).abs() < 1e-15);
        assert!((s.tail - 0.5 * 1e-3f64.ln()).abs() < 1e-15);
        assert_eq!(s.tail_count, 1);
        assert!((s.head + s.tail - log_potential(&[2.0, 1e-3]).unwrap()).abs() < 1e-15);
        assert!(truncated_log_split(&[1.0], 0.0).is_err());
    }

    #[test]
    fn window_bound_trivial_cases() {
        let mu = m(&[0.7, 1.2, 3.0]);
        let r = log_window_bound_check(&mu, &mu, 0.5, 5.0).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        assert!(r.holds);
        let r = log_window_bound_check(&m(&[0.6, 0.8]), &m(&[2.0, 4.0]), 0.5, 5.0).unwrap();
        assert!(r.holds && r.lhs > 0.0);
        assert!(log_window_bound_check(&mu, &mu, 0.0, 1.0).is_err());
        assert!(log_window_bound_check(&mu, &mu, 2.0, 1.0).is_err());
    }

    #[test]
    fn disk_distance_examples() {
        let origin = vec![C64::new(0.0, 0.0); 10];
        assert!((disk_law_distance(&origin).unwrap() - 0.9999).abs() < 1e-12);
        assert_eq!(disk_law_distance(&[C64::new(2.0, 0.0)]).unwrap(), 1.0);
        assert!(disk_law_distance(&[]).is_err());
        // deterministic points at the radial quantiles of the disk
        let n = 100_000;
        let pts: Vec<C64> = (0..n)
            .map(|k| C64::from_polar(((k as f64 + 0.5) / n as f64).sqrt(), k as f64))
            .collect();
        assert!(disk_law_distance(&pts).unwrap() < 1e-4);
    }

    #[test]
    fn angular_mean_of_symmetric_set() {
        let pts = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 2.0), C64::new(0.0, -2.0), C64::new(0.0, 0.0)];
        assert!(angular_mean(&pts).norm() < 1e-15);
    }

    #[test]
    fn disk_log_potential_branches() {
        assert_eq!(uniform_disk_log_potential(C64::new(0.0, 0.0)), -0.5);
        assert!((uniform_disk_log_potential(C64::new(0.0, 2.0)) - 2.0f64.ln()).abs() < 1e-15);
        assert_eq!(uniform_disk_log_potential(C64::new(1.0, 0.0)), 0.0);
        let inside = uniform_disk_log_potential(C64::new(1.0 - 1e-12, 0.0));
        let outside = uniform_disk_log_potential(C64::new(1.0 + 1e-12, 0.0));
        assert!(inside.abs() < 1e-11 && outside.abs() < 1e-11);
    }

    #[test]
    fn replacement_gap_examples() {
        let sv = [3.0, 1.0, 0.2];
        assert_eq!(replacement_gap(&sv, &sv).unwrap(), 0.0);
        let scaled: Vec<f64> = sv.iter().map(|s| s * std::f64::consts::E).collect();
        assert!((replacement_gap(&sv, &scaled).unwrap() - 1.0).abs() < 1e-14);
        assert!(replacement_gap(&sv, &sv[..2]).is_err());
    }

    #[test]
    fn floor_examples() {
        let f = theoretical_smin_floor(FloorParams::BlockBand { n: 64, b: 16 }).unwrap();
        assert!((f.log_value + 100.0 * 48.0f64.ln()).abs() < 1e-10);
        assert!((f.value.unwrap().ln() - f.log_value).abs() < 1e-9);
        let f = theoretical_smin_floor(FloorParams::BlockBand { n: 1024, b: 16 }).unwrap();
        assert!(f.value.is_none(), "48^-1600 underflows");
        let f = theoretical_smin_floor(FloorParams::Product { n: 100, m: 3 }).unwrap();
        assert!((f.log_value + 75.0 * 100.0f64.ln()).abs() < 1e-10);
        let d = 50.0f64;
        let f = theoretical_smin_floor(FloorParams::Hadamard {
            n: 100,
            sigma_star: d.powf(-0.5),
            sigma: 1.0,
            r: 2.0,
            kappa: 0.1,
            z_abs: 1.0,
        })
        .unwrap();
        assert!((f.log_value + 8.0 * 100.0f64.powf(0.3)).abs() < 1e-10);
        assert!((f.value.unwrap() - f.log_value.exp()).abs() < 1e-300);
    }

    #[test]
    fn hadamard_preconditions_are_named() {
        let base = |z_abs, r| FloorParams::Hadamard {
            n: 100,
            sigma_star: 0.5,
            sigma: 1.0,
            r,
            kappa: 0.1,
            z_abs,
        };
        let err = theoretical_smin_floor(base(1.0, 2.0)).unwrap_err().to_string();
        assert!(err.contains("σ*·n^(2κ)"), "{err}");
        let err = theoretical_smin_floor(base(2.0, 1.0)).unwrap_err().to_string();
        assert!(err.contains("R > 1"), "{err}");
        let ok = FloorParams::Hadamard {
            n: 100,
            sigma_star: 0.01,
            sigma: 1.0,
            r: 1.5,
            kappa: 0.1,
            z_abs: 0.5,
        };
        let err = theoretical_smin_floor(ok).unwrap_err().to_string();
        assert!(err.contains("σ/R"), "{err}");
    }

    #[test]
    fn hadamard_parameters_of_periodic_band() {
        use crate::ensembles::{build_variance_profile, EnsembleSpec};
        let p = build_variance_profile(&EnsembleSpec::periodic_band(20, 5)).unwrap();
        let (s_star, s) = hadamard_parameters(&p);
        assert!((s_star - 5.0f64.powf(-0.5)).abs() < 1e-15);
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn delocalization_examples() {
        let g = delocalization_threshold(1024.0, 1024, 0.05, true).unwrap();
        assert!((g - 1024.0f64.powf(-0.05)).abs() < 1e-14);
        assert!((g - 0.7071).abs() < 1e-4);
        let ng = delocalization_threshold(1024.0, 1024, 0.05, false).unwrap();
        assert!((ng - 1024.0f64.powf(-0.0125)).abs() < 1e-14);
        assert!((ng - 0.9170).abs() < 1e-4);
        let mut last = f64::INFINITY;
        for b in [1.0, 2.0, 10.0, 100.0, 1e4] {
            let t = delocalization_threshold(b, 500, 0.1, true).unwrap();
            assert!(t < last);
            last = t;
        }
        assert!(delocalization_threshold(0.5, 10, 0.1, true).is_err());
    }

    #[test]
    fn truncation_thresholds() {
        let g = gaussian_truncation_threshold(32.0, 1, 0.05);
        assert!((g - 0.5).abs() < 1e-15);
        let h = general_truncation_threshold(256.0, 1, 0.05);
        assert!((h - 0.5).abs() < 1e-15);
    }
}
