//! Variance profiles b_ij and the doubly stochastic check.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spec::{EnsembleKind, EnsembleSpec};
use crate::{LabError, Result};

/// Tolerance used when validating user-supplied explicit profiles.
pub const EXPLICIT_PROFILE_TOL: f64 = 1e-10;

/// Standard deviations b_ij ≥ 0 of the entries, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    n: usize,
    entries: Vec<f64>,
}

impl VarianceProfile {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        VarianceProfile { n, entries }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(LabError::ensemble(format!(
                "profile row {i} has {} entries, expected {n}",
                r.len()
            )));
        }
        let entries: Vec<f64> = rows.iter().flatten().copied().collect();
        if let Some(k) = entries.iter().position(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(LabError::ensemble(format!(
                "profile entry ({}, {}) = {} is not a nonnegative number",
                k / n.max(1),
                k % n.max(1),
                entries[k]
            )));
        }
        Ok(VarianceProfile { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// b_n = 1 / max b_ij².
    pub fn bandwidth(&self) -> f64 {
        let max = self.entries.iter().fold(0.0f64, |m, b| m.max(b * b));
        1.0 / max
    }

    pub fn support_size(&self) -> usize {
        self.entries.iter().filter(|b| **b != 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublyStochasticReport {
    pub max_row_deviation: f64,
    pub worst_row: usize,
    pub max_col_deviation: f64,
    pub worst_col: usize,
    pub pass: bool,
}

/// Check that every row and column of b_ij² sums to 1 within `tol`.
pub fn check_doubly_stochastic(profile: &VarianceProfile, tol: f64) -> DoublyStochasticReport {
    let n = profile.n();
    let mut col_sums = vec![0.0f64; n];
    let (mut max_row_deviation, mut worst_row) = (0.0f64, 0);
    for i in 0..n {
        let mut s = 0.0;
        for (j, b) in profile.row(i).iter().enumerate() {
            let v = b * b;
            s += v;
            col_sums[j] += v;
        }
        let dev = (s - 1.0).abs();
        if dev > max_row_deviation || dev.is_nan() {
            max_row_deviation = dev;
            worst_row = i;
        }
    }
    let (mut max_col_deviation, mut worst_col) = (0.0f64, 0);
    for (j, s) in col_sums.iter().enumerate() {
        let dev = (s - 1.0).abs();
        if dev > max_col_deviation || dev.is_nan() {
            max_col_deviation = dev;
            worst_col = j;
        }
    }
    DoublyStochasticReport {
        max_row_deviation,
        worst_row,
        max_col_deviation,
        worst_col,
        pass: max_row_deviation <= tol && max_col_deviation <= tol,
    }
}

/// Block offsets present in a cyclic block-tridiagonal layout with `m` blocks.
pub(crate) fn block_offsets(m: usize) -> Vec<usize> {
    let mut offs = vec![0, 1 % m, (m - 1) % m];
    offs.sort_unstable();
    offs.dedup();
    offs
}

/// Build b_ij for an ensemble.
pub fn build_variance_profile(spec: &EnsembleSpec) -> Result<VarianceProfile> {
    spec.validate_shape()?;
    let profile = match &spec.kind {
        EnsembleKind::BlockBand { n, b } => {
            let (n, b) = (*n, *b);
            let m = n / b;
            let offsets = block_offsets(m);
            // 1/√(3b) when the three block diagonals are distinct (m ≥ 3)
            let value = 1.0 / ((offsets.len() * b) as f64).sqrt();
            VarianceProfile::from_fn(n, |i, j| {
                let diff = (j / b + m - i / b) % m;
                if offsets.contains(&diff) {
                    value
                } else {
                    0.0
                }
            })
        }
        EnsembleKind::PeriodicBand { n, d } => {
            let (n, d) = (*n, *d);
            let half = (d - 1) / 2;
            let value = 1.0 / (d as f64).sqrt();
            VarianceProfile::from_fn(n, |i, j| {
                let dist = i.abs_diff(j);
                if dist <= half || dist >= n - half {
                    value
                } else {
                    0.0
                }
            })
        }
        EnsembleKind::GeneralProfile { entries } => {
            let profile = VarianceProfile::from_rows(entries)?;
            let report = check_doubly_stochastic(&profile, EXPLICIT_PROFILE_TOL);
            if !report.pass {
                return Err(LabError::ensemble(format!(
                    "profile is not doubly stochastic: row {} deviates by {:e}, column {} by {:e}",
                    report.worst_row, report.max_row_deviation, report.worst_col, report.max_col_deviation
                )));
            }
            profile
        }
        EnsembleKind::ProductLinearization { n, m } => {
            let (n, m) = (*n, *m);
            let value = 1.0 / (n as f64).sqrt();
            VarianceProfile::from_fn(n * m, |i, j| {
                if j / n == (i / n + 1) % m {
                    value
                } else {
                    0.0
                }
            })
        }
        EnsembleKind::IidGaussian { n } => {
            let value = 1.0 / (*n as f64).sqrt();
            VarianceProfile::from_fn(*n, |_, _| value)
        }
    };
    Ok(profile)
}

/// A random doubly stochastic profile with `per_row` nonzeros in every row and
/// column and unequal variances.
///
/// The squared profile is a weighted circulant Σ_s w_s P^s with random offsets
/// s and weights w_s drawn uniformly from [1, 1 + spread] then normalized, with
/// rows and columns relabelled by independent random permutations. Row and
/// column sums are therefore Σ w_s = 1 and b_n = 1 / max w_s ≥ per_row / (1 + spread).
pub fn random_doubly_stochastic(n: usize, per_row: usize, spread: f64, seed: u64) -> Result<EnsembleKind> {
    if per_row == 0 || per_row > n {
        return Err(LabError::invalid_arg(format!(
            "support per row must lie in 1..={n}, got {per_row}"
        )));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(LabError::invalid_arg(format!("weight spread must be nonnegative, got {spread}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residues: Vec<usize> = (0..n).collect();
    residues.shuffle(&mut rng);
    let offsets = &residues[..per_row];
    let raw: Vec<f64> = (0..per_row).map(|_| 1.0 + spread * rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weight_of = vec![0.0f64; n];
    for (s, w) in offsets.iter().zip(&raw) {
        weight_of[*s] = w / total;
    }
    let mut row_perm: Vec<usize> = (0..n).collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    row_perm.shuffle(&mut rng);
    col_perm.shuffle(&mut rng);
    let entries = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| weight_of[(col_perm[j] + n - row_perm[i]) % n].sqrt())
                .collect()
        })
        .collect();
    Ok(EnsembleKind::GeneralProfile { entries })
}
