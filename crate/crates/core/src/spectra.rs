//! Dense spectral decompositions and resolvent quantities.
//!
//! Everything here runs on faer's dense solvers with sequential kernels, so a
//! given input always produces the same bits regardless of how many trials are
//! running concurrently.

use faer::Side;
use serde::{Deserialize, Serialize};

use crate::ensembles::{EnsembleSpec, SampledMatrix};
use crate::hermitization::DilationMatrix;
use crate::{CMat, LabError, Result, C64};

/// Eigenvalue gaps below this make eigenvector inf-norms unreliable.
pub const DEGENERATE_GAP: f64 = 1e-10;

fn decomposition_error(what: &str, e: impl std::fmt::Debug) -> LabError {
    LabError::Decomposition(format!("{what}: {e:?}"))
}

fn check_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(LabError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn check_finite_input(m: &CMat) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(LabError::Decomposition(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// The real part of `m` when every imaginary part is exactly zero. Real
/// inputs take faer's real solvers, which are about twice as fast.
fn real_view(m: &CMat) -> Option<faer::Mat<f64>> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)].im != 0.0 {
                return None;
            }
        }
    }
    Some(faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re))
}

fn check_eta(eta: C64) -> Result<()> {
    if !(eta.im > 0.0) {
        return Err(LabError::invalid_arg(format!("spectral parameter needs Im > 0, got {eta}")));
    }
    Ok(())
}

/// Singular values σ₁ ≥ … ≥ σ_n ≥ 0.
pub fn singular_values(m: &CMat) -> Result<Vec<f64>> {
    check_square(m)?;
    check_finite_input(m)?;
    let mut sv = match real_view(m) {
        Some(r) => r.singular_values(),
        None => m.singular_values(),
    }
    .map_err(|e| decomposition_error("svd", e))?;
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(LabError::Decomposition("svd produced non-finite values".into()));
    }
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Eigenvalues with multiplicity, in solver order.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    check_square(m)?;
    check_finite_input(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let eig = match real_view(m) {
        Some(r) => r.eigenvalues(),
        None => m.eigenvalues(),
    }
    .map_err(|e| decomposition_error("eigenvalues", e))?;
    if eig.iter().any(|l| !(l.re.is_finite() && l.im.is_finite())) {
        return Err(LabError::Decomposition("eigensolver produced non-finite values".into()));
    }
    Ok(eig)
}

/// Real spectrum (increasing) and, optionally, orthonormal eigenvectors as
/// the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub values: Vec<f64>,
    pub vectors: Option<CMat>,
}

pub fn hermitian_spectrum(y: &DilationMatrix, want_vectors: bool) -> Result<HermitianSpectrum> {
    hermitian_eigen(y.values(), want_vectors)
}

/// Spectrum of an arbitrary Hermitian matrix; only the lower triangle is read.
pub fn hermitian_eigen(h: &CMat, want_vectors: bool) -> Result<HermitianSpectrum> {
    check_square(h)?;
    check_finite_input(h)?;
    if want_vectors {
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| decomposition_error("hermitian eigen", e))?;
        let values: Vec<f64> = evd.S().column_vector().iter().map(|l| l.re).collect();
        Ok(HermitianSpectrum {
            values,
            vectors: Some(evd.U().to_owned()),
        })
    } else {
        let values = h
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| decomposition_error("hermitian eigenvalues", e))?;
        Ok(HermitianSpectrum { values, vectors: None })
    }
}

/// Singular values of the source block X_z, read off the top half of the
/// dilation spectrum.
pub fn singular_values_from_dilation(y: &DilationMatrix) -> Result<Vec<f64>> {
    let spec = hermitian_spectrum(y, false)?;
    let n = y.source_dim();
    Ok(spec.values[n..].iter().rev().map(|l| l.max(0.0)).collect())
}

/// Normalized trace (1/2n)·Tr (Y − η)⁻¹ from the spectrum of Y.
pub fn stieltjes_from_spectrum(eigs: &[f64], eta: C64) -> Result<C64> {
    check_eta(eta)?;
    if eigs.is_empty() {
        return Err(LabError::invalid_arg("empty spectrum"));
    }
    let sum: C64 = eigs.iter().map(|l| (C64::new(*l, 0.0) - eta).inv()).sum();
    Ok(sum / eigs.len() as f64)
}

/// The same transform computed from the singular values of X_z, whose
/// dilation has spectrum {±σ_i}.
pub fn stieltjes_from_singular_values(sv: &[f64], eta: C64) -> Result<C64> {
    check_eta(eta)?;
    if sv.is_empty() {
        return Err(LabError::invalid_arg("empty spectrum"));
    }
    let sum: C64 = sv
        .iter()
        .map(|s| (C64::new(*s, 0.0) - eta).inv() + (C64::new(-*s, 0.0) - eta).inv())
        .sum();
    Ok(sum / (2 * sv.len()) as f64)
}

/// m_z(η) = tr (Y_z − η)⁻¹ with the normalized trace.
pub fn empirical_stieltjes(y: &DilationMatrix, eta: C64) -> Result<C64> {
    check_eta(eta)?;
    let spec = hermitian_spectrum(y, false)?;
    stieltjes_from_spectrum(&spec.values, eta)
}

/// Diagonal of (Y − η)⁻¹: G_kk = Σ_j |u_j(k)|² / (λ_j − η).
pub fn green_diagonal(y: &DilationMatrix, eta: C64) -> Result<Vec<C64>> {
    check_eta(eta)?;
    green_diagonal_hermitian(y.values(), eta)
}

pub fn green_diagonal_hermitian(h: &CMat, eta: C64) -> Result<Vec<C64>> {
    check_eta(eta)?;
    let spec = hermitian_eigen(h, true)?;
    let u = spec.vectors.expect("vectors requested");
    let weights: Vec<C64> = spec.values.iter().map(|l| (C64::new(*l, 0.0) - eta).inv()).collect();
    let dim = h.nrows();
    Ok((0..dim)
        .map(|k| (0..dim).map(|j| weights[j] * u[(k, j)].norm_sqr()).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfNorm {
    /// max over unit eigenvectors ψ of ‖ψ‖_∞.
    pub value: f64,
    /// Smallest distance between two eigenvalues.
    pub min_gap: f64,
    /// False when `min_gap` < [`DEGENERATE_GAP`]: a degenerate eigenspace has
    /// no canonical basis, so the value depends on the solver's choice.
    pub reliable: bool,
}

/// Per-eigenvector inf-norms of unit-normalized eigenvectors, with the
/// eigenvalues in matching order.
pub fn eigenvector_infnorms(m: &CMat) -> Result<(Vec<C64>, Vec<f64>)> {
    let n = check_square(m)?;
    check_finite_input(m)?;
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let evd = match real_view(m) {
        Some(r) => r.eigen(),
        None => m.eigen(),
    }
    .map_err(|e| decomposition_error("eigen", e))?;
    let u = evd.U();
    let vals: Vec<C64> = evd.S().column_vector().iter().copied().collect();
    let mut norms = Vec::with_capacity(n);
    for j in 0..n {
        let col = u.col(j);
        let l2: f64 = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if !(l2 > 0.0 && l2.is_finite()) {
            return Err(LabError::Decomposition(format!("eigenvector {j} has norm {l2}")));
        }
        let inf = col.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        norms.push(inf / l2);
    }
    Ok((vals, norms))
}

pub fn eigenvector_max_infnorm(m: &CMat) -> Result<InfNorm> {
    let (vals, norms) = eigenvector_infnorms(m)?;
    let value = norms.iter().copied().fold(0.0f64, f64::max);
    let min_gap = min_pairwise_gap(&vals);
    Ok(InfNorm {
        value,
        min_gap,
        reliable: min_gap >= DEGENERATE_GAP,
    })
}

fn min_pairwise_gap(vals: &[C64]) -> f64 {
    // sort by real part and sweep; exact minimum
    let mut sorted = vals.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re));
    let mut best = f64::INFINITY;
    for i in 0..sorted.len() {
        for j in i + 1..sorted.len() {
            if sorted[j].re - sorted[i].re >= best {
                break;
            }
            best = best.min((sorted[j] - sorted[i]).norm());
        }
    }
    best
}

/// Number of eigenvalues in [a, b], endpoints included.
pub fn interval_count(eigs: &[f64], a: f64, b: f64) -> Result<usize> {
    if !(a <= b) {
        return Err(LabError::invalid_arg(format!("empty interval [{a}, {b}]")));
    }
    Ok(eigs.iter().filter(|l| **l >= a && **l <= b).count())
}

/// Largest [`interval_count`] over the windows [s, s + len] for s on a grid
/// of step `step` covering [lo, hi − len]. `sorted` must be increasing.
pub fn max_window_count(sorted: &[f64], lo: f64, hi: f64, len: f64, step: f64) -> Result<usize> {
    if !(len > 0.0 && step > 0.0 && lo + len <= hi) {
        return Err(LabError::invalid_arg(format!(
            "bad sliding window: [{lo}, {hi}], length {len}, step {step}"
        )));
    }
    let steps = ((hi - len - lo) / step + 1e-9).floor() as usize;
    let mut best = 0;
    for k in 0..=steps {
        let a = lo + k as f64 * step;
        let b = a + len;
        let count = sorted.partition_point(|l| *l <= b) - sorted.partition_point(|l| *l < a);
        best = best.max(count);
    }
    Ok(best)
}

/// Eigenvalues, singular values and optional eigenvector inf-norms of one
/// sampled matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub eigenvalues: Vec<C64>,
    pub singular_values: Vec<f64>,
    pub eigenvector_infnorms: Option<Vec<f64>>,
    pub spec: Option<EnsembleSpec>,
    pub seed: Option<u64>,
    pub trial: Option<u64>,
}

impl SpectralSample {
    pub fn of_matrix(m: &CMat, with_vectors: bool) -> Result<Self> {
        let (eigenvalues, eigenvector_infnorms) = if with_vectors {
            let (vals, norms) = eigenvector_infnorms(m)?;
            (vals, Some(norms))
        } else {
            (eigenvalues(m)?, None)
        };
        Ok(SpectralSample {
            eigenvalues,
            singular_values: singular_values(m)?,
            eigenvector_infnorms,
            spec: None,
            seed: None,
            trial: None,
        })
    }

    pub fn of_sample(sample: &SampledMatrix, with_vectors: bool) -> Result<Self> {
        let mut out = SpectralSample::of_matrix(&sample.values, with_vectors)?;
        out.spec = Some(sample.spec.clone());
        out.seed = Some(sample.seed);
        out.trial = Some(sample.trial);
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn has_zero_singular_value(&self) -> bool {
        self.singular_values.last().is_some_and(|s| *s == 0.0)
    }
}
