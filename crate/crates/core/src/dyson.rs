//! Free limit of the hermitized resolvent.
//!
//! For a doubly stochastic variance profile the free resolvent of the
//! dilation of X − z has the 2×2 block form `[[a, b], [b', c]]` (each entry
//! times the identity), and the triple solves
//!
//! ```text
//! c + c/D + η = 0,   a + a/D + η = 0,   b = z·D,   b' = z̄·D,   D = ac − b·b'
//! ```
//!
//! with m = (a + c)/2. On the imaginary axis b' = conj(b), so D = ac − |b|².
//! Subtracting the first two equations forces a = c, and the system is
//! equivalent to the fixed point G = −(S[G] + E)⁻¹ with S[G] = diag(c, a) and
//! E = [[η, z], [z̄, η]], which is what [`solve_free_stieltjes`] iterates.

use serde::{Deserialize, Serialize};

use crate::{LabError, Result, C64};

/// Imaginary floor applied to `a` when an iterate leaves the upper half plane.
const IM_FLOOR: f64 = 1e-12;

/// Residual below which damped iteration hands over to Newton polishing.
const POLISH_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub damping: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            damping: 0.5,
            max_iterations: 10_000,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeStieltjesSolution {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    /// Lower-left entry of the 2×2 block; equals conj(b) when η is imaginary.
    pub b_lower: C64,
    pub m: C64,
    pub z: C64,
    pub eta: C64,
    pub iterations: usize,
    pub residual: f64,
}

impl FreeStieltjesSolution {
    /// D = ac − b·b'.
    pub fn determinant(&self) -> C64 {
        self.a * self.c - self.b * self.b_lower
    }
}

/// Max-norm residual of the scalar system at (a, b, c, b').
pub fn scalar_residual(a: C64, b: C64, c: C64, b_lower: C64, z: C64, eta: C64) -> f64 {
    let d = a * c - b * b_lower;
    let r1 = (c + c / d + eta).norm();
    let r2 = (a + a / d + eta).norm();
    let r3 = (b - z * d).norm();
    let r4 = (b_lower - z.conj() * d).norm();
    r1.max(r2).max(r3).max(r4)
}

struct Entries {
    b: C64,
    b_lower: C64,
    s: C64,
}

/// Off-diagonal entries implied by a diagonal value `a`.
fn entries(a: C64, z: C64, eta: C64) -> Entries {
    let s = (a + eta) * (a + eta) - z.norm_sqr();
    Entries {
        b: z / s,
        b_lower: z.conj() / s,
        s,
    }
}

fn residual_at(a: C64, z: C64, eta: C64) -> f64 {
    let e = entries(a, z, eta);
    scalar_residual(a, e.b, a, e.b_lower, z, eta)
}

fn check_args(eta: C64, tol: f64) -> Result<()> {
    if !(eta.im > 0.0) {
        return Err(LabError::invalid_arg(format!("spectral parameter needs Im > 0, got {eta}")));
    }
    if !(tol > 0.0) {
        return Err(LabError::invalid_arg(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Solve the scalar Dyson system on its positive-imaginary branch.
pub fn solve_free_stieltjes(z: C64, eta: C64, tol: f64) -> Result<FreeStieltjesSolution> {
    solve_free_stieltjes_with(z, eta, SolverOptions::with_tol(tol), C64::new(0.0, 1.0))
}

/// Solver with explicit options and starting point for `a` (= c).
///
/// Damped iteration a ← (1−δ)a − δ(a+η)/((a+η)² − |z|²), with Im a projected
/// back to a small positive floor when it dips, then Newton steps on the
/// equivalent cubic a((a+η)² − |z|²) + a + η = 0 once the residual is small.
pub fn solve_free_stieltjes_with(z: C64, eta: C64, opts: SolverOptions, start: C64) -> Result<FreeStieltjesSolution> {
    check_args(eta, opts.tol)?;
    let mut a = if start.im > 0.0 { start } else { C64::new(start.re, 1.0) };
    let mut residual = residual_at(a, z, eta);
    let mut iterations = 0;
    while residual > opts.tol.max(POLISH_THRESHOLD) && iterations < opts.max_iterations {
        let e = entries(a, z, eta);
        let next = -(a + eta) / e.s;
        a = a * (1.0 - opts.damping) + next * opts.damping;
        if a.im <= 0.0 {
            a.im = IM_FLOOR;
        }
        residual = residual_at(a, z, eta);
        iterations += 1;
        if !residual.is_finite() {
            break;
        }
    }
    if !(residual <= opts.tol.max(POLISH_THRESHOLD)) {
        return Err(LabError::NoConvergence { iterations, residual });
    }
    let mut newton_steps = 0;
    while residual > opts.tol && newton_steps < 50 && iterations < opts.max_iterations {
        let w = a + eta;
        let zz = C64::new(z.norm_sqr(), 0.0);
        let f = a * (w * w - zz) + w;
        let df = (w * w - zz) + a * 2.0 * w + 1.0;
        let candidate = a - f / df;
        let cand_res = residual_at(candidate, z, eta);
        if !(candidate.im > 0.0 && cand_res.is_finite()) {
            break;
        }
        a = candidate;
        residual = cand_res;
        newton_steps += 1;
        iterations += 1;
    }
    if !(residual <= opts.tol) || !(a.im > 0.0) {
        return Err(LabError::NoConvergence { iterations, residual });
    }
    let e = entries(a, z, eta);
    Ok(FreeStieltjesSolution {
        a,
        b: e.b,
        c: a,
        b_lower: e.b_lower,
        m: a,
        z,
        eta,
        iterations,
        residual,
    })
}

/// Stieltjes transform of the semicircle law: the root of m² + ηm + 1 = 0
/// with positive imaginary part. The z = 0 case of the Dyson system.
pub fn semicircle_reference(eta: C64) -> Result<C64> {
    if !(eta.im > 0.0) {
        return Err(LabError::invalid_arg(format!("spectral parameter needs Im > 0, got {eta}")));
    }
    let root = (eta * eta - 4.0).sqrt();
    let plus = (-eta + root) / 2.0;
    let minus = (-eta - root) / 2.0;
    // the roots multiply to 1; exactly one lies inside the unit disk
    Ok(if plus.norm() <= minus.norm() { plus } else { minus })
}

/// Default Stieltjes-inversion regularization.
pub const DEFAULT_TAU: f64 = 1e-3;
/// Points on the inversion grid.
pub const INVERSION_GRID_POINTS: usize = 4000;

/// Cumulative distribution of the free limiting measure μ_z of the dilation,
/// tabulated by Stieltjes inversion: (1/π)·Im m(t + iτ) integrated with the
/// trapezoid rule on t ∈ [−(3+|z|), 3+|z|].
#[derive(Debug, Clone)]
pub struct FreeMeasure {
    pub z: C64,
    pub tau: f64,
    grid: Vec<f64>,
    density: Vec<f64>,
    cumulative: Vec<f64>,
}

impl FreeMeasure {
    pub fn new(z: C64, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(LabError::invalid_arg(format!("regularization must be positive, got {tau}")));
        }
        let half = 3.0 + z.norm();
        let points = INVERSION_GRID_POINTS;
        let step = 2.0 * half / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|k| -half + k as f64 * step).collect();
        let opts = SolverOptions::with_tol(1e-10);
        let mut density = Vec::with_capacity(points);
        let mut start = C64::new(0.0, 1.0);
        for t in &grid {
            let sol = solve_free_stieltjes_with(z, C64::new(*t, tau), opts, start)
                .or_else(|_| solve_free_stieltjes_with(z, C64::new(*t, tau), opts, C64::new(0.0, 1.0)))?;
            start = sol.a;
            density.push(sol.m.im / std::f64::consts::PI);
        }
        let mut cumulative = Vec::with_capacity(points);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 1..points {
            acc += 0.5 * step * (density[k - 1] + density[k]);
            cumulative.push(acc);
        }
        Ok(FreeMeasure {
            z,
            tau,
            grid,
            density,
            cumulative,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// μ_z((−∞, x]), clamped to [0, 1].
    pub fn cdf(&self, x: f64) -> f64 {
        let grid = &self.grid;
        if x <= grid[0] {
            return 0.0;
        }
        let last = grid.len() - 1;
        if x >= grid[last] {
            return self.cumulative[last].clamp(0.0, 1.0);
        }
        let k = grid.partition_point(|t| *t <= x) - 1;
        let h = x - grid[k];
        let step = grid[k + 1] - grid[k];
        let slope = (self.density[k + 1] - self.density[k]) / step;
        let partial = h * (self.density[k] + 0.5 * slope * h);
        (self.cumulative[k] + partial).clamp(0.0, 1.0)
    }
}

/// One-shot μ_z((−∞, x]); build a [`FreeMeasure`] for repeated evaluation.
pub fn free_measure_cdf(z: C64, x: f64, tau: f64) -> Result<f64> {
    Ok(FreeMeasure::new(z, tau)?.cdf(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i(y: f64) -> C64 {
        C64::new(0.0, y)
    }

    #[test]
    fn origin_is_the_golden_ratio_point() {
        let sol = solve_free_stieltjes(C64::new(0.0, 0.0), i(1.0), 1e-12).unwrap();
        let expected = i((5.0f64.sqrt() - 1.0) / 2.0);
        assert!((sol.a - expected).norm() < 1e-10);
        assert!((sol.c - expected).norm() < 1e-10);
        assert!((sol.m - expected).norm() < 1e-10);
        assert!(sol.b.norm() < 1e-14);
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn large_eta_asymptotics() {
        let sol = solve_free_stieltjes(C64::new(0.7, 0.0), i(10.0), 1e-12).unwrap();
        assert!((sol.m - i(0.1)).norm() <= 2e-3);
    }

    #[test]
    fn solution_invariants_on_a_grid() {
        for zr in [0.0, 0.3, 0.9, 1.2, 2.0] {
            for zi in [0.0, 0.4] {
                for eta in [i(0.05), i(0.3), C64::new(0.5, 0.2), C64::new(-1.5, 0.05), i(4.0)] {
                    let z = C64::new(zr, zi);
                    let sol = solve_free_stieltjes(z, eta, 1e-12).unwrap();
                    assert!(sol.a.im > 0.0 && sol.c.im > 0.0 && sol.m.im > 0.0, "{z} {eta}");
                    assert!((sol.a - sol.c).norm() < 1e-10);
                    assert_eq!(sol.m, (sol.a + sol.c) / 2.0);
                    assert!(scalar_residual(sol.a, sol.b, sol.c, sol.b_lower, z, eta) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn imaginary_axis_satisfies_the_modulus_form() {
        for z in [C64::new(0.5, 0.5), C64::new(1.3, -0.2)] {
            let eta = i(0.3);
            let sol = solve_free_stieltjes(z, eta, 1e-12).unwrap();
            assert!((sol.b_lower - sol.b.conj()).norm() < 1e-12);
            let d = sol.a * sol.c - sol.b.norm_sqr();
            assert!((sol.c + sol.c / d + eta).norm() < 1e-10);
            assert!((sol.b - z * d).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_shift_matches_semicircle() {
        for k in 0..100 {
            let y = 0.05 + (10.0 - 0.05) * k as f64 / 99.0;
            let m = solve_free_stieltjes(C64::new(0.0, 0.0), i(y), 1e-12).unwrap().m;
            let s = semicircle_reference(i(y)).unwrap();
            assert!((m - s).norm() <= 1e-8, "η = {y}i");
        }
    }

    #[test]
    fn semicircle_closed_forms() {
        let m = semicircle_reference(i(1.0)).unwrap();
        assert!((m - i((5.0f64.sqrt() - 1.0) / 2.0)).norm() < 1e-14);
        let m = semicircle_reference(i(2.0)).unwrap();
        assert!((m - i(2.0f64.sqrt() - 1.0)).norm() < 1e-14);
        let m = semicircle_reference(i(100.0)).unwrap();
        assert!((m - i(0.01)).norm() < 1e-3);
        for eta in [C64::new(1.0, 0.01), C64::new(-3.0, 0.5), C64::new(0.0, 1e-6)] {
            let m = semicircle_reference(eta).unwrap();
            assert!(m.im > 0.0);
            assert!((m * m + eta * m + 1.0).norm() < 1e-12);
        }
        assert!(semicircle_reference(C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(solve_free_stieltjes(C64::new(0.0, 0.0), C64::new(1.0, 0.0), 1e-12).is_err());
        assert!(solve_free_stieltjes(C64::new(0.0, 0.0), i(1.0), 0.0).is_err());
        assert!(FreeMeasure::new(C64::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn non_convergence_carries_the_residual() {
        let opts = SolverOptions {
            tol: 1e-12,
            damping: 0.5,
            max_iterations: 1,
        };
        match solve_free_stieltjes_with(C64::new(0.5, 0.0), i(0.05), opts, C64::new(0.0, 1.0)) {
            Err(LabError::NoConvergence { iterations, residual }) => {
                assert!(iterations <= 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn branch_is_continuous_down_the_imaginary_axis() {
        for z in [C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(0.95, 0.1), C64::new(1.5, 0.0)] {
            let mut prev: Option<C64> = None;
            let mut y = 1.0;
            while y >= 0.05 - 1e-12 {
                let m = solve_free_stieltjes(z, i(y), 1e-12).unwrap().m;
                if let Some(p) = prev {
                    assert!((m - p).norm() <= 0.1, "jump at z = {z}, η = {y}i");
                }
                prev = Some(m);
                y -= 0.01;
            }
        }
    }

    #[test]
    fn free_measure_mass_symmetry_and_lipschitz() {
        let tau = DEFAULT_TAU;
        for z in [C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(1.2, 0.3)] {
            let mu = FreeMeasure::new(z, tau).unwrap();
            assert!((mu.cdf(10.0) - 1.0).abs() <= 2.0 * tau, "{z}: {}", mu.cdf(10.0));
            assert!((mu.cdf(0.0) - 0.5).abs() <= 2.0 * tau, "{z}: {}", mu.cdf(0.0));
            let grid = mu.grid().to_vec();
            let mut last = 0.0;
            for (k, x) in grid.iter().enumerate().step_by(7) {
                let f = mu.cdf(*x);
                assert!(f >= last - 1e-15, "monotone");
                last = f;
                for y in [0.001, 0.01, 0.1, 0.5] {
                    assert!(mu.cdf(x + y) - f <= y + 4.0 * tau, "{z} at {x} (+{y}), index {k}");
                }
            }
        }
        let one_shot = free_measure_cdf(C64::new(0.0, 0.0), 10.0, tau).unwrap();
        assert!((one_shot - 1.0).abs() <= 2.0 * tau);
    }
}
