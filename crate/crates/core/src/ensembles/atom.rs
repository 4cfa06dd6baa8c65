//! Scalar atom distributions ξ with mean zero and unit variance.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{C64, LabError, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum AtomFamily {
    RealGaussian,
    /// Independent real and imaginary parts, each N(0, 1/2).
    ComplexGaussian,
    Rademacher,
    /// Uniform on [−√3, √3].
    UniformSymmetric,
    /// ±1/√p with probability p/2 each, 0 otherwise.
    BernoulliSymmetric { p: f64 },
}

impl AtomFamily {
    pub fn is_complex(&self) -> bool {
        matches!(self, AtomFamily::ComplexGaussian)
    }

    /// Smallest K with E exp(|ξ|²/K²) ≤ 2.
    pub fn default_subgaussian_constant(&self) -> f64 {
        match *self {
            AtomFamily::RealGaussian => (8.0f64 / 3.0).sqrt(),
            // |ξ|² ~ Exp(1): E exp(|ξ|²/K²) = 1/(1 − 1/K²)
            AtomFamily::ComplexGaussian => 2.0f64.sqrt(),
            AtomFamily::Rademacher => 1.0 / std::f64::consts::LN_2.sqrt(),
            AtomFamily::UniformSymmetric => uniform_subgaussian_constant(),
            AtomFamily::BernoulliSymmetric { p } => (1.0 / (p * (1.0 + 1.0 / p).ln())).sqrt(),
        }
    }

    /// Sup of the density of ξ (of each of its parts, for complex atoms).
    /// `None` for atoms without a density.
    pub fn default_density_bound(&self) -> Option<f64> {
        match *self {
            AtomFamily::RealGaussian => Some(1.0 / (2.0 * std::f64::consts::PI).sqrt()),
            AtomFamily::ComplexGaussian => Some(1.0 / std::f64::consts::PI.sqrt()),
            AtomFamily::UniformSymmetric => Some(1.0 / (2.0 * SQRT_3)),
            AtomFamily::Rademacher | AtomFamily::BernoulliSymmetric { .. } => None,
        }
    }

    /// E[ξ·1{|ξ| ≤ D}], evaluated by quadrature for continuous families and
    /// exactly for discrete ones. Real part only; the complex gaussian is radial.
    pub fn truncated_first_moment(&self, threshold: f64) -> f64 {
        match *self {
            AtomFamily::RealGaussian => {
                let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
                simpson(|x| x * norm * (-0.5 * x * x).exp(), -threshold, threshold, 4000)
            }
            AtomFamily::ComplexGaussian => 0.0,
            AtomFamily::UniformSymmetric => {
                let edge = threshold.min(SQRT_3);
                simpson(|x| x / (2.0 * SQRT_3), -edge, edge, 2000)
            }
            AtomFamily::Rademacher => {
                if threshold >= 1.0 {
                    0.5 * 1.0 + 0.5 * -1.0
                } else {
                    0.0
                }
            }
            AtomFamily::BernoulliSymmetric { p } => {
                let v = 1.0 / p.sqrt();
                if threshold >= v {
                    0.5 * p * v - 0.5 * p * v
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let AtomFamily::BernoulliSymmetric { p } = *self {
            if !(p > 0.0 && p <= 1.0) {
                return Err(LabError::ensemble(format!(
                    "bernoulli-symmetric sparsity p must lie in (0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }

    fn draw_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        match *self {
            AtomFamily::RealGaussian => C64::new(StandardNormal.sample(rng), 0.0),
            AtomFamily::ComplexGaussian => {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                C64::new(re * std::f64::consts::FRAC_1_SQRT_2, im * std::f64::consts::FRAC_1_SQRT_2)
            }
            AtomFamily::Rademacher => C64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0),
            AtomFamily::UniformSymmetric => C64::new(rng.random_range(-SQRT_3..SQRT_3), 0.0),
            AtomFamily::BernoulliSymmetric { p } => {
                let u: f64 = rng.random();
                let v = if u < 0.5 * p {
                    1.0 / p.sqrt()
                } else if u < p {
                    -1.0 / p.sqrt()
                } else {
                    0.0
                };
                C64::new(v, 0.0)
            }
        }
    }
}

/// Distribution of the matrix atom ξ with its sub-Gaussian constant,
/// density bound and optional hard truncation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    #[serde(flatten)]
    pub family: AtomFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgaussian_constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
}

impl Default for AtomSpec {
    fn default() -> Self {
        AtomSpec::new(AtomFamily::RealGaussian)
    }
}

impl AtomSpec {
    pub fn new(family: AtomFamily) -> Self {
        AtomSpec {
            family,
            subgaussian_constant: None,
            density_bound: None,
            truncation: None,
        }
    }

    pub fn real_gaussian() -> Self {
        AtomSpec::new(AtomFamily::RealGaussian)
    }

    pub fn complex_gaussian() -> Self {
        AtomSpec::new(AtomFamily::ComplexGaussian)
    }

    pub fn rademacher() -> Self {
        AtomSpec::new(AtomFamily::Rademacher)
    }

    pub fn subgaussian_constant(&self) -> f64 {
        self.subgaussian_constant
            .unwrap_or_else(|| self.family.default_subgaussian_constant())
    }

    pub fn density_bound(&self) -> Option<f64> {
        self.density_bound.or_else(|| self.family.default_density_bound())
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.family, AtomFamily::RealGaussian | AtomFamily::ComplexGaussian)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if let Some(k) = self.subgaussian_constant {
            if !(k > 0.0 && k.is_finite()) {
                return Err(LabError::ensemble(format!("subgaussian constant must be positive, got {k}")));
            }
        }
        if let Some(rho) = self.density_bound {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(LabError::ensemble(format!("density bound must be positive, got {rho}")));
            }
        }
        if let Some(d) = self.truncation {
            if !(d > 0.0) {
                return Err(LabError::ensemble(format!("truncation threshold must be positive, got {d}")));
            }
            let moment = self.family.truncated_first_moment(d);
            if moment.abs() > 1e-12 {
                return Err(LabError::ensemble(format!(
                    "E[xi 1{{|xi| <= {d}}}] = {moment:e} is not zero"
                )));
            }
        }
        Ok(())
    }

    /// One draw of ξ, hard-truncated to 0 when |ξ| exceeds the threshold.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> C64 {
        let x = self.family.draw_raw(rng);
        match self.truncation {
            Some(d) if x.norm() > d => C64::new(0.0, 0.0),
            _ => x,
        }
    }
}

/// Replace ξ by ξ·1{|ξ| ≤ threshold}.
pub fn truncate_atom(atom: &AtomSpec, threshold: f64) -> Result<AtomSpec> {
    if !(threshold > 0.0) {
        return Err(LabError::invalid_arg(format!(
            "truncation threshold must be positive, got {threshold}"
        )));
    }
    let mut out = atom.clone();
    out.truncation = Some(match atom.truncation {
        Some(prev) => prev.min(threshold),
        None => threshold,
    });
    out.validate()?;
    Ok(out)
}

/// Truncation level √b·n^(−c) used when passing to bounded entries.
pub fn truncation_level(b: f64, n: usize, c: f64) -> f64 {
    b.sqrt() * (n as f64).powf(-c)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

fn uniform_subgaussian_constant() -> f64 {
    // E exp(ξ²/K²) for ξ ~ U[−√3, √3]; decreasing in K.
    let mgf = |k: f64| simpson(|x| (x * x / (k * k)).exp() / (2.0 * SQRT_3), -SQRT_3, SQRT_3, 2000);
    let (mut lo, mut hi) = (0.5, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mgf(mid) > 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(atom: &AtomSpec, samples: usize, seed: u64) -> (C64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mean = C64::new(0.0, 0.0);
        let mut second = 0.0;
        for _ in 0..samples {
            let x = atom.draw(&mut rng);
            mean += x;
            second += x.norm_sqr();
        }
        (mean / samples as f64, second / samples as f64)
    }

    #[test]
    fn every_family_is_centered_with_unit_variance() {
        let families = [
            AtomFamily::RealGaussian,
            AtomFamily::ComplexGaussian,
            AtomFamily::Rademacher,
            AtomFamily::UniformSymmetric,
            AtomFamily::BernoulliSymmetric { p: 0.3 },
        ];
        let samples = 200_000;
        let tol = 3.0 / (samples as f64).sqrt();
        for (k, fam) in families.iter().enumerate() {
            let (mean, second) = moments(&AtomSpec::new(*fam), samples, 11 + k as u64);
            assert!(mean.norm() < tol, "{fam:?} mean {mean}");
            // fourth moment of the sparse bernoulli is 1/p, widen accordingly
            let var_tol = if let AtomFamily::BernoulliSymmetric { p } = fam { 3.0 * tol / p.sqrt() } else { 3.0 * tol };
            assert!((second - 1.0).abs() < var_tol, "{fam:?} second moment {second}");
        }
    }

    #[test]
    fn complex_gaussian_splits_variance() {
        let atom = AtomSpec::complex_gaussian();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 200_000;
        let (mut re2, mut im2, mut cross) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = atom.draw(&mut rng);
            re2 += x.re * x.re;
            im2 += x.im * x.im;
            cross += x.re * x.im;
        }
        let n = n as f64;
        assert!((re2 / n - 0.5).abs() < 0.01);
        assert!((im2 / n - 0.5).abs() < 0.01);
        assert!((cross / n).abs() < 0.01);
    }

    #[test]
    fn truncation_rejects_nonpositive_threshold() {
        assert!(truncate_atom(&AtomSpec::real_gaussian(), 0.0).is_err());
        assert!(truncate_atom(&AtomSpec::real_gaussian(), -1.0).is_err());
        assert!(truncate_atom(&AtomSpec::real_gaussian(), f64::NAN).is_err());
    }

    #[test]
    fn rademacher_is_unchanged_by_wide_truncation() {
        let plain = AtomSpec::rademacher();
        let cut = truncate_atom(&plain, 2.0).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            assert_eq!(plain.draw(&mut a), cut.draw(&mut b));
        }
    }

    #[test]
    fn gaussian_truncation_level_bounds_samples() {
        let level = truncation_level(1024.0, 256, 0.05);
        // 32 · 256^(−0.05)
        assert!((level - 24.25).abs() < 0.01, "{level}");
        let atom = truncate_atom(&AtomSpec::real_gaussian(), level).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            assert!(atom.draw(&mut rng).norm() <= level);
        }
        // a tight cut actually clips
        let tight = truncate_atom(&AtomSpec::real_gaussian(), 0.5).unwrap();
        for _ in 0..1000 {
            assert!(tight.draw(&mut rng).norm() <= 0.5);
        }
    }

    #[test]
    fn symmetric_truncations_have_zero_first_moment() {
        let families = [
            AtomFamily::RealGaussian,
            AtomFamily::UniformSymmetric,
            AtomFamily::Rademacher,
            AtomFamily::BernoulliSymmetric { p: 0.25 },
        ];
        for fam in families {
            for d in [0.1, 0.5, 1.0, 1.7, 2.0, 3.5, 10.0] {
                assert!(fam.truncated_first_moment(d).abs() < 1e-14, "{fam:?} at {d}");
            }
        }
        let samples = 100_000;
        let atom = truncate_atom(&AtomSpec::new(AtomFamily::UniformSymmetric), 0.8).unwrap();
        let (mean, _) = moments(&atom, samples, 3);
        assert!(mean.norm() < 3.0 / (samples as f64).sqrt());
    }

    #[test]
    fn subgaussian_constants_solve_their_defining_equation() {
        let k = AtomFamily::UniformSymmetric.default_subgaussian_constant();
        let mgf = simpson(|x| (x * x / (k * k)).exp() / (2.0 * SQRT_3), -SQRT_3, SQRT_3, 2000);
        assert!((mgf - 2.0).abs() < 1e-9);
        let p = 0.4;
        let k = AtomFamily::BernoulliSymmetric { p }.default_subgaussian_constant();
        let mgf = (1.0 - p) + p * (1.0 / (p * k * k)).exp();
        assert!((mgf - 2.0).abs() < 1e-12);
        // p = 1 is rademacher
        let k1 = AtomFamily::BernoulliSymmetric { p: 1.0 }.default_subgaussian_constant();
        assert!((k1 - AtomFamily::Rademacher.default_subgaussian_constant()).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_sparsity_is_validated() {
        assert!(AtomSpec::new(AtomFamily::BernoulliSymmetric { p: 0.0 }).validate().is_err());
        assert!(AtomSpec::new(AtomFamily::BernoulliSymmetric { p: 1.5 }).validate().is_err());
        assert!(AtomSpec::new(AtomFamily::BernoulliSymmetric { p: 1.0 }).validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let atom = AtomSpec::new(AtomFamily::BernoulliSymmetric { p: 0.5 });
        let s = serde_json::to_string(&atom).unwrap();
        assert_eq!(s, r#"{"family":"bernoulli-symmetric","p":0.5}"#);
        let back: AtomSpec = serde_json::from_str(r#"{"family":"real-gaussian","truncation":3.0}"#).unwrap();
        assert_eq!(back.family, AtomFamily::RealGaussian);
        assert_eq!(back.truncation, Some(3.0));
    }
}
