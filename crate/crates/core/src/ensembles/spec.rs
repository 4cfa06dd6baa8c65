use serde::{Deserialize, Serialize};

use super::atom::AtomSpec;
use crate::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnsembleKind {
    /// Cyclic block-tridiagonal matrix of b×b i.i.d. blocks; requires b | n.
    BlockBand { n: usize, b: usize },
    /// Entries with cyclic distance ≤ (d−1)/2 from the diagonal; d odd.
    PeriodicBand { n: usize, d: usize },
    /// Explicit table of standard deviations b_ij.
    GeneralProfile { entries: Vec<Vec<f64>> },
    /// Block-cyclic linearization of a product of m i.i.d. n×n matrices.
    ProductLinearization { n: usize, m: usize },
    IidGaussian { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    #[serde(flatten)]
    pub kind: EnsembleKind,
    #[serde(default)]
    pub atom: AtomSpec,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, atom: AtomSpec) -> Self {
        EnsembleSpec { kind, atom }
    }

    pub fn block_band(n: usize, b: usize) -> Self {
        EnsembleSpec::new(EnsembleKind::BlockBand { n, b }, AtomSpec::default())
    }

    pub fn periodic_band(n: usize, d: usize) -> Self {
        EnsembleSpec::new(EnsembleKind::PeriodicBand { n, d }, AtomSpec::default())
    }

    pub fn iid_gaussian(n: usize) -> Self {
        EnsembleSpec::new(EnsembleKind::IidGaussian { n }, AtomSpec::default())
    }

    pub fn product_linearization(n: usize, m: usize) -> Self {
        EnsembleSpec::new(EnsembleKind::ProductLinearization { n, m }, AtomSpec::default())
    }

    pub fn with_atom(mut self, atom: AtomSpec) -> Self {
        self.atom = atom;
        self
    }

    /// Side length of the sampled matrix.
    pub fn dim(&self) -> usize {
        match &self.kind {
            EnsembleKind::BlockBand { n, .. }
            | EnsembleKind::PeriodicBand { n, .. }
            | EnsembleKind::IidGaussian { n } => *n,
            EnsembleKind::GeneralProfile { entries } => entries.len(),
            EnsembleKind::ProductLinearization { n, m } => n * m,
        }
    }

    /// Shape constraints only; explicit profiles are checked for double
    /// stochasticity when the profile is built.
    pub fn validate_shape(&self) -> Result<()> {
        self.atom.validate()?;
        match &self.kind {
            EnsembleKind::BlockBand { n, b } => {
                if *b == 0 || *n == 0 {
                    return Err(LabError::ensemble("block-band needs n ≥ 1 and b ≥ 1"));
                }
                if n % b != 0 {
                    return Err(LabError::ensemble(format!(
                        "block-band: b = {b} does not divide n = {n}"
                    )));
                }
            }
            EnsembleKind::PeriodicBand { n, d } => {
                if *n == 0 {
                    return Err(LabError::ensemble("periodic-band needs n ≥ 1"));
                }
                if d % 2 == 0 {
                    return Err(LabError::ensemble(format!(
                        "periodic-band: (d-1)/2 must be an integer, d = {d} is not odd"
                    )));
                }
                if d > n {
                    return Err(LabError::ensemble(format!(
                        "periodic-band: bandwidth d = {d} exceeds n = {n}"
                    )));
                }
            }
            EnsembleKind::GeneralProfile { entries } => {
                if entries.is_empty() {
                    return Err(LabError::ensemble("general-profile table is empty"));
                }
            }
            EnsembleKind::ProductLinearization { n, m } => {
                if *n == 0 || *m == 0 {
                    return Err(LabError::ensemble("product-linearization needs n ≥ 1 and m ≥ 1"));
                }
            }
            EnsembleKind::IidGaussian { n } => {
                if *n == 0 {
                    return Err(LabError::ensemble("iid-gaussian needs n ≥ 1"));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
