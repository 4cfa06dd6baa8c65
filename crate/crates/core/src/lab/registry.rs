use serde::{Deserialize, Serialize};

use crate::formats::format_complex;
use crate::C64;

/// Sliding windows used by the rigidity metric.
pub const RIGIDITY_RANGE: f64 = 5.0;
pub const RIGIDITY_WINDOW: f64 = 0.2;
pub const RIGIDITY_STEP: f64 = 0.05;
/// Exponent c in the truncation threshold behind `tail_count`.
pub const TAIL_EXPONENT: f64 = 0.05;

/// What a metric value is indexed by besides the trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricScope {
    /// A property of X itself.
    Trial,
    /// One value per shift z.
    Shift,
    /// One value per (z, η).
    ShiftEta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Radial sup-distance of spec(X) to the uniform disk law.
    DiskLawDistance,
    /// |mean of λ/|λ||, a rotational-symmetry diagnostic.
    AngularMean,
    /// Largest ‖ψ‖_∞ over unit eigenvectors of X.
    EigenvectorMaxInfnorm,
    /// (1/n) Σ log σ_i(X_z).
    LogPotential,
    /// |log-potential of X_z − log-potential of the uniform disk at z|.
    LogPotentialError,
    /// |log-potential of X_z − log-potential of G_z| for a reference Gaussian G.
    ReplacementGap,
    /// Kolmogorov distance between the squared singular value laws of X_z and G_z.
    Kolmogorov,
    /// log s_min(X_z).
    LogSmin,
    /// Number of σ_i(X_z) at or below the truncation threshold.
    TailCount,
    /// Largest window count of spec(Y_z) over n·|I|.
    Rigidity,
    /// |m_z(η) − m_free(z, η)|, one row per η.
    StieltjesDeviation,
}

impl MetricKind {
    pub const ALL: [MetricKind; 11] = [
        MetricKind::DiskLawDistance,
        MetricKind::AngularMean,
        MetricKind::EigenvectorMaxInfnorm,
        MetricKind::LogPotential,
        MetricKind::LogPotentialError,
        MetricKind::ReplacementGap,
        MetricKind::Kolmogorov,
        MetricKind::LogSmin,
        MetricKind::TailCount,
        MetricKind::Rigidity,
        MetricKind::StieltjesDeviation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::DiskLawDistance => "disk_law_distance",
            MetricKind::AngularMean => "angular_mean",
            MetricKind::EigenvectorMaxInfnorm => "eigenvector_max_infnorm",
            MetricKind::LogPotential => "log_potential",
            MetricKind::LogPotentialError => "log_potential_error",
            MetricKind::ReplacementGap => "replacement_gap",
            MetricKind::Kolmogorov => "kolmogorov",
            MetricKind::LogSmin => "log_smin",
            MetricKind::TailCount => "tail_count",
            MetricKind::Rigidity => "rigidity",
            MetricKind::StieltjesDeviation => "stieltjes_deviation",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn scope(self) -> MetricScope {
        match self {
            MetricKind::DiskLawDistance | MetricKind::AngularMean | MetricKind::EigenvectorMaxInfnorm => {
                MetricScope::Trial
            }
            MetricKind::StieltjesDeviation => MetricScope::ShiftEta,
            _ => MetricScope::Shift,
        }
    }

    /// Whether the metric compares against a reference Gaussian sample.
    pub fn needs_reference(self) -> bool {
        matches!(self, MetricKind::ReplacementGap | MetricKind::Kolmogorov)
    }

    /// Column label in metrics.csv; η-indexed metrics carry `@η`.
    pub fn label(self, eta: Option<C64>) -> String {
        match eta {
            Some(eta) => format!("{}@{}", self.name(), format_complex(eta)),
            None => self.name().to_string(),
        }
    }
}

/// The registered metric a metrics.csv label belongs to.
pub fn base_name(label: &str) -> &str {
    label.split('@').next().unwrap_or(label)
}
