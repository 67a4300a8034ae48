use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel value is not finite at (i={i}, j={j}, E={energy})")]
    Assembly { i: usize, j: usize, energy: f64 },

    #[error("matrix is singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    /// Energies at or above the breakup threshold have no implemented continuation.
    #[error("energy {energy} lies outside the supported region E < 0")]
    UnsupportedRegion { energy: f64 },

    #[error("dimer pole hit at E={energy} (distance to -eps2: {distance:e})")]
    DimerPole { energy: f64, distance: f64 },

    #[error("no two-body bound state for eps2 = 0")]
    NoBoundState,

    #[error("Feshbach resonance pole at B = {field}")]
    ResonancePole { field: f64 },

    #[error("spectator extraction failed: {0}")]
    Extraction(String),

    #[error("wave-function normalization unstable under grid doubling (drift {drift:e})")]
    NormalizationUnstable { drift: f64 },

    #[error("numerical quality check failed: {0}")]
    NumericalQuality(String),

    #[error("threshold not bracketed: {trace}")]
    Threshold { trace: String },
}

impl Error {
    /// True for failures of numerical quality rather than of input validation.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Assembly { .. }
                | Error::Singular { .. }
                | Error::Extraction(_)
                | Error::NormalizationUnstable { .. }
                | Error::NumericalQuality(_)
                | Error::Threshold { .. }
        )
    }
}
