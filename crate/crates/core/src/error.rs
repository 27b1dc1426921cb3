use thiserror::Error;

use crate::tracking::SingularityReport;

/// Errors raised by constructors and operations across the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("coherence vector outside the unit ball: |v|^2 = {norm_sq}")]
    OutsideBlochBall { norm_sq: f64 },

    #[error("GKS matrix is not Hermitian (residual {residual:e})")]
    NonHermitian { residual: f64 },

    #[error("GKS matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid unitary: {0}")]
    InvalidUnitary(String),

    #[error("invalid rotation: {0}")]
    InvalidRotation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("past breakdown: t = {t} >= usable limit of t_b = {t_b}")]
    PastBreakdown { t: f64, t_b: f64 },

    #[error("singular point: control denominators vanish at t = {}", report.time)]
    Singular { report: Box<SingularityReport> },

    #[error("no control possible: v_z(0) = 0")]
    NoControlPossible,

    #[error("waveform undefined at t = {t} (defined up to {end})")]
    WaveformDomain { t: f64, end: f64 },

    #[error("schedule infeasible: segment {segment} lasts {duration} but breaks down after {t_b}")]
    ScheduleInfeasible { segment: usize, duration: f64, t_b: f64 },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
