use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error(
        "rejected schedule: step {dt} s with c_ref {c_ref} m/s and kmax {kmax} rad/m gives \
         c_ref*kmax*dt/2 = {phase:.6} rad, limit is {limit:.6} rad"
    )]
    UnstableSchedule {
        dt: f64,
        kmax: f64,
        c_ref: f64,
        phase: f64,
        limit: f64,
    },

    #[error("kernel mismatch: {0}")]
    KernelMismatch(String),

    #[error("staggering violated: expected velocity time {expected} s, found {found} s")]
    Staggering { expected: f64, found: f64 },

    #[error("non-finite value after step {step} (t = {time} s); the run is unstable")]
    NonFinite { step: usize, time: f64 },

    #[error("snapshot time {requested} s is not on the time grid (nearest valid: {nearest})")]
    SnapshotTime { requested: f64, nearest: String },

    #[error("plane-wave decomposition requires a homogeneous medium")]
    HeterogeneousMedium,

    #[error("config error at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("snapshot format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures that happen while time stepping, as opposed to
    /// problems with the inputs.
    pub fn is_instability(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}
