//! k-space pseudospectral time-domain solver for the linearised first-order
//! acoustic equations, with support for non-uniform time-step schedules.
//!
//! Pressure lives on integer time levels and particle velocity on the
//! staggered half levels. Within a run of equal steps the classic sinc
//! correction makes the homogeneous scheme exact; at every change of step
//! size a two-term correction (`kappa1` on the pressure gradient and
//! `kappa2` on the previous velocity) keeps it exact.
//!
//! Module map:
//!
//! - [`grid`]: spatial grid, wavenumbers, media and field storage
//! - [`spectral`]: FFT-based derivative operators
//! - [`kspace`]: correction kernels and their NSFD equivalents
//! - [`solver`]: staggered update equations, schedules, PML, plane-wave diagnostics
//! - [`oracle`]: analytic reference solutions and error metrics
//! - [`scenario`]: configuration files, presets, snapshot I/O and the CLI

pub mod error;
pub mod grid;
pub mod kspace;
pub mod oracle;
pub mod scenario;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Field, FieldState, Grid, Medium, WaveVectors};
pub use kspace::{CorrectionKernels, KernelForm, NsfdDenominators};
pub use solver::{CorrectionMode, PmlConfig, RunOutput, Segment, Snapshot, Solver, StepSchedule};
