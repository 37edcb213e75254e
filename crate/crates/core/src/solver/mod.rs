//! Staggered k-space time stepping with per-step sizes.
//!
//! One iteration with incoming step `dt_prev` and outgoing step `dt_next`:
//!
//! ```text
//! U(t + dt_next/2) = U(t - dt_prev/2)
//!     + h * ( -(1/rho0) F^-1{ i k kappa1 F{p(t)} } + F^-1{ kappa2 F{U(t - dt_prev/2)} } )
//! p(t + dt_next)   = p(t) - dt_next * c0^2 rho0 * F^-1{ i k . kappa(dt_next) F{U(t + dt_next/2)} }
//! ```
//!
//! with `h = (dt_prev + dt_next) / 2` and kernels from [`crate::kspace`]. The
//! first velocity update of a run uses `dt_prev = 0`, which starts from `p`
//! and `U` given at the same instant; a final update with `dt_next = 0`
//! brings the velocity back onto the pressure time level.

pub mod diagnostics;
pub mod planewave;
pub mod pml;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::Zip;

use crate::error::{Error, Result};
use crate::grid::{build_wavevectors, Field, FieldState, Grid, Medium, WaveVectors};
use crate::kspace::{self, CorrectionKernels, KernelForm};
use crate::spectral::{Spectral, Spectrum};

pub use planewave::{decompose_plane_waves, reconstruct_plane_waves, PlaneWaveCoefficients};
pub use pml::{apply_pml, Pml, PmlConfig};

/// A run of `count` equal steps of size `dt` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub dt: f64,
    pub count: usize,
}

/// Ordered list of segments defining the time axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepSchedule {
    segments: Vec<Segment>,
}

impl StepSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("schedule needs at least one segment".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.dt > 0.0 && s.dt.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "segment {i}: step must be positive, got {}",
                    s.dt
                )));
            }
            if s.count == 0 {
                return Err(Error::InvalidParameter(format!("segment {i}: count must be positive")));
            }
        }
        Ok(Self { segments })
    }

    /// A schedule with no steps at all; running it returns the initial state.
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn uniform(dt: f64, count: usize) -> Result<Self> {
        Self::new(vec![Segment { dt, count }])
    }

    /// Builds a schedule from individual steps, merging equal neighbours.
    pub fn from_steps(steps: &[f64]) -> Result<Self> {
        let mut segments: Vec<Segment> = Vec::new();
        for &dt in steps {
            match segments.last_mut() {
                Some(last) if last.dt == dt => last.count += 1,
                _ => segments.push(Segment { dt, count: 1 }),
            }
        }
        Self::new(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_steps(&self) -> usize {
        self.segments.iter().map(|s| s.count).sum()
    }

    pub fn total_time(&self) -> f64 {
        self.segments.iter().map(|s| s.dt * s.count as f64).sum()
    }

    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.dt, s.count))
    }

    /// Pressure time levels `t_0 = 0, ..., t_N`, computed per segment as
    /// `start + j * dt` so round-off does not accumulate step by step.
    pub fn time_levels(&self) -> Vec<f64> {
        let mut levels = Vec::with_capacity(self.total_steps() + 1);
        levels.push(0.0);
        let mut start = 0.0;
        for s in &self.segments {
            for j in 1..=s.count {
                levels.push(start + j as f64 * s.dt);
            }
            start += s.count as f64 * s.dt;
        }
        levels
    }

    /// Index of the time level equal to `t` (to within round-off), or an
    /// error naming the closest levels on either side.
    pub fn level_of(&self, t: f64) -> Result<usize> {
        self.find_level(&self.time_levels(), t)
    }

    fn find_level(&self, levels: &[f64], t: f64) -> Result<usize> {
        let scale = self
            .segments
            .iter()
            .map(|s| s.dt)
            .fold(f64::INFINITY, f64::min);
        let scale = if scale.is_finite() { scale } else { 1.0 };
        if let Some(i) = levels.iter().position(|&l| times_match(l, t, scale)) {
            return Ok(i);
        }
        let before = levels.iter().rev().find(|&&l| l < t);
        let after = levels.iter().find(|&&l| l > t);
        let nearest = match (before, after) {
            (Some(b), Some(a)) => format!("{b} s or {a} s"),
            (Some(b), None) => format!("{b} s (end of schedule)"),
            (None, Some(a)) => format!("{a} s"),
            (None, None) => "none".into(),
        };
        Err(Error::SnapshotTime {
            requested: t,
            nearest,
        })
    }

    /// Times at which the step size changes.
    pub fn transition_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut start = 0.0;
        for w in self.segments.windows(2) {
            start += w[0].count as f64 * w[0].dt;
            if w[0].dt != w[1].dt {
                out.push(start);
            }
        }
        out
    }

    /// Every step appears as `dt_prev` of some velocity update, so every step
    /// must satisfy the causal kernel's stability bound.
    pub fn check_stability(&self, wv: &WaveVectors, c_ref: f64) -> Result<()> {
        let kmax = wv.kmax();
        for s in &self.segments {
            kspace::check_stability(kmax, c_ref, s.dt)?;
        }
        Ok(())
    }
}

/// How step-size changes are corrected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum CorrectionMode {
    /// Causal two-term correction at transitions, uniform kernel elsewhere.
    #[default]
    Full,
    /// Uniform kernel of the outgoing step, no `kappa2` term.
    NaiveSwap,
    /// Single-branch `kappa1` at transitions, no `kappa2` term: exact for
    /// forward (+x) travelling waves only.
    HalfCorrected,
    /// Plain leapfrog, `kappa = 1` everywhere.
    Uncorrected,
}

impl CorrectionMode {
    pub const ALL: [CorrectionMode; 4] = [
        CorrectionMode::Full,
        CorrectionMode::NaiveSwap,
        CorrectionMode::HalfCorrected,
        CorrectionMode::Uncorrected,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CorrectionMode::Full => "full",
            CorrectionMode::NaiveSwap => "naive-swap",
            CorrectionMode::HalfCorrected => "half-corrected",
            CorrectionMode::Uncorrected => "uncorrected",
        }
    }
}

impl fmt::Display for CorrectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorrectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown correction mode `{s}` (expected full, naive-swap, half-corrected or uncorrected)"
                ))
            })
    }
}

/// Pressure (and co-located velocity) at a requested time level.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub step: usize,
    pub p: Field,
    pub u: Vec<Field>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    /// Staggered state after the last pressure update.
    pub final_state: FieldState,
    /// Velocity brought onto the final pressure time level.
    pub final_velocity: Vec<Field>,
    pub steps: usize,
    pub kernel_builds: usize,
    pub warnings: Vec<String>,
}

enum VelocityKernel {
    Real { kappa1: Field, kappa2: Option<Field> },
    Branch { kappa1: Spectrum },
}

/// Relative tolerance for matching time stamps.
const TIME_TOL: f64 = 1e-9;

fn times_match(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= TIME_TOL * (a.abs().max(b.abs()) + scale)
}

/// Threshold (relative to `max |p|`) defining the wavefront support used by
/// the transition placement check.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

pub struct Solver {
    grid: Grid,
    wv: WaveVectors,
    spectral: Spectral,
    medium: Medium,
    mode: CorrectionMode,
    pml: Option<Pml>,
    inv_rho: Field,
    bulk: Field,
    velocity_cache: HashMap<(u64, u64), Arc<VelocityKernel>>,
    pressure_cache: HashMap<u64, Arc<Field>>,
    kernel_builds: usize,
    warnings: Vec<String>,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("grid", &self.grid)
            .field("mode", &self.mode)
            .field("pml", &self.pml.is_some())
            .finish_non_exhaustive()
    }
}

impl Solver {
    pub fn new(grid: Grid, medium: Medium, mode: CorrectionMode, pml: PmlConfig) -> Result<Self> {
        if medium.shape() != grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: grid.shape(),
                found: medium.shape(),
            });
        }
        let wv = build_wavevectors(&grid);
        let spectral = Spectral::for_wavevectors(&wv);
        let inv_rho = medium.rho0.mapv(|r| 1.0 / r);
        let mut bulk = medium.c0.mapv(|c| c * c);
        bulk *= &medium.rho0;
        let pml = Pml::new(&grid, &pml);
        Ok(Self {
            grid,
            wv,
            spectral,
            medium,
            mode,
            pml,
            inv_rho,
            bulk,
            velocity_cache: HashMap::new(),
            pressure_cache: HashMap::new(),
            kernel_builds: 0,
            warnings: Vec::new(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wavevectors(&self) -> &WaveVectors {
        &self.wv
    }

    pub fn medium(&self) -> &Medium {
        &self.medium
    }

    pub fn mode(&self) -> CorrectionMode {
        self.mode
    }

    pub fn pml(&self) -> Option<&Pml> {
        self.pml.as_ref()
    }

    /// Number of distinct kernels built so far (cache misses).
    pub fn kernel_builds(&self) -> usize {
        self.kernel_builds
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn c_ref(&self) -> f64 {
        self.medium.c_ref
    }

    /// Velocity update with caller-supplied causal kernels built for
    /// `(dt_prev, dt_next)`.
    pub fn velocity_update(
        &mut self,
        state: &mut FieldState,
        kernels: &CorrectionKernels,
        dt_prev: f64,
        dt_next: f64,
    ) -> Result<()> {
        if kernels.form != KernelForm::CausalStaggered {
            return Err(Error::KernelMismatch(
                "velocity update needs causal staggered kernels".into(),
            ));
        }
        if kernels.dt_prev != dt_prev || kernels.dt_next != dt_next {
            return Err(Error::KernelMismatch(format!(
                "kernels built for ({}, {}), update asked for ({dt_prev}, {dt_next})",
                kernels.dt_prev, kernels.dt_next
            )));
        }
        if kernels.c_ref != self.c_ref() {
            return Err(Error::KernelMismatch(format!(
                "kernels use c_ref {} but the medium uses {}",
                kernels.c_ref,
                self.c_ref()
            )));
        }
        if kernels.kappa1.dim() != self.grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.shape(),
                found: kernels.kappa1.dim(),
            });
        }
        let kernel = VelocityKernel::Real {
            kappa1: kernels.kappa1.clone(),
            kappa2: (!kernels.kappa2_vanishes()).then(|| kernels.kappa2.clone()),
        };
        self.apply_velocity(state, &kernel, dt_prev, dt_next)
    }

    /// Pressure update over `dt` using correction `kappa`.
    pub fn pressure_update(&mut self, state: &mut FieldState, kappa: &Field, dt: f64) -> Result<()> {
        if kappa.dim() != self.grid.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.shape(),
                found: kappa.dim(),
            });
        }
        self.apply_pressure(state, kappa, dt)
    }

    fn check_state(&self, state: &FieldState) -> Result<()> {
        self.grid.check_shape(&state.p)?;
        if state.u.len() != self.grid.dims() {
            return Err(Error::InvalidParameter(format!(
                "expected {} velocity components, got {}",
                self.grid.dims(),
                state.u.len()
            )));
        }
        for c in &state.u {
            self.grid.check_shape(c)?;
        }
        Ok(())
    }

    fn apply_velocity(
        &mut self,
        state: &mut FieldState,
        kernel: &VelocityKernel,
        dt_prev: f64,
        dt_next: f64,
    ) -> Result<()> {
        self.check_state(state)?;
        let expected = state.t_p - dt_prev / 2.0;
        if !times_match(state.t_u, expected, dt_prev + dt_next) {
            return Err(Error::Staggering {
                expected,
                found: state.t_u,
            });
        }
        let h = (dt_prev + dt_next) / 2.0;
        let p_hat = self.spectral.forward(&state.p)?;
        let mut deltas = Vec::with_capacity(self.grid.dims());
        for axis in 0..self.grid.dims() {
            let mut grad = Spectral::derivative_factor(&self.wv, &p_hat, axis);
            match kernel {
                VelocityKernel::Real { kappa1, .. } => {
                    Zip::from(&mut grad).and(kappa1).for_each(|g, k| *g *= *k);
                }
                VelocityKernel::Branch { kappa1 } => {
                    Zip::from(&mut grad).and(kappa1).for_each(|g, k| *g *= *k);
                }
            }
            let grad = self.spectral.inverse_real(grad)?;
            let mut delta = Field::zeros(self.grid.shape());
            Zip::from(&mut delta)
                .and(&grad)
                .and(&self.inv_rho)
                .for_each(|d, g, ir| *d = -h * ir * g);
            if let VelocityKernel::Real {
                kappa2: Some(kappa2),
                ..
            } = kernel
            {
                let mut u_hat = self.spectral.forward(&state.u[axis])?;
                Zip::from(&mut u_hat).and(kappa2).for_each(|v, k| *v *= *k);
                let corr = self.spectral.inverse_real(u_hat)?;
                Zip::from(&mut delta).and(&corr).for_each(|d, c| *d += h * c);
            }
            deltas.push(delta);
        }
        if let Some(pml) = &self.pml {
            pml.damp_velocity(&mut state.u, h / 2.0);
        }
        for (u, d) in state.u.iter_mut().zip(&deltas) {
            *u += d;
        }
        if let Some(pml) = &self.pml {
            pml.damp_velocity(&mut state.u, h / 2.0);
        }
        state.t_u = state.t_p + dt_next / 2.0;
        state.last_step = dt_next;
        if !state.u.iter().all(|c| c.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite {
                step: 0,
                time: state.t_u,
            });
        }
        Ok(())
    }

    fn apply_pressure(&mut self, state: &mut FieldState, kappa: &Field, dt: f64) -> Result<()> {
        self.check_state(state)?;
        let expected = state.t_p + dt / 2.0;
        if !times_match(state.t_u, expected, dt) {
            return Err(Error::Staggering {
                expected,
                found: state.t_u,
            });
        }
        let dims = self.grid.dims();
        let mut parts_hat = Vec::with_capacity(dims);
        for axis in 0..dims {
            let u_hat = self.spectral.forward(&state.u[axis])?;
            let mut d = Spectral::derivative_factor(&self.wv, &u_hat, axis);
            Zip::from(&mut d).and(kappa).for_each(|v, k| *v *= *k);
            parts_hat.push(d);
        }
        match &self.pml {
            Some(pml) => {
                let parts = state
                    .p_split
                    .get_or_insert_with(|| pml::split_pressure(&state.p, dims));
                let mut deltas = Vec::with_capacity(dims);
                for d_hat in parts_hat {
                    let d = self.spectral.inverse_real(d_hat)?;
                    let mut delta = Field::zeros(self.grid.shape());
                    Zip::from(&mut delta)
                        .and(&d)
                        .and(&self.bulk)
                        .for_each(|o, d, b| *o = -dt * b * d);
                    deltas.push(delta);
                }
                pml.damp_pressure_parts(parts, dt / 2.0);
                for (part, d) in parts.iter_mut().zip(&deltas) {
                    *part += d;
                }
                pml.damp_pressure_parts(parts, dt / 2.0);
                state.sync_pressure_from_split();
            }
            None => {
                let mut it = parts_hat.into_iter();
                let mut sum = it.next().expect("at least one axis");
                for d in it {
                    sum += &d;
                }
                let div = self.spectral.inverse_real(sum)?;
                Zip::from(&mut state.p)
                    .and(&div)
                    .and(&self.bulk)
                    .for_each(|p, d, b| *p -= dt * b * d);
            }
        }
        state.t_p += dt;
        if !state.p.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                step: 0,
                time: state.t_p,
            });
        }
        Ok(())
    }

    fn velocity_kernel(&mut self, dt_prev: f64, dt_next: f64) -> Result<Arc<VelocityKernel>> {
        let key = (dt_prev.to_bits(), dt_next.to_bits());
        if let Some(k) = self.velocity_cache.get(&key) {
            return Ok(k.clone());
        }
        let c_ref = self.c_ref();
        // start and end of a run always use the exact kernels
        let mode = if dt_prev == 0.0 || dt_next == 0.0 {
            CorrectionMode::Full
        } else {
            self.mode
        };
        let kernel = match mode {
            CorrectionMode::Full => {
                let k = kspace::kappa12_staggered(&self.wv, c_ref, dt_prev, dt_next)?;
                let vanishes = k.kappa2_vanishes();
                VelocityKernel::Real {
                    kappa1: k.kappa1,
                    kappa2: (!vanishes).then_some(k.kappa2),
                }
            }
            CorrectionMode::NaiveSwap => VelocityKernel::Real {
                kappa1: kspace::kappa_uniform(&self.wv, c_ref, dt_next)?,
                kappa2: None,
            },
            CorrectionMode::HalfCorrected if dt_prev == dt_next => VelocityKernel::Real {
                kappa1: kspace::kappa_uniform(&self.wv, c_ref, dt_next)?,
                kappa2: None,
            },
            CorrectionMode::HalfCorrected => VelocityKernel::Branch {
                kappa1: kspace::kappa1_forward_branch(&self.wv, c_ref, dt_prev, dt_next)?,
            },
            CorrectionMode::Uncorrected => VelocityKernel::Real {
                kappa1: Field::ones(self.grid.shape()),
                kappa2: None,
            },
        };
        self.kernel_builds += 1;
        let kernel = Arc::new(kernel);
        self.velocity_cache.insert(key, kernel.clone());
        Ok(kernel)
    }

    fn pressure_kernel(&mut self, dt: f64) -> Result<Arc<Field>> {
        if let Some(k) = self.pressure_cache.get(&dt.to_bits()) {
            return Ok(k.clone());
        }
        let kernel = match self.mode {
            CorrectionMode::Uncorrected => Field::ones(self.grid.shape()),
            _ => kspace::kappa_uniform(&self.wv, self.c_ref(), dt)?,
        };
        self.kernel_builds += 1;
        let kernel = Arc::new(kernel);
        self.pressure_cache.insert(dt.to_bits(), kernel.clone());
        Ok(kernel)
    }

    /// Mode-aware velocity step from `t - dt_prev/2` to `t + dt_next/2`.
    pub fn advance_velocity(&mut self, state: &mut FieldState, dt_prev: f64, dt_next: f64) -> Result<()> {
        let kernel = self.velocity_kernel(dt_prev, dt_next)?;
        self.apply_velocity(state, &kernel, dt_prev, dt_next)
    }

    /// Mode-aware pressure step over `dt`.
    pub fn advance_pressure(&mut self, state: &mut FieldState, dt: f64) -> Result<()> {
        let kernel = self.pressure_kernel(dt)?;
        self.apply_pressure(state, &kernel, dt)
    }

    /// Starts a run from `p0`, `u0` given at `t = 0`: a velocity update with
    /// `dt_prev = 0` puts the velocity at `first_dt / 2`.
    pub fn initialize(&mut self, p0: Field, u0: Vec<Field>, first_dt: f64) -> Result<FieldState> {
        if !(first_dt > 0.0 && first_dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "first step must be positive, got {first_dt}"
            )));
        }
        let mut state = FieldState::new(&self.grid, p0, u0, 0.0)?;
        self.advance_velocity(&mut state, 0.0, first_dt)?;
        Ok(state)
    }

    /// Alternative start: velocity propagated back to `-dt0/2` with the exact
    /// cos/sinc propagator, so the first update uses `dt_prev = dt0` as a
    /// fixed-step code would.
    pub fn initialize_backward(&self, p0: Field, u0: Vec<Field>, dt0: f64) -> Result<FieldState> {
        if !(dt0 >= 0.0 && dt0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "backward step must be non-negative, got {dt0}"
            )));
        }
        let mut state = FieldState::new(&self.grid, p0, u0, 0.0)?;
        let c = self.c_ref();
        let half = dt0 / 2.0;
        let p_hat = self.spectral.forward(&state.p)?;
        for axis in 0..self.grid.dims() {
            let mut u_hat = self.spectral.forward(&state.u[axis])?;
            let mut src = Spectral::derivative_factor(&self.wv, &p_hat, axis);
            Zip::from(&mut u_hat)
                .and(&mut src)
                .and(&self.wv.kmag_eff)
                .for_each(|u, s, k| {
                    let w = c * k;
                    let (cos, sinc) = if w == 0.0 {
                        (1.0, half)
                    } else {
                        ((w * half).cos(), (w * half).sin() / w)
                    };
                    *u *= cos;
                    *s *= sinc;
                });
            let u_part = self.spectral.inverse_real(u_hat)?;
            let s_part = self.spectral.inverse_real(src)?;
            let mut out = u_part;
            Zip::from(&mut out)
                .and(&s_part)
                .and(&self.inv_rho)
                .for_each(|o, s, ir| *o += ir * s);
            state.u[axis] = out;
        }
        state.t_u = -half;
        state.last_step = dt0;
        Ok(state)
    }

    /// Velocity on the current pressure time level (a `dt_next = 0` update
    /// applied to a copy of the state).
    pub fn finalize_velocity(&mut self, state: &FieldState) -> Result<Vec<Field>> {
        if state.last_step == 0.0 {
            return Ok(state.u.clone());
        }
        let mut copy = state.clone();
        self.advance_velocity(&mut copy, state.last_step, 0.0)?;
        Ok(copy.u)
    }

    fn check_transition(&mut self, state: &FieldState, time: f64, dt_prev: f64, dt_next: f64) {
        let pmax = state.p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if pmax == 0.0 {
            return;
        }
        let threshold = SUPPORT_THRESHOLD * pmax;
        let c_ref = self.c_ref();
        let overlap = Zip::from(&state.p)
            .and(&self.medium.c0)
            .fold(0usize, |n, p, c| {
                n + usize::from(p.abs() > threshold && (c - c_ref).abs() > 1e-12 * c_ref)
            });
        if overlap > 0 {
            let msg = format!(
                "step change {dt_prev} s -> {dt_next} s at t = {time} s while the wavefront covers \
                 {overlap} cells whose sound speed differs from c_ref = {c_ref} m/s"
            );
            log::warn!("{msg}");
            self.warnings.push(msg);
        }
    }

    /// Runs `schedule` from `p0`, `u0` at `t = 0`, recording snapshots at the
    /// requested times (each must be one of the schedule's time levels).
    pub fn run(
        &mut self,
        p0: Field,
        u0: Vec<Field>,
        schedule: &StepSchedule,
        snapshot_times: &[f64],
    ) -> Result<RunOutput> {
        schedule.check_stability(&self.wv, self.c_ref())?;
        let levels = schedule.time_levels();
        let wanted = snapshot_levels(&levels, snapshot_times, schedule)?;
        let warnings_before = self.warnings.len();
        let mut snapshots = Vec::new();

        let steps: Vec<f64> = schedule.steps().collect();
        if steps.is_empty() {
            let state = FieldState::new(&self.grid, p0, u0, 0.0)?;
            if wanted.contains(&0) {
                snapshots.push(Snapshot {
                    time: 0.0,
                    step: 0,
                    p: state.p.clone(),
                    u: state.u.clone(),
                });
            }
            return Ok(RunOutput {
                snapshots,
                final_velocity: state.u.clone(),
                final_state: state,
                steps: 0,
                kernel_builds: self.kernel_builds,
                warnings: Vec::new(),
            });
        }

        if wanted.contains(&0) {
            snapshots.push(Snapshot {
                time: 0.0,
                step: 0,
                p: p0.clone(),
                u: u0.clone(),
            });
        }
        let mut state = self.initialize(p0, u0, steps[0])?;
        for (n, &dt) in steps.iter().enumerate() {
            if n > 0 {
                let dt_prev = steps[n - 1];
                if dt_prev != dt {
                    self.check_transition(&state, levels[n], dt_prev, dt);
                }
                self.advance_velocity(&mut state, dt_prev, dt)
                    .map_err(|e| with_step(e, n))?;
            }
            self.advance_pressure(&mut state, dt)
                .map_err(|e| with_step(e, n + 1))?;
            state.t_p = levels[n + 1];
            if wanted.contains(&(n + 1)) {
                let u = self.finalize_velocity(&state)?;
                snapshots.push(Snapshot {
                    time: levels[n + 1],
                    step: n + 1,
                    p: state.p.clone(),
                    u,
                });
            }
        }
        let final_velocity = self.finalize_velocity(&state)?;
        Ok(RunOutput {
            snapshots,
            final_state: state,
            final_velocity,
            steps: steps.len(),
            kernel_builds: self.kernel_builds,
            warnings: self.warnings[warnings_before..].to_vec(),
        })
    }
}

fn with_step(e: Error, step: usize) -> Error {
    match e {
        Error::NonFinite { time, .. } => Error::NonFinite { step, time },
        other => other,
    }
}

/// Maps requested snapshot times onto level indices.
fn snapshot_levels(levels: &[f64], times: &[f64], schedule: &StepSchedule) -> Result<Vec<usize>> {
    times.iter().map(|&t| schedule.find_level(levels, t)).collect()
}

#[cfg(test)]
mod tests;
