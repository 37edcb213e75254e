//! Spatial grid, wavenumbers, media and field storage.
//!
//! Every field is an `Array2<f64>` of shape `(nx, ny)`; one-dimensional grids
//! use `ny = 1`. Storage is row-major, so the y index varies fastest.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};

/// Real field over the grid, shape `(nx, ny)`.
pub type Field = Array2<f64>;

/// Uniform Cartesian grid in one or two dimensions.
///
/// Cell `i` along x sits at `origin[0] + i * dx` (likewise for y).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dims: usize,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    origin: [f64; 2],
}

impl Grid {
    pub const MIN_CELLS: usize = 4;

    /// 1D grid centred on the origin.
    pub fn new_1d(nx: usize, dx: f64) -> Result<Self> {
        Self::build(1, nx, 1, dx, dx)
    }

    /// 2D grid centred on the origin.
    pub fn new_2d(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        Self::build(2, nx, ny, dx, dy)
    }

    fn build(dims: usize, nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self> {
        if nx < Self::MIN_CELLS || (dims == 2 && ny < Self::MIN_CELLS) {
            return Err(Error::InvalidGrid(format!(
                "need at least {} cells per axis, got nx={nx} ny={ny}",
                Self::MIN_CELLS
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) || !(dy > 0.0 && dy.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got dx={dx} dy={dy}"
            )));
        }
        let origin = [
            -((nx / 2) as f64) * dx,
            if dims == 2 { -((ny / 2) as f64) * dy } else { 0.0 },
        ];
        Ok(Self {
            dims,
            nx,
            ny,
            dx,
            dy,
            origin,
        })
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        if self.dims == 1 {
            self.origin[1] = 0.0;
        }
        self
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Cells along y; 1 for a 1D grid.
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical extent `n * spacing` per axis.
    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.dx, self.ny as f64 * self.dy]
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        if self.dims == 1 {
            0.0
        } else {
            self.origin[1] + j as f64 * self.dy
        }
    }

    pub fn zeros(&self) -> Field {
        Array2::zeros(self.shape())
    }

    pub fn velocity_zeros(&self) -> Vec<Field> {
        (0..self.dims).map(|_| self.zeros()).collect()
    }

    /// Samples `f(x, y)` at every cell.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        Array2::from_shape_fn(self.shape(), |(i, j)| f(self.x(i), self.y(j)))
    }

    pub fn check_shape(&self, field: &Field) -> Result<()> {
        if field.dim() != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: field.dim(),
            });
        }
        Ok(())
    }
}

/// Angular wavenumbers in FFT ordering.
///
/// Ordering follows the DFT bin index: `[0, 1, ..., ceil(n/2)-1, -floor(n/2), ..., -1]`
/// times `2 pi / (n * spacing)`, so for even `n` the Nyquist bin holds `-pi/spacing`.
///
/// `kx_eff`/`ky_eff` are the multipliers used for first derivatives: equal to
/// `kx`/`ky` except that the Nyquist bin of an even-length axis is zero, which
/// keeps derivatives of real fields real. `kmag_eff` is the magnitude of that
/// derivative wavevector and is what the correction kernels and analytic
/// propagators use, so the discrete operators and the kernels describe the
/// same per-mode dynamics.
#[derive(Debug, Clone)]
pub struct WaveVectors {
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    pub kx_eff: Vec<f64>,
    pub ky_eff: Vec<f64>,
    /// `sqrt(kx^2 + ky^2)` per mode.
    pub kmag: Field,
    /// `sqrt(kx_eff^2 + ky_eff^2)` per mode.
    pub kmag_eff: Field,
    dims: usize,
}

fn axis_wavenumbers(n: usize, spacing: f64) -> (Vec<f64>, Vec<f64>) {
    let dk = 2.0 * PI / (n as f64 * spacing);
    let k: Vec<f64> = (0..n)
        .map(|i| {
            let signed = if i < n.div_ceil(2) {
                i as i64
            } else {
                i as i64 - n as i64
            };
            signed as f64 * dk
        })
        .collect();
    let mut k_eff = k.clone();
    if n.is_multiple_of(2) && n > 1 {
        k_eff[n / 2] = 0.0;
    }
    (k, k_eff)
}

pub fn build_wavevectors(grid: &Grid) -> WaveVectors {
    let (kx, kx_eff) = axis_wavenumbers(grid.nx(), grid.dx());
    let (ky, ky_eff) = if grid.dims() == 2 {
        axis_wavenumbers(grid.ny(), grid.dy())
    } else {
        (vec![0.0], vec![0.0])
    };
    let kmag = Array2::from_shape_fn(grid.shape(), |(i, j)| kx[i].hypot(ky[j]));
    let kmag_eff = Array2::from_shape_fn(grid.shape(), |(i, j)| kx_eff[i].hypot(ky_eff[j]));
    WaveVectors {
        kx,
        ky,
        kx_eff,
        ky_eff,
        kmag,
        kmag_eff,
        dims: grid.dims(),
    }
}

impl WaveVectors {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn shape(&self) -> (usize, usize) {
        self.kmag.dim()
    }

    /// Derivative multiplier for `axis` at mode `(i, j)`.
    pub fn k_eff(&self, axis: usize, i: usize, j: usize) -> f64 {
        match axis {
            0 => self.kx_eff[i],
            _ => self.ky_eff[j],
        }
    }

    /// Orientation of mode `(i, j)` relative to the +x axis: the sign of
    /// `kx_eff`, or of `ky_eff` when `kx_eff` is zero, and `+1` at the zero
    /// mode. Opposite modes `k` and `-k` always get opposite signs, which is
    /// what splits each mode into a "forward" (+x leaning) and "backward"
    /// travelling branch.
    pub fn forward_sign(&self, i: usize, j: usize) -> f64 {
        let kx = self.kx_eff[i];
        let ky = self.ky_eff[j];
        if kx != 0.0 {
            kx.signum()
        } else if ky != 0.0 {
            ky.signum()
        } else {
            1.0
        }
    }

    /// Largest derivative wavenumber magnitude on the grid.
    pub fn kmax(&self) -> f64 {
        self.kmag_eff.iter().cloned().fold(0.0, f64::max)
    }
}

/// Sound speed and density fields plus the scalar reference sound speed used
/// by every correction kernel.
#[derive(Debug, Clone)]
pub struct Medium {
    pub c0: Field,
    pub rho0: Field,
    pub c_ref: f64,
}

impl Medium {
    pub fn homogeneous(grid: &Grid, c0: f64, rho0: f64) -> Result<Self> {
        Self::new(
            Array2::from_elem(grid.shape(), c0),
            Array2::from_elem(grid.shape(), rho0),
            c0,
        )
    }

    pub fn new(c0: Field, rho0: Field, c_ref: f64) -> Result<Self> {
        if c0.dim() != rho0.dim() {
            return Err(Error::ShapeMismatch {
                expected: c0.dim(),
                found: rho0.dim(),
            });
        }
        if let Some(bad) = c0.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidMedium(format!(
                "sound speed must be positive everywhere, found {bad}"
            )));
        }
        if let Some(bad) = rho0.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidMedium(format!(
                "density must be positive everywhere, found {bad}"
            )));
        }
        if !(c_ref > 0.0 && c_ref.is_finite()) {
            return Err(Error::InvalidMedium(format!(
                "reference sound speed must be positive, got {c_ref}"
            )));
        }
        Ok(Self { c0, rho0, c_ref })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.c0.dim()
    }

    /// Uniform sound speed and density, with `c_ref` equal to that sound speed.
    pub fn is_homogeneous(&self) -> bool {
        let c = self.c0[[0, 0]];
        let r = self.rho0[[0, 0]];
        self.c0.iter().all(|v| *v == c) && self.rho0.iter().all(|v| *v == r) && self.c_ref == c
    }

    /// `(c0, rho0)` when the medium is homogeneous.
    pub fn uniform_values(&self) -> Option<(f64, f64)> {
        self.is_homogeneous()
            .then(|| (self.c0[[0, 0]], self.rho0[[0, 0]]))
    }

    pub fn c_min(&self) -> f64 {
        self.c0.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn c_max(&self) -> f64 {
        self.c0.iter().cloned().fold(0.0, f64::max)
    }
}

/// Pressure on an integer time level and velocity on the staggered level.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub p: Field,
    /// One component per spatial axis.
    pub u: Vec<Field>,
    /// Time of `p` (s).
    pub t_p: f64,
    /// Time of `u` (s).
    pub t_u: f64,
    /// Step the velocity was last advanced towards: `t_u = t_p - last_step / 2`
    /// between updates, and zero while `u` sits on the pressure level.
    pub last_step: f64,
    /// Per-axis pressure components kept while a split-field PML is active;
    /// their sum is `p`.
    pub(crate) p_split: Option<Vec<Field>>,
}

impl FieldState {
    /// State with `p` and `u` both at time `t`.
    pub fn new(grid: &Grid, p: Field, u: Vec<Field>, t: f64) -> Result<Self> {
        grid.check_shape(&p)?;
        if u.len() != grid.dims() {
            return Err(Error::InvalidParameter(format!(
                "expected {} velocity components, got {}",
                grid.dims(),
                u.len()
            )));
        }
        for c in &u {
            grid.check_shape(c)?;
        }
        Ok(Self {
            p,
            u,
            t_p: t,
            t_u: t,
            last_step: 0.0,
            p_split: None,
        })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            p: grid.zeros(),
            u: grid.velocity_zeros(),
            t_p: 0.0,
            t_u: 0.0,
            last_step: 0.0,
            p_split: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().all(|v| v.is_finite()) && self.u.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn sync_pressure_from_split(&mut self) {
        if let Some(parts) = &self.p_split {
            let mut sum = parts[0].clone();
            for part in &parts[1..] {
                sum += part;
            }
            self.p = sum;
        }
    }
}
