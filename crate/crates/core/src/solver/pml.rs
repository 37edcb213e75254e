//! Split-field exponential-damping PML.
//!
//! Inside a layer of `thickness_cells` cells at each end of every axis the
//! absorption is `sigma(d) = sigma_max * (d / thickness)^exponent`, with `d`
//! the depth into the layer in cells. Velocity component `i` and the pressure
//! component split along axis `i` are multiplied by `exp(-sigma_i * tau)` for
//! a half-update of length `tau`; cells outside the layers have `sigma = 0`
//! and are left bit-identical.

use ndarray::Zip;

use crate::grid::{Field, FieldState, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlConfig {
    pub thickness_cells: usize,
    /// Peak absorption (1/s) at the outer edge of the layer.
    pub sigma_max: f64,
    pub profile_exponent: f64,
}

impl Default for PmlConfig {
    fn default() -> Self {
        Self {
            thickness_cells: 0,
            sigma_max: 0.0,
            profile_exponent: 4.0,
        }
    }
}

impl PmlConfig {
    pub const DEFAULT_THICKNESS: usize = 20;
    pub const DEFAULT_ALPHA: f64 = 2.0;

    pub fn disabled() -> Self {
        Self::default()
    }

    /// Peak absorption given in nepers per grid-crossing time `dx / c`.
    pub fn from_alpha(thickness_cells: usize, alpha: f64, c: f64, dx: f64) -> Self {
        Self {
            thickness_cells,
            sigma_max: alpha * c / dx,
            profile_exponent: 4.0,
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.thickness_cells > 0 && self.sigma_max > 0.0
    }

    /// Absorption per cell along an axis of `n` cells.
    pub fn profile(&self, n: usize) -> Vec<f64> {
        let mut sigma = vec![0.0; n];
        if !self.is_enabled() {
            return sigma;
        }
        let t = self.thickness_cells.min(n / 2);
        let l = self.thickness_cells as f64;
        for d in 0..t {
            // depth measured from the inner edge of the layer, outermost cell at depth l
            let depth = (t - d) as f64;
            let s = self.sigma_max * (depth / l).powf(self.profile_exponent);
            sigma[d] = s;
            sigma[n - 1 - d] = s;
        }
        sigma
    }
}

/// Per-axis absorption fields ready to apply.
#[derive(Debug, Clone)]
pub struct Pml {
    /// `sigma_axis(x, y)` per axis, non-zero only inside that axis' layers.
    sigma: Vec<Field>,
}

impl Pml {
    pub fn new(grid: &Grid, config: &PmlConfig) -> Option<Self> {
        if !config.is_enabled() {
            return None;
        }
        let sx = config.profile(grid.nx());
        let mut sigma = vec![Field::from_shape_fn(grid.shape(), |(i, _)| sx[i])];
        if grid.dims() == 2 {
            let sy = config.profile(grid.ny());
            sigma.push(Field::from_shape_fn(grid.shape(), |(_, j)| sy[j]));
        }
        Some(Self { sigma })
    }

    /// Mask of cells where any axis absorbs.
    pub fn layer_mask(&self) -> ndarray::Array2<bool> {
        let mut mask = self.sigma[0].mapv(|s| s > 0.0);
        for s in &self.sigma[1..] {
            Zip::from(&mut mask).and(s).for_each(|m, s| *m |= *s > 0.0);
        }
        mask
    }

    fn damp(field: &mut Field, sigma: &Field, tau: f64) {
        Zip::from(field).and(sigma).for_each(|v, s| {
            if *s > 0.0 {
                *v *= (-s * tau).exp();
            }
        });
    }

    pub fn damp_velocity(&self, u: &mut [Field], tau: f64) {
        for (c, s) in u.iter_mut().zip(&self.sigma) {
            Self::damp(c, s, tau);
        }
    }

    pub fn damp_pressure_parts(&self, parts: &mut [Field], tau: f64) {
        for (c, s) in parts.iter_mut().zip(&self.sigma) {
            Self::damp(c, s, tau);
        }
    }

    /// Damps velocity and split pressure of `state` over `tau` seconds.
    ///
    /// A state without split components is split first, with all of `p`
    /// assigned to the x component.
    pub fn apply(&self, state: &mut FieldState, tau: f64) {
        self.damp_velocity(&mut state.u, tau);
        let parts = state.p_split.get_or_insert_with(|| split_pressure(&state.p, self.sigma.len()));
        self.damp_pressure_parts(parts, tau);
        state.sync_pressure_from_split();
    }
}

pub(crate) fn split_pressure(p: &Field, dims: usize) -> Vec<Field> {
    let mut parts = vec![p.clone()];
    for _ in 1..dims {
        parts.push(Field::zeros(p.dim()));
    }
    parts
}

/// Applies the PML to `state` for a half-update of length `dt`. A config with
/// zero thickness leaves the state untouched.
pub fn apply_pml(state: &mut FieldState, grid: &Grid, pml: &PmlConfig, dt: f64) {
    if let Some(p) = Pml::new(grid, pml) {
        p.apply(state, dt);
    }
}
