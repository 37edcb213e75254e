//! Per-mode split of a homogeneous-medium state into two travelling branches.
//!
//! For mode `k` let `s = forward_sign(k)`, `d = s k/|k|` (the +x leaning unit
//! direction, `x` at the zero mode) and `q = s |k|`. With `U_L = d . U` and
//! `Z = rho0 c0`,
//!
//! ```text
//! a = (U_L + p/Z) / 2  ~ exp(-i c0 q t)    forward branch
//! b = (U_L - p/Z) / 2  ~ exp(+i c0 q t)    backward branch
//! ```
//!
//! Coefficients are referred back to `t = 0`: `forward = a exp(i c0 q t)`,
//! `backward = b exp(-i c0 q t)`. The velocity component along `d` rotated by
//! +90 degrees does not propagate and is kept as `transverse` (2D only).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Medium, WaveVectors};
use crate::spectral::{Spectral, Spectrum};

#[derive(Debug, Clone)]
pub struct PlaneWaveCoefficients {
    /// Forward-branch amplitude per mode, referred to `t = 0`.
    pub forward: Spectrum,
    /// Backward-branch amplitude per mode, referred to `t = 0`.
    pub backward: Spectrum,
    pub transverse: Option<Spectrum>,
    /// Time the state was sampled at.
    pub time: f64,
}

struct ModeFrame {
    d: [f64; 2],
    q: f64,
}

fn frame(wv: &WaveVectors, i: usize, j: usize) -> ModeFrame {
    let kx = wv.kx_eff[i];
    let ky = if wv.dims() == 2 { wv.ky_eff[j] } else { 0.0 };
    let k = kx.hypot(ky);
    let s = wv.forward_sign(i, j);
    if k == 0.0 {
        ModeFrame { d: [1.0, 0.0], q: 0.0 }
    } else {
        ModeFrame {
            d: [s * kx / k, s * ky / k],
            q: s * k,
        }
    }
}

fn homogeneous_values(medium: &Medium) -> Result<(f64, f64)> {
    medium.uniform_values().ok_or(Error::HeterogeneousMedium)
}

pub fn decompose_plane_waves(
    p: &Field,
    u: &[Field],
    time: f64,
    medium: &Medium,
    wv: &WaveVectors,
) -> Result<PlaneWaveCoefficients> {
    let (c, rho) = homogeneous_values(medium)?;
    let dims = wv.dims();
    if u.len() != dims {
        return Err(Error::InvalidParameter(format!(
            "expected {dims} velocity components, got {}",
            u.len()
        )));
    }
    let spectral = Spectral::for_wavevectors(wv);
    let p_hat = spectral.forward(p)?;
    let u_hat: Vec<Spectrum> = u.iter().map(|c| spectral.forward(c)).collect::<Result<_>>()?;
    let z = rho * c;
    let shape = wv.shape();
    let mut forward = Spectrum::zeros(shape);
    let mut backward = Spectrum::zeros(shape);
    let mut transverse = (dims == 2).then(|| Spectrum::zeros(shape));
    for ((i, j), pv) in p_hat.indexed_iter() {
        let f = frame(wv, i, j);
        let ux = u_hat[0][[i, j]];
        let uy = if dims == 2 { u_hat[1][[i, j]] } else { Complex64::new(0.0, 0.0) };
        let ul = ux * f.d[0] + uy * f.d[1];
        let a = (ul + pv / z) * 0.5;
        let b = (ul - pv / z) * 0.5;
        let phase = c * f.q * time;
        forward[[i, j]] = a * Complex64::from_polar(1.0, phase);
        backward[[i, j]] = b * Complex64::from_polar(1.0, -phase);
        if let Some(t) = transverse.as_mut() {
            t[[i, j]] = uy * f.d[0] - ux * f.d[1];
        }
    }
    Ok(PlaneWaveCoefficients {
        forward,
        backward,
        transverse,
        time,
    })
}

/// Evaluates pressure and velocity at `time` from the branch amplitudes.
pub fn reconstruct_plane_waves(
    coeffs: &PlaneWaveCoefficients,
    medium: &Medium,
    wv: &WaveVectors,
    time: f64,
) -> Result<(Field, Vec<Field>)> {
    let (c, rho) = homogeneous_values(medium)?;
    let shape = wv.shape();
    if coeffs.forward.dim() != shape {
        return Err(Error::ShapeMismatch {
            expected: shape,
            found: coeffs.forward.dim(),
        });
    }
    let dims = wv.dims();
    let z = rho * c;
    let mut p_hat = Spectrum::zeros(shape);
    let mut u_hat = vec![Spectrum::zeros(shape); dims];
    for ((i, j), pv) in p_hat.indexed_iter_mut() {
        let f = frame(wv, i, j);
        let phase = c * f.q * time;
        let a = coeffs.forward[[i, j]] * Complex64::from_polar(1.0, -phase);
        let b = coeffs.backward[[i, j]] * Complex64::from_polar(1.0, phase);
        *pv = (a - b) * z;
        let ul = a + b;
        let ut = coeffs
            .transverse
            .as_ref()
            .map_or(Complex64::new(0.0, 0.0), |t| t[[i, j]]);
        u_hat[0][[i, j]] = ul * f.d[0] - ut * f.d[1];
        if dims == 2 {
            u_hat[1][[i, j]] = ul * f.d[1] + ut * f.d[0];
        }
    }
    let spectral = Spectral::for_wavevectors(wv);
    let p = spectral.inverse_real(p_hat)?;
    let u = u_hat
        .into_iter()
        .map(|s| spectral.inverse_real(s))
        .collect::<Result<_>>()?;
    Ok((p, u))
}
