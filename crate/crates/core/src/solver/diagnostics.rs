//! Evaluators for the velocity-update forms outside the time loop.
//!
//! The symmetric form multiplies `U(t)`, which a staggered scheme never
//! holds. These helpers evaluate it when `U(t)` is supplied, and measure how
//! far it drifts from the causal form when `U(t - dt1/2)` is used instead.

use ndarray::Zip;

use crate::error::Result;
use crate::grid::{Field, Medium, WaveVectors};
use crate::kspace::{self, CorrectionKernels};
use crate::spectral::Spectral;

fn step_with(
    wv: &WaveVectors,
    medium: &Medium,
    kernels: &CorrectionKernels,
    p_t: &Field,
    u_base: &[Field],
    u_corr: &[Field],
) -> Result<Vec<Field>> {
    let spectral = Spectral::for_wavevectors(wv);
    let h = (kernels.dt_prev + kernels.dt_next) / 2.0;
    let p_hat = spectral.forward(p_t)?;
    let mut out = Vec::with_capacity(wv.dims());
    for axis in 0..wv.dims() {
        let mut g = Spectral::derivative_factor(wv, &p_hat, axis);
        Zip::from(&mut g).and(&kernels.kappa1).for_each(|v, k| *v *= *k);
        let g = spectral.inverse_real(g)?;
        let mut c = spectral.forward(&u_corr[axis])?;
        Zip::from(&mut c).and(&kernels.kappa2).for_each(|v, k| *v *= *k);
        let c = spectral.inverse_real(c)?;
        let mut u = u_base[axis].clone();
        Zip::from(&mut u)
            .and(&g)
            .and(&c)
            .and(&medium.rho0)
            .for_each(|u, g, c, r| *u += h * (-g / r + c));
        out.push(u);
    }
    Ok(out)
}

/// `U(t + dt2/2)` from the symmetric form given `p(t)`, `U(t - dt1/2)` and
/// the true `U(t)`.
pub fn symmetric_velocity_step(
    wv: &WaveVectors,
    medium: &Medium,
    p_t: &Field,
    u_prev: &[Field],
    u_t: &[Field],
    dt1: f64,
    dt2: f64,
) -> Result<Vec<Field>> {
    let k = kspace::kappa12_symmetric(wv, medium.c_ref, dt1, dt2)?;
    step_with(wv, medium, &k, p_t, u_prev, u_t)
}

/// `U(t + dt2/2)` from the causal form given `p(t)` and `U(t - dt1/2)`.
pub fn causal_velocity_step(
    wv: &WaveVectors,
    medium: &Medium,
    p_t: &Field,
    u_prev: &[Field],
    dt1: f64,
    dt2: f64,
) -> Result<Vec<Field>> {
    let k = kspace::kappa12_staggered(wv, medium.c_ref, dt1, dt2)?;
    step_with(wv, medium, &k, p_t, u_prev, u_prev)
}

/// Largest pointwise gap between the symmetric form fed `U(t - dt1/2)` in
/// place of `U(t)` and the causal form. Zero for equal steps.
pub fn symmetric_form_defect(
    wv: &WaveVectors,
    medium: &Medium,
    p_t: &Field,
    u_prev: &[Field],
    dt1: f64,
    dt2: f64,
) -> Result<f64> {
    let approx = symmetric_velocity_step(wv, medium, p_t, u_prev, u_prev, dt1, dt2)?;
    let causal = causal_velocity_step(wv, medium, p_t, u_prev, dt1, dt2)?;
    Ok(approx
        .iter()
        .zip(&causal)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_wavevectors, Grid};

    // single cosine mode with known closed-form history
    fn mode(g: &Grid, k: f64, w: f64, t: f64) -> (Field, Field) {
        // p = cos(kx - wt), u = p / (rho c) with rho = c = 1
        let p = g.sample(|x, _| (k * x - w * t).cos());
        (p.clone(), p)
    }

    #[test]
    fn symmetric_exact_with_true_velocity_and_defect_without() {
        let g = Grid::new_1d(32, 0.25).unwrap().with_origin([0.0, 0.0]);
        let wv = build_wavevectors(&g);
        let m = Medium::homogeneous(&g, 1.0, 1.0).unwrap();
        let k = 2.0 * std::f64::consts::PI * 3.0 / 8.0;
        let (dt1, dt2) = (0.2, 0.5);
        let t = 1.0;
        let (p_t, u_t) = mode(&g, k, k, t);
        let (_, u_prev) = mode(&g, k, k, t - dt1 / 2.0);
        let (_, u_next) = mode(&g, k, k, t + dt2 / 2.0);
        let sym = symmetric_velocity_step(&wv, &m, &p_t, std::slice::from_ref(&u_prev), &[u_t], dt1, dt2).unwrap();
        let causal = causal_velocity_step(&wv, &m, &p_t, std::slice::from_ref(&u_prev), dt1, dt2).unwrap();
        let err = |f: &Field| f.iter().zip(&u_next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err(&sym[0]) < 1e-12);
        assert!(err(&causal[0]) < 1e-12);
        let defect = symmetric_form_defect(&wv, &m, &p_t, std::slice::from_ref(&u_prev), dt1, dt2).unwrap();
        assert!(defect > 1e-3, "{defect}");
        let none = symmetric_form_defect(&wv, &m, &p_t, &[u_prev], 0.1, 0.1).unwrap();
        assert!(none < 1e-14);
    }
}
