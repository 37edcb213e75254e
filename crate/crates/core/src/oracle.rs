//! Analytic references and error metrics.
//!
//! Both propagators are spectral and therefore periodic: anything leaving one
//! side of the grid re-enters on the other. Runs compared against them should
//! disable the PML and be sized so nothing wraps within the simulated time.

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Medium, WaveVectors};
use crate::spectral::{Spectral, Spectrum};

/// Denominator floor of the pointwise relative error, relative to `max |ref|`.
pub const REL_GUARD: f64 = 1e-15;
/// Clip range of the log10 relative error.
pub const LOG10_CLIP: (f64, f64) = (-20.0, 4.0);

/// 1D d'Alembert solution for zero initial velocity:
/// `p(x, t) = (p0(x + c t) + p0(x - c t)) / 2`, with the shifts applied in
/// Fourier space (`cos(c k t)` per mode).
pub fn dalembert_1d(p0: &Field, wv: &WaveVectors, c0: f64, t: f64) -> Result<Field> {
    if wv.dims() != 1 {
        return Err(Error::InvalidParameter("d'Alembert oracle is 1D only".into()));
    }
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("c0 must be positive, got {c0}")));
    }
    if t == 0.0 {
        return Ok(p0.clone());
    }
    let spectral = Spectral::for_wavevectors(wv);
    let mut s = spectral.forward(p0)?;
    for ((i, _), v) in s.indexed_iter_mut() {
        *v *= (c0 * wv.kx_eff[i] * t).cos();
    }
    spectral.inverse_real(s)
}

/// Exact homogeneous evolution of `(p0, u0)` over `t`.
///
/// Each mode rotates the pair `(p, U . khat)` with angular frequency
/// `c0 |k|`; the velocity component normal to `k` is stationary.
pub fn spectral_propagator(
    p0: &Field,
    u0: &[Field],
    medium: &Medium,
    wv: &WaveVectors,
    t: f64,
) -> Result<(Field, Vec<Field>)> {
    let (c, rho) = medium.uniform_values().ok_or(Error::HeterogeneousMedium)?;
    let dims = wv.dims();
    if u0.len() != dims {
        return Err(Error::InvalidParameter(format!(
            "expected {dims} velocity components, got {}",
            u0.len()
        )));
    }
    let spectral = Spectral::for_wavevectors(wv);
    let mut p_hat = spectral.forward(p0)?;
    let mut u_hat: Vec<Spectrum> = u0.iter().map(|f| spectral.forward(f)).collect::<Result<_>>()?;
    let z = rho * c;
    let i_unit = Complex64::new(0.0, 1.0);
    for ((i, j), p) in p_hat.indexed_iter_mut() {
        let kv = [wv.kx_eff[i], if dims == 2 { wv.ky_eff[j] } else { 0.0 }];
        let k = kv[0].hypot(kv[1]);
        if k == 0.0 {
            continue;
        }
        let khat = [kv[0] / k, kv[1] / k];
        let ul: Complex64 = (0..dims).map(|a| u_hat[a][[i, j]] * khat[a]).sum();
        let (sn, cs) = (c * k * t).sin_cos();
        let p_new = *p * cs - i_unit * z * sn * ul;
        let ul_new = ul * cs - i_unit * sn * *p / z;
        for (a, comp) in u_hat.iter_mut().enumerate() {
            comp[[i, j]] += (ul_new - ul) * khat[a];
        }
        *p = p_new;
    }
    let p = spectral.inverse_real(p_hat)?;
    let u = u_hat
        .into_iter()
        .map(|s| spectral.inverse_real(s))
        .collect::<Result<_>>()?;
    Ok((p, u))
}

/// `sum(p^2 / (rho c^2) + rho |U|^2) * cell area`, twice the acoustic energy.
pub fn acoustic_energy(p: &Field, u: &[Field], medium: &Medium, cell_area: f64) -> f64 {
    let mut e = Zip::from(p)
        .and(&medium.c0)
        .and(&medium.rho0)
        .fold(0.0, |acc, p, c, r| acc + p * p / (r * c * c));
    for comp in u {
        e += Zip::from(comp)
            .and(&medium.rho0)
            .fold(0.0, |acc, v, r| acc + r * v * v);
    }
    e * cell_area
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub linf_abs: f64,
    /// `linf_abs / max |ref|`.
    pub linf_rel: f64,
    pub l2_rel: f64,
    pub pointwise_abs: Field,
    pub pointwise_rel_log10: Field,
}

impl ErrorReport {
    /// Largest absolute error over cells where `mask` is true.
    pub fn linf_abs_where(&self, mask: &Array2<bool>) -> f64 {
        Zip::from(&self.pointwise_abs)
            .and(mask)
            .fold(0.0, |m, e, keep| if *keep { f64::max(m, *e) } else { m })
    }

    /// Index of the largest pointwise relative error.
    pub fn argmax_rel(&self) -> (usize, usize) {
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for (idx, v) in self.pointwise_rel_log10.indexed_iter() {
            if *v > best.1 {
                best = (idx, *v);
            }
        }
        best.0
    }
}

pub fn compare(p_num: &Field, p_ref: &Field) -> Result<ErrorReport> {
    if p_num.dim() != p_ref.dim() {
        return Err(Error::ShapeMismatch {
            expected: p_ref.dim(),
            found: p_num.dim(),
        });
    }
    let ref_max = p_ref.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (REL_GUARD * ref_max).max(f64::MIN_POSITIVE);
    let pointwise_abs = Zip::from(p_num).and(p_ref).map_collect(|a, b| (a - b).abs());
    let pointwise_rel_log10 = Zip::from(&pointwise_abs)
        .and(p_ref)
        .map_collect(|e, r| (e / r.abs().max(floor)).log10().clamp(LOG10_CLIP.0, LOG10_CLIP.1));
    let linf_abs = pointwise_abs.iter().fold(0.0f64, |m, v| m.max(*v));
    let diff2: f64 = pointwise_abs.iter().map(|v| v * v).sum();
    let ref2: f64 = p_ref.iter().map(|v| v * v).sum();
    let l2_rel = if ref2 > 0.0 {
        (diff2 / ref2).sqrt()
    } else if diff2 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let linf_rel = if ref_max > 0.0 {
        linf_abs / ref_max
    } else if linf_abs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(ErrorReport {
        linf_abs,
        linf_rel,
        l2_rel,
        pointwise_abs,
        pointwise_rel_log10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_wavevectors, Grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    fn gauss(g: &Grid, w: f64) -> Field {
        g.sample(|x, y| (-((x * x + y * y) / (w * w))).exp())
    }

    #[test]
    fn dalembert_identity_and_period() {
        let g = Grid::new_1d(64, 0.1).unwrap();
        let wv = build_wavevectors(&g);
        let p0 = gauss(&g, 0.4);
        assert_eq!(dalembert_1d(&p0, &wv, 1.0, 0.0).unwrap(), p0);
        let period = g.extent()[0] / 2.0;
        let back = dalembert_1d(&p0, &wv, 2.0, period).unwrap();
        assert!(max_diff(&back, &p0) < 1e-13);
    }

    #[test]
    fn dalembert_matches_shifted_gaussian() {
        let g = Grid::new_1d(129, 0.1).unwrap();
        let wv = build_wavevectors(&g);
        let p0 = gauss(&g, 0.4);
        let p = dalembert_1d(&p0, &wv, 1.0, 1.0).unwrap();
        let direct = g.sample(|x, _| {
            0.5 * ((-((x + 1.0) / 0.4).powi(2)).exp() + (-((x - 1.0) / 0.4).powi(2)).exp())
        });
        assert!(max_diff(&p, &direct) < 1e-12);
    }

    #[test]
    fn dalembert_rejects_2d() {
        let g = Grid::new_2d(8, 8, 0.1, 0.1).unwrap();
        assert!(dalembert_1d(&g.zeros(), &build_wavevectors(&g), 1.0, 0.1).is_err());
    }

    #[test]
    fn propagator_agrees_with_dalembert() {
        let g = Grid::new_1d(128, 0.1).unwrap();
        let wv = build_wavevectors(&g);
        let m = Medium::homogeneous(&g, 1.7, 1.2).unwrap();
        let p0 = gauss(&g, 0.5);
        let (p, _) = spectral_propagator(&p0, &[g.zeros()], &m, &wv, 1.3).unwrap();
        let d = dalembert_1d(&p0, &wv, 1.7, 1.3).unwrap();
        assert!(max_diff(&p, &d) < 1e-12);
        let (p_zero, _) = spectral_propagator(&p0, &[g.zeros()], &m, &wv, 0.0).unwrap();
        assert!(max_diff(&p_zero, &p0) < 1e-15);
    }

    #[test]
    fn propagator_semigroup_and_energy() {
        let g = Grid::new_2d(24, 20, 0.1, 0.12).unwrap();
        let wv = build_wavevectors(&g);
        let m = Medium::homogeneous(&g, 1.5, 0.9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rand_field = || Field::from_shape_fn(g.shape(), |_| rng.gen_range(-1.0..1.0));
        let p0 = rand_field();
        let u0 = vec![rand_field(), rand_field()];
        let (p1, u1) = spectral_propagator(&p0, &u0, &m, &wv, 0.37).unwrap();
        let (p2, u2) = spectral_propagator(&p1, &u1, &m, &wv, 0.81).unwrap();
        let (p3, u3) = spectral_propagator(&p0, &u0, &m, &wv, 1.18).unwrap();
        assert!(max_diff(&p2, &p3) < 1e-12);
        assert!(max_diff(&u2[0], &u3[0]) < 1e-12);
        assert!(max_diff(&u2[1], &u3[1]) < 1e-12);
        // Nyquist content is frozen by both propagators, so energy is exact
        let area = g.dx() * g.dy();
        let e0 = acoustic_energy(&p0, &u0, &m, area);
        let e3 = acoustic_energy(&p3, &u3, &m, area);
        assert!(((e3 - e0) / e0).abs() < 1e-12, "{e0} {e3}");
    }

    #[test]
    fn propagator_rejects_heterogeneous() {
        let g = Grid::new_1d(8, 0.1).unwrap();
        let wv = build_wavevectors(&g);
        let mut m = Medium::homogeneous(&g, 1.0, 1.0).unwrap();
        m.rho0[[2, 0]] = 3.0;
        let r = spectral_propagator(&g.zeros(), &[g.zeros()], &m, &wv, 1.0);
        assert!(matches!(r, Err(Error::HeterogeneousMedium)));
    }

    #[test]
    fn compare_cases() {
        let g = Grid::new_2d(4, 4, 1.0, 1.0).unwrap();
        let a = g.sample(|x, y| x + 2.0 * y + 10.0);
        let r = compare(&a, &a).unwrap();
        assert_eq!(r.linf_abs, 0.0);
        assert_eq!(r.l2_rel, 0.0);
        assert!(r.pointwise_rel_log10.iter().all(|v| *v == LOG10_CLIP.0));

        let mut b = a.clone();
        b[[1, 2]] += 1e-3;
        let r = compare(&b, &a).unwrap();
        assert!((r.linf_abs - 1e-3).abs() < 1e-15);

        let zero = g.zeros();
        let r = compare(&a, &zero).unwrap();
        assert!(r.pointwise_abs.iter().all(|v| v.is_finite()));
        assert!(r.pointwise_rel_log10.iter().all(|v| *v == LOG10_CLIP.1));

        let wrong = Grid::new_2d(4, 5, 1.0, 1.0).unwrap().zeros();
        assert!(compare(&wrong, &a).is_err());
    }
}
