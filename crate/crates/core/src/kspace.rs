//! k-space correction kernels.
//!
//! Notation: `a = c_ref |k| dt1 / 2`, `b = c_ref |k| dt2 / 2`, `h = (dt1 + dt2) / 2`,
//! `w = c_ref |k|`, where `dt1` is the step before the current pressure level
//! and `dt2` the step after it.
//!
//! | kernel                  | kappa1                                   | kappa2                     |
//! |-------------------------|------------------------------------------|----------------------------|
//! | uniform                 | `sin(b) / (w dt / 2)`                    | —                          |
//! | symmetric (needs U(t))  | `(sin b + sin a) / (w h)`                | `(cos b - cos a) / h`      |
//! | causal staggered        | `(sin b + sin a cos b / cos a) / (w h)`  | `(cos b / cos a - 1) / h`  |
//!
//! The zero mode takes its limits `kappa1 = 1`, `kappa2 = 0` explicitly.
//! All grid kernels are evaluated on `WaveVectors::kmag_eff`.

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, WaveVectors};
use crate::spectral::Spectrum;

/// Margin (rad) kept between `c_ref kmax dt1 / 2` and `pi/2`, where the
/// causal kernel's `cos(a)` denominator vanishes.
pub const STABILITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelForm {
    /// Multiplies `U(t)`; exact but not usable for time stepping.
    UniformSymmetric,
    /// Multiplies `U(t - dt1/2)`; the production form.
    CausalStaggered,
}

#[derive(Debug, Clone)]
pub struct CorrectionKernels {
    pub kappa1: Field,
    /// Units 1/s.
    pub kappa2: Field,
    pub dt_prev: f64,
    pub dt_next: f64,
    pub c_ref: f64,
    pub form: KernelForm,
}

impl CorrectionKernels {
    /// True when every `kappa2` entry is exactly zero (equal steps).
    pub fn kappa2_vanishes(&self) -> bool {
        self.kappa2.iter().all(|v| *v == 0.0)
    }
}

/// Denominator functions of the equivalent non-standard finite difference
/// `(U(t+dt2/2) - phi U(t-dt1/2)) / psi = U_t(t)`.
#[derive(Debug, Clone)]
pub struct NsfdDenominators {
    pub phi: Field,
    /// Units s.
    pub psi: Field,
}

/// Scalar kernel formulas. `k` may be signed; every kernel depends on `|k|` only.
pub mod scalar {
    /// Uniform-step correction `2 sin(c k dt / 2) / (c k dt)`.
    pub fn kappa(c: f64, k: f64, dt: f64) -> f64 {
        let w = c * k.abs();
        if w == 0.0 {
            return 1.0;
        }
        let half = w * dt / 2.0;
        if half == 0.0 {
            return 1.0;
        }
        half.sin() / half
    }

    /// `(kappa1, kappa2)` of the symmetric form.
    pub fn kappa12_symmetric(c: f64, k: f64, dt1: f64, dt2: f64) -> (f64, f64) {
        let w = c * k.abs();
        if w == 0.0 {
            return (1.0, 0.0);
        }
        let (a, b) = (w * dt1 / 2.0, w * dt2 / 2.0);
        let sum = dt1 + dt2;
        let k1 = 2.0 * (b.sin() + a.sin()) / (w * sum);
        let k2 = 2.0 * (b.cos() - a.cos()) / sum;
        (k1, k2)
    }

    /// `(kappa1, kappa2)` of the causal staggered form.
    pub fn kappa12_staggered(c: f64, k: f64, dt1: f64, dt2: f64) -> (f64, f64) {
        let w = c * k.abs();
        if w == 0.0 {
            return (1.0, 0.0);
        }
        let (a, b) = (w * dt1 / 2.0, w * dt2 / 2.0);
        let sum = dt1 + dt2;
        let ratio = b.cos() / a.cos();
        let k1 = 2.0 / sum * (b.sin() / w + a.sin() / w * ratio);
        let k2 = 2.0 / sum * (ratio - 1.0);
        (k1, k2)
    }

    /// `(phi, psi)` closed forms.
    pub fn phi_psi(c: f64, k: f64, dt1: f64, dt2: f64) -> (f64, f64) {
        let w = c * k.abs();
        if w == 0.0 {
            return (1.0, (dt1 + dt2) / 2.0);
        }
        let a = w * dt1 / 2.0;
        let b = w * dt2 / 2.0;
        let phi = b.cos() / a.cos();
        let psi = (w * (dt1 + dt2) / 2.0).sin() / (w * a.cos());
        (phi, psi)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn check_pair(dt1: f64, dt2: f64) -> Result<()> {
    if !(dt1 >= 0.0 && dt2 >= 0.0 && dt1.is_finite() && dt2.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "steps must be non-negative, got dt1={dt1} dt2={dt2}"
        )));
    }
    if dt1 + dt2 <= 0.0 {
        return Err(Error::InvalidParameter(
            "at least one of dt1, dt2 must be positive".into(),
        ));
    }
    Ok(())
}

/// Rejects `dt1` when `c_ref kmax dt1 / 2 >= pi/2 - STABILITY_MARGIN`.
pub fn check_stability(kmax: f64, c_ref: f64, dt1: f64) -> Result<()> {
    let phase = c_ref * kmax * dt1 / 2.0;
    let limit = FRAC_PI_2 - STABILITY_MARGIN;
    if phase >= limit {
        return Err(Error::UnstableSchedule {
            dt: dt1,
            kmax,
            c_ref,
            phase,
            limit,
        });
    }
    Ok(())
}

/// Largest step allowed as `dt1` by [`check_stability`] (exclusive bound).
pub fn max_stable_step(kmax: f64, c_ref: f64) -> f64 {
    2.0 * (FRAC_PI_2 - STABILITY_MARGIN) / (c_ref * kmax)
}

pub fn kappa_uniform(wv: &WaveVectors, c_ref: f64, dt: f64) -> Result<Field> {
    check_positive("dt", dt)?;
    check_positive("c_ref", c_ref)?;
    Ok(wv.kmag_eff.mapv(|k| scalar::kappa(c_ref, k, dt)))
}

pub fn kappa12_symmetric(
    wv: &WaveVectors,
    c_ref: f64,
    dt1: f64,
    dt2: f64,
) -> Result<CorrectionKernels> {
    check_positive("c_ref", c_ref)?;
    check_pair(dt1, dt2)?;
    let pairs = wv
        .kmag_eff
        .mapv(|k| scalar::kappa12_symmetric(c_ref, k, dt1, dt2));
    Ok(CorrectionKernels {
        kappa1: pairs.mapv(|p| p.0),
        kappa2: pairs.mapv(|p| p.1),
        dt_prev: dt1,
        dt_next: dt2,
        c_ref,
        form: KernelForm::UniformSymmetric,
    })
}

pub fn kappa12_staggered(
    wv: &WaveVectors,
    c_ref: f64,
    dt1: f64,
    dt2: f64,
) -> Result<CorrectionKernels> {
    check_positive("c_ref", c_ref)?;
    check_pair(dt1, dt2)?;
    check_stability(wv.kmax(), c_ref, dt1)?;
    let pairs = wv
        .kmag_eff
        .mapv(|k| scalar::kappa12_staggered(c_ref, k, dt1, dt2));
    Ok(CorrectionKernels {
        kappa1: pairs.mapv(|p| p.0),
        kappa2: pairs.mapv(|p| p.1),
        dt_prev: dt1,
        dt_next: dt2,
        c_ref,
        form: KernelForm::CausalStaggered,
    })
}

pub fn nsfd_phi_psi(wv: &WaveVectors, c_ref: f64, dt1: f64, dt2: f64) -> Result<NsfdDenominators> {
    check_positive("c_ref", c_ref)?;
    check_pair(dt1, dt2)?;
    check_stability(wv.kmax(), c_ref, dt1)?;
    let pairs = wv.kmag_eff.mapv(|k| scalar::phi_psi(c_ref, k, dt1, dt2));
    Ok(NsfdDenominators {
        phi: pairs.mapv(|p| p.0),
        psi: pairs.mapv(|p| p.1),
    })
}

/// Single-branch correction without a `kappa2` term.
///
/// With only `kappa1 * U_t(t)` available, a step change can be made exact for
/// one travelling branch at a time. This returns the complex `kappa1` that is
/// exact for the forward branch (time dependence `exp(-i c q t)` with
/// `q = forward_sign * |k|`, i.e. waves leaning towards +x) and wrong for the
/// backward one. It is Hermitian in `k`, so real fields stay real, and it
/// reduces to the uniform kernel when `dt1 == dt2`.
pub fn kappa1_forward_branch(wv: &WaveVectors, c_ref: f64, dt1: f64, dt2: f64) -> Result<Spectrum> {
    check_positive("c_ref", c_ref)?;
    check_pair(dt1, dt2)?;
    let h = (dt1 + dt2) / 2.0;
    let mut out = Array2::from_elem(wv.shape(), Complex64::new(1.0, 0.0));
    for ((i, j), v) in out.indexed_iter_mut() {
        let k = wv.kmag_eff[[i, j]];
        if k == 0.0 {
            continue;
        }
        let omega = -c_ref * wv.forward_sign(i, j) * k;
        let num = Complex64::from_polar(1.0, omega * dt2 / 2.0)
            - Complex64::from_polar(1.0, -omega * dt1 / 2.0);
        *v = num / Complex64::new(0.0, omega * h);
    }
    Ok(out)
}
