//! FFT-based spectral operators.
//!
//! Normalisation: the forward transform is unscaled, the inverse carries the
//! `1/N` factor, so `inverse(forward(f)) == f` and Parseval reads
//! `sum |F{f}|^2 = N * sum |f|^2`.

use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, WaveVectors};

/// Complex spectrum over the grid, same shape and ordering as [`WaveVectors`].
pub type Spectrum = Array2<Complex64>;

/// Cached FFT plans for one grid shape.
#[derive(Clone)]
pub struct Spectral {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

impl Spectral {
    pub fn new(shape: (usize, usize)) -> Self {
        let (nx, ny) = shape;
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    pub fn for_wavevectors(wv: &WaveVectors) -> Self {
        Self::new(wv.shape())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn check(&self, shape: (usize, usize)) -> Result<()> {
        if shape != self.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: shape,
            });
        }
        Ok(())
    }

    fn transform(&self, data: &mut Spectrum, inverse: bool) {
        let (fx, fy) = if inverse {
            (&self.inv_x, &self.inv_y)
        } else {
            (&self.fwd_x, &self.fwd_y)
        };
        if self.ny > 1 {
            // rows are contiguous; rustfft processes every chunk of length ny
            fy.process(data.as_slice_mut().expect("standard layout"));
        }
        if self.nx > 1 {
            if self.ny == 1 {
                fx.process(data.as_slice_mut().expect("standard layout"));
            } else {
                let mut cols = data.t().as_standard_layout().into_owned();
                fx.process(cols.as_slice_mut().expect("standard layout"));
                data.assign(&cols.t());
            }
        }
    }

    pub fn forward(&self, field: &Field) -> Result<Spectrum> {
        self.check(field.dim())?;
        let mut data = field.mapv(|v| Complex64::new(v, 0.0));
        if !data.is_standard_layout() {
            data = data.as_standard_layout().into_owned();
        }
        self.transform(&mut data, false);
        Ok(data)
    }

    pub fn forward_complex(&self, mut data: Spectrum) -> Result<Spectrum> {
        self.check(data.dim())?;
        if !data.is_standard_layout() {
            data = data.as_standard_layout().into_owned();
        }
        self.transform(&mut data, false);
        Ok(data)
    }

    /// Inverse transform, keeping the full complex result.
    pub fn inverse_complex(&self, mut data: Spectrum) -> Result<Spectrum> {
        self.check(data.dim())?;
        if !data.is_standard_layout() {
            data = data.as_standard_layout().into_owned();
        }
        self.transform(&mut data, true);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        data.mapv_inplace(|v| v * scale);
        Ok(data)
    }

    /// Inverse transform of a Hermitian spectrum; the imaginary residue
    /// (round-off only) is dropped.
    pub fn inverse_real(&self, data: Spectrum) -> Result<Field> {
        Ok(self.inverse_complex(data)?.mapv(|v| v.re))
    }

    /// `i * k_axis * spectrum` using the Nyquist-free derivative wavenumbers.
    pub fn derivative_factor(wv: &WaveVectors, spectrum: &Spectrum, axis: usize) -> Spectrum {
        let mut out = spectrum.clone();
        for ((i, j), v) in out.indexed_iter_mut() {
            let k = wv.k_eff(axis, i, j);
            *v = Complex64::new(-k * v.im, k * v.re);
        }
        out
    }

    pub fn gradient(&self, field: &Field, wv: &WaveVectors) -> Result<Vec<Field>> {
        let spec = self.forward(field)?;
        (0..wv.dims())
            .map(|axis| self.inverse_real(Self::derivative_factor(wv, &spec, axis)))
            .collect()
    }

    pub fn divergence(&self, fields: &[Field], wv: &WaveVectors) -> Result<Field> {
        if fields.len() != wv.dims() {
            return Err(Error::InvalidParameter(format!(
                "divergence needs {} components, got {}",
                wv.dims(),
                fields.len()
            )));
        }
        let mut acc: Option<Spectrum> = None;
        for (axis, f) in fields.iter().enumerate() {
            let d = Self::derivative_factor(wv, &self.forward(f)?, axis);
            acc = Some(match acc {
                None => d,
                Some(mut a) => {
                    Zip::from(&mut a).and(&d).for_each(|a, d| *a += d);
                    a
                }
            });
        }
        self.inverse_real(acc.expect("at least one axis"))
    }
}

/// Spatial gradient via `F^-1{ i k_axis F{field} }`, one field per axis.
pub fn spectral_gradient(field: &Field, wv: &WaveVectors) -> Result<Vec<Field>> {
    Spectral::for_wavevectors(wv).gradient(field, wv)
}

/// Divergence via `F^-1{ sum_axis i k_axis F{field_axis} }`.
pub fn spectral_divergence(fields: &[Field], wv: &WaveVectors) -> Result<Field> {
    Spectral::for_wavevectors(wv).divergence(fields, wv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_wavevectors, Grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(g: &Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn(g.shape(), |_| rng.gen_range(-1.0..1.0))
    }

    fn max_abs(f: &Field) -> f64 {
        f.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Dense O(n^2) DFT derivative along one axis, Nyquist bin dropped.
    fn dft_derivative(f: &Field, g: &Grid, axis: usize) -> Field {
        let (nx, ny) = g.shape();
        let (n, d) = if axis == 0 { (nx, g.dx()) } else { (ny, g.dy()) };
        let freq = |m: usize| -> f64 {
            if n % 2 == 0 && m == n / 2 {
                return 0.0;
            }
            let s = if m < n.div_ceil(2) { m as f64 } else { m as f64 - n as f64 };
            2.0 * PI * s / (n as f64 * d)
        };
        let mut out = g.zeros();
        for i in 0..nx {
            for j in 0..ny {
                let idx = if axis == 0 { i } else { j };
                let mut acc = 0.0;
                for m in 0..n {
                    // spectrum bin m of the line through (i, j)
                    let mut re = 0.0;
                    let mut im = 0.0;
                    for s in 0..n {
                        let v = if axis == 0 { f[[s, j]] } else { f[[i, s]] };
                        let ang = -2.0 * PI * (m * s) as f64 / n as f64;
                        re += v * ang.cos();
                        im += v * ang.sin();
                    }
                    let k = freq(m);
                    // i k (re + i im) e^{+i 2pi m idx / n}
                    let (dre, dim) = (-k * im, k * re);
                    let ang = 2.0 * PI * (m * idx) as f64 / n as f64;
                    acc += dre * ang.cos() - dim * ang.sin();
                }
                out[[i, j]] = acc / n as f64;
            }
        }
        out
    }

    #[test]
    fn cosine_mode_differentiates_exactly() {
        let g = Grid::new_1d(64, 0.1).unwrap();
        let wv = build_wavevectors(&g);
        let k0 = 5.0 * 2.0 * PI / (64.0 * 0.1);
        let f = g.sample(|x, _| (k0 * x).cos());
        let grad = spectral_gradient(&f, &wv).unwrap();
        let expect = g.sample(|x, _| -k0 * (k0 * x).sin());
        let err = max_abs(&(&grad[0] - &expect));
        assert!(err <= 1e-12 * k0, "err {err}");
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = Grid::new_2d(8, 6, 0.1, 0.2).unwrap();
        let wv = build_wavevectors(&g);
        let f = g.zeros() + 3.25;
        for c in spectral_gradient(&f, &wv).unwrap() {
            assert!(max_abs(&c) < 1e-13);
        }
    }

    #[test]
    fn gradient_matches_dense_dft() {
        for (g, seed) in [
            (Grid::new_1d(12, 0.3).unwrap(), 1),
            (Grid::new_1d(9, 0.3).unwrap(), 2),
            (Grid::new_2d(6, 7, 0.2, 0.5).unwrap(), 3),
        ] {
            let wv = build_wavevectors(&g);
            let f = random_field(&g, seed);
            let grad = spectral_gradient(&f, &wv).unwrap();
            for axis in 0..g.dims() {
                let oracle = dft_derivative(&f, &g, axis);
                let rel = max_abs(&(&grad[axis] - &oracle)) / max_abs(&oracle);
                assert!(rel < 1e-12, "axis {axis}: {rel}");
            }
        }
    }

    #[test]
    fn divergence_cases() {
        let g = Grid::new_2d(16, 16, 0.1, 0.1).unwrap();
        let wv = build_wavevectors(&g);
        let k0 = 2.0 * 2.0 * PI / 1.6;
        let ux = g.sample(|x, _| (k0 * x).cos());
        let div = spectral_divergence(&[ux, g.zeros()], &wv).unwrap();
        let expect = g.sample(|x, _| -k0 * (k0 * x).sin());
        assert!(max_abs(&(&div - &expect)) < 1e-12 * k0);

        // curl of a band-limited stream function
        let kx = 2.0 * PI / 1.6;
        let psi = g.sample(|x, y| (kx * x).sin() * (2.0 * kx * y).cos() + (3.0 * kx * y).sin());
        let grad = spectral_gradient(&psi, &wv).unwrap();
        let curl = [-&grad[1], grad[0].clone()];
        let div = spectral_divergence(&curl, &wv).unwrap();
        assert!(max_abs(&div) < 1e-12 * max_abs(&grad[0]));

        // random two-component field against dense DFT
        let a = random_field(&g, 7);
        let b = random_field(&g, 8);
        let div = spectral_divergence(&[a.clone(), b.clone()], &wv).unwrap();
        let oracle = dft_derivative(&a, &g, 0) + dft_derivative(&b, &g, 1);
        assert!(max_abs(&(&div - &oracle)) / max_abs(&oracle) < 1e-12);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let g = Grid::new_1d(8, 0.1).unwrap();
        let wv = build_wavevectors(&g);
        let wrong = Grid::new_1d(10, 0.1).unwrap().zeros();
        assert!(matches!(
            spectral_gradient(&wrong, &wv),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn parseval_round_trip_and_laplacian() {
        let g = Grid::new_2d(12, 10, 0.1, 0.1).unwrap();
        let wv = build_wavevectors(&g);
        let sp = Spectral::for_wavevectors(&wv);
        let f = random_field(&g, 11);
        let spec = sp.forward(&f).unwrap();
        let e_spec: f64 = spec.iter().map(|v| v.norm_sqr()).sum();
        let e: f64 = f.iter().map(|v| v * v).sum();
        assert!((e_spec - g.len() as f64 * e).abs() / e_spec < 1e-12);

        let back = sp.inverse_real(spec.clone()).unwrap();
        assert!(max_abs(&(&back - &f)) / max_abs(&f) < 1e-13);

        // div(grad f) == F^-1{-|k_eff|^2 F{f}}
        let grad = sp.gradient(&f, &wv).unwrap();
        let lap = sp.divergence(&grad, &wv).unwrap();
        let mut s2 = spec;
        Zip::from(&mut s2)
            .and(&wv.kmag_eff)
            .for_each(|v, k| *v *= -k * k);
        let oracle = sp.inverse_real(s2).unwrap();
        assert!(max_abs(&(&lap - &oracle)) / max_abs(&oracle) < 1e-12);
    }
}
