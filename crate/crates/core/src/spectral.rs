//! Fourier calculus on the uniform 2π-periodic reference grid.
//!
//! Fields are sampled at α_j = 2πj/N and expanded as
//!
//! ```text
//! f(α) = Σ_k f̂_k e^{ikα},   k = -N/2 .. N/2-1
//! ```
//!
//! Every operator here is a Fourier multiplier. Arc-length derivatives use
//! ∂_s = (2π/L)∂_α because the grid is equally spaced in arc length.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Scalar type a [`SpectralField`] can hold.
pub trait Sample: Copy + Send + Sync + fmt::Debug + PartialEq + 'static {
    const IS_REAL: bool;
    fn to_complex(self) -> Complex64;
    /// Projects back onto the sample type (drops the imaginary part for reals).
    fn from_complex(c: Complex64) -> Self;
    fn zero() -> Self;
    fn is_finite(self) -> bool;
}

impl Sample for f64 {
    const IS_REAL: bool = true;
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn from_complex(c: Complex64) -> Self {
        c.re
    }
    fn zero() -> Self {
        0.0
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Sample for Complex64 {
    const IS_REAL: bool = false;
    fn to_complex(self) -> Complex64 {
        self
    }
    fn from_complex(c: Complex64) -> Self {
        c
    }
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

struct GridInner {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform grid on [0, 2π) with cached FFT plans. Cheap to clone.
#[derive(Clone)]
pub struct PeriodicGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n()).finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n() == other.n()
    }
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidGrid(n));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                forward,
                inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Node spacing 2π/N.
    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n() as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.spacing() * j as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n()).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber stored at FFT slot `idx`; the Nyquist slot maps to -N/2.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.n();
        if idx < n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    }

    /// FFT slot holding wavenumber `k`, if representable.
    pub fn slot(&self, k: i64) -> Option<usize> {
        let n = self.n() as i64;
        if k < -n / 2 || k >= n / 2 {
            None
        } else if k >= 0 {
            Some(k as usize)
        } else {
            Some((k + n) as usize)
        }
    }

    pub fn nyquist_slot(&self) -> usize {
        self.n() / 2
    }

    /// Samples → normalised coefficients f̂_k (FFT slot order).
    pub fn forward(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut buf = samples.to_vec();
        self.inner.forward.process(&mut buf);
        let scale = 1.0 / self.n() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Coefficients (FFT slot order) → samples.
    pub fn inverse(&self, coefficients: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coefficients.to_vec();
        self.inner.inverse.process(&mut buf);
        buf
    }
}

/// Periodic field sampled on a [`PeriodicGrid`], with lazily cached coefficients.
pub struct SpectralField<T: Sample> {
    grid: PeriodicGrid,
    samples: Vec<T>,
    coefficients: OnceLock<Vec<Complex64>>,
}

pub type RealField = SpectralField<f64>;
pub type ComplexField = SpectralField<Complex64>;

impl<T: Sample> Clone for SpectralField<T> {
    fn clone(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            samples: self.samples.clone(),
            coefficients: self.coefficients.clone(),
        }
    }
}

impl<T: Sample> fmt::Debug for SpectralField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("n", &self.grid.n())
            .field("samples", &self.samples)
            .finish()
    }
}

impl<T: Sample> SpectralField<T> {
    /// Wraps samples, rejecting wrong lengths and non-finite values.
    pub fn from_samples(grid: &PeriodicGrid, samples: Vec<T>) -> Result<Self> {
        if samples.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: samples.len(),
            });
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self::from_samples_unchecked(grid, samples))
    }

    pub(crate) fn from_samples_unchecked(grid: &PeriodicGrid, samples: Vec<T>) -> Self {
        debug_assert_eq!(samples.len(), grid.n());
        Self {
            grid: grid.clone(),
            samples,
            coefficients: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64) -> T) -> Self {
        let samples = (0..grid.n()).map(|j| f(grid.node(j))).collect();
        Self::from_samples_unchecked(grid, samples)
    }

    /// Builds a field from coefficients in FFT slot order. Real fields keep
    /// only the real part of the synthesis.
    pub fn from_coefficients(grid: &PeriodicGrid, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: coefficients.len(),
            });
        }
        Ok(Self::from_coefficients_unchecked(grid, coefficients))
    }

    pub(crate) fn from_coefficients_unchecked(grid: &PeriodicGrid, coefficients: Vec<Complex64>) -> Self {
        let samples: Vec<T> = grid.inverse(&coefficients).into_iter().map(T::from_complex).collect();
        let field = Self::from_samples_unchecked(grid, samples);
        if !T::IS_REAL {
            let _ = field.coefficients.set(coefficients);
        }
        field
    }

    pub fn constant(grid: &PeriodicGrid, value: T) -> Self {
        Self::from_samples_unchecked(grid, vec![value; grid.n()])
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    /// Normalised Fourier coefficients in FFT slot order.
    pub fn coefficients(&self) -> &[Complex64] {
        self.coefficients.get_or_init(|| {
            let buf: Vec<Complex64> = self.samples.iter().map(|v| v.to_complex()).collect();
            self.grid.forward(&buf)
        })
    }

    /// Coefficient of wavenumber `k` (zero when not representable).
    pub fn mode(&self, k: i64) -> Complex64 {
        self.grid
            .slot(k)
            .map(|s| self.coefficients()[s])
            .unwrap_or_default()
    }

    /// Average over the period (the k = 0 coefficient).
    pub fn mean(&self) -> T {
        T::from_complex(self.coefficients()[0])
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> SpectralField<U> {
        SpectralField::from_samples_unchecked(&self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map<U: Sample, V: Sample>(
        &self,
        other: &SpectralField<U>,
        f: impl Fn(T, U) -> V,
    ) -> SpectralField<V> {
        assert_eq!(self.grid, other.grid, "zip_map across different grids");
        SpectralField::from_samples_unchecked(
            &self.grid,
            self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn to_complex(&self) -> ComplexField {
        self.map(Sample::to_complex)
    }

    /// Applies the Fourier multiplier `symbol(k)`; `k` is the signed wavenumber.
    pub fn apply_multiplier(&self, symbol: impl Fn(i64) -> Complex64) -> Self {
        let coefs: Vec<Complex64> = self
            .coefficients()
            .iter()
            .enumerate()
            .map(|(slot, &c)| c * symbol(self.grid.wavenumber(slot)))
            .collect();
        Self::from_coefficients_unchecked(&self.grid, coefs)
    }

    /// Max-norm of the samples.
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|v| v.to_complex().norm()).fold(0.0, f64::max)
    }

    /// Discrete L²(dα) norm, (2π/N Σ|f_j|²)^{1/2}.
    pub fn l2_alpha(&self) -> f64 {
        let h = self.grid.spacing();
        (h * self.samples.iter().map(|v| v.to_complex().norm_sqr()).sum::<f64>()).sqrt()
    }
}

impl RealField {
    pub fn add(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> RealField {
        self.map(|a| a * s)
    }

    pub fn max(&self) -> f64 {
        self.samples().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.samples().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl ComplexField {
    pub fn re(&self) -> RealField {
        self.map(|c| c.re)
    }

    pub fn im(&self) -> RealField {
        self.map(|c| c.im)
    }

    pub fn conj(&self) -> ComplexField {
        self.map(|c| c.conj())
    }

    pub fn add(&self, other: &ComplexField) -> ComplexField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexField) -> ComplexField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ComplexField) -> ComplexField {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: Complex64) -> ComplexField {
        self.map(|a| a * s)
    }
}

/// Arc-length wavenumber 2πk/L.
#[inline]
pub fn arc_wavenumber(k: i64, length: f64) -> f64 {
    2.0 * PI * k as f64 / length
}

/// ∂_s^m f with ∂_s = (2π/L)∂_α. The Nyquist mode is dropped for odd `m`.
pub fn fourier_derivative<T: Sample>(f: &SpectralField<T>, m: u32, length: f64) -> Result<SpectralField<T>> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidParameter(format!("length must be positive, got {length}")));
    }
    if m == 0 {
        return Ok(f.clone());
    }
    let n = f.grid().n();
    let kmax = arc_wavenumber(n as i64 / 2, length);
    if m as f64 * kmax.ln() >= f64::MAX.ln() {
        return Err(Error::Underresolved { order: m, n });
    }
    let nyquist = -(n as i64) / 2;
    Ok(f.apply_multiplier(|k| {
        if m % 2 == 1 && k == nyquist {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, arc_wavenumber(k, length)).powu(m)
    }))
}

/// Periodic Hilbert transform, multiplier -i·sgn(k) with sgn(0) = 0.
pub fn hilbert_transform<T: Sample>(f: &SpectralField<T>) -> SpectralField<T> {
    let nyquist = -(f.grid().n() as i64) / 2;
    f.apply_multiplier(|k| {
        if k == 0 || k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -(k.signum() as f64))
        }
    })
}

/// D = H∂_s, the multiplier |k|·2π/L.
pub fn apply_d<T: Sample>(f: &SpectralField<T>, length: f64) -> SpectralField<T> {
    let nyquist = -(f.grid().n() as i64) / 2;
    f.apply_multiplier(|k| {
        if k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(arc_wavenumber(k.abs(), length), 0.0)
        }
    })
}

/// H^r norm with respect to arc length:
/// `( Σ_k (1 + k_s²)^r · L·|f̂_k|² )^{1/2}`, k_s = 2πk/L.
pub fn sobolev_norm<T: Sample>(f: &SpectralField<T>, r: f64, length: f64) -> f64 {
    let grid = f.grid();
    f.coefficients()
        .iter()
        .enumerate()
        .map(|(slot, c)| {
            let ks = arc_wavenumber(grid.wavenumber(slot), length);
            (1.0 + ks * ks).powf(r) * length * c.norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// ⟨f, g⟩ = ∫ f ḡ ds over one period, by the trapezoid rule (exact for
/// band-limited products).
pub fn inner_product(f: &RealField, g: &RealField, length: f64) -> f64 {
    let w = length / f.len() as f64;
    w * f.samples().iter().zip(g.samples()).map(|(a, b)| a * b).sum::<f64>()
}

/// Mean-zero antiderivative in α: returns F with F_α = f − mean(f), mean(F) = 0.
pub fn antiderivative_alpha<T: Sample>(f: &SpectralField<T>) -> SpectralField<T> {
    let nyquist = -(f.grid().n() as i64) / 2;
    f.apply_multiplier(|k| {
        if k == 0 || k == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0 / k as f64)
        }
    })
}

/// Plain α-derivative, ∂_α^m.
pub fn alpha_derivative<T: Sample>(f: &SpectralField<T>, m: u32) -> SpectralField<T> {
    fourier_derivative(f, m, 2.0 * PI).expect("α-derivative multiplier is finite for moderate orders")
}

/// 2/3-rule truncation: zero every mode with |k| > N/3.
pub fn dealias<T: Sample>(f: &SpectralField<T>) -> SpectralField<T> {
    let cutoff = (f.grid().n() / 3) as i64;
    f.apply_multiplier(|k| {
        if k.abs() > cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        }
    })
}

/// Band-limited interpolation onto a grid with `target` points. The Nyquist
/// coefficient is split symmetrically when refining.
pub fn resample<T: Sample>(f: &SpectralField<T>, target: &PeriodicGrid) -> SpectralField<T> {
    let src = f.grid();
    let (n, m) = (src.n() as i64, target.n() as i64);
    let mut coefs = vec![Complex64::new(0.0, 0.0); target.n()];
    for (slot, &c) in f.coefficients().iter().enumerate() {
        let k = src.wavenumber(slot);
        if k == -n / 2 {
            if m > n {
                let half = 0.5 * c;
                coefs[target.slot(k).unwrap()] += half;
                coefs[target.slot(-k).unwrap()] += half;
            } else if m == n {
                coefs[target.slot(k).unwrap()] += c;
            }
            continue;
        }
        if let Some(t) = target.slot(k) {
            if k.abs() < m / 2 || m == n {
                coefs[t] += c;
            }
        }
    }
    SpectralField::from_coefficients_unchecked(target, coefs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    fn max_diff(a: &RealField, b: &RealField) -> f64 {
        a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(PeriodicGrid::new(15).is_err());
        assert!(PeriodicGrid::new(8).is_err());
        assert!(PeriodicGrid::new(17).is_err());
        assert!(PeriodicGrid::new(16).is_ok());
    }

    #[test]
    fn nodes_are_uniform() {
        let g = grid(64);
        let nodes = g.nodes();
        for w in nodes.windows(2) {
            assert!((w[1] - w[0] - 2.0 * PI / 64.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = grid(16);
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(matches!(RealField::from_samples(&g, v), Err(Error::NonFinite(3))));
        assert!(matches!(
            RealField::from_samples(&g, vec![0.0; 12]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn derivative_examples() {
        let g = grid(32);
        let f = RealField::from_fn(&g, |a| (3.0 * a).sin());
        let df = fourier_derivative(&f, 1, 2.0 * PI).unwrap();
        assert!(max_diff(&df, &RealField::from_fn(&g, |a| 3.0 * (3.0 * a).cos())) < 1e-12);

        let f = RealField::from_fn(&g, f64::cos);
        let d3 = fourier_derivative(&f, 3, 2.0 * PI).unwrap();
        assert!(max_diff(&d3, &RealField::from_fn(&g, f64::sin)) < 1e-12);

        let c = RealField::constant(&g, 2.5);
        for m in 1..5 {
            assert!(fourier_derivative(&c, m, 3.0).unwrap().max_abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_scales_with_length() {
        let g = grid(32);
        let f = RealField::from_fn(&g, f64::sin);
        let df = fourier_derivative(&f, 1, 4.0 * PI).unwrap();
        assert!(max_diff(&df, &RealField::from_fn(&g, |a| 0.5 * a.cos())) < 1e-13);
    }

    #[test]
    fn derivative_overflow_is_rejected() {
        let g = grid(1024);
        let f = RealField::from_fn(&g, f64::sin);
        assert!(matches!(
            fourier_derivative(&f, 200, 1e-3),
            Err(Error::Underresolved { .. })
        ));
        assert!(fourier_derivative(&f, 1, 0.0).is_err());
    }

    #[test]
    fn hilbert_examples() {
        let g = grid(32);
        let h = hilbert_transform(&RealField::from_fn(&g, |a| (2.0 * a).cos()));
        assert!(max_diff(&h, &RealField::from_fn(&g, |a| (2.0 * a).sin())) < 1e-14);
        assert!(hilbert_transform(&RealField::constant(&g, 1.0)).max_abs() < 1e-15);
        let s = RealField::from_fn(&g, f64::sin);
        let hh = hilbert_transform(&hilbert_transform(&s));
        assert!(max_diff(&hh, &s.scale(-1.0)) < 1e-14);
    }

    #[test]
    fn d_examples() {
        let g = grid(32);
        let c = RealField::from_fn(&g, f64::cos);
        assert!(max_diff(&apply_d(&c, 2.0 * PI), &c) < 1e-14);
        assert!(apply_d(&RealField::constant(&g, 1.0), 2.0 * PI).max_abs() < 1e-15);
        let s2 = RealField::from_fn(&g, |a| (2.0 * a).sin());
        assert!(max_diff(&apply_d(&s2, 2.0 * PI), &s2.scale(2.0)) < 1e-13);
    }

    #[test]
    fn sobolev_examples() {
        let g = grid(32);
        let c = RealField::from_fn(&g, f64::cos);
        assert!((sobolev_norm(&c, 0.0, 2.0 * PI) - PI.sqrt()).abs() < 1e-13);
        assert!((sobolev_norm(&c, 1.0, 2.0 * PI) - (2.0 * PI).sqrt()).abs() < 1e-13);
        let one = RealField::constant(&g, 1.0);
        assert!((sobolev_norm(&one, 3.0, 2.0 * PI) - (2.0 * PI).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn real_field_coefficients_are_hermitian() {
        let g = grid(64);
        let f = RealField::from_fn(&g, |a| (a.sin() * 0.7).exp() + (3.0 * a).cos());
        for k in 1..32 {
            let d = f.mode(k) - f.mode(-k).conj();
            assert!(d.norm() < 1e-13);
        }
    }

    #[test]
    fn resample_preserves_band_limited_fields() {
        let g = grid(32);
        let fine = grid(128);
        let f = RealField::from_fn(&g, |a| a.cos() + 0.3 * (5.0 * a).sin());
        let r = resample(&f, &fine);
        let exact = RealField::from_fn(&fine, |a| a.cos() + 0.3 * (5.0 * a).sin());
        assert!(max_diff(&r, &exact) < 1e-13);
        let back = resample(&r, &g);
        assert!(max_diff(&back, &f) < 1e-13);
    }

    #[test]
    fn dealias_keeps_low_modes_only() {
        let g = grid(48);
        let f = RealField::from_fn(&g, |a| a.cos() + (20.0 * a).cos());
        let d = dealias(&f);
        assert!(max_diff(&d, &RealField::from_fn(&g, f64::cos)) < 1e-13);
    }

    fn band_limited(coefs: &[(f64, f64)], g: &PeriodicGrid) -> RealField {
        RealField::from_fn(g, |a| {
            coefs
                .iter()
                .enumerate()
                .map(|(k, (c, s))| c * ((k + 1) as f64 * a).cos() + s * ((k + 1) as f64 * a).sin())
                .sum()
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_h_squared(
            coefs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40),
            mean in -2.0f64..2.0,
        ) {
            let g = grid(128);
            let f = band_limited(&coefs, &g).map(|v| v + mean);
            let back = RealField::from_coefficients(&g, f.coefficients().to_vec()).unwrap();
            let scale = f.max_abs().max(1.0);
            prop_assert!(max_diff(&back, &f) / scale < 1e-13);

            let hh = hilbert_transform(&hilbert_transform(&f));
            let expect = f.map(|v| -(v - mean));
            prop_assert!(max_diff(&hh, &expect) < 1e-12);
        }

        #[test]
        fn hilbert_is_skew_and_commutes_with_derivative(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
            length in 3.0f64..12.0,
        ) {
            let g = grid(128);
            let f = band_limited(&a, &g);
            let h = band_limited(&b, &g);
            let lhs = inner_product(&hilbert_transform(&f), &h, length)
                + inner_product(&f, &hilbert_transform(&h), length);
            prop_assert!(lhs.abs() < 1e-12);

            let dh = fourier_derivative(&hilbert_transform(&f), 1, length).unwrap();
            let hd = hilbert_transform(&fourier_derivative(&f, 1, length).unwrap());
            prop_assert!(max_diff(&dh, &hd) < 1e-12);

            // ⟨f, Df⟩ ≥ 0
            prop_assert!(inner_product(&f, &apply_d(&f, length), length) >= -1e-12);
        }

        #[test]
        fn l2_norm_matches_trapezoid(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..30),
            length in 3.0f64..12.0,
        ) {
            let g = grid(128);
            let f = band_limited(&a, &g);
            let quad = inner_product(&f, &f, length);
            let norm = sobolev_norm(&f, 0.0, length);
            prop_assert!((norm * norm - quad).abs() < 1e-10 * quad.max(1.0));
        }
    }
}
