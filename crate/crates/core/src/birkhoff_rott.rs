//! Singular integral operators on the periodic interface.
//!
//! Everything here is built on the periodized Cauchy transform
//!
//! ```text
//! 𝔥f(α) = (1/2πi) p.v.∫₀^{2π} f(β) ξ_β(β) cot((ξ(α) − ξ(β))/2) dβ
//! ```
//!
//! Principal-value sums use the alternate-point trapezoid rule (nodes of
//! opposite parity, weight 2h). Kernels with a removable singularity use the
//! plain trapezoid rule with the analytic diagonal limit.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::curve::{chord_arc_monitor, reconstruct, CurvePoints, CurveState};
use crate::error::{Error, Result};
use crate::spectral::{alpha_derivative, ComplexField, PeriodicGrid, RealField, Sample, SpectralField};

/// Default chord-arc floor below which kernels are considered unresolvable.
pub const DEFAULT_CHORD_ARC_FLOOR: f64 = 0.05;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Precomputed geometry and cotangent table for one curve.
#[derive(Clone, Debug)]
pub struct KernelWorkspace {
    grid: PeriodicGrid,
    points: CurvePoints,
    theta_alpha: Vec<f64>,
    /// cot((ξ_j − ξ_k)/2), row-major, zero on the diagonal.
    cot: Vec<Complex64>,
    /// cot((α_j − α_k)/2) indexed by (j − k) mod N, zero at 0.
    flat_cot: Vec<f64>,
    chord_arc: f64,
}

impl KernelWorkspace {
    pub fn new(state: &CurveState) -> Result<Self> {
        Self::with_floor(state, DEFAULT_CHORD_ARC_FLOOR)
    }

    /// Builds the workspace, failing if the chord-arc ratio is below `floor`.
    pub fn with_floor(state: &CurveState, floor: f64) -> Result<Self> {
        let points = reconstruct(state);
        let chord_arc = chord_arc_monitor(&points);
        if !(chord_arc >= floor) {
            return Err(Error::ChordArc { ratio: chord_arc, floor });
        }
        let grid = state.grid().clone();
        let n = grid.n();
        let theta_alpha = alpha_derivative(&state.theta, 1).into_samples();

        let mut cot = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for k in (j + 1)..n {
                let c = cot_complex(0.5 * points.chord(j, k));
                cot[j * n + k] = c;
                cot[k * n + j] = -c;
            }
        }
        let h = grid.spacing();
        let flat_cot = (0..n)
            .map(|p| if p == 0 { 0.0 } else { 1.0 / (0.5 * h * p as f64).tan() })
            .collect();

        Ok(Self {
            grid,
            points,
            theta_alpha,
            cot,
            flat_cot,
            chord_arc,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn points(&self) -> &CurvePoints {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn length(&self) -> f64 {
        self.points.length
    }

    pub fn chord_arc(&self) -> f64 {
        self.chord_arc
    }

    /// cot((ξ(α_j) − ξ(α_k))/2) for j ≠ k.
    #[inline]
    pub fn cot(&self, j: usize, k: usize) -> Complex64 {
        self.cot[j * self.n() + k]
    }

    pub fn theta_alpha(&self) -> &[f64] {
        &self.theta_alpha
    }

    /// ξ_α at node j.
    #[inline]
    pub fn xi_alpha(&self, j: usize) -> Complex64 {
        self.points.xi_alpha(j)
    }

    fn check<T: Sample>(&self, f: &SpectralField<T>) {
        assert_eq!(f.grid(), &self.grid, "field and workspace live on different grids");
    }
}

fn cot_complex(z: Complex64) -> Complex64 {
    // cot z = i(e^{2iz} + 1)/(e^{2iz} − 1), arranged to stay finite for large |Im z|.
    if z.im > 0.0 {
        let e = (2.0 * I * z).exp();
        I * (e + 1.0) / (e - 1.0)
    } else {
        let e = (-2.0 * I * z).exp();
        I * (1.0 + e) / (1.0 - e)
    }
}

/// Periodized Cauchy transform 𝔥f by the alternate-point trapezoid rule.
pub fn cauchy_transform<T: Sample>(f: &SpectralField<T>, ws: &KernelWorkspace) -> ComplexField {
    ws.check(f);
    let n = ws.n();
    let weight = 2.0 * ws.grid.spacing() / (2.0 * PI) * -I;
    let src: Vec<Complex64> = (0..n).map(|k| f.samples()[k].to_complex() * ws.xi_alpha(k)).collect();
    let out = (0..n)
        .map(|j| {
            let row = &ws.cot[j * n..(j + 1) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            let mut k = 1 - j % 2;
            while k < n {
                acc += src[k] * row[k];
                k += 2;
            }
            weight * acc
        })
        .collect();
    SpectralField::from_samples_unchecked(&ws.grid, out)
}

/// Conjugate interface velocity W̄ = ½(I + 𝔥)(γ e^{−iθ}).
pub fn birkhoff_rott_velocity(state: &CurveState, ws: &KernelWorkspace) -> ComplexField {
    let density = state.gamma.zip_map(&state.theta, |g, t| g * Complex64::from_polar(1.0, -t));
    let pv = cauchy_transform(&density, ws);
    density.zip_map(&pv, |d, p| 0.5 * (d + p))
}

/// Far-field value w̄_∞ = (1/4π)∫γ ds of the conjugate velocity below the sheet.
pub fn far_field_velocity(state: &CurveState) -> f64 {
    state.gamma.mean() * state.length / (4.0 * PI)
}

/// (I − 𝔥)W̄ − w̄_∞, which vanishes when W̄ is a boundary value of a function
/// holomorphic in the fluid.
pub fn holomorphy_residual(state: &CurveState, w_bar: &ComplexField, ws: &KernelWorkspace) -> ComplexField {
    let hw = cauchy_transform(w_bar, ws);
    let far = far_field_velocity(state);
    w_bar.zip_map(&hw, |w, h| w - h - far)
}

/// Double layer potential K f = Re 𝔥f.
pub fn double_layer(f: &RealField, ws: &KernelWorkspace) -> RealField {
    cauchy_transform(f, ws).re()
}

/// Adjoint double layer K* f = −Re(e^{iθ} 𝔥(e^{−iθ} f)).
pub fn adjoint_double_layer(f: &RealField, ws: &KernelWorkspace) -> RealField {
    let tangent = &ws.points.tangent;
    let rotated: Vec<Complex64> = f.samples().iter().zip(tangent).map(|(&v, t)| v * t.conj()).collect();
    let h = cauchy_transform(&SpectralField::from_samples_unchecked(&ws.grid, rotated), ws);
    let out = h.samples().iter().zip(tangent).map(|(v, t)| -(t * v).re).collect();
    SpectralField::from_samples_unchecked(&ws.grid, out)
}

/// Time derivative of the K* kernel applied to a frozen density.
///
/// The nodes move with `node_velocity` (ξ_t, only differences matter), the
/// tangent angle changes at `theta_t` and the period length at `length_t`.
pub fn adjoint_double_layer_rate(
    f: &RealField,
    ws: &KernelWorkspace,
    theta_t: &RealField,
    length_t: f64,
    node_velocity: &[Complex64],
) -> RealField {
    ws.check(f);
    ws.check(theta_t);
    let n = ws.n();
    let length = ws.length();
    let w = 2.0 * ws.grid.spacing();
    let tangent = &ws.points.tangent;
    let out = (0..n)
        .map(|j| {
            let e = tangent[j];
            let de = I * theta_t.samples()[j] * e;
            let mut acc = 0.0;
            let mut k = 1 - j % 2;
            while k < n {
                let c = ws.cot(j, k);
                let dc = -(1.0 + c * c) * 0.5 * (node_velocity[j] - node_velocity[k]);
                let kernel = length_t * (e * c).im + length * (de * c + e * dc).im;
                acc += kernel * f.samples()[k];
                k += 2;
            }
            -w * acc / (4.0 * PI * PI)
        })
        .collect();
    SpectralField::from_samples_unchecked(&ws.grid, out)
}

/// Smooth remainder R with i𝔥 = H + R:
/// R(f)(α) = (1/2π)∫ f(β)[ξ_β cot((ξ(α) − ξ(β))/2) − cot((α − β)/2)] dβ.
pub fn remainder_r<T: Sample>(f: &SpectralField<T>, ws: &KernelWorkspace) -> ComplexField {
    ws.check(f);
    let n = ws.n();
    let h = ws.grid.spacing();
    let vals: Vec<Complex64> = f.samples().iter().map(|v| v.to_complex()).collect();
    let out = (0..n)
        .map(|j| {
            let mut acc = -I * ws.theta_alpha[j] * vals[j];
            for k in 0..n {
                if k != j {
                    let kernel = ws.xi_alpha(k) * ws.cot(j, k) - ws.flat_cot[(j + n - k) % n];
                    acc += vals[k] * kernel;
                }
            }
            acc * h / (2.0 * PI)
        })
        .collect();
    SpectralField::from_samples_unchecked(&ws.grid, out)
}

/// [𝔥, e^{2iθ}](f_s/ξ_s) = (1/2πi)∫(e^{2iθ(β)} − e^{2iθ(α)}) f_β cot((ξ(α) − ξ(β))/2) dβ.
pub fn commutator_exp2itheta<T: Sample>(f: &SpectralField<T>, ws: &KernelWorkspace) -> ComplexField {
    ws.check(f);
    let n = ws.n();
    let f_beta = alpha_derivative(&f.to_complex(), 1).into_samples();
    let e2: Vec<Complex64> = ws.points.tangent.iter().map(|t| t * t).collect();
    let out = (0..n)
        .map(|j| {
            let diag = -4.0 * I * ws.theta_alpha[j] * e2[j] * f_beta[j] / ws.xi_alpha(j);
            let mut acc = diag;
            for k in 0..n {
                if k != j {
                    acc += (e2[k] - e2[j]) * f_beta[k] * ws.cot(j, k);
                }
            }
            acc * ws.grid.spacing() / (2.0 * PI * I)
        })
        .collect();
    SpectralField::from_samples_unchecked(&ws.grid, out)
}

/// [W, 𝔥](f_s/ξ_s) = (1/2πi)∫(W(α) − W(β)) f_β cot((ξ(α) − ξ(β))/2) dβ.
pub fn commutator_velocity<T: Sample, U: Sample>(
    w: &SpectralField<T>,
    f: &SpectralField<U>,
    ws: &KernelWorkspace,
) -> ComplexField {
    ws.check(w);
    ws.check(f);
    let n = ws.n();
    let w = w.to_complex();
    let w_alpha = alpha_derivative(&w, 1).into_samples();
    let f_beta = alpha_derivative(&f.to_complex(), 1).into_samples();
    let wv = w.samples();
    let out = (0..n)
        .map(|j| {
            let mut acc = 2.0 * w_alpha[j] * f_beta[j] / ws.xi_alpha(j);
            for k in 0..n {
                if k != j {
                    acc += (wv[j] - wv[k]) * f_beta[k] * ws.cot(j, k);
                }
            }
            acc * ws.grid.spacing() / (2.0 * PI * I)
        })
        .collect();
    SpectralField::from_samples_unchecked(&ws.grid, out)
}
