//! Interface geometry reconstructed from the tangent angle and period length.
//!
//! The grid is equal-arclength: s = αL/2π, so ξ_α = (L/2π)e^{iθ}. One spatial
//! period advances the curve by exactly 2π horizontally, which is what the
//! closure conditions below enforce.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{alpha_derivative, PeriodicGrid, RealField, SpectralField};

/// Closure defects at or above this are treated as a corrupted state.
pub const MAX_PROJECTABLE_DEFECT: f64 = 0.1;

/// Evolved state: tangent angle, vortex-sheet density, period arc length, time.
#[derive(Clone, Debug)]
pub struct CurveState {
    pub theta: RealField,
    pub gamma: RealField,
    pub length: f64,
    pub time: f64,
}

impl CurveState {
    pub fn new(theta: RealField, gamma: RealField, length: f64, time: f64) -> Result<Self> {
        if theta.grid() != gamma.grid() {
            return Err(Error::GridMismatch(theta.len(), gamma.len()));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter(format!("period length must be positive, got {length}")));
        }
        if !time.is_finite() {
            return Err(Error::InvalidParameter("time must be finite".into()));
        }
        Ok(Self {
            theta,
            gamma,
            length,
            time,
        })
    }

    /// Flat interface with uniform sheet strength `gamma`.
    pub fn flat(grid: &PeriodicGrid, gamma: f64) -> Self {
        Self {
            theta: RealField::zeros(grid),
            gamma: RealField::constant(grid, gamma),
            length: 2.0 * PI,
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        self.theta.grid()
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    /// ds/dα, uniform on the equal-arclength grid.
    pub fn metric(&self) -> f64 {
        self.length / (2.0 * PI)
    }

    /// Same state with the closure integrals restored.
    pub fn projected(&self) -> Result<Self> {
        let (theta, length) = closure_project(&self.theta, self.length)?;
        Ok(Self {
            theta,
            gamma: self.gamma.clone(),
            length,
            time: self.time,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.length.is_finite()
            && self.theta.samples().iter().all(|v| v.is_finite())
            && self.gamma.samples().iter().all(|v| v.is_finite())
    }
}

/// Interface positions and frame vectors at the grid nodes.
#[derive(Clone, Debug)]
pub struct CurvePoints {
    /// ξ(α_j), anchored at ξ(0) = 0.
    pub xi: Vec<Complex64>,
    /// e^{iθ_j}
    pub tangent: Vec<Complex64>,
    /// i e^{iθ_j}
    pub normal: Vec<Complex64>,
    /// ξ(α) − α: the 2π-periodic part of the positions.
    pub(crate) periodic: Vec<Complex64>,
    pub length: f64,
    /// (L/2π)∫₀^{2π} e^{iθ} dα − 2π
    pub closure_defect: Complex64,
}

impl CurvePoints {
    pub fn n(&self) -> usize {
        self.xi.len()
    }

    /// ξ_α = (L/2π)e^{iθ}
    pub fn xi_alpha(&self, j: usize) -> Complex64 {
        self.tangent[j] * (self.length / (2.0 * PI))
    }

    /// ξ(α_j) − ξ(α_k) with the horizontal period taken as exactly 2π, so
    /// kernels built from it are periodic even when the state carries a small
    /// closure defect.
    #[inline]
    pub fn chord(&self, j: usize, k: usize) -> Complex64 {
        let h = 2.0 * PI / self.n() as f64;
        self.periodic[j] - self.periodic[k] + Complex64::new(h * (j as f64 - k as f64), 0.0)
    }

    /// Rigid translation of all positions.
    pub fn translated(&self, shift: Complex64) -> Self {
        let mut out = self.clone();
        for x in &mut out.xi {
            *x += shift;
        }
        out
    }
}

/// Positions by spectral antiderivative of (L/2π)e^{iθ}.
pub fn reconstruct(state: &CurveState) -> CurvePoints {
    reconstruct_from(&state.theta, state.length)
}

pub fn reconstruct_from(theta: &RealField, length: f64) -> CurvePoints {
    let grid = theta.grid();
    let n = grid.n();
    let scale = length / (2.0 * PI);
    let tangent_field = theta.map(|t| Complex64::from_polar(1.0, t));
    let coefs = tangent_field.coefficients();
    let c0 = coefs[0];

    // ∫₀^α (e^{iθ} − c₀) dα' = Σ_{k≠0} ĉ_k (e^{ikα} − 1)/(ik)
    let mut anti: Vec<Complex64> = coefs
        .iter()
        .enumerate()
        .map(|(slot, &c)| {
            let k = grid.wavenumber(slot);
            if k == 0 || slot == grid.nyquist_slot() {
                Complex64::new(0.0, 0.0)
            } else {
                c / Complex64::new(0.0, k as f64)
            }
        })
        .collect();
    let offset: Complex64 = anti.iter().sum();
    anti[0] = -offset;
    let wiggle = grid.inverse(&anti);

    let nodes = grid.nodes();
    let xi: Vec<Complex64> = (0..n).map(|j| scale * (c0 * nodes[j] + wiggle[j])).collect();
    let drift = scale * c0 - Complex64::new(1.0, 0.0);
    let periodic: Vec<Complex64> = (0..n).map(|j| scale * wiggle[j] + drift * nodes[j]).collect();
    let tangent = tangent_field.into_samples();
    let normal = tangent.iter().map(|t| Complex64::i() * t).collect();

    CurvePoints {
        xi,
        tangent,
        normal,
        periodic,
        length,
        closure_defect: length * c0 - Complex64::new(2.0 * PI, 0.0),
    }
}

/// Restores ∫cos θ ds = 2π and ∫sin θ ds = 0.
///
/// The mean inclination θ̂₀ is shifted until ∫sin θ dα vanishes, then L is
/// rescaled so that the horizontal period is 2π.
pub fn closure_project(theta: &RealField, length: f64) -> Result<(RealField, f64)> {
    let defect = closure_defect(theta, length);
    if !(defect.norm() < MAX_PROJECTABLE_DEFECT) {
        return Err(Error::ClosureDefect(defect.norm()));
    }
    let n = theta.len() as f64;
    let moments = |shift: f64| -> (f64, f64) {
        theta.samples().iter().fold((0.0, 0.0), |(c, s), &t| {
            let (sn, cs) = (t - shift).sin_cos();
            (c + cs / n, s + sn / n)
        })
    };
    let mut shift = 0.0;
    let (mut mean_cos, mut mean_sin) = moments(shift);
    for _ in 0..50 {
        if mean_sin.abs() <= 1e-16 {
            break;
        }
        shift += mean_sin / mean_cos;
        (mean_cos, mean_sin) = moments(shift);
    }
    let projected = if shift == 0.0 {
        theta.clone()
    } else {
        theta.map(|t| t - shift)
    };
    Ok((projected, 2.0 * PI / mean_cos))
}

/// (L/2π)∫₀^{2π} e^{iθ} dα − 2π by the trapezoid rule.
pub fn closure_defect(theta: &RealField, length: f64) -> Complex64 {
    let n = theta.len() as f64;
    let mean: Complex64 = theta.samples().iter().map(|&t| Complex64::from_polar(1.0, t)).sum::<Complex64>() / n;
    length * mean - Complex64::new(2.0 * PI, 0.0)
}

/// Interface pressure P = −θ_s (unit surface tension).
pub fn curvature_pressure(state: &CurveState) -> RealField {
    pressure_from_angle(&state.theta, 0, state.length)
}

/// P = −(2π/L)∂_α(θ_per + wα): `winding` adds the non-periodic part of an
/// angle that turns `winding` full circles per period.
pub fn pressure_from_angle(theta_periodic: &RealField, winding: i32, length: f64) -> RealField {
    let scale = -2.0 * PI / length;
    alpha_derivative(theta_periodic, 1).map(|d| scale * (d + winding as f64))
}

/// Minimum of chord/arc over all node pairs, using the periodic image that
/// realises the shorter arc.
pub fn chord_arc_monitor(points: &CurvePoints) -> f64 {
    let n = points.n();
    let arc_step = points.length / n as f64;
    let period = points.closure_defect + Complex64::new(2.0 * PI, 0.0);
    let mut min_ratio = f64::INFINITY;
    for j in 0..n {
        for p in 1..=n / 2 {
            let k = j + p;
            let target = if k < n { points.xi[k] } else { points.xi[k - n] + period };
            let ratio = (target - points.xi[j]).norm() / (arc_step * p as f64);
            min_ratio = min_ratio.min(ratio);
        }
    }
    min_ratio
}

/// On-disk snapshot: `{"n": N, "t": t, "L": L, "theta": [...], "gamma": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub n: usize,
    pub t: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub theta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Snapshot {
    pub fn from_state(state: &CurveState) -> Self {
        Self {
            n: state.n(),
            t: state.time,
            length: state.length,
            theta: state.theta.samples().to_vec(),
            gamma: state.gamma.samples().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Snapshot = serde_json::from_str(text)?;
        snap.validate()?;
        Ok(snap)
    }

    fn validate(&self) -> Result<()> {
        if self.theta.len() != self.n || self.gamma.len() != self.n {
            return Err(Error::Format(format!(
                "snapshot declares n = {} but holds {} theta and {} gamma samples",
                self.n,
                self.theta.len(),
                self.gamma.len()
            )));
        }
        let finite = self.t.is_finite()
            && self.length.is_finite()
            && self.theta.iter().chain(&self.gamma).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Format("snapshot contains NaN or infinite values".into()));
        }
        Ok(())
    }

    pub fn to_state(&self) -> Result<CurveState> {
        let grid = PeriodicGrid::new(self.n)?;
        self.to_state_on(&grid)
    }

    pub fn to_state_on(&self, grid: &PeriodicGrid) -> Result<CurveState> {
        if grid.n() != self.n {
            return Err(Error::GridMismatch(grid.n(), self.n));
        }
        CurveState::new(
            SpectralField::from_samples(grid, self.theta.clone())?,
            SpectralField::from_samples(grid, self.gamma.clone())?,
            self.length,
            self.t,
        )
    }
}
