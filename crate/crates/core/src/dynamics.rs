//! Time evolution of (θ, γ, L) in the equal-arclength frame.
//!
//! The kinematic right-hand side is the primary model. Its stiff part is the
//! linearisation about the flat state, which decouples into 2×2 blocks per
//! Fourier mode:
//!
//! ```text
//! d/dt (θ̂_k, γ̂_k) = [[0, |k_s|/2], [−2(k_s² + g), 0]] (θ̂_k, γ̂_k),   k_s = 2πk/L
//! ```
//!
//! The block squares to −ω²I with ω² = |k_s|³ + g|k_s|, so its exponential and
//! the φ-functions of exponential integrators have closed forms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::birkhoff_rott::{adjoint_double_layer_rate, KernelWorkspace, DEFAULT_CHORD_ARC_FLOOR};
use crate::curve::{closure_project, CurveState};
use crate::error::{Error, Result};
use crate::fields::{normal_velocity, tangential_velocity, DerivedFields};
use crate::layer_solve::{gmres, solve_second_kind, SecondKindProblem, Side, Sign, DEFAULT_TOLERANCE};
use crate::spectral::{
    antiderivative_alpha, arc_wavenumber, dealias, fourier_derivative, hilbert_transform, PeriodicGrid, RealField,
    SpectralField,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EtdRk2,
    ImexBdf2,
    ExplicitRk4,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "etd_rk2" => Ok(Scheme::EtdRk2),
            "imex_bdf2" => Ok(Scheme::ImexBdf2),
            "explicit_rk4" => Ok(Scheme::ExplicitRk4),
            other => Err(Error::InvalidParameter(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Physical and numerical parameters shared by every right-hand side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Model {
    /// Gravity switch g, 0 or 1.
    pub gravity: f64,
    pub chord_arc_floor: f64,
    pub solver_tolerance: f64,
    /// Explicit stability constant: dt ≤ cfl·(L/N)^{3/2}.
    pub cfl: f64,
}

impl Default for Model {
    fn default() -> Self {
        Self {
            gravity: 1.0,
            chord_arc_floor: DEFAULT_CHORD_ARC_FLOOR,
            solver_tolerance: DEFAULT_TOLERANCE,
            cfl: 0.5,
        }
    }
}

impl Model {
    pub fn workspace(&self, state: &CurveState) -> Result<KernelWorkspace> {
        KernelWorkspace::with_floor(state, self.chord_arc_floor)
    }

    pub fn explicit_limit(&self, state: &CurveState) -> f64 {
        self.cfl * (state.length / state.n() as f64).powf(1.5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RhsKind {
    Kinematic,
    Quasilinear,
}

#[derive(Clone, Debug)]
pub struct RhsBundle {
    pub theta_t: RealField,
    pub gamma_t: RealField,
    pub length_t: f64,
    /// Present for the quasilinear system only.
    pub u_t: Option<RealField>,
    pub kind: RhsKind,
}

/// (θ_t, γ_t, L_t) from frame kinematics.
///
/// γ_t solves (I − K*)(γ_t/2) = (∂_tK*)(γ/2) + θ_ss − δũ − g sin θ + Uθ_t,
/// where ∂_tK* differentiates the kernel along the node motion
/// ξ_t = (iU + T)e^{iθ}.
pub fn kinematic_rhs(state: &CurveState, model: &Model) -> Result<(RhsBundle, DerivedFields)> {
    let ws = model.workspace(state)?;
    kinematic_rhs_with(state, &ws, model)
}

pub fn kinematic_rhs_with(
    state: &CurveState,
    ws: &KernelWorkspace,
    model: &Model,
) -> Result<(RhsBundle, DerivedFields)> {
    let fields = DerivedFields::compute(state, ws, model.gravity)?;
    let gamma_t = gamma_rate(state, &fields, ws, model)?;
    Ok((
        RhsBundle {
            theta_t: fields.theta_t.clone(),
            gamma_t,
            length_t: fields.length_t,
            u_t: None,
            kind: RhsKind::Kinematic,
        },
        fields,
    ))
}

/// Node velocities ξ_t = (iU + T)e^{iθ}.
pub fn node_velocity(state: &CurveState, fields: &DerivedFields) -> Vec<Complex64> {
    (0..state.n())
        .map(|j| {
            Complex64::new(fields.tangential_velocity.samples()[j], fields.normal_velocity.samples()[j])
                * Complex64::from_polar(1.0, state.theta.samples()[j])
        })
        .collect()
}

/// (∂_tK*)(γ/2), the commutator term of the γ_t equation.
pub fn kernel_rate_term(state: &CurveState, fields: &DerivedFields, ws: &KernelWorkspace) -> RealField {
    adjoint_double_layer_rate(
        &state.gamma.scale(0.5),
        ws,
        &fields.theta_t,
        fields.length_t,
        &node_velocity(state, fields),
    )
}

fn gamma_rate(state: &CurveState, fields: &DerivedFields, ws: &KernelWorkspace, model: &Model) -> Result<RealField> {
    let theta_ss = fourier_derivative(&state.theta, 2, state.length)?;
    let g = model.gravity;
    let local = theta_ss
        .sub(&fields.delta.mul(&fields.u_tilde))
        .sub(&state.theta.map(|t| g * t.sin()))
        .add(&fields.normal_velocity.mul(&fields.theta_t));
    let rhs = kernel_rate_term(state, fields, ws).add(&local);
    let problem = SecondKindProblem::new(Sign::Minus, Side::Adjoint, rhs).with_tolerance(model.solver_tolerance);
    let (half, _) = solve_second_kind(&problem, ws)?;
    Ok(half.scale(2.0))
}

/// The quasilinear system θ_t = H(u) − δθ_s + φ̃, u_t = P₀[θ_sss − aθ_s − δu_s + ψ̃].
///
/// P₀ removes the spatial mean, which equals d/dt(L_t/L). φ̃ and ψ̃ take
/// their θ_t ingredient from the kinematic fields.
pub fn quasilinear_rhs(state: &CurveState, fields: &DerivedFields) -> Result<RhsBundle> {
    let length = state.length;
    let theta_s = fourier_derivative(&state.theta, 1, length)?;
    let theta_sss = fourier_derivative(&state.theta, 3, length)?;
    let u_s = fourier_derivative(&fields.u, 1, length)?;
    let theta_t = hilbert_transform(&fields.u)
        .sub(&fields.delta.mul(&theta_s))
        .add(&fields.phi);
    let raw = theta_sss
        .sub(&fields.a.mul(&theta_s))
        .sub(&fields.delta.mul(&u_s))
        .add(&fields.psi);
    let mean = raw.mean();
    Ok(RhsBundle {
        theta_t,
        gamma_t: RealField::zeros(state.grid()),
        length_t: fields.length_t,
        u_t: Some(raw.map(|v| v - mean)),
        kind: RhsKind::Quasilinear,
    })
}

/// Relative L² gap between kinematic θ_t and H(u) − δθ_s + φ̃.
pub fn theta_residual(state: &CurveState, fields: &DerivedFields) -> Result<f64> {
    let q = quasilinear_rhs(state, fields)?;
    let norm = fields.theta_t.l2_alpha();
    let gap = fields.theta_t.sub(&q.theta_t).l2_alpha();
    Ok(relative_residual(gap, norm))
}

/// Below this reference norm residuals are reported in absolute terms, since
/// a relative gap between two roundoff-sized fields carries no information.
pub const RESIDUAL_NORM_FLOOR: f64 = 1e-8;

pub fn relative_residual(gap: f64, norm: f64) -> f64 {
    if norm > RESIDUAL_NORM_FLOOR {
        gap / norm
    } else {
        gap
    }
}

/// 2×2 linear block of mode k at period length L.
#[derive(Clone, Copy, Debug)]
struct ModeBlock {
    b: f64,
    c: f64,
    omega: f64,
}

impl ModeBlock {
    fn new(k: i64, length: f64, gravity: f64) -> Self {
        let ks = arc_wavenumber(k, length).abs();
        let b = 0.5 * ks;
        let c = -2.0 * (ks * ks + gravity);
        let omega = (-b * c).max(0.0).sqrt();
        Self { b, c, omega }
    }

    fn apply(&self, y: [Complex64; 2]) -> [Complex64; 2] {
        [self.b * y[1], self.c * y[0]]
    }

    /// p(hA) = α I + β hA for the given scalar coefficients.
    fn combo(&self, h: f64, alpha: f64, beta: f64, y: [Complex64; 2]) -> [Complex64; 2] {
        let ay = self.apply(y);
        [alpha * y[0] + beta * h * ay[0], alpha * y[1] + beta * h * ay[1]]
    }

    /// Coefficients of e^{hA}, φ₁(hA), φ₂(hA) in the basis {I, hA}.
    fn phi_coefficients(&self, h: f64) -> [(f64, f64); 3] {
        let x = self.omega * h;
        let x2 = x * x;
        if x < 0.5 {
            // S_j = Σ_m (−1)^m x^{2m}/(2m + j)!, truncated well below roundoff.
            let series = |j: u32| {
                let mut term = 1.0 / (1..=j).map(f64::from).product::<f64>();
                let mut sum = term;
                for m in 1..12u32 {
                    term *= -x2 / f64::from((2 * m + j - 1) * (2 * m + j));
                    sum += term;
                }
                sum
            };
            let s: Vec<f64> = (0..4).map(series).collect();
            [(s[0], s[1]), (s[1], s[2]), (s[2], s[3])]
        } else {
            let (sn, cs) = x.sin_cos();
            [
                (cs, sn / x),
                (sn / x, (1.0 - cs) / x2),
                ((1.0 - cs) / x2, (x - sn) / (x2 * x)),
            ]
        }
    }

    /// Solves (σI − A)y = r.
    fn solve_shifted(&self, sigma: f64, r: [Complex64; 2]) -> [Complex64; 2] {
        let det = sigma * sigma - self.b * self.c;
        [(sigma * r[0] + self.b * r[1]) / det, (self.c * r[0] + sigma * r[1]) / det]
    }
}

/// Spectral representation of (θ, γ) used by the exponential and IMEX schemes.
struct Modes {
    theta: Vec<Complex64>,
    gamma: Vec<Complex64>,
}

impl Modes {
    fn of(theta: &RealField, gamma: &RealField) -> Self {
        Self {
            theta: theta.coefficients().to_vec(),
            gamma: gamma.coefficients().to_vec(),
        }
    }

    fn pair(&self, slot: usize) -> [Complex64; 2] {
        [self.theta[slot], self.gamma[slot]]
    }
}

/// Nonlinear remainder N = F − Ay in Fourier space.
fn remainder_modes(grid: &PeriodicGrid, y: &Modes, f: &Modes, blocks: &[ModeBlock]) -> Modes {
    let n = grid.n();
    let mut out = Modes {
        theta: vec![Complex64::new(0.0, 0.0); n],
        gamma: vec![Complex64::new(0.0, 0.0); n],
    };
    for slot in 0..n {
        let ay = blocks[slot].apply(y.pair(slot));
        out.theta[slot] = f.theta[slot] - ay[0];
        out.gamma[slot] = f.gamma[slot] - ay[1];
    }
    out
}

fn blocks_for(grid: &PeriodicGrid, length: f64, gravity: f64) -> Vec<ModeBlock> {
    (0..grid.n())
        .map(|slot| ModeBlock::new(grid.wavenumber(slot), length, gravity))
        .collect()
}

fn assemble(grid: &PeriodicGrid, modes: Modes, length: f64, time: f64) -> Result<CurveState> {
    let theta = dealias(&SpectralField::from_coefficients(grid, modes.theta)?);
    let gamma = dealias(&SpectralField::from_coefficients(grid, modes.gamma)?);
    finish(theta, gamma, length, time)
}

fn finish(theta: RealField, gamma: RealField, length: f64, time: f64) -> Result<CurveState> {
    if let Some(j) = theta
        .samples()
        .iter()
        .chain(gamma.samples())
        .position(|v| !v.is_finite())
    {
        return Err(Error::NonFinite(j % theta.len()));
    }
    if !length.is_finite() || length <= 0.0 {
        return Err(Error::NonFinite(0));
    }
    let (theta, length) = closure_project(&theta, length)?;
    CurveState::new(theta, gamma, length, time)
}

/// Multi-step integrator for the kinematic system.
#[derive(Clone, Debug)]
pub struct Integrator {
    pub scheme: Scheme,
    pub dt: f64,
    pub model: Model,
    /// Previous (state, rhs) for the BDF2 extrapolation.
    history: Option<(CurveState, RhsBundle)>,
}

/// Result of one step: the new state and the fields at the start of the step.
pub struct StepOutcome {
    pub state: CurveState,
    pub fields: DerivedFields,
}

impl Integrator {
    pub fn new(scheme: Scheme, dt: f64, model: Model) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        Ok(Self {
            scheme,
            dt,
            model,
            history: None,
        })
    }

    /// Forgets multi-step history, for example after an external state change.
    pub fn reset(&mut self) {
        self.history = None;
    }

    pub fn step(&mut self, state: &CurveState) -> Result<StepOutcome> {
        let (rhs, fields) = kinematic_rhs(state, &self.model)?;
        fields.check_taylor_sign()?;
        let next = match self.scheme {
            Scheme::EtdRk2 => self.etd_rk2(state, &rhs)?,
            Scheme::ExplicitRk4 => self.rk4(state, &rhs)?,
            Scheme::ImexBdf2 => match self.history.take() {
                None => self.etd_rk2(state, &rhs)?,
                Some((prev, prev_rhs)) => self.bdf2(state, &rhs, &prev, &prev_rhs)?,
            },
        };
        if self.scheme == Scheme::ImexBdf2 {
            self.history = Some((state.clone(), rhs));
        }
        Ok(StepOutcome { state: next, fields })
    }

    fn etd_rk2(&self, state: &CurveState, rhs: &RhsBundle) -> Result<CurveState> {
        let h = self.dt;
        let grid = state.grid();
        let blocks = blocks_for(grid, state.length, self.model.gravity);
        let y = Modes::of(&state.theta, &state.gamma);
        let f = Modes::of(&rhs.theta_t, &rhs.gamma_t);
        let n0 = remainder_modes(grid, &y, &f, &blocks);

        let mut stage = Modes {
            theta: y.theta.clone(),
            gamma: y.gamma.clone(),
        };
        for slot in 0..grid.n() {
            let b = &blocks[slot];
            let [e, p1, _] = b.phi_coefficients(h);
            let ey = b.combo(h, e.0, e.1, y.pair(slot));
            let pn = b.combo(h, p1.0, p1.1, n0.pair(slot));
            stage.theta[slot] = ey[0] + h * pn[0];
            stage.gamma[slot] = ey[1] + h * pn[1];
        }
        let stage_length = state.length + h * rhs.length_t;
        let stage_state = CurveState::new(
            SpectralField::from_coefficients(grid, stage.theta.clone())?,
            SpectralField::from_coefficients(grid, stage.gamma.clone())?,
            stage_length,
            state.time + h,
        )?;
        let (rhs1, _) = kinematic_rhs(&stage_state, &self.model)?;
        let f1 = Modes::of(&rhs1.theta_t, &rhs1.gamma_t);
        let y1 = Modes::of(&stage_state.theta, &stage_state.gamma);
        let n1 = remainder_modes(grid, &y1, &f1, &blocks);

        for slot in 0..grid.n() {
            let b = &blocks[slot];
            let [_, _, p2] = b.phi_coefficients(h);
            let diff = [n1.theta[slot] - n0.theta[slot], n1.gamma[slot] - n0.gamma[slot]];
            let corr = b.combo(h, p2.0, p2.1, diff);
            stage.theta[slot] += h * corr[0];
            stage.gamma[slot] += h * corr[1];
        }
        let length = state.length + 0.5 * h * (rhs.length_t + rhs1.length_t);
        assemble(grid, stage, length, state.time + h)
    }

    fn bdf2(&self, state: &CurveState, rhs: &RhsBundle, prev: &CurveState, prev_rhs: &RhsBundle) -> Result<CurveState> {
        let h = self.dt;
        let grid = state.grid();
        let blocks = blocks_for(grid, state.length, self.model.gravity);
        let prev_blocks = blocks_for(grid, prev.length, self.model.gravity);
        let y = Modes::of(&state.theta, &state.gamma);
        let y_prev = Modes::of(&prev.theta, &prev.gamma);
        let n0 = remainder_modes(grid, &y, &Modes::of(&rhs.theta_t, &rhs.gamma_t), &blocks);
        let n_prev = remainder_modes(
            grid,
            &y_prev,
            &Modes::of(&prev_rhs.theta_t, &prev_rhs.gamma_t),
            &prev_blocks,
        );
        let mut out = Modes {
            theta: vec![Complex64::new(0.0, 0.0); grid.n()],
            gamma: vec![Complex64::new(0.0, 0.0); grid.n()],
        };
        for slot in 0..grid.n() {
            let r = [
                (4.0 * y.theta[slot] - y_prev.theta[slot]) / (2.0 * h) + 2.0 * n0.theta[slot] - n_prev.theta[slot],
                (4.0 * y.gamma[slot] - y_prev.gamma[slot]) / (2.0 * h) + 2.0 * n0.gamma[slot] - n_prev.gamma[slot],
            ];
            let s = blocks[slot].solve_shifted(1.5 / h, r);
            out.theta[slot] = s[0];
            out.gamma[slot] = s[1];
        }
        let length = (4.0 * state.length - prev.length + 2.0 * h * (2.0 * rhs.length_t - prev_rhs.length_t)) / 3.0;
        assemble(grid, out, length, state.time + h)
    }

    fn rk4(&self, state: &CurveState, k1: &RhsBundle) -> Result<CurveState> {
        let h = self.dt;
        let limit = self.model.explicit_limit(state);
        if h > limit {
            return Err(Error::Cfl { dt: h, limit });
        }
        let shifted = |k: &RhsBundle, c: f64| -> Result<CurveState> {
            CurveState::new(
                state.theta.add(&k.theta_t.scale(c * h)),
                state.gamma.add(&k.gamma_t.scale(c * h)),
                state.length + c * h * k.length_t,
                state.time + c * h,
            )
        };
        let (k2, _) = kinematic_rhs(&shifted(k1, 0.5)?, &self.model)?;
        let (k3, _) = kinematic_rhs(&shifted(&k2, 0.5)?, &self.model)?;
        let (k4, _) = kinematic_rhs(&shifted(&k3, 1.0)?, &self.model)?;
        let combine = |f: fn(&RhsBundle) -> &RealField| {
            f(k1).add(&f(&k2).scale(2.0)).add(&f(&k3).scale(2.0)).add(f(&k4)).scale(h / 6.0)
        };
        let theta = state.theta.add(&combine(|k| &k.theta_t));
        let gamma = state.gamma.add(&combine(|k| &k.gamma_t));
        let length = state.length + h / 6.0 * (k1.length_t + 2.0 * k2.length_t + 2.0 * k3.length_t + k4.length_t);
        finish(dealias(&theta), dealias(&gamma), length, state.time + h)
    }
}

/// One step of a single-step scheme. `ImexBdf2` falls back to its
/// exponential start-up step here; use [`Integrator`] for genuine BDF2.
pub fn step(state: &CurveState, dt: f64, scheme: Scheme, model: &Model) -> Result<CurveState> {
    Ok(Integrator::new(scheme, dt, *model)?.step(state)?.state)
}

/// Right-moving linear travelling wave: θ = ε cos kα with closure restored
/// through L, and γ = (2ω/k_s) ε sin kα from the mode-k eigenvector.
pub fn travelling_wave(grid: &PeriodicGrid, k: u32, amplitude: f64, gravity: f64) -> Result<CurveState> {
    if k == 0 || k as usize >= grid.n() / 3 {
        return Err(Error::InvalidParameter(format!(
            "mode {k} must lie in 1..{} on a {}-point grid",
            grid.n() / 3,
            grid.n()
        )));
    }
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidParameter(format!("amplitude must be non-negative, got {amplitude}")));
    }
    let kf = k as f64;
    let theta = RealField::from_fn(grid, |a| amplitude * (kf * a).cos());
    let mean_cos: f64 = theta.samples().iter().map(|t| t.cos()).sum::<f64>() / grid.n() as f64;
    let (theta, length) = closure_project(&theta, 2.0 * PI / mean_cos)?;
    let ks = arc_wavenumber(k as i64, length);
    let omega = (ks * (ks * ks + gravity)).sqrt();
    let gamma = RealField::from_fn(grid, |a| 2.0 * omega / ks * amplitude * (kf * a).sin());
    CurveState::new(theta, gamma, length, 0.0)
}

/// Linear dispersion relation ω(k) = (|k_s|³ + g|k_s|)^{1/2}.
pub fn linear_frequency(k: i64, length: f64, gravity: f64) -> f64 {
    ModeBlock::new(k, length, gravity).omega
}

/// State of the quasilinear system: (θ, u, mean δ, L).
#[derive(Clone, Debug)]
pub struct QuasilinearState {
    pub theta: RealField,
    pub u: RealField,
    pub delta_mean: f64,
    pub length: f64,
    pub time: f64,
}

impl QuasilinearState {
    pub fn from_curve(state: &CurveState, model: &Model) -> Result<Self> {
        let ws = model.workspace(state)?;
        let fields = DerivedFields::compute(state, &ws, model.gravity)?;
        Ok(Self {
            theta: state.theta.clone(),
            u: fields.u,
            delta_mean: fields.delta.mean(),
            length: state.length,
            time: state.time,
        })
    }

    /// δ = ∂_s^{−1}u + mean δ.
    pub fn delta(&self) -> RealField {
        let mean = self.delta_mean;
        antiderivative_alpha(&self.u).map(|v| v * self.length / (2.0 * PI) + mean)
    }

    /// Recovers γ from δ by solving (I − K*)(γ/2) − T[γ] = δ.
    pub fn to_curve(&self, model: &Model) -> Result<CurveState> {
        let grid = self.theta.grid().clone();
        let probe = CurveState::new(self.theta.clone(), RealField::zeros(&grid), self.length, self.time)?;
        let ws = model.workspace(&probe)?;
        let delta = self.delta();
        let apply = |g: &[f64]| -> Vec<f64> {
            let gamma = SpectralField::from_samples_unchecked(&grid, g.to_vec());
            let s = CurveState {
                gamma,
                ..probe.clone()
            };
            let w_bar = crate::birkhoff_rott::birkhoff_rott_velocity(&s, &ws);
            let normal = normal_velocity(&s, &w_bar);
            let (t, _) = tangential_velocity(&s, &normal);
            let v = w_bar.zip_map(&s.theta, |w, th| (w * Complex64::from_polar(1.0, th)).re);
            v.sub(&t).into_samples()
        };
        let (gamma, _) = gmres(apply, delta.samples(), model.solver_tolerance, 200)?;
        CurveState::new(
            self.theta.clone(),
            SpectralField::from_samples(&grid, gamma)?,
            self.length,
            self.time,
        )
    }
}

/// d/dt (θ, u, mean δ, L) from the quasilinear system.
pub fn quasilinear_rates(q: &QuasilinearState, model: &Model) -> Result<(RealField, RealField, f64, f64)> {
    let state = q.to_curve(model)?;
    let ws = model.workspace(&state)?;
    let fields = DerivedFields::compute(&state, &ws, model.gravity)?;
    fields.check_taylor_sign()?;
    let rhs = quasilinear_rhs(&state, &fields)?;
    // mean δ_t = mean(θ_ss − δũ − g sin θ + Uθ_t − T_t); θ_ss and T_t have zero mean.
    let g = model.gravity;
    let delta_mean_t = fields
        .delta
        .mul(&fields.u_tilde)
        .scale(-1.0)
        .sub(&state.theta.map(|t| g * t.sin()))
        .add(&fields.normal_velocity.mul(&fields.theta_t))
        .mean();
    Ok((rhs.theta_t, rhs.u_t.expect("quasilinear bundle carries u_t"), delta_mean_t, rhs.length_t))
}

/// Classical RK4 step of the quasilinear system.
pub fn quasilinear_step(q: &QuasilinearState, dt: f64, model: &Model) -> Result<QuasilinearState> {
    let shifted = |k: &(RealField, RealField, f64, f64), c: f64| QuasilinearState {
        theta: q.theta.add(&k.0.scale(c * dt)),
        u: q.u.add(&k.1.scale(c * dt)),
        delta_mean: q.delta_mean + c * dt * k.2,
        length: q.length + c * dt * k.3,
        time: q.time + c * dt,
    };
    let k1 = quasilinear_rates(q, model)?;
    let k2 = quasilinear_rates(&shifted(&k1, 0.5), model)?;
    let k3 = quasilinear_rates(&shifted(&k2, 0.5), model)?;
    let k4 = quasilinear_rates(&shifted(&k3, 1.0), model)?;
    let w = dt / 6.0;
    let theta = q
        .theta
        .add(&k1.0.add(&k2.0.scale(2.0)).add(&k3.0.scale(2.0)).add(&k4.0).scale(w));
    let u = q.u.add(&k1.1.add(&k2.1.scale(2.0)).add(&k3.1.scale(2.0)).add(&k4.1).scale(w));
    let length = q.length + w * (k1.3 + 2.0 * k2.3 + 2.0 * k3.3 + k4.3);
    let (theta, length) = closure_project(&dealias(&theta), length)?;
    Ok(QuasilinearState {
        theta,
        u: dealias(&u),
        delta_mean: q.delta_mean + w * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
        length,
        time: q.time + dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_functions_match_matrix_series() {
        for k in [0i64, 1, 3, 20] {
            let b = ModeBlock::new(k, 2.0 * PI, 1.0);
            for h in [1e-6, 1e-4, 1e-2, 0.3] {
                if b.omega * h > 4.0 {
                    // The reference series loses accuracy to cancellation here.
                    continue;
                }
                let y = [Complex64::new(0.3, -0.1), Complex64::new(-0.7, 0.2)];
                // Σ_m (hA)^m y / (m + j)! for j = 0, 1, 2.
                let mut power = y;
                let mut sums = [[Complex64::new(0.0, 0.0); 2]; 3];
                let mut fact = [1.0, 1.0, 2.0];
                for m in 0..60 {
                    for j in 0..3 {
                        for i in 0..2 {
                            sums[j][i] += power[i] / fact[j];
                        }
                        fact[j] *= (m + j + 1) as f64;
                    }
                    let next = b.apply(power);
                    power = [next[0] * h, next[1] * h];
                }
                let coefs = b.phi_coefficients(h);
                for j in 0..3 {
                    let got = b.combo(h, coefs[j].0, coefs[j].1, y);
                    for i in 0..2 {
                        let scale = 1.0 + sums[j][i].norm();
                        assert!((got[i] - sums[j][i]).norm() < 1e-13 * scale, "k={k} h={h} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn flat_rest_is_a_fixed_point() {
        let g = PeriodicGrid::new(32).unwrap();
        let model = Model::default();
        for scheme in [Scheme::EtdRk2, Scheme::ImexBdf2, Scheme::ExplicitRk4] {
            let mut s = CurveState::flat(&g, 0.0);
            let mut integ = Integrator::new(scheme, 0.01, model).unwrap();
            for _ in 0..50 {
                s = integ.step(&s).unwrap().state;
            }
            assert!(s.theta.max_abs() < 1e-12 && s.gamma.max_abs() < 1e-12);
            assert!((s.length - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn galilean_steady_state() {
        let g = PeriodicGrid::new(32).unwrap();
        let s = CurveState::flat(&g, 0.6);
        let (rhs, _) = kinematic_rhs(&s, &Model::default()).unwrap();
        assert!(rhs.theta_t.max_abs() < 1e-12);
        assert!(rhs.gamma_t.max_abs() < 1e-12);
        assert!(rhs.length_t.abs() < 1e-12);
    }

    #[test]
    fn cfl_is_enforced_for_rk4() {
        let g = PeriodicGrid::new(64).unwrap();
        let s = CurveState::flat(&g, 0.0);
        let err = step(&s, 0.1, Scheme::ExplicitRk4, &Model::default()).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
    }

    #[test]
    fn scheme_names_parse() {
        assert_eq!("etd_rk2".parse::<Scheme>().unwrap(), Scheme::EtdRk2);
        assert!("rk45".parse::<Scheme>().is_err());
    }
}
