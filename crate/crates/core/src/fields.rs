//! Derived interface quantities: velocities, frame mismatch, Taylor sign and
//! the error terms of the quasilinear system.
//!
//! Two time derivatives of θ appear. `theta_t` is the rate at a fixed node of
//! the equal-arclength frame; `theta_t_lag` = θ_t + δθ_s follows fluid
//! particles and equals Im(e^{−iθ}∂_sW).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::birkhoff_rott::{
    birkhoff_rott_velocity, cauchy_transform, commutator_exp2itheta, commutator_velocity, double_layer,
    remainder_r, KernelWorkspace,
};
use crate::curve::{curvature_pressure, CurveState};
use crate::error::{Error, Result};
use crate::layer_solve::{apply_second_kind, solve_second_kind, SecondKindProblem, Side, Sign, SolveDiagnostics};
use crate::spectral::{
    alpha_derivative, antiderivative_alpha, fourier_derivative, hilbert_transform, ComplexField, RealField,
    SpectralField,
};

/// Discrepancy between the two δ routes above which an operator bug is assumed.
pub const DELTA_CROSS_CHECK_LIMIT: f64 = 1e-6;

/// How the derived quantities were obtained, for diagnostics.
#[derive(Clone, Copy, Debug, Default)]
pub struct Provenance {
    /// max |δ_kernel − δ_velocity| between the two δ routes.
    pub delta_route_gap: f64,
    /// Second-kind solve for the Taylor sign.
    pub taylor_solve: SolveDiagnostics,
    pub gravity: f64,
}

#[derive(Clone, Debug)]
pub struct DerivedFields {
    /// Conjugate interface velocity W̄.
    pub w_bar: ComplexField,
    pub normal_velocity: RealField,
    pub tangential_velocity: RealField,
    pub length_t: f64,
    pub delta: RealField,
    pub u: RealField,
    /// u + L_t/L, the stretching rate Re(e^{−iθ}∂_sW).
    pub u_tilde: RealField,
    pub theta_t: RealField,
    pub theta_t_lag: RealField,
    pub a: RealField,
    pub phi: RealField,
    pub psi: RealField,
    pub omega: Option<RealField>,
    pub provenance: Provenance,
}

impl DerivedFields {
    /// Everything except ω̃, which needs neighbouring times.
    pub fn compute(state: &CurveState, ws: &KernelWorkspace, gravity: f64) -> Result<Self> {
        let w_bar = birkhoff_rott_velocity(state, ws);
        let normal = normal_velocity(state, &w_bar);
        let (tangential, length_t) = tangential_velocity(state, &normal);
        let (delta, u, gap) = delta_u(state, &w_bar, &tangential, ws)?;
        let theta_t = theta_rate(state, &normal, &tangential);
        let theta_s = fourier_derivative(&state.theta, 1, state.length)?;
        let theta_t_lag = theta_t.add(&delta.mul(&theta_s));
        let u_tilde = u.map(|v| v + length_t / state.length);
        let (a, taylor_solve) = taylor_sign(state, &w_bar, ws, gravity)?;
        let phi = phi_error(&w_bar, &u, &theta_t_lag, ws);
        let psi = psi_error(&u_tilde, &theta_t_lag);
        Ok(Self {
            w_bar,
            normal_velocity: normal,
            tangential_velocity: tangential,
            length_t,
            delta,
            u,
            u_tilde,
            theta_t,
            theta_t_lag,
            a,
            phi,
            psi,
            omega: None,
            provenance: Provenance {
                delta_route_gap: gap,
                taylor_solve,
                gravity,
            },
        })
    }

    /// W = conj(W̄)
    pub fn w(&self) -> ComplexField {
        self.w_bar.conj()
    }

    /// Fails with the offending node if a ≤ 0 anywhere.
    pub fn check_taylor_sign(&self) -> Result<()> {
        check_taylor_sign(&self.a)
    }
}

pub fn check_taylor_sign(a: &RealField) -> Result<()> {
    let (node, min) = a
        .samples()
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(j0, m), (j, &v)| if v < m { (j, v) } else { (j0, m) });
    if min > 0.0 {
        Ok(())
    } else {
        Err(Error::TaylorSign { min, node })
    }
}

/// U = Re(W̄ · i e^{iθ})
pub fn normal_velocity(state: &CurveState, w_bar: &ComplexField) -> RealField {
    w_bar.zip_map(&state.theta, |w, t| (w * Complex64::from_polar(1.0, t) * Complex64::i()).re)
}

/// Tangential velocity of the equal-arclength frame and the rate of change of
/// the period length.
///
/// T_α = θ_αU − mean(θ_αU) with mean(T) = 0, and L_t = −∫₀^{2π}θ_αU dα.
pub fn tangential_velocity(state: &CurveState, normal: &RealField) -> (RealField, f64) {
    let source = alpha_derivative(&state.theta, 1).mul(normal);
    let length_t = -2.0 * PI * source.mean();
    (antiderivative_alpha(&source), length_t)
}

/// θ_t = (2π/L)(U_α + Tθ_α) at fixed frame nodes.
pub fn theta_rate(state: &CurveState, normal: &RealField, tangential: &RealField) -> RealField {
    let scale = 2.0 * PI / state.length;
    let theta_alpha = alpha_derivative(&state.theta, 1);
    alpha_derivative(normal, 1)
        .add(&tangential.mul(&theta_alpha))
        .scale(scale)
}

/// δ = (I − K*)(γ/2) − T and u = δ_s, cross-checked against Re(W̄e^{iθ}) − T.
///
/// Returns the route discrepancy alongside; fails above [`DELTA_CROSS_CHECK_LIMIT`].
pub fn delta_u(
    state: &CurveState,
    w_bar: &ComplexField,
    tangential: &RealField,
    ws: &KernelWorkspace,
) -> Result<(RealField, RealField, f64)> {
    let half_gamma = state.gamma.scale(0.5);
    let delta = apply_second_kind(Sign::Minus, Side::Adjoint, &half_gamma, ws).sub(tangential);
    let via_velocity = w_bar
        .zip_map(&state.theta, |w, t| (w * Complex64::from_polar(1.0, t)).re)
        .sub(tangential);
    let gap = delta.sub(&via_velocity).max_abs();
    if gap > DELTA_CROSS_CHECK_LIMIT {
        return Err(Error::CrossCheck {
            what: "delta",
            discrepancy: gap,
        });
    }
    let u = fourier_derivative(&delta, 1, state.length)?;
    Ok((delta, u, gap))
}

/// Taylor sign from (I + K*)a = Re{ie^{iθ}([W, 𝔥](∂_sW̄/ξ_s) − ig(I − 𝔥)1 + (I − 𝔥)(P_s e^{−iθ}))}.
pub fn taylor_sign(
    state: &CurveState,
    w_bar: &ComplexField,
    ws: &KernelWorkspace,
    gravity: f64,
) -> Result<(RealField, SolveDiagnostics)> {
    let grid = state.grid();
    let commutator = commutator_velocity(&w_bar.conj(), w_bar, ws);

    let one = RealField::constant(grid, 1.0);
    let h_one = cauchy_transform(&one, ws);

    let pressure_s = fourier_derivative(&curvature_pressure(state), 1, state.length)?;
    let forcing = pressure_s.zip_map(&state.theta, |p, t| p * Complex64::from_polar(1.0, -t));
    let h_forcing = cauchy_transform(&forcing, ws);

    let n = grid.n();
    let rhs: Vec<f64> = (0..n)
        .map(|j| {
            let ie = Complex64::i() * Complex64::from_polar(1.0, state.theta.samples()[j]);
            let gravity_term = -Complex64::i() * gravity * (1.0 - h_one.samples()[j]);
            let pressure_term = forcing.samples()[j] - h_forcing.samples()[j];
            (ie * (commutator.samples()[j] + gravity_term + pressure_term)).re
        })
        .collect();
    let rhs = SpectralField::from_samples(grid, rhs)?;
    solve_second_kind(&SecondKindProblem::new(Sign::Plus, Side::Adjoint, rhs), ws)
}

/// φ̃ = Re R(u) + Re 𝔥(θ_t) + Im [𝔥, e^{2iθ}](∂_sW̄/ξ_s), with θ_t following particles.
///
/// The combination −iRe𝔥(u) + R(u) has been reduced to Re R(u) through
/// Re 𝔥u = Im R(u).
pub fn phi_error(w_bar: &ComplexField, u: &RealField, theta_t_lag: &RealField, ws: &KernelWorkspace) -> RealField {
    let r = remainder_r(u, ws).re();
    let k = double_layer(theta_t_lag, ws);
    let c = commutator_exp2itheta(w_bar, ws).im();
    r.add(&k).add(&c)
}

/// ψ̃ = (θ_t)² − ũ², with θ_t following particles and ũ = u + L_t/L.
pub fn psi_error(u_tilde: &RealField, theta_t_lag: &RealField) -> RealField {
    theta_t_lag.zip_map(u_tilde, |t, v| t * t - v * v)
}

/// Complex φ = φ̃ − R(u), the part of θ_t (following particles) beyond i𝔥u.
pub fn phi_complex(fields: &DerivedFields, ws: &KernelWorkspace) -> ComplexField {
    fields.phi.to_complex().sub(&remainder_r(&fields.u, ws))
}

/// One member of a time window for [`omega_error`].
pub struct WindowPoint<'a> {
    pub state: &'a CurveState,
    pub fields: &'a DerivedFields,
    pub ws: &'a KernelWorkspace,
}

/// ω̃ at the middle of a window of three states spaced `dt` apart:
///
/// ω̃ = Re{D_tφ + i[W, 𝔥](∂_su/ξ_s) + R(D_tu)} + 2ũθ_t − θ_ssθ_s + H(δu_s)
///
/// where D_t = ∂_t + δ∂_s and ∂_t is taken by centred differences.
/// Returns (ω̃, ∂_tu) so callers can audit a_s = H(u_t) + ω̃.
pub fn omega_error(window: [WindowPoint<'_>; 3], times: [f64; 3]) -> Result<(RealField, RealField)> {
    let (h0, h1) = (times[1] - times[0], times[2] - times[1]);
    if !(h0 > 0.0) || (h0 - h1).abs() > 1e-9 * h0.max(h1) {
        return Err(Error::InvalidParameter(format!(
            "window spacing must be uniform, got {h0:e} and {h1:e}"
        )));
    }
    let dt = 0.5 * (h0 + h1);
    let [prev, mid, next] = window;
    let length = mid.state.length;
    let f = mid.fields;

    let u_t = next.fields.u.sub(&prev.fields.u).scale(0.5 / dt);
    let phi_prev = phi_complex(prev.fields, prev.ws);
    let phi_next = phi_complex(next.fields, next.ws);
    let phi_mid = phi_complex(f, mid.ws);
    let phi_t = phi_next.sub(&phi_prev).scale(Complex64::new(0.5 / dt, 0.0));
    let phi_s = fourier_derivative(&phi_mid, 1, length)?;
    let delta_c = f.delta.to_complex();
    let phi_lag = phi_t.add(&phi_s.mul(&delta_c));

    let u_s = fourier_derivative(&f.u, 1, length)?;
    let transport = f.delta.mul(&u_s);
    let u_lag = u_t.add(&transport);

    let commutator = commutator_velocity(&f.w(), &f.u, mid.ws).scale(Complex64::i());
    let r = remainder_r(&u_lag, mid.ws);
    let complex_part = phi_lag.add(&commutator).add(&r).re();

    let theta_s = fourier_derivative(&mid.state.theta, 1, length)?;
    let theta_ss = fourier_derivative(&mid.state.theta, 2, length)?;
    let local = f
        .u_tilde
        .mul(&f.theta_t_lag)
        .scale(2.0)
        .sub(&theta_ss.mul(&theta_s))
        .add(&hilbert_transform(&transport));
    Ok((complex_part.add(&local), u_t))
}
