//! Energy functional and empirical audits of the a priori estimates.
//!
//! With ∂ = ∂_s, D = H∂_s, M = ‖θ_s(0)‖_∞ frozen at the start of a run and
//! inner products ⟨f, g⟩ = ∫ f g ds:
//!
//! ```text
//! E = ‖θ‖² + ‖δ‖² + ‖γ‖² + ‖u‖² + L² + Σ_{k=1}^{r−1} ⟨∂^kγ, ∂^kγ⟩ + Σ_{k=1}^{r} (E¹_k + E²_k + E³_k)
//! E¹_k = ½(⟨∂^{k+1}θ, ∂^{k+1}θ⟩ + ⟨a∂^kθ, ∂^kθ⟩ + ⟨∂^{k−1}u, D∂^{k−1}u⟩)
//! E²_k = ⟨∂^{k−1}u, (10M − θ_s)∂^{k−1}u⟩
//! E³_k = 10M⟨∂^kθ, D∂^kθ⟩
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::birkhoff_rott::{commutator_exp2itheta, commutator_velocity, remainder_r, KernelWorkspace};
use crate::curve::{closure_project, CurveState};
use crate::dynamics::{Integrator, Model, Scheme};
use crate::error::{Error, Result};
use crate::fields::{omega_error, DerivedFields, WindowPoint};
use crate::spectral::{
    apply_d, fourier_derivative, hilbert_transform, inner_product, resample, sobolev_norm, PeriodicGrid, RealField,
};

/// Largest polynomial coefficient the rate audit accepts.
pub const MAX_RATE_COEFFICIENT: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub theta_l2: f64,
    pub delta_l2: f64,
    pub gamma_l2: f64,
    pub u_l2: f64,
    pub length_sq: f64,
    /// ⟨∂^kγ, ∂^kγ⟩ for k = 1..r−1.
    pub gamma_terms: Vec<f64>,
    pub ek1: Vec<f64>,
    pub ek2: Vec<f64>,
    pub ek3: Vec<f64>,
    pub theta_s0_sup: f64,
    pub total: f64,
    /// 10M − θ_s changed sign somewhere, so E²_k may be negative.
    pub weight_sign_change: bool,
}

impl EnergyReport {
    pub fn sobolev_index(&self) -> usize {
        self.ek1.len()
    }

    /// CSV header for a report of Sobolev index `r`, in the order of [`Self::values`].
    pub fn column_names(r: usize) -> Vec<String> {
        let mut cols: Vec<String> = ["E_theta", "E_delta", "E_gamma", "E_u", "E_L2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend((1..r).map(|k| format!("E_gamma_d{k}")));
        for family in ["E1", "E2", "E3"] {
            cols.extend((1..=r).map(|k| format!("{family}_{k}")));
        }
        cols
    }

    /// Sub-terms in the documented column order.
    pub fn values(&self) -> Vec<f64> {
        let mut v = vec![self.theta_l2, self.delta_l2, self.gamma_l2, self.u_l2, self.length_sq];
        v.extend(&self.gamma_terms);
        v.extend(&self.ek1);
        v.extend(&self.ek2);
        v.extend(&self.ek3);
        v
    }
}

/// ‖θ_s‖_∞ over the grid nodes.
pub fn theta_s_sup(state: &CurveState) -> Result<f64> {
    Ok(fourier_derivative(&state.theta, 1, state.length)?.max_abs())
}

pub fn energy(state: &CurveState, fields: &DerivedFields, r: usize, theta_s0_sup: f64) -> Result<EnergyReport> {
    if r < 4 {
        return Err(Error::InvalidParameter(format!("Sobolev index must be at least 4, got {r}")));
    }
    let length = state.length;
    let ip = |f: &RealField, g: &RealField| inner_product(f, g, length);
    let d = |f: &RealField, m: u32| fourier_derivative(f, m, length);

    let theta_s = d(&state.theta, 1)?;
    let weight = theta_s.map(|v| 10.0 * theta_s0_sup - v);
    let weight_sign_change = weight.min() < 0.0;
    if weight_sign_change {
        log::warn!("10·sup|θ_s(0)| − θ_s changes sign at t = {}; E² terms may be negative", state.time);
    }

    let gamma_terms = (1..r)
        .map(|k| {
            let g = d(&state.gamma, k as u32)?;
            Ok(ip(&g, &g))
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut ek1, mut ek2, mut ek3) = (Vec::with_capacity(r), Vec::with_capacity(r), Vec::with_capacity(r));
    for k in 1..=r as u32 {
        let th_k = d(&state.theta, k)?;
        let th_k1 = d(&state.theta, k + 1)?;
        let u_k = d(&fields.u, k - 1)?;
        let du_k = apply_d(&u_k, length);
        ek1.push(0.5 * (ip(&th_k1, &th_k1) + ip(&fields.a.mul(&th_k), &th_k) + ip(&u_k, &du_k)));
        ek2.push(ip(&u_k, &weight.mul(&u_k)));
        ek3.push(10.0 * theta_s0_sup * ip(&th_k, &apply_d(&th_k, length)));
    }

    let mut report = EnergyReport {
        t: state.time,
        theta_l2: ip(&state.theta, &state.theta),
        delta_l2: ip(&fields.delta, &fields.delta),
        gamma_l2: ip(&state.gamma, &state.gamma),
        u_l2: ip(&fields.u, &fields.u),
        length_sq: length * length,
        gamma_terms,
        ek1,
        ek2,
        ek3,
        theta_s0_sup,
        total: 0.0,
        weight_sign_change,
    };
    report.total = report.values().iter().sum();
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateAudit {
    /// max dE/dt over interior samples.
    pub max_rate: f64,
    /// max dE/dt / (1 + E + E² + E³).
    pub max_ratio: f64,
    /// Coefficients c₀..c₃ of the fitted bound C(E); only one is non-zero.
    pub coefficients: [f64; 4],
    pub degree: usize,
    pub pass: bool,
}

/// Checks dE/dt ≤ C(E) along a uniformly sampled energy history.
///
/// dE/dt is taken by centred differences. The bound is the cheapest single
/// monomial c_d E^d (degree d ≤ 3, c_d ≥ 0) dominating every interior rate;
/// the audit passes when that coefficient is at most [`MAX_RATE_COEFFICIENT`].
pub fn energy_rate_audit(times: &[f64], energies: &[f64]) -> Result<RateAudit> {
    if times.len() != energies.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            got: energies.len(),
        });
    }
    if times.len() < 20 {
        return Err(Error::InvalidParameter(format!(
            "energy audit needs at least 20 samples, got {}",
            times.len()
        )));
    }
    if let Some(j) = energies.iter().position(|e| !e.is_finite()) {
        return Err(Error::NonFinite(j));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(h > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h) {
        return Err(Error::InvalidParameter("energy samples must be uniformly spaced".into()));
    }

    let rates: Vec<(f64, f64)> = (1..times.len() - 1)
        .map(|i| (energies[i], (energies[i + 1] - energies[i - 1]) / (2.0 * h)))
        .collect();
    let max_rate = rates.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let max_ratio = rates
        .iter()
        .map(|&(e, rate)| rate / (1.0 + e + e * e + e * e * e))
        .fold(f64::NEG_INFINITY, f64::max);

    let mut best = (f64::INFINITY, 0usize);
    for degree in 0..=3 {
        let c = rates
            .iter()
            .map(|&(e, rate)| if rate <= 0.0 { 0.0 } else { rate / e.abs().powi(degree as i32) })
            .fold(0.0, f64::max);
        if c.is_finite() && c <= MAX_RATE_COEFFICIENT {
            best = (c, degree);
            break;
        }
        if c < best.0 {
            best = (c, degree);
        }
    }
    let mut coefficients = [0.0; 4];
    coefficients[best.1] = best.0;
    Ok(RateAudit {
        max_rate,
        max_ratio,
        coefficients,
        degree: best.1,
        pass: best.0 <= MAX_RATE_COEFFICIENT,
    })
}

/// Empirical constant of one a priori estimate across an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub name: &'static str,
    pub max_ratio: f64,
}

/// Ratios (left side)/(right side with C = 1) for each estimate on one state.
pub fn estimate_ratios(state: &CurveState, model: &Model, r: usize) -> Result<Vec<EstimateRow>> {
    let length = state.length;
    let ws = model.workspace(state)?;
    let fields = DerivedFields::compute(state, &ws, model.gravity)?;
    let m0 = theta_s_sup(state)?;
    let e = energy(state, &fields, r, m0)?.total;
    let rf = r as f64;

    let window = omega_window(state, &fields, &ws, model)?;

    let w_bar_comm = commutator_exp2itheta(&fields.w_bar, &ws);
    let vel_comm = commutator_velocity(&fields.w(), &fields.u, &ws);
    let r_u = remainder_r(&fields.u, &ws);

    // [H, δ]∂^r f with f = θ.
    let dr = fourier_derivative(&state.theta, r as u32, length)?;
    let h_comm = hilbert_transform(&fields.delta.mul(&dr)).sub(&fields.delta.mul(&hilbert_transform(&dr)));
    let h_rhs = sobolev_norm(&fields.delta, rf + 0.5, length) * sobolev_norm(&state.theta, rf - 0.5, length);

    // Algebra property ‖fg‖_{H^1} ≤ C‖f‖_{H^r}‖g‖_{H^1} with f = θ, g = γ.
    let prod = state.theta.mul(&state.gamma);
    let p_rhs = sobolev_norm(&state.theta, rf, length) * sobolev_norm(&state.gamma, 1.0, length);

    let ratio = |lhs: f64, rhs: f64| if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(vec![
        EstimateRow {
            name: "remainder_R",
            max_ratio: ratio(sobolev_norm(&r_u, rf, length), e),
        },
        EstimateRow {
            name: "commutator_exp2itheta",
            max_ratio: ratio(sobolev_norm(&w_bar_comm, rf, length), e),
        },
        EstimateRow {
            name: "commutator_velocity",
            max_ratio: ratio(sobolev_norm(&vel_comm, rf - 1.0, length), e),
        },
        EstimateRow {
            name: "phi",
            max_ratio: ratio(sobolev_norm(&fields.phi, rf, length), e),
        },
        EstimateRow {
            name: "psi",
            max_ratio: ratio(sobolev_norm(&fields.psi, rf - 0.5, length), e),
        },
        EstimateRow {
            name: "omega",
            max_ratio: ratio(sobolev_norm(&window, 0.0, length), e),
        },
        EstimateRow {
            name: "hilbert_commutator",
            max_ratio: ratio(sobolev_norm(&h_comm, 0.5, length), h_rhs),
        },
        EstimateRow {
            name: "product",
            max_ratio: ratio(sobolev_norm(&prod, 1.0, length), p_rhs),
        },
    ])
}

/// ω̃ from a short centred window around `state`.
fn omega_window(state: &CurveState, fields: &DerivedFields, ws: &KernelWorkspace, model: &Model) -> Result<RealField> {
    let dt = 0.05 * model.explicit_limit(state);
    let mut forward = Integrator::new(Scheme::ExplicitRk4, dt, *model)?;
    let next = forward.step(state)?.state;
    let prev = step_back(state, dt, model)?;
    let ws_next = model.workspace(&next)?;
    let ws_prev = model.workspace(&prev)?;
    let f_next = DerivedFields::compute(&next, &ws_next, model.gravity)?;
    let f_prev = DerivedFields::compute(&prev, &ws_prev, model.gravity)?;
    let (omega, _) = omega_error(
        [
            WindowPoint { state: &prev, fields: &f_prev, ws: &ws_prev },
            WindowPoint { state, fields, ws },
            WindowPoint { state: &next, fields: &f_next, ws: &ws_next },
        ],
        [state.time - dt, state.time, state.time + dt],
    )?;
    Ok(omega)
}

/// One RK4 step backwards in time, by integrating the reversed system.
fn step_back(state: &CurveState, dt: f64, model: &Model) -> Result<CurveState> {
    use crate::dynamics::kinematic_rhs;
    let rates = |s: &CurveState| -> Result<(RealField, RealField, f64)> {
        let (r, _) = kinematic_rhs(s, model)?;
        Ok((r.theta_t, r.gamma_t, r.length_t))
    };
    let shifted = |k: &(RealField, RealField, f64), c: f64| {
        CurveState::new(
            state.theta.add(&k.0.scale(-c * dt)),
            state.gamma.add(&k.1.scale(-c * dt)),
            state.length - c * dt * k.2,
            state.time - c * dt,
        )
    };
    let k1 = rates(state)?;
    let k2 = rates(&shifted(&k1, 0.5)?)?;
    let k3 = rates(&shifted(&k2, 0.5)?)?;
    let k4 = rates(&shifted(&k3, 1.0)?)?;
    let w = -dt / 6.0;
    let theta = state.theta.add(&k1.0.add(&k2.0.scale(2.0)).add(&k3.0.scale(2.0)).add(&k4.0).scale(w));
    let gamma = state.gamma.add(&k1.1.add(&k2.1.scale(2.0)).add(&k3.1.scale(2.0)).add(&k4.1).scale(w));
    let length = state.length + w * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2);
    CurveState::new(theta, gamma, length, state.time - dt)
}

/// Seeded small-amplitude state with algebraically decaying spectrum up to `modes`.
pub fn random_state(grid: &PeriodicGrid, rng: &mut ChaCha8Rng, amplitude: f64, modes: usize) -> Result<CurveState> {
    let mut coeffs = |scale: f64| -> Vec<(f64, f64)> {
        (1..=modes)
            .map(|k| {
                let decay = scale / (k * k) as f64;
                (decay * rng.random_range(-1.0..1.0), decay * rng.random_range(-1.0..1.0))
            })
            .collect()
    };
    let tc = coeffs(amplitude);
    let gc = coeffs(amplitude);
    let synth = |c: &[(f64, f64)], a: f64| -> f64 {
        c.iter()
            .enumerate()
            .map(|(i, (p, q))| {
                let k = (i + 1) as f64;
                p * (k * a).cos() + q * (k * a).sin()
            })
            .sum()
    };
    let theta = RealField::from_fn(grid, |a| synth(&tc, a));
    let mean_cos: f64 = theta.samples().iter().map(|t| t.cos()).sum::<f64>() / grid.n() as f64;
    let (theta, length) = closure_project(&theta, 2.0 * std::f64::consts::PI / mean_cos)?;
    CurveState::new(theta, RealField::from_fn(grid, |a| synth(&gc, a)), length, 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateAudit {
    pub n: usize,
    pub seed: u64,
    /// (name, max ratio at N, max ratio at 2N, pass)
    pub rows: Vec<(String, f64, f64, bool)>,
    pub pass: bool,
}

/// Runs [`estimate_ratios`] over a seeded ensemble at N and 2N and checks that
/// no empirical constant grows by more than 2× under refinement.
pub fn estimate_audit(n: usize, r: usize, seed: u64, members: usize, model: &Model) -> Result<EstimateAudit> {
    let coarse = PeriodicGrid::new(n)?;
    let fine = PeriodicGrid::new(2 * n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maxima: Vec<(&'static str, f64, f64)> = Vec::new();
    for _ in 0..members {
        let s = random_state(&coarse, &mut rng, 0.05, 6)?;
        let refined = CurveState::new(resample(&s.theta, &fine), resample(&s.gamma, &fine), s.length, 0.0)?;
        let a = estimate_ratios(&s, model, r)?;
        let b = estimate_ratios(&refined, model, r)?;
        if maxima.is_empty() {
            maxima = a.iter().map(|row| (row.name, 0.0, 0.0)).collect();
        }
        for ((m, x), y) in maxima.iter_mut().zip(&a).zip(&b) {
            m.1 = m.1.max(x.max_ratio);
            m.2 = m.2.max(y.max_ratio);
        }
    }
    let rows: Vec<(String, f64, f64, bool)> = maxima
        .into_iter()
        .map(|(name, c, f)| {
            let ok = c.is_finite() && f.is_finite() && (f <= 2.0 * c || f < 1e-12);
            (name.to_string(), c, f, ok)
        })
        .collect();
    let pass = rows.iter().all(|r| r.3);
    Ok(EstimateAudit { n, seed, rows, pass })
}
