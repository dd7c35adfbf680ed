//! Trajectory audit: the energy inequality along a stored run and the
//! empirical constants of the a priori estimates.

use serde::Serialize;

use crate::config::SolverConfig;
use crate::curve::Snapshot;
use crate::energy::{energy, energy_rate_audit, estimate_audit, theta_s_sup, EstimateAudit, RateAudit};
use crate::error::{Error, Result};
use crate::fields::DerivedFields;

/// Random states per resolution in the estimate ensemble.
pub const ENSEMBLE_SIZE: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub samples: usize,
    /// max_t |E(t) − E(0)| / E(0)
    pub energy_drift: f64,
    pub rate: RateAudit,
    pub estimates: EstimateAudit,
    pub pass: bool,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }
}

/// (t, E(t)) along a trajectory, with ‖θ_s‖_∞ frozen at the first snapshot.
pub fn energy_history(cfg: &SolverConfig, trajectory: &[Snapshot]) -> Result<Vec<(f64, f64)>> {
    let first = trajectory.first().ok_or_else(|| Error::Format("trajectory is empty".into()))?;
    let model = cfg.model();
    let theta_s0 = theta_s_sup(&first.to_state()?)?;
    trajectory
        .iter()
        .map(|snap| {
            let state = snap.to_state()?;
            let ws = model.workspace(&state)?;
            let fields = DerivedFields::compute(&state, &ws, model.gravity)?;
            Ok((state.time, energy(&state, &fields, cfg.sobolev_r, theta_s0)?.total))
        })
        .collect()
}

pub fn audit(cfg: &SolverConfig, trajectory: &[Snapshot]) -> Result<(AuditReport, Vec<(f64, f64)>)> {
    let history = energy_history(cfg, trajectory)?;
    let (times, energies): (Vec<f64>, Vec<f64>) = history.iter().copied().unzip();
    let rate = energy_rate_audit(&times, &energies)?;
    let e0 = energies[0];
    let energy_drift = energies.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max);
    let estimates = estimate_audit(trajectory[0].n, cfg.sobolev_r, cfg.seed, ENSEMBLE_SIZE, &cfg.model())?;
    let pass = rate.pass && estimates.pass;
    Ok((
        AuditReport {
            samples: history.len(),
            energy_drift,
            rate,
            estimates,
            pass,
        },
        history,
    ))
}

/// `t,E_total,dE_dt` with centred rates and NaN at the ends.
pub fn history_csv(history: &[(f64, f64)]) -> String {
    let mut out = String::from("t,E_total,dE_dt\n");
    for (i, (t, e)) in history.iter().enumerate() {
        let rate = if i == 0 || i + 1 == history.len() {
            f64::NAN
        } else {
            (history[i + 1].1 - history[i - 1].1) / (history[i + 1].0 - history[i - 1].0)
        };
        out.push_str(&format!("{t:.16e},{e:.16e},{rate:.16e}\n"));
    }
    out
}
