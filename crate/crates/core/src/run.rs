//! Batch driver: integrate a configured problem and collect the trajectory
//! and per-step diagnostics.
//!
//! Residual columns that need a time window (u_t and a_s) are centred, so
//! they are filled one step late and stay NaN on the first and last rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::birkhoff_rott::KernelWorkspace;
use crate::config::SolverConfig;
use crate::curve::{closure_project, CurveState, Snapshot};
use crate::dynamics::{quasilinear_rhs, relative_residual, theta_residual, travelling_wave, Integrator, Model};
use crate::energy::{energy, theta_s_sup, EnergyReport};
use crate::error::{Error, Result};
use crate::fields::{omega_error, DerivedFields, WindowPoint};
use crate::spectral::{dealias, fourier_derivative, hilbert_transform, PeriodicGrid, RealField};

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub length: f64,
    pub min_a: f64,
    pub chord_arc: f64,
    pub closure_defect: f64,
    pub energy: EnergyReport,
    pub residual_theta: f64,
    pub residual_u: f64,
    pub residual_as: f64,
}

impl DiagnosticsRow {
    pub fn header(r: usize) -> String {
        let mut cols: Vec<String> = ["t", "L", "min_a", "chord_arc", "closure_defect", "E_total"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        cols.extend(EnergyReport::column_names(r));
        cols.extend(["residual_theta", "residual_u", "residual_as"].map(String::from));
        cols.join(",")
    }

    /// One CSV line in 17-significant-digit scientific notation.
    pub fn to_csv(&self) -> String {
        let mut v = vec![
            self.t,
            self.length,
            self.min_a,
            self.chord_arc,
            self.closure_defect,
            self.energy.total,
        ];
        v.extend(self.energy.values());
        v.extend([self.residual_theta, self.residual_u, self.residual_as]);
        v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(",")
    }
}

pub struct RunOutput {
    pub trajectory: Vec<Snapshot>,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// The labelled runtime abort, if the run stopped before `t_end`.
    pub abort: Option<Error>,
}

/// Initial state: the configured snapshot, or a travelling wave. Either way it
/// is de-aliased and closure-projected so the first step introduces no jump.
pub fn initial_state(cfg: &SolverConfig, base_dir: Option<&Path>) -> Result<CurveState> {
    let grid = PeriodicGrid::new(cfg.n_points)?;
    let raw = match &cfg.init_snapshot {
        Some(path) => {
            let path = match base_dir {
                Some(dir) if path.is_relative() => dir.join(path),
                _ => path.clone(),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            Snapshot::from_json(text.trim())?.to_state_on(&grid)?
        }
        None => travelling_wave(&grid, cfg.init_mode, cfg.init_amplitude, cfg.gravity as f64)?,
    };
    let (theta, length) = closure_project(&dealias(&raw.theta), raw.length)?;
    CurveState::new(theta, dealias(&raw.gamma), length, raw.time)
}

struct Accepted {
    state: CurveState,
    ws: KernelWorkspace,
    fields: DerivedFields,
}

fn relative_gap(a: &RealField, b: &RealField) -> f64 {
    relative_residual(a.sub(b).l2_alpha(), b.l2_alpha())
}

/// (residual_u, residual_as) at the middle of a window.
pub fn window_residuals(window: [(&CurveState, &DerivedFields, &KernelWorkspace); 3]) -> Result<(f64, f64)> {
    let times = window.map(|w| w.0.time);
    let (omega, u_t) = omega_error(
        window.map(|(state, fields, ws)| WindowPoint { state, fields, ws }),
        times,
    )?;
    let (mid, f, _) = window[1];
    let q = quasilinear_rhs(mid, f)?.u_t.expect("quasilinear bundle carries u_t");
    let a_s = fourier_derivative(&f.a, 1, mid.length)?;
    Ok((relative_gap(&u_t, &q), relative_gap(&hilbert_transform(&u_t).add(&omega), &a_s)))
}

fn accept(state: CurveState, model: &Model, cfg: &SolverConfig) -> Result<Accepted> {
    let ws = model.workspace(&state)?;
    let defect = ws.points().closure_defect.norm();
    if defect > cfg.tol_closure {
        return Err(Error::ClosureDefect(defect));
    }
    let fields = DerivedFields::compute(&state, &ws, model.gravity)?;
    fields.check_taylor_sign()?;
    Ok(Accepted { state, ws, fields })
}

fn row(acc: &Accepted, r: usize, theta_s0: f64) -> Result<DiagnosticsRow> {
    Ok(DiagnosticsRow {
        t: acc.state.time,
        length: acc.state.length,
        min_a: acc.fields.a.min(),
        chord_arc: acc.ws.chord_arc(),
        closure_defect: acc.ws.points().closure_defect.norm(),
        energy: energy(&acc.state, &acc.fields, r, theta_s0)?,
        residual_theta: theta_residual(&acc.state, &acc.fields)?,
        residual_u: f64::NAN,
        residual_as: f64::NAN,
    })
}

/// Integrates to `t_end`. Input problems are returned as errors; runtime
/// aborts end the run early and are reported in [`RunOutput::abort`].
pub fn run(cfg: &SolverConfig, base_dir: Option<&Path>) -> Result<RunOutput> {
    cfg.validate()?;
    let model = cfg.model();
    let start = initial_state(cfg, base_dir)?;
    let r = cfg.sobolev_r;
    let theta_s0 = theta_s_sup(&start)?;
    let mut out = RunOutput {
        trajectory: Vec::new(),
        diagnostics: Vec::new(),
        abort: None,
    };
    let abort = |t: f64, e: Error| Error::Aborted { t, source: Box::new(e) };

    let first = match accept(start.clone(), &model, cfg).and_then(|a| Ok((row(&a, r, theta_s0)?, a))) {
        Ok(x) => x,
        Err(e) => {
            out.abort = Some(abort(start.time, e));
            return Ok(out);
        }
    };
    out.diagnostics.push(first.0);
    out.trajectory.push(Snapshot::from_state(&start));
    let mut window: Vec<Accepted> = vec![first.1];
    let mut integrator = Integrator::new(cfg.scheme, cfg.dt, model)?;

    for step in 1..=cfg.steps() {
        let current = &window.last().expect("window is never empty").state;
        let t = current.time;
        // Keep the scheduled time exact so output spacing stays uniform.
        let scheduled = start.time + step as f64 * cfg.dt;
        let attempt = integrator
            .step(current)
            .and_then(|o| accept(CurveState { time: scheduled, ..o.state }, &model, cfg))
            .and_then(|a| Ok((row(&a, r, theta_s0)?, a)));
        let (new_row, acc) = match attempt {
            Ok(x) => x,
            Err(e) => {
                out.abort = Some(abort(t, e));
                break;
            }
        };
        window.push(acc);
        if window.len() > 3 {
            window.remove(0);
        }
        if window.len() == 3 {
            let w = [0, 1, 2].map(|i| (&window[i].state, &window[i].fields, &window[i].ws));
            match window_residuals(w) {
                Ok((ru, ras)) => {
                    let prev = out.diagnostics.last_mut().expect("previous row exists");
                    prev.residual_u = ru;
                    prev.residual_as = ras;
                }
                Err(e) => {
                    out.abort = Some(abort(t, e));
                    break;
                }
            }
        }
        out.diagnostics.push(new_row);
        if step % cfg.snapshot_every == 0 {
            out.trajectory.push(Snapshot::from_state(&window[window.len() - 1].state));
        }
        log::debug!("step {step} t = {:.6}", window[window.len() - 1].state.time);
    }
    Ok(out)
}

pub fn write_diagnostics(rows: &[DiagnosticsRow], r: usize, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", DiagnosticsRow::header(r))?;
    for row in rows {
        writeln!(w, "{}", row.to_csv())?;
    }
    w.flush()?;
    Ok(())
}

/// One snapshot per line.
pub fn write_trajectory(snapshots: &[Snapshot], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in snapshots {
        writeln!(w, "{}", s.to_json()?)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trajectory written by [`write_trajectory`]. Any malformed line,
/// grid change or non-increasing time is a format error.
pub fn read_trajectory(path: &Path) -> Result<Vec<Snapshot>> {
    let text = std::fs::read_to_string(path)?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(Error::Format("trajectory is truncated (no final newline)".into()));
    }
    let mut out: Vec<Snapshot> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let snap = Snapshot::from_json(line).map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        if let Some(prev) = out.last() {
            if snap.n != prev.n {
                return Err(Error::Format(format!("line {}: grid changes from {} to {}", i + 1, prev.n, snap.n)));
            }
            if !(snap.t > prev.t) {
                return Err(Error::Format(format!("line {}: time does not increase", i + 1)));
            }
        }
        out.push(snap);
    }
    if out.is_empty() {
        return Err(Error::Format("trajectory is empty".into()));
    }
    Ok(out)
}

/// Writes both output files under `dir` using the configured file names.
pub fn write_outputs(out: &RunOutput, cfg: &SolverConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_trajectory(&out.trajectory, &dir.join(&cfg.snapshot_path))?;
    write_diagnostics(&out.diagnostics, cfg.sobolev_r, &dir.join(&cfg.diagnostics_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_config() -> SolverConfig {
        SolverConfig {
            n_points: 32,
            init_amplitude: 0.0,
            t_end: 0.5,
            dt: 0.01,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn zero_length_run_echoes_initial_state() {
        let cfg = SolverConfig {
            t_end: 0.0,
            ..flat_config()
        };
        let out = run(&cfg, None).unwrap();
        assert_eq!(out.trajectory.len(), 1);
        assert_eq!(out.diagnostics.len(), 1);
        assert!(out.abort.is_none());
    }

    #[test]
    fn flat_rest_residuals_vanish() {
        let out = run(&flat_config(), None).unwrap();
        assert!(out.abort.is_none());
        assert_eq!(out.diagnostics.len(), 51);
        assert_eq!(out.trajectory.len(), 6);
        for row in &out.diagnostics[1..50] {
            assert!(row.residual_theta <= 1e-10 && row.residual_u <= 1e-10 && row.residual_as <= 1e-10);
        }
        assert!(out.diagnostics[0].residual_u.is_nan() && out.diagnostics[50].residual_u.is_nan());
    }

    #[test]
    fn csv_has_full_precision_and_matching_columns() {
        let out = run(&SolverConfig { t_end: 0.02, ..flat_config() }, None).unwrap();
        let header = DiagnosticsRow::header(4);
        let line = out.diagnostics[0].to_csv();
        assert_eq!(header.split(',').count(), line.split(',').count());
        let l: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(l, out.diagnostics[0].length);
    }

    #[test]
    fn trajectory_round_trip_and_rejection() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = flat_config();
        let out = run(&cfg, None).unwrap();
        write_outputs(&out, &cfg, dir.path()).unwrap();
        let path = dir.path().join(&cfg.snapshot_path);
        assert_eq!(read_trajectory(&path).unwrap(), out.trajectory);

        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2 + 7]).unwrap();
        assert!(matches!(read_trajectory(&path), Err(Error::Format(_))));
        std::fs::write(&path, text.replace("\"L\"", "\"length\"")).unwrap();
        assert!(matches!(read_trajectory(&path), Err(Error::Format(_))));
    }

    #[test]
    fn steep_wave_with_strict_floor_aborts_on_chord_arc() {
        let cfg = SolverConfig {
            init_amplitude: 0.8,
            chord_arc_floor: 0.99,
            ..flat_config()
        };
        let out = run(&cfg, None).unwrap();
        let err = out.abort.unwrap();
        assert_eq!(err.label(), "chord-arc");
        assert!(matches!(err, Error::Aborted { t, .. } if t == 0.0));
    }
}
