//! Solver configuration read from a flat `key = value` file (TOML syntax).
//!
//! Every key is optional and unknown keys are rejected, so a typo can never
//! silently fall back to a default. Keys:
//!
//! | key                | default             | meaning                                         |
//! |--------------------|---------------------|-------------------------------------------------|
//! | `n_points`         | 64                  | grid size N, even and ≥ 16                      |
//! | `sobolev_r`        | 4                   | energy index r ≥ 4                              |
//! | `dt`               | 0.01                | time step                                       |
//! | `t_end`            | 10.0                | final time                                      |
//! | `scheme`           | `"etd_rk2"`         | `etd_rk2`, `imex_bdf2` or `explicit_rk4`        |
//! | `init_mode`        | 2                   | wavenumber k of the travelling-wave start       |
//! | `init_amplitude`   | 1e-3                | amplitude ε ≥ 0 (0 gives the flat rest state)   |
//! | `init_snapshot`    | none                | start from a snapshot file instead              |
//! | `gravity`          | 1                   | gravity switch, 0 or 1                          |
//! | `tol_closure`      | 1e-10               | closure defect that aborts a run                |
//! | `tol_solver`       | 1e-12               | GMRES relative residual                         |
//! | `chord_arc_floor`  | 0.05                | chord-arc abort threshold c in (0, 1)           |
//! | `snapshot_every`   | 10                  | steps between trajectory records                |
//! | `diagnostics_path` | `"diagnostics.csv"` | relative to the output directory                |
//! | `snapshot_path`    | `"trajectory.jsonl"`| relative to the output directory                |
//! | `seed`             | 0                   | seed for randomized audits                      |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Model, Scheme};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub n_points: usize,
    pub sobolev_r: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub init_mode: u32,
    pub init_amplitude: f64,
    pub init_snapshot: Option<PathBuf>,
    pub gravity: u8,
    pub tol_closure: f64,
    pub tol_solver: f64,
    pub chord_arc_floor: f64,
    pub snapshot_every: usize,
    pub diagnostics_path: PathBuf,
    pub snapshot_path: PathBuf,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_points: 64,
            sobolev_r: 4,
            dt: 0.01,
            t_end: 10.0,
            scheme: Scheme::EtdRk2,
            init_mode: 2,
            init_amplitude: 1e-3,
            init_snapshot: None,
            gravity: 1,
            tol_closure: 1e-10,
            tol_solver: 1e-12,
            chord_arc_floor: 0.05,
            snapshot_every: 10,
            diagnostics_path: PathBuf::from("diagnostics.csv"),
            snapshot_path: PathBuf::from("trajectory.jsonl"),
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_points < 16 || self.n_points % 2 != 0 {
            return fail(format!("n_points must be even and at least 16, got {}", self.n_points));
        }
        if self.sobolev_r < 4 {
            return fail(format!("sobolev_r must be at least 4, got {}", self.sobolev_r));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return fail(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return fail(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.init_amplitude >= 0.0 && self.init_amplitude.is_finite()) {
            return fail(format!("init_amplitude must be non-negative, got {}", self.init_amplitude));
        }
        if self.init_mode == 0 || self.init_mode as usize >= self.n_points / 3 {
            return fail(format!("init_mode must lie in 1..{}", self.n_points / 3));
        }
        if self.gravity > 1 {
            return fail(format!("gravity must be 0 or 1, got {}", self.gravity));
        }
        if !(self.chord_arc_floor > 0.0 && self.chord_arc_floor < 1.0) {
            return fail(format!("chord_arc_floor must lie in (0, 1), got {}", self.chord_arc_floor));
        }
        if !(self.tol_solver > 0.0 && self.tol_solver <= 1e-6) {
            return fail(format!("tol_solver must lie in (0, 1e-6], got {}", self.tol_solver));
        }
        if !(self.tol_closure > 0.0) {
            return fail(format!("tol_closure must be positive, got {}", self.tol_closure));
        }
        if self.snapshot_every == 0 {
            return fail("snapshot_every must be at least 1".into());
        }
        Ok(())
    }

    pub fn model(&self) -> Model {
        Model {
            gravity: self.gravity as f64,
            chord_arc_floor: self.chord_arc_floor,
            solver_tolerance: self.tol_solver,
            ..Model::default()
        }
    }

    /// Number of steps to reach `t_end`, rounding to the nearest whole step.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}
