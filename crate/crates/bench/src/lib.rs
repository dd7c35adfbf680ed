//! Benchmark fixtures shared by the criterion targets.

use std::f64::consts::PI;

use wavesheet::curve::{closure_project, CurveState};
use wavesheet::{PeriodicGrid, RealField};

/// A moderately curved closed state with a mean-zero sheet.
pub fn wavy_state(n: usize) -> CurveState {
    let g = PeriodicGrid::new(n).expect("benchmark grids are valid");
    let theta = RealField::from_fn(&g, |a| 0.1 * a.cos() + 0.05 * (2.0 * a).sin());
    let (theta, length) = closure_project(&theta, 2.0 * PI).expect("small-amplitude state closes");
    let gamma = RealField::from_fn(&g, |a| 0.3 * a.sin() + 0.1 * (2.0 * a).cos());
    CurveState::new(theta, gamma, length, 0.0).expect("finite state")
}
