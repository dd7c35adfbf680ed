//! Boundary-integral pseudospectral simulator for 2-D periodic
//! gravity-capillary water waves on deep water.
//!
//! The interface is described by its tangent angle θ(α), vortex-sheet density
//! γ(α) and length L on an equal-arclength grid α_j = 2πj/N. Velocities come
//! from the Birkhoff–Rott integral, the Taylor sign from a second-kind
//! layer-potential equation, and time stepping treats the linear dispersive
//! part exactly per Fourier mode.
//!
//! Modules, from the bottom up:
//!
//! - [`spectral`]: grids, FFT-backed fields, Fourier multipliers.
//! - [`curve`]: reconstruction, closure, chord-arc monitor, snapshots.
//! - [`birkhoff_rott`]: the Cauchy transform and the singular operators built on it.
//! - [`layer_solve`]: GMRES for (I ± K*) and (I ± K).
//! - [`fields`]: velocities, frame mismatch δ, Taylor sign, error terms.
//! - [`dynamics`]: right-hand sides and integrators.
//! - [`energy`]: the energy functional and estimate audits.
//! - [`config`], [`run`], [`verify`], [`audit`]: batch front end.

pub mod audit;
pub mod birkhoff_rott;
pub mod config;
pub mod curve;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod fields;
pub mod layer_solve;
pub mod run;
pub mod spectral;
pub mod verify;

pub use birkhoff_rott::KernelWorkspace;
pub use config::SolverConfig;
pub use curve::{CurvePoints, CurveState, Snapshot};
pub use dynamics::{Integrator, Model, Scheme};
pub use energy::EnergyReport;
pub use error::{Error, Result};
pub use fields::DerivedFields;
pub use spectral::{ComplexField, PeriodicGrid, RealField, SpectralField};
