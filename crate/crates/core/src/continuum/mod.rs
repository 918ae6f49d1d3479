//! Continuum limits of the 1D flow: the Lagrangian map `X(t, theta)`, the
//! Eulerian density `f(t, x)`, and the diagnostics tying them to the
//! discrete flow.

pub mod closeness;
pub mod diagnostics;
pub mod eulerian;
pub mod lagrangian;

pub use closeness::{discrete_continuum_distance, run_closeness, ClosenessSeries, ClosenessSetup};
pub use diagnostics::{comparison_diagnostics, ComparisonDiagnostics, DiagnosticTolerances};
pub use eulerian::{
    eulerian_rhs, evolve_eulerian, pushforward_density, stationary_density, stationary_state,
    u_transform, EulerianField, EulerianOptions, EulerianTrajectory,
};
pub use lagrangian::{
    c_r, continuum_energy, evolve_lagrangian, lagrangian_rhs, LagrangianMap, LagrangianOptions,
    LagrangianTrajectory,
};
