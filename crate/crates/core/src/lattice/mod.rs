//! The triangular lattice in 2D: the energy density `F(M)` of a deformed
//! lattice, the continuum deformation flow on the torus, and the discrete
//! point flow it approximates.

pub mod calibration;
pub mod deformation;
pub mod forms;
pub mod mat2;
pub mod points;

pub use calibration::{scaling_calibration, CalibrationReport, CalibrationRow};
pub use deformation::{
    linearized_spectral_radius,
    continuum_energy_2d, deformation_velocity, evolve_deformation, expansion_check, DeformationField,
    DeformationOptions, DeformationSample, DeformationTrajectory, ExpansionReport, CELL_AREA,
};
pub use forms::{convexity_probe, expansion_polynomial, f0, f_phi, f_phi_gradient, f_trace, phi, ConvexityReport};
pub use mat2::{Mat2, Vec2};
pub use points::{
    discrete_energy_2d, discrete_gradient_2d, evolve_points_2d, grid_voronoi, hex_points, lattice_distance,
    perturbed_hex_points, periodic_distance, voronoi_cell, voronoi_cells, CellGeometry, GridVoronoi, HexConfig,
    PointFlowOptions, PointFlowSample, PointTrajectory2D,
};
