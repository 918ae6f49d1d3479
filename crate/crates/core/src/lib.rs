//! Gradient-flow numerics for the optimal quantization of probability
//! measures.
//!
//! A density `rho` is approximated by `N` Dirac masses; the approximation
//! error is the quantization energy
//! `F_{N,r}(x) = ∫ min_i |x_i - y|^r rho(y) dy`. This crate evolves point
//! configurations under the gradient flow of that energy and compares them
//! with the continuum limits of the flow:
//!
//! - [`density`], [`quadrature`], [`measure`]: densities on [0, 1], quadrature,
//!   distribution functions and 1D Wasserstein distances.
//! - [`discrete_flow`]: `F_{N,r}`, its gradient and time integration in 1D.
//! - [`continuum`]: the Lagrangian (p-Laplacian type) and Eulerian (very fast
//!   diffusion) continuum flows, comparison-principle diagnostics and the
//!   discrete/continuum distance.
//! - [`hessian`]: the second variation of the continuum energy and a
//!   non-convexity certificate built from mollified data.
//! - [`lattice`]: the triangular-lattice energy density in 2D, its expansion
//!   around the identity, and the deformation and point flows on the torus.
//! - [`manifold`]: moment conditions for radial measures on space forms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuum;
pub mod density;
pub mod discrete_flow;
pub mod error;
pub mod fit;
pub mod hessian;
pub mod lattice;
pub mod manifold;
pub mod measure;
pub mod quadrature;

pub use density::{power_normalize, Density1D, DensitySpec, Profile, Smoothness};
pub use discrete_flow::{FlowOptions, FlowTrajectory1D, PointConfig1D, Scheme};
pub use error::{Error, Result};
pub use measure::{cdf_and_quantile, wasserstein_1d, DiscreteMeasure1D};
pub use quadrature::{integrate, Quadrature};
