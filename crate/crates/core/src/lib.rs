//! Fully developed generalized Newtonian flow in curved pipes.
//!
//! The cross-section problem is discretized with isoparametric P2 velocity
//! and P1 pressure; the same assembly serves the full toroidal system and its
//! Dean-type approximation. [`harness`] turns solutions and random fields into
//! verification records.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod axial;
pub mod constants;
pub mod dean;
pub mod error;
pub mod estimates;
pub mod fields;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod stats;
pub mod tensor;
pub mod tolerances;

pub use axial::axial_only_solve;
pub use constants::{kappa_constants, DeanConstants, FlowParams, KappaTable};
pub use dean::{dean_scaling_study, delta_approx_study, solve_dean, SigmaSpec};
pub use error::{GnfError, Result};
pub use estimates::{check_pressure_estimate, VerificationRecord};
pub use fields::{PressureField, ScalarField, VelocityField};
pub use mesh::{Mesh, ShapeSpec};
pub use solver::{solve_full, InitialGuess, NonlinearScheme, SolveReport, SolverOptions};
pub use space::{build_cross_section, CrossSection};
pub use tensor::{tau, tau_jacobian, PowerLawModel, SymTensor3};
