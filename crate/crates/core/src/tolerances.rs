//! Shared numerical tolerances.

/// Relative slack floor for pointwise algebraic inequalities.
pub const POINTWISE_REL_SLACK: f64 = 1e-12;

/// Absolute slack on normalized quadrature-level inequalities.
pub const QUADRATURE_SLACK: f64 = 1e-8;

/// Relative tolerance for identities that hold exactly in the continuum.
pub const IDENTITY_REL_TOL: f64 = 1e-6;

/// Default relative residual tolerance of the nonlinear solvers.
pub const NONLINEAR_RTOL: f64 = 1e-8;

/// Default absolute residual tolerance of the nonlinear solvers.
pub const NONLINEAR_ATOL: f64 = 1e-12;

/// Threshold below which a secondary flow counts as absent.
pub const UNIDIRECTIONAL_TOL: f64 = 1e-8;

/// Largest admissible cell aspect ratio.
pub const MAX_ASPECT_RATIO: f64 = 1e3;
