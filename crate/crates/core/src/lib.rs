//! Openness rates of control systems and the no-go certificates they
//! imply for gain-limited stabilizing feedback.
//!
//! The pipeline is: a [`systems::ControlSystem`] `f(x, u)`, a rate table
//! `g(r)` = inradius of `f(B_r)` at `f(0)` ([`rate`]), and checkers that
//! test necessary conditions for stabilizability against it
//! ([`certify`]). [`simulate`] integrates the closed loops that the
//! examples are built from.
//!
//! ```
//! use openness_core::{builtin, log_grid, openness_rate_table, powerlaw_fit, Column, NormChoice, Resolution};
//!
//! let sys = builtin("cubic_scalar").unwrap();
//! let grid = log_grid(0.05, 0.8, 6).unwrap();
//! let table = openness_rate_table(&sys, &grid, NormChoice::EllInf, Resolution::with_budget(20_000)).unwrap();
//! let fit = powerlaw_fit(&table, Column::Upper).unwrap();
//! assert!((fit.law.exponent - 3.0).abs() < 0.1);
//! ```

// Negated float comparisons are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod error;
pub mod estimates;
pub mod geometry;
pub mod norm;
pub mod rate;
pub mod simulate;
pub mod systems;

pub use certify::{
    check_nogo, check_nogo_strong, check_nogo_symbolic, check_norm_bound_nogo, rho, threshold_beta,
    GainClass, InverseGrowthBound, Mode, Outcome, Verdict, Witness,
};
pub use error::{Error, Result};
pub use estimates::{envelope_check, norm_lower_bound, sup_norm_on_ball, RateSource};
pub use geometry::{image_cloud, inradius, make_ball_net, BallNet, InradiusEstimate, PointCloud};
pub use norm::NormChoice;
pub use rate::{
    banach_constant, default_grid, enforce_monotone, generalized_inverse, log_grid, openness_rate_table,
    openness_rate_table_at, powerlaw_fit, Column, PowerLaw, PowerLawFit, RateEntry, RateTable, Resolution,
};
pub use simulate::{integrate, linearize, ClosedLoopField, Trajectory};
pub use systems::{builtin, catalog, ControlSystem, PolynomialSystem, System};
