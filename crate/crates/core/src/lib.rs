//! Nonlinear wave interaction lab on 1+3 Lorentzian spacetimes.
//!
//! * [`metric`]: metric families, curvature, covector algebra
//! * [`raytrace`]: Hamiltonian flow, conjugate points, light cones, transport
//! * [`symbolics`]: interaction term generation and symbol evaluation
//! * [`wavesolver`]: finite-difference solver and the expansion and gauge checks
//! * [`experiments`]: config-driven batch runs used by the `wavelab` binary

pub mod config;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod metric;
pub mod output;
pub mod raytrace;
pub mod symbolics;
pub mod wavesolver;

pub use error::{Error, ParseError, Result};
pub use expr::ScalarField;
pub use metric::{CausalClass, Covector4, MetricEval, MetricSpec, Point4};
