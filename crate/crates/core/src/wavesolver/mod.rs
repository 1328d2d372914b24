//! Finite-difference solver for `(□_g + V) u + H(x, u) = f` with retarded data.

pub mod conformal;
pub mod expansion;
pub mod field;
pub mod grid;
pub mod io;
pub mod operator;
pub mod solve;
pub mod source;

pub use conformal::{
    conformal_covariance_residual, gauge_experiment, refinement_slope, yamabe_apply, GaugeExample, GaugeLevel,
    GaugeReport, GaugeSetup,
};
pub use expansion::{
    central_stencil, extract_expansion_fd, fitted_multiplier, formula_expansion, ExpansionResult, ExtractionMethod,
};
pub use field::{relative_l2, relative_l2_in, Field};
pub use grid::{Dim, Grid, Region};
pub use io::{read_field, write_field, write_level_csv};
pub use operator::{Potential, WaveOperator};
pub use solve::{solve_linear_causal, solve_semilinear, SampledNonlinearity, SolveOptions};
pub use source::SourceSpec;
