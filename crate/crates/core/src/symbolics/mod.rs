//! Expansion terms of the semilinear solution and their symbol values on
//! light-like covector quadruples.

pub mod cases;
pub mod fit;
pub mod gauge;
pub mod nonlinearity;
pub mod profile;
pub mod quadruple;
pub mod quintic;
pub mod symbol;
pub mod terms;

pub use cases::{p_case, p_case_tree, rho_sweep, AsymptoticsReport, Coefficients, PCase};
pub use fit::{fit_leading_order, LeadingOrderFit};
pub use gauge::{gauge_transform_h, gauge_transform_values};
pub use nonlinearity::{HValues, TaylorNonlinearity};
pub use profile::SymbolProfile;
pub use quadruple::{random_null_quadruple, rho_quadruple, CovectorQuadruple};
pub use quintic::{quintic_leading_model, quintic_symbol};
pub use symbol::{eval_interaction_coefficient, eval_term_list, eval_term_sum, SymbolInputs};
pub use terms::{generate_expansion_terms, InteractionTerm, TermNode};
