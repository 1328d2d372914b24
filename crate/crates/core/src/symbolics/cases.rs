//! Closed forms of the four-wave interaction coefficient and ρ-sweeps.

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolics::fit::{fit_leading_order, LeadingOrderFit};
use crate::symbolics::nonlinearity::HValues;
use crate::symbolics::quadruple::{rho_quadruple, CovectorQuadruple};
use crate::symbolics::symbol::{eval_term_list, SymbolInputs, DENOMINATOR_GUARD};
use crate::symbolics::terms::{generate_terms_for_orders, leading_terms, DEFAULT_TERM_CAP};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Which Taylor coefficient carries the leading four-wave interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PCase {
    /// `c = h₄ ≠ 0`
    Quartic,
    /// `c = 0`, `a = h₂`, `b = h₃`
    CubicQuadratic,
    /// only `a = h₂`
    QuadraticOnly,
}

impl PCase {
    pub fn label(self) -> &'static str {
        match self {
            PCase::Quartic => "a",
            PCase::CubicQuadratic => "b",
            PCase::QuadraticOnly => "c",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "a" | "quartic" => Some(PCase::Quartic),
            "b" | "cubic-quadratic" => Some(PCase::CubicQuadratic),
            "c" | "quadratic-only" => Some(PCase::QuadraticOnly),
            _ => None,
        }
    }

    /// Coefficient values that select this case.
    pub fn hvalues(self, coeffs: &Coefficients) -> HValues {
        match self {
            PCase::Quartic => HValues::from_pairs(&[(4, coeffs.c)]),
            PCase::CubicQuadratic => HValues::from_pairs(&[(2, coeffs.a), (3, coeffs.b)]),
            PCase::QuadraticOnly => HValues::from_pairs(&[(2, coeffs.a)]),
        }
    }

    /// Exponent of ρ expected at leading order on the ρ-family.
    pub fn expected_exponent(self) -> f64 {
        match self {
            PCase::Quartic => 0.0,
            PCase::CubicQuadratic => -11.0,
            PCase::QuadraticOnly => -13.0,
        }
    }
}

/// `a = h₂`, `b = h₃`, `c = h₄` at the interaction point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Coefficients {
            a: 1.0,
            b: 1.0,
            c: 1.0,
        }
    }
}

fn inv(q: &CovectorQuadruple, idx: &[usize]) -> Result<f64> {
    let mut c = [0.0; 4];
    for &i in idx {
        c[i] = 1.0;
    }
    let p = q.norm_sq(&c);
    if !(p.abs() >= DENOMINATOR_GUARD) {
        return Err(Error::SingularDenominator {
            context: format!(
                "|{}|^2",
                idx.iter().map(|i| format!("zeta{}", i + 1)).join("+")
            ),
            value: p,
        });
    }
    Ok(1.0 / p)
}

/// Closed-form interaction coefficient for the given case.
pub fn p_case(case: PCase, q: &CovectorQuadruple, k: &Coefficients) -> Result<f64> {
    match case {
        PCase::Quartic => Ok(-24.0 * TWO_PI.powi(-3) * k.c),
        PCase::CubicQuadratic => {
            let mut s = 0.0;
            for p in (0..4).permutations(4) {
                let (i, j, kk, l) = (p[0], p[1], p[2], p[3]);
                s += 3.0 * inv(q, &[i, j])? + 2.0 * inv(q, &[j, kk, l])?;
            }
            Ok(TWO_PI.powi(-3) * k.a * k.b * s)
        }
        PCase::QuadraticOnly => {
            let mut s = 0.0;
            for p in (0..4).permutations(4) {
                let (i, j, kk, l) = (p[0], p[1], p[2], p[3]);
                s += 4.0 * inv(q, &[j, kk, l])? * inv(q, &[kk, l])?
                    + inv(q, &[i, j])? * inv(q, &[kk, l])?;
            }
            Ok(-TWO_PI.powi(-3) * k.a.powi(3) * s)
        }
    }
}

/// Same coefficient from the generated order-(1,1,1,1) terms: the leading
/// terms for the case's coefficients, each summed over all label orderings.
pub fn p_case_tree(case: PCase, q: &CovectorQuadruple, k: &Coefficients) -> Result<f64> {
    let terms = generate_terms_for_orders(&[2, 3, 4], [1, 1, 1, 1], DEFAULT_TERM_CAP)?;
    let h = case.hvalues(k);
    let lead = leading_terms(&terms, |ord| h.get(ord) != 0.0);
    Ok(eval_term_list(&lead, &SymbolInputs::unit(q, h))?.value)
}

/// ρ-sweep of `(2π)³ P` with its leading-order fit.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    pub case: String,
    /// `(ρ, (2π)³ P)`, ρ strictly decreasing
    pub samples: Vec<(f64, f64)>,
    pub fit: Option<LeadingOrderFit>,
    pub fit_error: Option<String>,
}

/// `n` log-spaced values from `hi` down to `lo`.
pub fn log_spaced(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|j| {
            let t = j as f64 / (n - 1) as f64;
            (hi.ln() + t * (lo.ln() - hi.ln())).exp()
        })
        .collect()
}

pub fn rho_sweep(case: PCase, rhos: &[f64], k: &Coefficients) -> Result<AsymptoticsReport> {
    let mut samples = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let q = rho_quadruple(rho)?;
        samples.push((rho, TWO_PI.powi(3) * p_case(case, &q, k)?));
    }
    let (fit, fit_error) = match fit_leading_order(&samples) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(AsymptoticsReport {
        case: case.label().to_string(),
        samples,
        fit,
        fit_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_constant() {
        let q = rho_quadruple(0.2).unwrap();
        let v = p_case(PCase::Quartic, &q, &Coefficients::default()).unwrap();
        assert!((v + 0.0967546032996).abs() < 1e-12);
        let t = p_case_tree(PCase::Quartic, &q, &Coefficients::default()).unwrap();
        assert!((v - t).abs() < 1e-15);
    }

    #[test]
    fn tree_matches_closed_form_on_rho_family() {
        for rho in [0.2, 0.05, 0.02] {
            let q = rho_quadruple(rho).unwrap();
            let k = Coefficients { a: 0.8, b: -1.2, c: 0.0 };
            for case in [PCase::CubicQuadratic, PCase::QuadraticOnly] {
                let a = p_case(case, &q, &k).unwrap();
                let b = p_case_tree(case, &q, &k).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs(), "{case:?} {rho}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn log_spacing() {
        let r = log_spaced(0.2, 0.02, 5);
        assert!((r[0] - 0.2).abs() < 1e-15 && (r[4] - 0.02).abs() < 1e-15);
        assert!(r.windows(2).all(|w| w[1] < w[0]));
    }
}
