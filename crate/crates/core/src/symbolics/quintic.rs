//! Quintic interaction symbol for a pure cubic nonlinearity `H = b z³`,
//! where the source `v₁` enters twice.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolics::nonlinearity::HValues;
use crate::symbolics::profile::SymbolProfile;
use crate::symbolics::quadruple::CovectorQuadruple;
use crate::symbolics::symbol::{eval_term_list, SymbolInputs, DENOMINATOR_GUARD};
use crate::symbolics::terms::{generate_terms_for_orders, DEFAULT_TERM_CAP};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuinticValue {
    pub value: f64,
    pub closed_part: f64,
    pub convolution_part: f64,
    /// `A₁^{(1)} = (p ∗ p)(1)`
    pub self_convolution: f64,
    /// largest change of any fiber quadrature under 2× coarsening
    pub quadrature_delta: f64,
}

fn guarded_inv(p: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if !(p.abs() >= DENOMINATOR_GUARD) {
        return Err(Error::SingularDenominator {
            context: what(),
            value: p,
        });
    }
    Ok(1.0 / p)
}

/// Closed form with its convolution terms:
///
/// ```text
/// (2π)^{−7/2} b² [18|ζ₂+ζ₃+ζ₄|^{−2} + 6 Σ_k |ζ₁+ζ_k|^{−2}] A₁^{(1)} ΠA
///   + 2 Σ_{(i,j,k)} (2π)^{−7/2} b² ∫ p(1−α) p(α) |αζ₁+ζ_j+ζ_k|^{−2} dα ΠA
/// ```
///
/// with `(i,j,k)` running over the orderings of `(2,3,4)`.
pub fn quintic_symbol(
    q: &CovectorQuadruple,
    b: f64,
    profile: &SymbolProfile,
    amps: [f64; 3],
) -> Result<QuinticValue> {
    if profile.label != 1 {
        return Err(Error::InvalidArgument("quintic profile must lie along zeta1".into()));
    }
    let pref = TWO_PI.powf(-3.5) * b * b * amps.iter().product::<f64>();
    let conv = profile.self_convolution(1.0);
    let mut bracket = 18.0 * guarded_inv(q.norm_sq(&[0.0, 1.0, 1.0, 1.0]), || "|zeta2+zeta3+zeta4|^2".into())?;
    for k in 1..4 {
        let mut c = [1.0, 0.0, 0.0, 0.0];
        c[k] = 1.0;
        bracket += 6.0 * guarded_inv(q.norm_sq(&c), || format!("|zeta1+zeta{}|^2", k + 1))?;
    }
    let closed = pref * bracket * conv.value;

    let mut conv_sum = 0.0;
    let mut delta = conv.refinement_delta * pref * bracket.abs();
    for (j, k) in [(1, 2), (1, 3), (2, 3)] {
        let quad = profile.quadrature(|a| {
            let w = profile.value(1.0 - a) * profile.value(a);
            if w == 0.0 {
                return Ok(0.0);
            }
            let mut c = [a, 0.0, 0.0, 0.0];
            c[j] = 1.0;
            c[k] = 1.0;
            let p = q.norm_sq(&c);
            Ok(w * guarded_inv(p, || {
                format!("|eta+zeta{}+zeta{}|^2 at eta = {a} zeta1", j + 1, k + 1)
            })?)
        })?;
        // each unordered pair {j,k} appears for two orderings of (i,j,k)
        conv_sum += 2.0 * 2.0 * quad.value;
        delta = delta.max(4.0 * pref * quad.refinement_delta);
    }
    let convolution_part = pref * conv_sum;
    Ok(QuinticValue {
        value: closed + convolution_part,
        closed_part: closed,
        convolution_part,
        self_convolution: conv.value,
        quadrature_delta: delta,
    })
}

/// `−3 ρ^{−10} (2π)^{−7/2} b² A₁^{(1)} ΠA`
pub fn quintic_leading_model(rho: f64, b: f64, self_convolution: f64, amps: [f64; 3]) -> f64 {
    -3.0 * rho.powi(-10) * TWO_PI.powf(-3.5) * b * b * self_convolution * amps.iter().product::<f64>()
}

/// `sup_α 1/| |αζ₁ + ζ_j + ζ_k|² |` over the support of `p(α) p(1 − α)`.
pub fn kernel_sup(q: &CovectorQuadruple, profile: &SymbolProfile, j: usize, k: usize) -> f64 {
    let mut sup: f64 = 0.0;
    for n in 0..profile.values.len() {
        let a = profile.node(n);
        if profile.value(a) * profile.value(1.0 - a) == 0.0 {
            continue;
        }
        let mut c = [a, 0.0, 0.0, 0.0];
        c[j - 1] += 1.0;
        c[k - 1] += 1.0;
        sup = sup.max(1.0 / q.norm_sq(&c).abs());
    }
    sup
}

/// Quintic symbol from the generated multi-degree (2,1,1,1) terms for
/// `H = b z³`. Returns `(∂²_{ε₁}∂_{ε₂}∂_{ε₃}∂_{ε₄} symbol, ε₁²ε₂ε₃ε₄ coefficient)`.
pub fn quintic_tree(
    q: &CovectorQuadruple,
    b: f64,
    profile: &SymbolProfile,
    amps: [f64; 3],
) -> Result<(f64, f64)> {
    let terms = generate_terms_for_orders(&[3], [2, 1, 1, 1], DEFAULT_TERM_CAP)?;
    let mut inp = SymbolInputs::unit(q, HValues::from_pairs(&[(3, b)])).with_profile(profile);
    inp.amplitudes = [1.0, amps[0], amps[1], amps[2]];
    let d = eval_term_list(&terms, &inp)?.value;
    Ok((d, d / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolics::quadruple::rho_quadruple;

    #[test]
    fn zero_profile() {
        let q = rho_quadruple(0.1).unwrap();
        let p = SymbolProfile::default_quintic().zero_like();
        assert_eq!(quintic_symbol(&q, 1.0, &p, [1.0; 3]).unwrap().value, 0.0);
    }

    #[test]
    fn leading_ratio_tends_to_one() {
        let p = SymbolProfile::default_quintic();
        let mut last = f64::INFINITY;
        for rho in [0.2, 0.1, 0.05, 0.02] {
            let q = rho_quadruple(rho).unwrap();
            let v = quintic_symbol(&q, 1.0, &p, [1.0; 3]).unwrap();
            let ratio = v.value / quintic_leading_model(rho, 1.0, v.self_convolution, [1.0; 3]);
            let dev = (ratio - 1.0).abs();
            assert!(dev <= last + 1e-12);
            last = dev;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn closed_form_is_a_third_of_tree_coefficient() {
        // only the subleading convolution terms differ
        let p = SymbolProfile::default_quintic();
        let mut last = f64::INFINITY;
        for rho in [0.2, 0.1, 0.05] {
            let q = rho_quadruple(rho).unwrap();
            let v = quintic_symbol(&q, 1.0, &p, [1.0; 3]).unwrap();
            let (_, coeff) = quintic_tree(&q, 1.0, &p, [1.0; 3]).unwrap();
            let dev = (v.value / coeff - 1.0 / 3.0).abs();
            assert!(dev < last);
            last = dev;
        }
        assert!(last < 1e-10, "{last}");
    }

    #[test]
    fn kernel_bound_scales_like_rho_minus_two() {
        let p = SymbolProfile::default_quintic();
        let c: Vec<f64> = [0.1, 0.05, 0.02]
            .iter()
            .map(|&rho| kernel_sup(&rho_quadruple(rho).unwrap(), &p, 2, 3) * rho * rho)
            .collect();
        assert!(c.iter().all(|&s| s > 1.0 && s < 4.0), "{c:?}");
    }
}
