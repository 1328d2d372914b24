//! Principal-symbol values of interaction trees on a covector quadruple.
//!
//! Rules, applied bottom-up:
//!
//! * a product of `k` factors multiplies the factor symbols and `h_k`, with
//!   `(2π)^{−(k−1)}`, and its covector is the sum of the factor covectors;
//! * an interior `Q` divides by `|ζ|²_{g*}` of the covector below it;
//! * the outermost `Q` contributes no factor (the common flow-out amplitude
//!   is left out of every comparison);
//! * a label that occurs twice splits its covector as `(1−α)ζ_i + αζ_i`,
//!   takes the profile values `p(1−α) p(α)` and is integrated over `α`; each
//!   extra occurrence carries `(2π)^{1/2}`.

use crate::error::{Error, Result};
use crate::symbolics::nonlinearity::HValues;
use crate::symbolics::profile::SymbolProfile;
use crate::symbolics::quadruple::CovectorQuadruple;
use crate::symbolics::terms::{InteractionTerm, TermNode};

pub const DENOMINATOR_GUARD: f64 = 1e-300;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct SymbolInputs<'a> {
    pub quad: &'a CovectorQuadruple,
    pub h: HValues,
    /// `A_i = σ(v_i)(ζ_i)` for labels that occur once.
    pub amplitudes: [f64; 4],
    /// Fiber profiles for labels that occur twice.
    pub profiles: [Option<&'a SymbolProfile>; 4],
}

impl<'a> SymbolInputs<'a> {
    pub fn unit(quad: &'a CovectorQuadruple, h: HValues) -> Self {
        SymbolInputs {
            quad,
            h,
            amplitudes: [1.0; 4],
            profiles: [None; 4],
        }
    }

    pub fn with_profile(mut self, profile: &'a SymbolProfile) -> Self {
        self.profiles[profile.label - 1] = Some(profile);
        self
    }
}

/// Value and the smallest interior denominator `|P|` met on the way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolValue {
    pub value: f64,
    pub min_denominator: f64,
}

/// Multiplier times the symbol of the term's canonical tree.
pub fn eval_interaction_coefficient(term: &InteractionTerm, inp: &SymbolInputs) -> Result<f64> {
    Ok(term.multiplier_f64() * eval_tree(&term.root, inp)?.value)
}

/// Multiplier times the sum over all slot orderings of the labels: the
/// symbol of the term's contribution to `∂^m_ε u`.
pub fn eval_term_sum(term: &InteractionTerm, inp: &SymbolInputs) -> Result<SymbolValue> {
    let (seqs, weight) = term.label_sequences();
    let mut total = 0.0;
    let mut min_den = f64::INFINITY;
    for seq in seqs {
        let v = eval_tree(&term.root.with_slot_labels(&seq), inp)?;
        total += v.value;
        min_den = min_den.min(v.min_denominator);
    }
    Ok(SymbolValue {
        value: term.multiplier_f64() * weight as f64 * total,
        min_denominator: min_den,
    })
}

pub fn eval_term_list(terms: &[InteractionTerm], inp: &SymbolInputs) -> Result<SymbolValue> {
    let mut total = 0.0;
    let mut min_den = f64::INFINITY;
    for t in terms {
        let v = eval_term_sum(t, inp)?;
        total += v.value;
        min_den = min_den.min(v.min_denominator);
    }
    Ok(SymbolValue {
        value: total,
        min_denominator: min_den,
    })
}

struct Slots {
    // per pre-order slot: covector coefficient vector and symbol value
    coeff: Vec<[f64; 4]>,
    symbol: Vec<f64>,
}

/// Symbol of one labeled tree (no multiplier).
pub fn eval_tree(root: &TermNode, inp: &SymbolInputs) -> Result<SymbolValue> {
    let labels = root.slot_labels();
    let mut counts = [0usize; 4];
    for &l in &labels {
        if !(1..=4).contains(&l) {
            return Err(Error::InvalidArgument(format!("source label v{l} outside 1..=4")));
        }
        counts[l - 1] += 1;
    }
    let repeated: Vec<usize> = (1..=4).filter(|&l| counts[l - 1] > 1).collect();
    if counts.iter().any(|&c| c > 2) || repeated.len() > 2 {
        return Err(Error::InvalidArgument(format!(
            "symbol evaluation supports labels repeated at most twice, at most two of them; got multiplicities {counts:?}"
        )));
    }
    let mut profiles = Vec::new();
    for &l in &repeated {
        match inp.profiles[l - 1] {
            Some(p) if p.label == l => profiles.push(p),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "repeated source v{l} needs a fiber profile"
                )))
            }
        }
    }
    let mut pi_power = 0.0;
    product_pi_power(root, &mut pi_power);
    pi_power -= 0.5 * (labels.len() - (4 - counts.iter().filter(|&&c| c == 0).count())) as f64;
    let prefactor = TWO_PI.powf(-pi_power);

    let mut min_den = f64::INFINITY;
    let mut eval_with = |alphas: &[f64]| -> Result<f64> {
        let slots = slot_data(&labels, &repeated, &profiles, alphas, inp);
        let mut idx = 0;
        let (v, _) = rec(root, true, &slots, &mut idx, inp, &mut min_den)?;
        Ok(v)
    };
    let value = match profiles.len() {
        0 => eval_with(&[])?,
        1 => profiles[0].quadrature(|a| eval_with(&[a]))?.value,
        _ => {
            let (p0, p1) = (profiles[0], profiles[1]);
            p0.quadrature(|a0| Ok(p1.quadrature(|a1| eval_with(&[a0, a1]))?.value))?
                .value
        }
    };
    Ok(SymbolValue {
        value: prefactor * value,
        min_denominator: min_den,
    })
}

fn product_pi_power(node: &TermNode, acc: &mut f64) {
    match node {
        TermNode::Source(_) => {}
        TermNode::Product { children, .. } => {
            *acc += (children.len() as f64) - 1.0;
            children.iter().for_each(|c| product_pi_power(c, acc));
        }
        TermNode::ApplyQ(c) => product_pi_power(c, acc),
    }
}

fn slot_data(
    labels: &[usize],
    repeated: &[usize],
    profiles: &[&SymbolProfile],
    alphas: &[f64],
    inp: &SymbolInputs,
) -> Slots {
    let mut seen = [0usize; 4];
    let mut coeff = Vec::with_capacity(labels.len());
    let mut symbol = Vec::with_capacity(labels.len());
    for &l in labels {
        let mut c = [0.0; 4];
        match repeated.iter().position(|&r| r == l) {
            Some(r) => {
                // first occurrence takes 1 − α, second α
                let a = alphas[r];
                let frac = if seen[l - 1] == 0 { 1.0 - a } else { a };
                c[l - 1] = frac;
                symbol.push(profiles[r].value(frac));
            }
            None => {
                c[l - 1] = 1.0;
                symbol.push(inp.amplitudes[l - 1]);
            }
        }
        seen[l - 1] += 1;
        coeff.push(c);
    }
    Slots { coeff, symbol }
}

fn rec(
    node: &TermNode,
    is_root: bool,
    slots: &Slots,
    idx: &mut usize,
    inp: &SymbolInputs,
    min_den: &mut f64,
) -> Result<(f64, [f64; 4])> {
    match node {
        TermNode::Source(_) => {
            let s = *idx;
            *idx += 1;
            Ok((slots.symbol[s], slots.coeff[s]))
        }
        TermNode::Product { order, children } => {
            let mut value = inp.h.get(*order);
            let mut c = [0.0; 4];
            for ch in children {
                let (v, cc) = rec(ch, false, slots, idx, inp, min_den)?;
                value *= v;
                for a in 0..4 {
                    c[a] += cc[a];
                }
            }
            Ok((value, c))
        }
        TermNode::ApplyQ(child) => {
            let (v, c) = rec(child, false, slots, idx, inp, min_den)?;
            if is_root {
                return Ok((v, c));
            }
            let p = inp.quad.norm_sq(&c);
            if !(p.abs() >= DENOMINATOR_GUARD) {
                return Err(Error::SingularDenominator {
                    context: format!("(Q {child}) at covector coefficients {c:?}"),
                    value: p,
                });
            }
            *min_den = min_den.min(p.abs());
            Ok((v / p, c))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolics::quadruple::rho_quadruple;

    #[test]
    fn quartic_single_term() {
        let q = rho_quadruple(0.1).unwrap();
        let t = InteractionTerm::parse("-1 (Q (h4 v1 v2 v3 v4))").unwrap();
        let inp = SymbolInputs::unit(&q, HValues::from_pairs(&[(4, 1.0)]));
        let v = eval_interaction_coefficient(&t, &inp).unwrap();
        assert!((v + TWO_PI.powi(-3)).abs() < 1e-16);
    }

    #[test]
    fn cubic_quadratic_term() {
        let q = rho_quadruple(0.1).unwrap();
        let t = InteractionTerm::parse("1 (Q (h3 v1 v2 (Q (h2 v3 v4))))").unwrap();
        let (a, b) = (0.7, 1.3);
        let inp = SymbolInputs::unit(&q, HValues::from_pairs(&[(2, a), (3, b)]));
        let v = eval_interaction_coefficient(&t, &inp).unwrap();
        let expect = TWO_PI.powi(-3) * a * b / q.norm_sq(&[0.0, 0.0, 1.0, 1.0]);
        assert!((v - expect).abs() <= 1e-14 * expect.abs());
    }

    #[test]
    fn singular_interior_denominator_is_reported() {
        // Σ ζ_i is null on the ρ-family, so Q over all four leaves is singular
        let q = rho_quadruple(0.1).unwrap();
        let inner = TermNode::ApplyQ(Box::new(TermNode::Product {
            order: 4,
            children: (1..=4).map(TermNode::Source).collect(),
        }));
        let root = TermNode::ApplyQ(Box::new(TermNode::Product {
            order: 1,
            children: vec![inner],
        }));
        let inp = SymbolInputs::unit(&q, HValues::from_pairs(&[(4, 1.0)]));
        let err = eval_tree(&root, &inp).unwrap_err();
        assert!(matches!(err, Error::SingularDenominator { .. }), "{err}");
    }

    #[test]
    fn zero_profile_gives_zero() {
        let q = rho_quadruple(0.05).unwrap();
        let p = SymbolProfile::default_quintic().zero_like();
        let t = InteractionTerm::parse("3 (Q (h3 v1 v1 (Q (h3 v2 v3 v4))))").unwrap();
        let inp = SymbolInputs::unit(&q, HValues::from_pairs(&[(3, 1.0)])).with_profile(&p);
        assert_eq!(eval_interaction_coefficient(&t, &inp).unwrap(), 0.0);
    }

    #[test]
    fn repeated_label_without_profile_is_an_error() {
        let q = rho_quadruple(0.05).unwrap();
        let t = InteractionTerm::parse("3 (Q (h3 v1 v1 (Q (h3 v2 v3 v4))))").unwrap();
        let inp = SymbolInputs::unit(&q, HValues::from_pairs(&[(3, 1.0)]));
        assert!(eval_interaction_coefficient(&t, &inp).is_err());
    }

    #[test]
    fn same_product_repetition_is_self_convolution() {
        let q = rho_quadruple(0.05).unwrap();
        let p = SymbolProfile::default_quintic();
        let t = InteractionTerm::parse("1 (Q (h3 v1 v1 (Q (h3 v2 v3 v4))))").unwrap();
        let inp = SymbolInputs::unit(&q, HValues::from_pairs(&[(3, 1.0)])).with_profile(&p);
        let v = eval_interaction_coefficient(&t, &inp).unwrap();
        let expect = TWO_PI.powf(-3.5) * p.self_convolution(1.0).value
            / q.norm_sq(&[0.0, 1.0, 1.0, 1.0]);
        assert!((v - expect).abs() <= 1e-12 * expect.abs(), "{v} vs {expect}");
    }
}
