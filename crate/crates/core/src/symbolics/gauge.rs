//! Conformal gauge rules for the nonlinearity, `h̃_k = e^{(k−3)γ} h_k`.

use crate::expr::ScalarField;
use crate::metric::MetricSpec;
use crate::symbolics::nonlinearity::{HValues, TaylorNonlinearity};

pub fn gauge_transform_h(gamma: &ScalarField, h: &TaylorNonlinearity) -> TaylorNonlinearity {
    let mut out = TaylorNonlinearity::new();
    out.remainder_order = h.remainder_order;
    for (k, hk) in h.iter() {
        let factor = gamma.scale(k as f64 - 3.0).exp();
        out.set(k, factor.mul(hk)).expect("order already validated");
    }
    out
}

/// Pointwise form with `γ(x)` given as a number.
pub fn gauge_transform_values(gamma: f64, h: &HValues) -> HValues {
    let mut out = *h;
    for (k, v) in out.0.iter_mut().enumerate() {
        *v *= ((k as f64 - 3.0) * gamma).exp();
    }
    out
}

/// `(−det g)^p` as a closed-form field. Supported for the conformal family
/// (`e^{8pγ}`) and for diagonal product metrics.
pub fn det_power(spec: &MetricSpec, p: f64) -> Option<ScalarField> {
    use crate::metric::MetricFamily;
    match spec.family() {
        MetricFamily::Minkowski => Some(ScalarField::one()),
        MetricFamily::ConformalMinkowski { gamma } => Some(gamma.scale(8.0 * p).exp()),
        MetricFamily::Product { beta, kappa } => {
            let diagonal = (0..3).all(|a| (0..3).all(|b| a == b || kappa[a][b].is_zero()));
            diagonal.then(|| {
                beta.mul(&kappa[0][0]).mul(&kappa[1][1]).mul(&kappa[2][2]).powf(p)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    fn sample() -> TaylorNonlinearity {
        TaylorNonlinearity::new()
            .with(2, sf("1 + 0.1*x"))
            .unwrap()
            .with(3, sf("2"))
            .unwrap()
            .with(5, sf("cos(t)"))
            .unwrap()
    }

    #[test]
    fn identity_and_cubic_invariance() {
        let h = sample();
        let x = [0.3, -0.2, 0.5, 0.1];
        let id = gauge_transform_h(&ScalarField::zero(), &h);
        for k in 2..=5 {
            assert_eq!(id.h(k).map(|f| f.eval(&x)), h.h(k).map(|f| f.eval(&x)));
        }
        let g = gauge_transform_h(&sf("0.4*sin(x) + t"), &h);
        assert_eq!(g.h(3).unwrap().eval(&x), 2.0);
    }

    #[test]
    fn composition_adds_gammas() {
        let h = sample();
        let (g1, g2) = (sf("0.3*x*y"), sf("sin(t) - 0.2*z"));
        let once = gauge_transform_h(&g1.add(&g2), &h);
        let twice = gauge_transform_h(&g1, &gauge_transform_h(&g2, &h));
        for x in [[0.1, 0.2, 0.3, 0.4], [-1.0, 0.5, 2.0, -0.3]] {
            for k in [2, 3, 5] {
                let a = once.h(k).unwrap().eval(&x);
                let b = twice.h(k).unwrap().eval(&x);
                assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn determinant_coefficient_rule() {
        // a = (−det g)^{−1/4} on Minkowski is 1; the gauge image on e^{2γ}η
        // is e^{−γ} = (−det g̃)^{−1/8}, not (−det g̃)^{−1/4} = e^{−2γ}
        let gamma = sf("0.3*sin(x)");
        let conf = MetricSpec::conformal_minkowski(gamma.clone()).unwrap();
        let a = TaylorNonlinearity::new()
            .with(2, det_power(&MetricSpec::minkowski(), -0.25).unwrap())
            .unwrap();
        let at = gauge_transform_h(&gamma, &a);
        let x = [0.0, 0.7, 0.0, 0.0];
        let got = at.h(2).unwrap().eval(&x);
        let eighth = det_power(&conf, -0.125).unwrap().eval(&x);
        let quarter = det_power(&conf, -0.25).unwrap().eval(&x);
        assert!((got - eighth).abs() < 1e-14);
        assert!((got - quarter).abs() > 1e-3);
    }
}
