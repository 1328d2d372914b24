use crate::error::{Error, Result};

/// Sampled fiber symbol `p(α)` of a source along `α ζ_label`, `α > 0`.
///
/// Values are linearly interpolated between nodes and vanish outside
/// `[alpha_min, alpha_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolProfile {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub values: Vec<f64>,
    /// Source label `1..=4` whose covector gives the fiber direction.
    pub label: usize,
}

/// Quadrature value with the change seen when the node spacing is doubled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub refinement_delta: f64,
}

impl SymbolProfile {
    pub fn new(alpha_min: f64, alpha_max: f64, values: Vec<f64>, label: usize) -> Result<Self> {
        if !(alpha_min > 0.0 && alpha_max > alpha_min) {
            return Err(Error::InvalidArgument(format!(
                "profile support [{alpha_min}, {alpha_max}] must satisfy 0 < min < max"
            )));
        }
        if values.len() < 3 {
            return Err(Error::InvalidArgument("profile needs at least 3 nodes".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("profile values must be finite and nonnegative".into()));
        }
        if !(1..=4).contains(&label) {
            return Err(Error::InvalidArgument(format!("profile label {label} outside 1..=4")));
        }
        Ok(SymbolProfile {
            alpha_min,
            alpha_max,
            values,
            label,
        })
    }

    /// Smooth compactly supported bump `exp(1 − 1/(1 − s²))`, `s = (α − c)/w`.
    pub fn bump(center: f64, half_width: f64, nodes: usize, label: usize) -> Result<Self> {
        let lo = center - half_width;
        let hi = center + half_width;
        let n = nodes.max(3);
        let values = (0..n)
            .map(|j| {
                let a = lo + (hi - lo) * j as f64 / (n - 1) as f64;
                let s = (a - center) / half_width;
                if s.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(lo, hi, values, label)
    }

    /// Fixed bump used by the quintic checks: centred at 0.5, half-width
    /// 0.3, 401 nodes, direction `ζ₁`.
    pub fn default_quintic() -> Self {
        Self::bump(0.5, 0.3, 401, 1).expect("valid default profile")
    }

    pub fn zero_like(&self) -> Self {
        SymbolProfile {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn step(&self) -> f64 {
        (self.alpha_max - self.alpha_min) / (self.values.len() - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.alpha_min + self.step() * j as f64
    }

    pub fn value(&self, alpha: f64) -> f64 {
        if alpha < self.alpha_min || alpha > self.alpha_max {
            return 0.0;
        }
        let t = (alpha - self.alpha_min) / self.step();
        let j = (t.floor() as usize).min(self.values.len() - 2);
        let f = t - j as f64;
        self.values[j] * (1.0 - f) + self.values[j + 1] * f
    }

    /// Trapezoid rule of `f(α)` over the profile nodes, with the same rule on
    /// every second node as a refinement check.
    pub fn quadrature(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<Quadrature> {
        let n = self.values.len();
        let h = self.step();
        let mut samples = Vec::with_capacity(n);
        for j in 0..n {
            samples.push(f(self.node(j))?);
        }
        let fine = trapezoid(&samples, h);
        let coarse: Vec<f64> = samples.iter().step_by(2).copied().collect();
        let coarse_h = if n % 2 == 1 { 2.0 * h } else { f64::NAN };
        let refinement_delta = if n % 2 == 1 && coarse.len() >= 2 {
            (fine - trapezoid(&coarse, coarse_h)).abs()
        } else {
            f64::NAN
        };
        Ok(Quadrature {
            value: fine,
            refinement_delta,
        })
    }

    /// `(p ∗ p)(total) = ∫ p(total − α) p(α) dα`; `total = 1` gives the
    /// self-convolution at the base covector.
    pub fn self_convolution(&self, total: f64) -> Quadrature {
        self.quadrature(|a| Ok(self.value(total - a) * self.value(a)))
            .expect("infallible integrand")
    }
}

fn trapezoid(samples: &[f64], h: f64) -> f64 {
    let n = samples.len();
    let inner: f64 = samples[1..n - 1].iter().sum();
    h * (inner + 0.5 * (samples[0] + samples[n - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compact_and_positive() {
        let p = SymbolProfile::default_quintic();
        assert_eq!(p.value(0.1), 0.0);
        assert_eq!(p.value(0.9), 0.0);
        assert!((p.value(0.5) - 1.0).abs() < 1e-15);
        let c = p.self_convolution(1.0);
        assert!(c.value > 0.0);
        assert!(c.refinement_delta < 1e-6 * c.value);
    }

    #[test]
    fn zero_profile_convolves_to_zero() {
        let p = SymbolProfile::default_quintic().zero_like();
        assert_eq!(p.self_convolution(1.0).value, 0.0);
    }

    #[test]
    fn rejects_bad_support() {
        assert!(SymbolProfile::new(0.0, 1.0, vec![0.0; 5], 1).is_err());
        assert!(SymbolProfile::new(0.1, 1.0, vec![0.0, -1.0, 0.0], 1).is_err());
    }

    #[test]
    fn quadrature_of_polynomial() {
        let p = SymbolProfile::new(0.2, 0.8, vec![1.0; 601], 1).unwrap();
        let q = p.quadrature(Ok).unwrap();
        assert!((q.value - 0.5 * (0.64 - 0.04)).abs() < 1e-14);
    }
}
