use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::metric::Point4;

pub const MAX_ORDER: usize = 12;

/// `H(x, z) = Σ_k h_k(x) z^k`, `2 ≤ k ≤ 12`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TaylorNonlinearity {
    coeffs: BTreeMap<usize, ScalarField>,
    /// Order of the neglected remainder, if the truncation is meant as one.
    pub remainder_order: Option<usize>,
}

impl TaylorNonlinearity {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, k: usize, h: ScalarField) -> Result<Self> {
        self.set(k, h)?;
        Ok(self)
    }

    /// Constant coefficients `[(k, h_k)]`.
    pub fn constant(terms: &[(usize, f64)]) -> Result<Self> {
        let mut out = Self::new();
        for &(k, h) in terms {
            out.set(k, ScalarField::constant(h))?;
        }
        Ok(out)
    }

    pub fn set(&mut self, k: usize, h: ScalarField) -> Result<()> {
        if !(2..=MAX_ORDER).contains(&k) {
            return Err(Error::InvalidArgument(format!(
                "nonlinearity order {k} outside 2..={MAX_ORDER}"
            )));
        }
        if h.is_zero() {
            self.coeffs.remove(&k);
        } else {
            self.coeffs.insert(k, h);
        }
        Ok(())
    }

    pub fn h(&self, k: usize) -> Option<&ScalarField> {
        self.coeffs.get(&k)
    }

    /// Orders with a coefficient that is not identically zero.
    pub fn orders(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &ScalarField)> {
        self.coeffs.iter().map(|(k, h)| (*k, h))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn values_at(&self, x: &Point4) -> HValues {
        let mut v = HValues::default();
        for (k, h) in &self.coeffs {
            v.0[*k] = h.eval(x);
        }
        v
    }

    pub fn eval(&self, x: &Point4, z: f64) -> f64 {
        self.coeffs.iter().map(|(k, h)| h.eval(x) * z.powi(*k as i32)).sum()
    }

    /// Some `∂_z^k H(x, 0) ≠ 0` with `k ≥ 2`.
    pub fn is_genuine_at(&self, x: &Point4) -> bool {
        self.coeffs.values().any(|h| h.eval(x) != 0.0)
    }
}

/// Coefficient values `h_k` at one point, indexed by `k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HValues(pub [f64; MAX_ORDER + 1]);

impl HValues {
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Self {
        let mut v = HValues::default();
        for &(k, h) in pairs {
            v.0[k] = h;
        }
        v
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }
}
