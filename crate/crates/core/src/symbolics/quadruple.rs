use nalgebra::Matrix4;
use rand::Rng;

use crate::error::{Error, Result};
use crate::metric::{Covector4, MetricSpec, Point4};

/// Minimum |det| of the Euclidean-normalized covectors.
pub const INDEPENDENCE_TOL: f64 = 1e-8;

/// Four light-like covectors at one point.
///
/// All dual norms of linear combinations `Σ c_a ζ_a` are computed from the
/// Gram matrix `G_ab = g*(ζ_a, ζ_b)`. When the total `ζ = Σ ζ_a` is itself
/// light-like the norm can also be written through the complementary
/// combination, `|ζ_S|² = −2 g*(ζ_S, ζ_C) − |ζ_C|²`, and the better
/// conditioned of the two expressions is used. This matters on the ρ-family,
/// where `|ζ₁+ζ₂+ζ₃|²` is of size `ρ¹⁰` while its direct terms are of size `ρ`.
#[derive(Debug, Clone)]
pub struct CovectorQuadruple {
    pub base: Point4,
    pub zeta: [Covector4; 4],
    gram: [[f64; 4]; 4],
    null_sum: bool,
}

impl CovectorQuadruple {
    pub fn new(spec: &MetricSpec, base: Point4, xis: [[f64; 4]; 4]) -> Result<Self> {
        let zeta = xis.map(|xi| Covector4::new(base, xi));
        let tau = spec.tau_null();
        let mut gram = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in a..4 {
                let v = spec.pairwise_product(&zeta[a], &zeta[b])?;
                gram[a][b] = v;
                gram[b][a] = v;
            }
        }
        for (a, z) in zeta.iter().enumerate() {
            if gram[a][a].abs() > tau * z.euclid_norm_sq() {
                return Err(Error::InvalidArgument(format!(
                    "zeta_{} is not light-like: P = {:e}",
                    a + 1,
                    gram[a][a]
                )));
            }
            // light-like by contract
            gram[a][a] = 0.0;
        }
        let normalized = Matrix4::from_fn(|i, a| {
            let n = zeta[a].euclid_norm_sq().sqrt();
            if n == 0.0 {
                0.0
            } else {
                zeta[a].xi[i] / n
            }
        });
        let det = normalized.determinant();
        if det.abs() < INDEPENDENCE_TOL {
            return Err(Error::InvalidArgument(format!(
                "covectors are not independent: normalized determinant {det:e}"
            )));
        }
        let total: f64 = gram.iter().flatten().sum();
        let scale: f64 = gram.iter().flatten().map(|v| v.abs()).sum();
        let null_sum = total.abs() <= tau * scale.max(f64::MIN_POSITIVE);
        Ok(CovectorQuadruple {
            base,
            zeta,
            gram,
            null_sum,
        })
    }

    pub fn gram(&self) -> &[[f64; 4]; 4] {
        &self.gram
    }

    pub fn sum(&self) -> Covector4 {
        let mut xi = [0.0; 4];
        for z in &self.zeta {
            for i in 0..4 {
                xi[i] += z.xi[i];
            }
        }
        Covector4::new(self.base, xi)
    }

    /// True when `Σ ζ_a` is light-like within tolerance.
    pub fn sum_is_null(&self) -> bool {
        self.null_sum
    }

    /// `g*(Σ c_a ζ_a, Σ d_b ζ_b)`
    pub fn product(&self, c: &[f64; 4], d: &[f64; 4]) -> f64 {
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += c[a] * d[b] * self.gram[a][b];
            }
        }
        s
    }

    /// `|Σ c_a ζ_a|²_{g*}`
    pub fn norm_sq(&self, c: &[f64; 4]) -> f64 {
        let mut direct = 0.0;
        let mut direct_mag = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let t = c[a] * c[b] * self.gram[a][b];
                direct += t;
                direct_mag += t.abs();
            }
        }
        if !self.null_sum {
            return direct;
        }
        let d = c.map(|ca| 1.0 - ca);
        let mut comp = 0.0;
        let mut comp_mag = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let t = -(2.0 * c[a] * d[b] + d[a] * d[b]) * self.gram[a][b];
                comp += t;
                comp_mag += t.abs();
            }
        }
        if comp_mag < direct_mag {
            comp
        } else {
            direct
        }
    }

    /// Quadruple with its covectors reordered: new `ζ_a` is old `ζ_{perm[a]}`.
    pub fn permuted(&self, perm: [usize; 4]) -> Self {
        let mut gram = [[0.0; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                gram[a][b] = self.gram[perm[a]][perm[b]];
            }
        }
        CovectorQuadruple {
            base: self.base,
            zeta: perm.map(|p| self.zeta[p]),
            gram,
            null_sum: self.null_sum,
        }
    }
}

/// `α₂` making `Σ ζ_i` exactly light-like for the ρ-family.
pub fn rho_alpha2(rho: f64) -> f64 {
    let r10 = rho.powi(10);
    (rho - r10 + 2.0 * rho * r10) / (1.0 - rho + r10)
}

/// The ρ-family at the origin of Minkowski space:
/// `ζ₁ = (1,0,1,0)`, `ζ₂ = α₂(1,0,0,1)`, `ζ₃ = ρ(−1,−1,0,0)`, `ζ₄ = ρ¹⁰(1,−1,0,0)`.
pub fn rho_quadruple(rho: f64) -> Result<CovectorQuadruple> {
    if !(rho > 0.0 && rho <= 0.3) {
        return Err(Error::InvalidArgument(format!("rho = {rho} outside (0, 0.3]")));
    }
    let a2 = rho_alpha2(rho);
    let r10 = rho.powi(10);
    CovectorQuadruple::new(
        &MetricSpec::minkowski(),
        [0.0; 4],
        [
            [1.0, 0.0, 1.0, 0.0],
            [a2, 0.0, 0.0, a2],
            [-rho, -rho, 0.0, 0.0],
            [r10, -r10, 0.0, 0.0],
        ],
    )
}

/// Future light-like covector `r(1, n̂)` for a spatial direction.
pub fn null_covector(r: f64, dir: [f64; 3]) -> [f64; 4] {
    let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    [r, r * dir[0] / n, r * dir[1] / n, r * dir[2] / n]
}

/// Random quadruple in Minkowski space at the origin: three future
/// light-like covectors and a fourth one (past-pointing) fixed by requiring
/// a light-like total. Draws are rejected until every partial sum used as a
/// denominator is at least `1e-3` away from null relative to its terms and
/// the covectors are independent.
pub fn random_null_quadruple(rng: &mut impl Rng) -> CovectorQuadruple {
    let m = MetricSpec::minkowski();
    let dir = |rng: &mut dyn rand::RngCore| -> [f64; 3] {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let r = (1.0 - z * z).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    };
    loop {
        let mut xis = [[0.0; 4]; 4];
        for xi in xis.iter_mut().take(3) {
            *xi = null_covector(rng.random_range(0.5..2.0), dir(rng));
        }
        let s: [f64; 4] = std::array::from_fn(|i| xis[0][i] + xis[1][i] + xis[2][i]);
        let n = null_covector(1.0, dir(rng));
        let s_sq = -s[0] * s[0] + s[1] * s[1] + s[2] * s[2] + s[3] * s[3];
        let s_n = -s[0] * n[0] + s[1] * n[1] + s[2] * n[2] + s[3] * n[3];
        let r = -s_sq / (2.0 * s_n);
        if !(r.is_finite() && r.abs() > 0.2 && r.abs() < 10.0) {
            continue;
        }
        xis[3] = n.map(|c| r * c);
        let Ok(q) = CovectorQuadruple::new(&m, [0.0; 4], xis) else {
            continue;
        };
        if !q.sum_is_null() {
            continue;
        }
        let well_separated = (1..15u32).filter(|b| b.count_ones() >= 2 && b.count_ones() <= 3).all(|bits| {
            let c: [f64; 4] = std::array::from_fn(|a| ((bits >> a) & 1) as f64);
            let scale: f64 = (0..4)
                .flat_map(|a| (0..4).map(move |b| (a, b)))
                .map(|(a, b)| (c[a] * c[b] * q.gram[a][b]).abs())
                .sum();
            q.norm_sq(&c).abs() >= 1e-3 * scale
        });
        if well_separated {
            return q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_family_entries() {
        let q = rho_quadruple(0.1).unwrap();
        assert_eq!(q.zeta[2].xi, [-0.1, -0.1, 0.0, 0.0]);
        let g = q.gram();
        assert!((g[2][3] - 2e-11).abs() < 1e-24);
        assert!((g[0][3] + 1e-10).abs() < 1e-24);
        assert!(q.sum_is_null());
        let m = MetricSpec::minkowski();
        assert!(m.dual_norm_sq(&q.sum()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rho_range() {
        assert!(rho_quadruple(0.0).is_err());
        assert!(rho_quadruple(0.31).is_err());
        for k in 0..30 {
            let rho = 0.3 * 0.85f64.powi(k);
            let q = rho_quadruple(rho).unwrap();
            assert!(q.sum_is_null());
        }
    }

    #[test]
    fn triple_norm_is_well_conditioned() {
        // |ζ1+ζ2+ζ3|² = −2 g(ζ, ζ4) exactly for a null total
        let rho: f64 = 0.02;
        let q = rho_quadruple(rho).unwrap();
        let a2 = rho_alpha2(rho);
        let r10 = rho.powi(10);
        let expect = 2.0 * (r10 + a2 * r10 - 2.0 * rho * r10);
        let got = q.norm_sq(&[1.0, 1.0, 1.0, 0.0]);
        assert!((got - expect).abs() < 1e-12 * expect.abs(), "{got} vs {expect}");
    }

    #[test]
    fn random_quadruples_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let m = MetricSpec::minkowski();
        for _ in 0..50 {
            let q = random_null_quadruple(&mut rng);
            assert!(q.sum_is_null());
            for z in &q.zeta {
                assert!(m.dual_norm_sq(z).unwrap().abs() < 1e-12 * z.euclid_norm_sq());
            }
        }
    }

    #[test]
    fn rejects_non_null_and_dependent() {
        let m = MetricSpec::minkowski();
        let bad = [[1.0, 0.0, 0.5, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 1.0], [1.0, -1.0, 0.0, 0.0]];
        assert!(CovectorQuadruple::new(&m, [0.0; 4], bad).is_err());
        let dep = [[1.0, 0.0, 1.0, 0.0], [2.0, 0.0, 2.0, 0.0], [1.0, 0.0, 0.0, 1.0], [1.0, -1.0, 0.0, 0.0]];
        assert!(CovectorQuadruple::new(&m, [0.0; 4], dep).is_err());
    }
}
