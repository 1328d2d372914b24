//! Lorentzian metric families on a global chart and their pointwise data.
//!
//! Components and their first and second partials are kept as symbolic
//! [`ScalarField`]s, so everything downstream (inverse derivatives,
//! Christoffel symbols, curvature) is exact up to rounding.
//!
//! Curvature sign: [`MetricEval::scalar_curvature`] is reported with the
//! sign for which `□_g + R/6` is the conformally covariant wave operator in
//! four dimensions, i.e. the negative of the usual Ricci-contraction value
//! for signature (−,+,+,+).

use nalgebra::{Matrix3, Matrix4, SymmetricEigen};

use crate::error::{Error, Result};
use crate::expr::ScalarField;

pub type Point4 = [f64; 4];

pub const DEFAULT_TAU_NULL: f64 = 1e-9;

/// Covector attached to a base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covector4 {
    pub base: Point4,
    pub xi: [f64; 4],
}

impl Covector4 {
    pub fn new(base: Point4, xi: [f64; 4]) -> Self {
        Covector4 { base, xi }
    }

    pub fn at_origin(xi: [f64; 4]) -> Self {
        Covector4 {
            base: [0.0; 4],
            xi,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Covector4 {
            base: self.base,
            xi: self.xi.map(|c| s * c),
        }
    }

    /// Sum of covectors at the same base point.
    pub fn plus(&self, other: &Covector4) -> Result<Self> {
        if self.base != other.base {
            return Err(Error::InvalidArgument(format!(
                "covectors at different base points {:?} and {:?}",
                self.base, other.base
            )));
        }
        let mut xi = self.xi;
        for (a, b) in xi.iter_mut().zip(other.xi) {
            *a += b;
        }
        Ok(Covector4 { base: self.base, xi })
    }

    pub fn euclid_norm_sq(&self) -> f64 {
        self.xi.iter().map(|c| c * c).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CausalClass {
    Timelike,
    Null,
    Spacelike,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum MetricFamily {
    Minkowski,
    /// `e^{2γ} η`
    ConformalMinkowski { gamma: ScalarField },
    /// `−β dt² + κ_ab dx^a dx^b`
    Product {
        beta: ScalarField,
        kappa: [[ScalarField; 3]; 3],
    },
}

/// Axis-aligned lattice of points where the signature is checked once.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLattice {
    pub lo: Point4,
    pub hi: Point4,
    pub points_per_axis: usize,
}

impl Default for SampleLattice {
    fn default() -> Self {
        SampleLattice {
            lo: [-1.0; 4],
            hi: [1.0; 4],
            points_per_axis: 3,
        }
    }
}

impl SampleLattice {
    pub fn points(&self) -> Vec<Point4> {
        let n = self.points_per_axis.max(1);
        let coord = |axis: usize, k: usize| {
            if n == 1 {
                0.5 * (self.lo[axis] + self.hi[axis])
            } else {
                self.lo[axis] + (self.hi[axis] - self.lo[axis]) * k as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        out.push([coord(0, a), coord(1, b), coord(2, c), coord(3, d)]);
                    }
                }
            }
        }
        out
    }
}

// Index of the symmetric pair (i, j) in the packed upper triangle.
fn pair(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    const IDX: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 4, 5, 6], [2, 5, 7, 8], [3, 6, 8, 9]];
    IDX[i][j]
}

const PAIRS: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

/// Metric family with precomputed symbolic component derivatives.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    family: MetricFamily,
    tau_null: f64,
    comps: Vec<ScalarField>,
    d1: Vec<[ScalarField; 4]>,
    // d2[p][a][b], filled for all a, b
    d2: Vec<[[ScalarField; 4]; 4]>,
    flat_constant: bool,
}

/// Metric value and derivatives at one point.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub x: Point4,
    pub g: Matrix4<f64>,
    pub g_inv: Matrix4<f64>,
    /// `dg[a] = ∂_a g`
    pub dg: [Matrix4<f64>; 4],
    /// `d2g[a][b] = ∂_a ∂_b g`, present when requested
    pub d2g: Option<[[Matrix4<f64>; 4]; 4]>,
}

/// Full pointwise metric data.
#[derive(Debug, Clone)]
pub struct MetricEval {
    pub g: Matrix4<f64>,
    pub g_inv: Matrix4<f64>,
    pub dg: [Matrix4<f64>; 4],
    /// `christoffel[i][j][k] = Γ^i_{jk}`
    pub christoffel: [[[f64; 4]; 4]; 4],
    pub scalar_curvature: f64,
}

impl MetricSpec {
    pub fn minkowski() -> Self {
        Self::build(MetricFamily::Minkowski)
    }

    pub fn conformal_minkowski(gamma: ScalarField) -> Result<Self> {
        Self::new(MetricFamily::ConformalMinkowski { gamma })
    }

    pub fn product(beta: ScalarField, kappa: [[ScalarField; 3]; 3]) -> Result<Self> {
        Self::new(MetricFamily::Product { beta, kappa })
    }

    /// Product metric with diagonal spatial part.
    pub fn product_diagonal(beta: ScalarField, kappa_diag: [ScalarField; 3]) -> Result<Self> {
        let z = ScalarField::zero;
        let [k1, k2, k3] = kappa_diag;
        Self::product(beta, [[k1, z(), z()], [z(), k2, z()], [z(), z(), k3]])
    }

    /// Build and check the signature on the default lattice.
    pub fn new(family: MetricFamily) -> Result<Self> {
        Self::with_lattice(family, &SampleLattice::default())
    }

    pub fn with_lattice(family: MetricFamily, lattice: &SampleLattice) -> Result<Self> {
        if let MetricFamily::Product { kappa, .. } = &family {
            for a in 0..3 {
                for b in 0..a {
                    if kappa[a][b] != kappa[b][a] {
                        return Err(Error::InvalidArgument(format!(
                            "kappa must be symmetric: entries ({b},{a}) and ({a},{b}) differ"
                        )));
                    }
                }
            }
        }
        let spec = Self::build(family);
        spec.check_signature_on(lattice)?;
        Ok(spec)
    }

    fn build(family: MetricFamily) -> Self {
        let comps: Vec<ScalarField> = match &family {
            MetricFamily::Minkowski => PAIRS
                .iter()
                .map(|&(i, j)| {
                    ScalarField::constant(match (i, j) {
                        (0, 0) => -1.0,
                        (i, j) if i == j => 1.0,
                        _ => 0.0,
                    })
                })
                .collect(),
            MetricFamily::ConformalMinkowski { gamma } => {
                let w = gamma.scale(2.0).exp();
                PAIRS
                    .iter()
                    .map(|&(i, j)| match (i, j) {
                        (0, 0) => w.neg(),
                        (i, j) if i == j => w.clone(),
                        _ => ScalarField::zero(),
                    })
                    .collect()
            }
            MetricFamily::Product { beta, kappa } => PAIRS
                .iter()
                .map(|&(i, j)| match (i, j) {
                    (0, 0) => beta.neg(),
                    (0, _) => ScalarField::zero(),
                    (i, j) => kappa[i - 1][j - 1].clone(),
                })
                .collect(),
        };
        let d1: Vec<[ScalarField; 4]> = comps
            .iter()
            .map(|c| std::array::from_fn(|a| c.derivative(a)))
            .collect();
        let d2: Vec<[[ScalarField; 4]; 4]> = d1
            .iter()
            .map(|row| std::array::from_fn(|a| std::array::from_fn(|b| row[a].derivative(b))))
            .collect();
        let flat_constant = d1.iter().all(|row| row.iter().all(|f| f.is_zero()));
        MetricSpec {
            family,
            tau_null: DEFAULT_TAU_NULL,
            comps,
            d1,
            d2,
            flat_constant,
        }
    }

    pub fn with_tau_null(mut self, tau: f64) -> Self {
        self.tau_null = tau;
        self
    }

    pub fn tau_null(&self) -> f64 {
        self.tau_null
    }

    pub fn family(&self) -> &MetricFamily {
        &self.family
    }

    /// True when all components are constant (no derivatives anywhere).
    pub fn is_constant(&self) -> bool {
        self.flat_constant
    }

    /// Conformal factor exponent for the conformal family, zero otherwise.
    pub fn conformal_gamma(&self) -> Option<&ScalarField> {
        match &self.family {
            MetricFamily::ConformalMinkowski { gamma } => Some(gamma),
            _ => None,
        }
    }

    /// True when g_{0a} vanishes identically.
    pub fn is_time_orthogonal(&self) -> bool {
        (1..4).all(|a| self.comps[pair(0, a)].is_zero())
    }

    /// Component `g_{ij}` as a symbolic field.
    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        &self.comps[pair(i, j)]
    }

    pub fn check_signature_on(&self, lattice: &SampleLattice) -> Result<()> {
        for x in lattice.points() {
            let g = self.g_unchecked(&x);
            if !g.iter().all(|v| v.is_finite()) {
                return Err(Error::Signature {
                    point: x,
                    reason: "non-finite metric component".into(),
                });
            }
            let eig = SymmetricEigen::new(g).eigenvalues;
            let neg = eig.iter().filter(|&&e| e < 0.0).count();
            let pos = eig.iter().filter(|&&e| e > 0.0).count();
            if neg != 1 || pos != 3 {
                return Err(Error::Signature {
                    point: x,
                    reason: format!("eigenvalues {:?}", eig.as_slice()),
                });
            }
        }
        Ok(())
    }

    fn g_unchecked(&self, x: &Point4) -> Matrix4<f64> {
        let mut g = Matrix4::zeros();
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            let v = self.comps[p].eval(x);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
        g
    }

    /// Metric at `x` with the cheap signature test (det < 0, spatial block
    /// positive definite), which is equivalent to signature (−,+,+,+).
    pub fn g(&self, x: &Point4) -> Result<Matrix4<f64>> {
        let g = self.g_unchecked(x);
        let s: Matrix3<f64> = g.fixed_view::<3, 3>(1, 1).into_owned();
        let m1 = s[(0, 0)];
        let m2 = s[(0, 0)] * s[(1, 1)] - s[(0, 1)] * s[(1, 0)];
        let m3 = s.determinant();
        let det = g.determinant();
        if !(det < 0.0 && m1 > 0.0 && m2 > 0.0 && m3 > 0.0) {
            return Err(Error::Signature {
                point: *x,
                reason: format!("det g = {det:e}, spatial minors = ({m1:e}, {m2:e}, {m3:e})"),
            });
        }
        Ok(g)
    }

    pub fn g_inv(&self, x: &Point4) -> Result<Matrix4<f64>> {
        let g = self.g(x)?;
        invert(&g, x)
    }

    /// `sqrt(−det g)`
    pub fn volume_density(&self, x: &Point4) -> Result<f64> {
        Ok((-self.g(x)?.determinant()).sqrt())
    }

    /// Metric, inverse and derivatives up to `order` (1 or 2).
    pub fn jet(&self, x: &Point4, order: usize) -> Result<MetricJet> {
        let g = self.g(x)?;
        let g_inv = invert(&g, x)?;
        let mut dg = [Matrix4::zeros(); 4];
        let mut d2g = None;
        if !self.flat_constant {
            for (p, &(i, j)) in PAIRS.iter().enumerate() {
                for (a, m) in dg.iter_mut().enumerate() {
                    let v = self.d1[p][a].eval(x);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
        }
        if order >= 2 {
            let mut h = [[Matrix4::zeros(); 4]; 4];
            if !self.flat_constant {
                for (p, &(i, j)) in PAIRS.iter().enumerate() {
                    for a in 0..4 {
                        for b in a..4 {
                            let v = self.d2[p][a][b].eval(x);
                            h[a][b][(i, j)] = v;
                            h[a][b][(j, i)] = v;
                            h[b][a][(i, j)] = v;
                            h[b][a][(j, i)] = v;
                        }
                    }
                }
            }
            d2g = Some(h);
        }
        Ok(MetricJet {
            x: *x,
            g,
            g_inv,
            dg,
            d2g,
        })
    }

    pub fn eval(&self, x: &Point4) -> Result<MetricEval> {
        let jet = self.jet(x, 2)?;
        let christoffel = jet.christoffel();
        let scalar_curvature = jet.scalar_curvature();
        Ok(MetricEval {
            g: jet.g,
            g_inv: jet.g_inv,
            dg: jet.dg,
            christoffel,
            scalar_curvature,
        })
    }

    pub fn scalar_curvature(&self, x: &Point4) -> Result<f64> {
        if self.flat_constant {
            self.g(x)?;
            return Ok(0.0);
        }
        Ok(self.jet(x, 2)?.scalar_curvature())
    }

    /// `P(x, ξ) = ξᵀ g⁻¹(x) ξ`
    pub fn dual_norm_sq(&self, xi: &Covector4) -> Result<f64> {
        let gi = self.g_inv(&xi.base)?;
        Ok(quad(&gi, &xi.xi, &xi.xi))
    }

    /// `g*(ξ, η)` for covectors at the same base point.
    pub fn pairwise_product(&self, xi: &Covector4, eta: &Covector4) -> Result<f64> {
        if xi.base != eta.base {
            return Err(Error::InvalidArgument(format!(
                "covectors at different base points {:?} and {:?}",
                xi.base, eta.base
            )));
        }
        let gi = self.g_inv(&xi.base)?;
        Ok(quad(&gi, &xi.xi, &eta.xi))
    }

    /// `g(v, v)` for a tangent vector at `x`.
    pub fn vector_norm_sq(&self, x: &Point4, v: &[f64; 4]) -> Result<f64> {
        let g = self.g(x)?;
        Ok(quad(&g, v, v))
    }

    fn classify(&self, norm_sq: f64, comps: &[f64; 4]) -> Result<CausalClass> {
        let euclid: f64 = comps.iter().map(|c| c * c).sum();
        if euclid == 0.0 {
            return Err(Error::InvalidArgument("zero vector has no causal class".into()));
        }
        Ok(if norm_sq.abs() <= self.tau_null * euclid {
            CausalClass::Null
        } else if norm_sq < 0.0 {
            CausalClass::Timelike
        } else {
            CausalClass::Spacelike
        })
    }

    pub fn causal_class_vector(&self, x: &Point4, v: &[f64; 4]) -> Result<CausalClass> {
        let n = self.vector_norm_sq(x, v)?;
        self.classify(n, v)
    }

    pub fn causal_class_covector(&self, xi: &Covector4) -> Result<CausalClass> {
        let n = self.dual_norm_sq(xi)?;
        self.classify(n, &xi.xi)
    }

    pub fn describe(&self) -> String {
        match &self.family {
            MetricFamily::Minkowski => "minkowski".to_string(),
            MetricFamily::ConformalMinkowski { gamma } => format!("conformal(gamma = {gamma})"),
            MetricFamily::Product { beta, kappa } => {
                let rows: Vec<String> = kappa
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|k| k.to_string())
                            .collect::<Vec<_>>()
                            .join(", ")
                    })
                    .collect();
                format!("product(beta = {beta}, kappa = [{}])", rows.join("; "))
            }
        }
    }
}

fn invert(g: &Matrix4<f64>, x: &Point4) -> Result<Matrix4<f64>> {
    let inv = g.try_inverse().ok_or_else(|| Error::Signature {
        point: *x,
        reason: "singular metric".into(),
    })?;
    // symmetrize away rounding asymmetry
    Ok((inv + inv.transpose()) * 0.5)
}

pub(crate) fn quad(m: &Matrix4<f64>, a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            s += a[i] * m[(i, j)] * b[j];
        }
    }
    s
}

impl MetricJet {
    /// `∂_a g⁻¹ = −g⁻¹ (∂_a g) g⁻¹`
    pub fn dg_inv(&self) -> [Matrix4<f64>; 4] {
        std::array::from_fn(|a| -(self.g_inv * self.dg[a] * self.g_inv))
    }

    /// `∂_a ∂_b g⁻¹`; requires a second-order jet.
    pub fn d2g_inv(&self) -> [[Matrix4<f64>; 4]; 4] {
        let d2g = self.d2g.as_ref().expect("second-order jet required");
        let dgi = self.dg_inv();
        let gi = &self.g_inv;
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                -(dgi[b] * self.dg[a] * gi + gi * d2g[a][b] * gi + gi * self.dg[a] * dgi[b])
            })
        })
    }

    /// `Γ^i_{jk} = ½ g^{il}(∂_j g_{lk} + ∂_k g_{lj} − ∂_l g_{jk})`
    pub fn christoffel(&self) -> [[[f64; 4]; 4]; 4] {
        let mut first = [[[0.0; 4]; 4]; 4]; // Γ_{ljk}
        for (l, fl) in first.iter_mut().enumerate() {
            for j in 0..4 {
                for k in 0..4 {
                    fl[j][k] =
                        0.5 * (self.dg[j][(l, k)] + self.dg[k][(l, j)] - self.dg[l][(j, k)]);
                }
            }
        }
        let mut out = [[[0.0; 4]; 4]; 4];
        for (i, oi) in out.iter_mut().enumerate() {
            for j in 0..4 {
                for k in 0..4 {
                    oi[j][k] = (0..4).map(|l| self.g_inv[(i, l)] * first[l][j][k]).sum();
                }
            }
        }
        out
    }

    /// Scalar curvature with the sign documented at module level.
    pub fn scalar_curvature(&self) -> f64 {
        let d2g = self.d2g.as_ref().expect("second-order jet required");
        let gam = self.christoffel();
        let dgi = self.dg_inv();
        // dgam[l][i][j][k] = ∂_l Γ^i_{jk}
        let mut dgam = [[[[0.0; 4]; 4]; 4]; 4];
        for (l, dl) in dgam.iter_mut().enumerate() {
            for (i, di) in dl.iter_mut().enumerate() {
                for j in 0..4 {
                    for k in j..4 {
                        let mut s = 0.0;
                        for m in 0..4 {
                            let bracket =
                                self.dg[j][(m, k)] + self.dg[k][(m, j)] - self.dg[m][(j, k)];
                            let dbracket = d2g[l][j][(m, k)] + d2g[l][k][(m, j)]
                                - d2g[l][m][(j, k)];
                            s += dgi[l][(i, m)] * bracket + self.g_inv[(i, m)] * dbracket;
                        }
                        di[j][k] = 0.5 * s;
                        di[k][j] = 0.5 * s;
                    }
                }
            }
        }
        // Ricci R_{jl} = ∂_i Γ^i_{lj} − ∂_l Γ^i_{ij} + Γ^i_{im} Γ^m_{lj} − Γ^i_{lm} Γ^m_{ij}
        let mut r = 0.0;
        for j in 0..4 {
            for l in 0..4 {
                let gjl = self.g_inv[(j, l)];
                if gjl == 0.0 {
                    continue;
                }
                let mut ric = 0.0;
                for i in 0..4 {
                    ric += dgam[i][i][l][j] - dgam[l][i][i][j];
                    for m in 0..4 {
                        ric += gam[i][i][m] * gam[m][l][j] - gam[i][l][m] * gam[m][i][j];
                    }
                }
                r += gjl * ric;
            }
        }
        -r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sf(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    #[test]
    fn minkowski_data() {
        let m = MetricSpec::minkowski();
        let e = m.eval(&[0.3, 1.0, -2.0, 0.5]).unwrap();
        assert_eq!(e.g, Matrix4::from_diagonal(&[-1.0, 1.0, 1.0, 1.0].into()));
        assert_eq!(e.scalar_curvature, 0.0);
        assert!(e.christoffel.iter().flatten().flatten().all(|&c| c == 0.0));
    }

    #[test]
    fn zero_gamma_is_minkowski() {
        let c = MetricSpec::conformal_minkowski(ScalarField::zero()).unwrap();
        let e = c.eval(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = MetricSpec::minkowski().eval(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(e.g, m.g);
        assert_eq!(e.scalar_curvature, 0.0);
        assert!(c.is_constant());
    }

    #[test]
    fn dual_norm_examples() {
        let m = MetricSpec::minkowski();
        let n = |xi| m.dual_norm_sq(&Covector4::at_origin(xi)).unwrap();
        assert_eq!(n([1.0, 0.0, 1.0, 0.0]), 0.0);
        assert_eq!(n([1.0, 0.0, 0.0, 0.0]), -1.0);
        let rho = 0.1;
        let s = [1.0 - rho, -rho, 1.0, 0.0];
        assert!((n(s) - 2.0 * rho).abs() < 1e-15);
    }

    #[test]
    fn pairwise_examples() {
        let m = MetricSpec::minkowski();
        let rho: f64 = 0.3;
        let r10 = rho.powi(10);
        let z1 = Covector4::at_origin([1.0, 0.0, 1.0, 0.0]);
        let z3 = Covector4::at_origin([-rho, -rho, 0.0, 0.0]);
        let z4 = Covector4::at_origin([r10, -r10, 0.0, 0.0]);
        assert!((m.pairwise_product(&z1, &z4).unwrap() + r10).abs() < 1e-20);
        assert!((m.pairwise_product(&z3, &z4).unwrap() - 2.0 * rho.powi(11)).abs() < 1e-20);
        assert_eq!(m.pairwise_product(&z1, &z1).unwrap(), 0.0);
        let other = Covector4::new([1.0, 0.0, 0.0, 0.0], z1.xi);
        assert!(m.pairwise_product(&z1, &other).is_err());
    }

    #[test]
    fn causal_classes() {
        let m = MetricSpec::minkowski();
        let x = [0.0; 4];
        assert_eq!(m.causal_class_vector(&x, &[1.0, 0.0, 1.0, 0.0]).unwrap(), CausalClass::Null);
        assert_eq!(
            m.causal_class_vector(&x, &[2.0, 0.0, 1.0, 0.0]).unwrap(),
            CausalClass::Timelike
        );
        assert_eq!(
            m.causal_class_vector(&x, &[0.0, 0.0, 1.0, 0.0]).unwrap(),
            CausalClass::Spacelike
        );
        assert!(m.causal_class_vector(&x, &[0.0; 4]).is_err());
        let c = MetricSpec::conformal_minkowski(sf("0.7*sin(x) + t*y")).unwrap();
        let x = [0.2, 0.5, -0.3, 0.9];
        assert_eq!(c.causal_class_vector(&x, &[1.0, 0.0, 1.0, 0.0]).unwrap(), CausalClass::Null);
    }

    #[test]
    fn flat_product_has_zero_curvature() {
        let p = MetricSpec::product_diagonal(sf("1"), [sf("1"), sf("1"), sf("1")]).unwrap();
        assert_eq!(p.scalar_curvature(&[0.3, 0.1, 0.2, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn conformal_curvature_closed_form() {
        // R = 6 e^{-2γ} (□_η γ + η(∇γ, ∇γ)) in the sign used here
        let c = 0.4;
        let spec = MetricSpec::conformal_minkowski(sf("0.4*sin(x1)")).unwrap();
        for x1 in [-1.0, 0.0, 0.3, 1.7] {
            let x = [0.2, x1, 0.5, -0.1];
            let gamma = c * f64::sin(x1);
            let lap = -c * f64::sin(x1);
            let grad2 = (c * f64::cos(x1)).powi(2);
            let expect = 6.0 * (-2.0 * gamma).exp() * (lap + grad2);
            let got = spec.scalar_curvature(&x).unwrap();
            assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
        }
    }

    #[test]
    fn rejects_bad_signature() {
        let bad = MetricSpec::product_diagonal(sf("1"), [sf("1"), sf("-1"), sf("1")]);
        assert!(matches!(bad, Err(Error::Signature { .. })));
        let beta_neg = MetricSpec::product_diagonal(sf("x"), [sf("1"), sf("1"), sf("1")]);
        assert!(beta_neg.is_err());
    }

    #[test]
    fn rejects_asymmetric_kappa() {
        let z = ScalarField::zero;
        let k = [[sf("1"), sf("0.1"), z()], [z(), sf("1"), z()], [z(), z(), sf("1")]];
        assert!(MetricSpec::product(sf("1"), k).is_err());
    }

    #[test]
    fn d2g_inv_matches_difference_of_dg_inv() {
        let spec = MetricSpec::product_diagonal(
            sf("1 + 0.1*sin(x)*cos(t)"),
            [sf("1 + 0.2*y^2"), sf("exp(0.1*x)"), sf("1 + 0.05*t*z")],
        )
        .unwrap();
        let x = [0.3, 0.2, -0.4, 0.5];
        let h = 1e-5;
        let d2 = spec.jet(&x, 2).unwrap().d2g_inv();
        for b in 0..4 {
            let mut xp = x;
            xp[b] += h;
            let mut xm = x;
            xm[b] -= h;
            let jp = spec.jet(&xp, 1).unwrap().dg_inv();
            let jm = spec.jet(&xm, 1).unwrap().dg_inv();
            for a in 0..4 {
                let fd = (jp[a] - jm[a]) / (2.0 * h);
                assert!((fd - d2[a][b]).norm() < 1e-8);
            }
        }
    }

    fn arb_gamma() -> impl Strategy<Value = ScalarField> {
        (-0.5f64..0.5, -0.5f64..0.5, -0.5f64..0.5, 0usize..4).prop_map(|(a, b, c, v)| {
            let var = ["t", "x1", "x2", "x3"][v];
            sf(&format!("{a:?}*sin({var}) + {b:?}*x1*x2 + {c:?}*cos(t + x3)"))
        })
    }

    proptest! {
        #[test]
        fn inverse_is_inverse(gam in arb_gamma(), x in prop::array::uniform4(-1.0f64..1.0)) {
            let spec = MetricSpec::conformal_minkowski(gam).unwrap();
            let e = spec.eval(&x).unwrap();
            prop_assert!((e.g * e.g_inv - Matrix4::identity()).norm() < 1e-10);
            for i in 0..4 { for j in 0..4 { for k in 0..4 {
                prop_assert!((e.christoffel[i][j][k] - e.christoffel[i][k][j]).abs() < 1e-14);
            }}}
        }

        #[test]
        fn product_inverse_is_inverse(
            eps in -0.2f64..0.2, off in -0.2f64..0.2, x in prop::array::uniform4(-1.0f64..1.0)
        ) {
            let k12 = sf(&format!("{off:?}*cos(t)"));
            let z = ScalarField::zero;
            let kappa = [
                [sf(&format!("1 + {eps:?}*sin(x2)")), k12.clone(), z()],
                [k12, sf("1"), z()],
                [z(), z(), sf(&format!("exp({eps:?}*x1)"))],
            ];
            let spec = MetricSpec::product(sf(&format!("1 + {eps:?}*sin(x1)")), kappa).unwrap();
            let e = spec.eval(&x).unwrap();
            prop_assert!((e.g * e.g_inv - Matrix4::identity()).norm() < 1e-10);
        }

        #[test]
        fn dual_norm_scales_conformally(gam in arb_gamma(), x in prop::array::uniform4(-1.0f64..1.0), xi in prop::array::uniform4(-2.0f64..2.0)) {
            let spec = MetricSpec::conformal_minkowski(gam.clone()).unwrap();
            let m = MetricSpec::minkowski();
            let cv = Covector4::new(x, xi);
            let lhs = spec.dual_norm_sq(&cv).unwrap();
            let rhs = (-2.0 * gam.eval(&x)).exp() * m.dual_norm_sq(&cv).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn null_cone_is_conformally_invariant(gam in arb_gamma(), x in prop::array::uniform4(-1.0f64..1.0), v in prop::array::uniform4(-2.0f64..2.0)) {
            prop_assume!(v.iter().any(|c| c.abs() > 1e-3));
            let spec = MetricSpec::conformal_minkowski(gam).unwrap();
            let m = MetricSpec::minkowski();
            prop_assert_eq!(spec.causal_class_vector(&x, &v).unwrap(), m.causal_class_vector(&x, &v).unwrap());
            let null = [v[0].abs().max(1e-3), v[1], v[2], v[3]];
            let n = (null[1] * null[1] + null[2] * null[2] + null[3] * null[3]).sqrt();
            if n > 1e-3 {
                let nv = [n, null[1], null[2], null[3]];
                prop_assert_eq!(spec.causal_class_vector(&x, &nv).unwrap(), CausalClass::Null);
            }
        }
    }
}
