//! Hamiltonian flow of `P(x, ξ) = g^{ij}(x) ξ_i ξ_j`.
//!
//! `ẋ^i = 2 g^{ij} ξ_j`, `ξ̇_k = −∂_k g^{ij} ξ_i ξ_j`, integrated with
//! classical fixed-step RK4.

use crate::error::{Error, Result};
use crate::metric::{MetricJet, MetricSpec, Point4};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub x: Point4,
    pub xi: [f64; 4],
}

impl PhasePoint {
    pub fn new(x: Point4, xi: [f64; 4]) -> Self {
        PhasePoint { x, xi }
    }

    pub(crate) fn to_state(self) -> [f64; 8] {
        let mut y = [0.0; 8];
        y[..4].copy_from_slice(&self.x);
        y[4..].copy_from_slice(&self.xi);
        y
    }

    pub(crate) fn from_state(y: &[f64]) -> Self {
        PhasePoint {
            x: [y[0], y[1], y[2], y[3]],
            xi: [y[4], y[5], y[6], y[7]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub s: f64,
    pub point: PhasePoint,
    /// `|P(x, ξ)| / ‖ξ‖²` with the Euclidean component norm
    pub p_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayTrajectory {
    pub samples: Vec<RaySample>,
    pub ds: f64,
    pub metric: String,
    /// Set when integration stopped before `s_max`.
    pub truncated: Option<String>,
}

impl RayTrajectory {
    pub fn max_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.p_defect).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &RaySample {
        self.samples.last().expect("trajectory has at least the start sample")
    }

    /// Cumulative Euclidean arclength of the spatial projection.
    pub fn spatial_arclength(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.samples.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.samples.windows(2) {
            let (a, b) = (w[0].point.x, w[1].point.x);
            acc += ((b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2) + (b[3] - a[3]).powi(2)).sqrt();
            out.push(acc);
        }
        out
    }
}

pub fn p_defect(spec: &MetricSpec, p: &PhasePoint) -> Result<f64> {
    let gi = spec.g_inv(&p.x)?;
    let n2: f64 = p.xi.iter().map(|c| c * c).sum();
    Ok(crate::metric::quad(&gi, &p.xi, &p.xi).abs() / n2)
}

/// Optional axis-aligned chart domain; leaving it truncates the ray.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowOptions {
    pub domain: Option<(Point4, Point4)>,
}

fn inside(domain: &Option<(Point4, Point4)>, x: &[f64]) -> bool {
    match domain {
        None => true,
        Some((lo, hi)) => (0..4).all(|i| x[i] >= lo[i] && x[i] <= hi[i]),
    }
}

pub(crate) fn hamilton_rhs(jet: &MetricJet, xi: &[f64]) -> [f64; 8] {
    let dgi = jet.dg_inv();
    let mut out = [0.0; 8];
    for i in 0..4 {
        out[i] = 2.0 * (0..4).map(|j| jet.g_inv[(i, j)] * xi[j]).sum::<f64>();
    }
    for k in 0..4 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += dgi[k][(i, j)] * xi[i] * xi[j];
            }
        }
        out[4 + k] = -s;
    }
    out
}

/// One classical RK4 step of an autonomous system.
pub(crate) fn rk4_step<const N: usize>(
    f: &impl Fn(&[f64; N]) -> Result<[f64; N]>,
    y: &[f64; N],
    h: f64,
) -> Result<[f64; N]> {
    let axpy = |a: &[f64; N], s: f64, b: &[f64; N]| -> [f64; N] {
        std::array::from_fn(|i| a[i] + s * b[i])
    };
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * h, &k1))?;
    let k3 = f(&axpy(y, 0.5 * h, &k2))?;
    let k4 = f(&axpy(y, h, &k3))?;
    Ok(std::array::from_fn(|i| {
        y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

pub fn hamilton_flow(spec: &MetricSpec, start: PhasePoint, s_max: f64, ds: f64) -> Result<RayTrajectory> {
    hamilton_flow_with(spec, start, s_max, ds, &FlowOptions::default())
}

pub fn hamilton_flow_with(
    spec: &MetricSpec,
    start: PhasePoint,
    s_max: f64,
    ds: f64,
    opts: &FlowOptions,
) -> Result<RayTrajectory> {
    if start.xi.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidArgument("initial covector must be nonzero".into()));
    }
    if !(ds > 0.0 && s_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("need ds > 0 and s_max >= 0, got {ds}, {s_max}")));
    }
    let rhs = |y: &[f64; 8]| -> Result<[f64; 8]> {
        let jet = spec.jet(&[y[0], y[1], y[2], y[3]], 1)?;
        Ok(hamilton_rhs(&jet, &y[4..]))
    };
    let steps = (s_max / ds).round() as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(RaySample {
        s: 0.0,
        point: start,
        p_defect: p_defect(spec, &start)?,
    });
    let mut y = start.to_state();
    let mut truncated = None;
    for n in 1..=steps {
        let next = match rk4_step(&rhs, &y, ds) {
            Ok(v) => v,
            Err(e) => {
                truncated = Some(format!("metric evaluation failed at s = {}: {e}", n as f64 * ds));
                break;
            }
        };
        if !next.iter().all(|v| v.is_finite()) || !inside(&opts.domain, &next[..4]) {
            truncated = Some(format!("left chart domain at s = {}", n as f64 * ds));
            break;
        }
        let point = PhasePoint::from_state(&next);
        let p_def = match p_defect(spec, &point) {
            Ok(d) => d,
            Err(e) => {
                truncated = Some(format!("metric evaluation failed at s = {}: {e}", n as f64 * ds));
                break;
            }
        };
        samples.push(RaySample {
            s: n as f64 * ds,
            point,
            p_defect: p_def,
        });
        y = next;
    }
    Ok(RayTrajectory {
        samples,
        ds,
        metric: spec.describe(),
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;

    fn sf(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    #[test]
    fn flat_ray_is_straight() {
        let m = MetricSpec::minkowski();
        let ray = hamilton_flow(&m, PhasePoint::new([0.0; 4], [1.0, 0.0, 1.0, 0.0]), 1.0, 0.1).unwrap();
        for s in &ray.samples {
            // ẋ = 2 g⁻¹ ξ = (−2, 0, 2, 0)
            assert!((s.point.x[0] + 2.0 * s.s).abs() < 1e-14);
            assert!((s.point.x[2] - 2.0 * s.s).abs() < 1e-14);
            assert_eq!(s.p_defect, 0.0);
        }
        assert_eq!(ray.samples.len(), 11);
    }

    #[test]
    fn rejects_zero_covector() {
        let m = MetricSpec::minkowski();
        assert!(hamilton_flow(&m, PhasePoint::new([0.0; 4], [0.0; 4]), 1.0, 0.1).is_err());
    }

    #[test]
    fn defect_converges_at_fourth_order() {
        let spec = MetricSpec::product_diagonal(
            sf("1 + 0.3*sin(x1)"),
            [sf("1"), sf("1 + 0.2*cos(x2)"), sf("1")],
        )
        .unwrap();
        let start = PhasePoint::new([0.0; 4], [-1.0, 0.8, 0.432f64.sqrt(), 0.0]);
        let d1 = hamilton_flow(&spec, start, 4.0, 0.1).unwrap().max_defect();
        let d2 = hamilton_flow(&spec, start, 4.0, 0.05).unwrap().max_defect();
        assert!(d1 < 1e-6 && d2 * 8.0 < d1, "{d1} {d2}");
    }

    #[test]
    fn domain_exit_truncates() {
        let m = MetricSpec::minkowski();
        let opts = FlowOptions {
            domain: Some(([-10.0; 4], [10.0, 0.5, 10.0, 10.0])),
        };
        let ray = hamilton_flow_with(&m, PhasePoint::new([0.0; 4], [-0.5, 0.5, 0.0, 0.0]), 2.0, 0.1, &opts).unwrap();
        assert!(ray.truncated.is_some());
        assert!(ray.last().point.x[1] <= 0.5);
    }
}
