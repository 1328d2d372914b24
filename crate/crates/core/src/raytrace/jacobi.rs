//! Variational (Jacobi) system of the Hamiltonian flow and conjugate points.
//!
//! The linearized flow is started with `δx(0) = 0`, `δξ(0) = I`. A point
//! `x(s)` is conjugate to `x(0)` when the 4×4 block `δx(s)` is singular;
//! this is detected by a sign change of its determinant.

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::metric::{MetricJet, MetricSpec};
use crate::raytrace::flow::{hamilton_rhs, rk4_step, PhasePoint};

const N: usize = 40;

fn rhs(jet: &MetricJet, y: &[f64; N]) -> [f64; N] {
    let xi = &y[4..8];
    let dx = |i: usize, c: usize| y[8 + 4 * i + c];
    let dxi = |j: usize, c: usize| y[24 + 4 * j + c];
    let dgi = jet.dg_inv();
    let d2gi = jet.d2g_inv();
    let mut out = [0.0; N];
    out[..8].copy_from_slice(&hamilton_rhs(jet, xi));
    // contractions that do not depend on the variation index
    let mut dgi_xi = [[0.0; 4]; 4]; // [a][i] = Σ_j ∂_a g^{ij} ξ_j
    let mut d2_xixi = [[0.0; 4]; 4]; // [a][k] = ∂_a ∂_k g^{ij} ξ_i ξ_j
    for a in 0..4 {
        for i in 0..4 {
            dgi_xi[a][i] = (0..4).map(|j| dgi[a][(i, j)] * xi[j]).sum();
        }
        for k in 0..4 {
            d2_xixi[a][k] = crate::metric::quad(&d2gi[a][k], &[xi[0], xi[1], xi[2], xi[3]], &[xi[0], xi[1], xi[2], xi[3]]);
        }
    }
    for c in 0..4 {
        for i in 0..4 {
            let mut v = 0.0;
            for a in 0..4 {
                v += dgi_xi[a][i] * dx(a, c);
            }
            for j in 0..4 {
                v += jet.g_inv[(i, j)] * dxi(j, c);
            }
            out[8 + 4 * i + c] = 2.0 * v;
        }
        for k in 0..4 {
            let mut v = 0.0;
            for a in 0..4 {
                v += d2_xixi[a][k] * dx(a, c);
            }
            for j in 0..4 {
                v += 2.0 * dgi_xi[k][j] * dxi(j, c);
            }
            out[24 + 4 * k + c] = -v;
        }
    }
    out
}

fn initial_state(start: &PhasePoint) -> [f64; N] {
    let mut y = [0.0; N];
    y[..8].copy_from_slice(&start.to_state());
    for c in 0..4 {
        y[24 + 4 * c + c] = 1.0;
    }
    y
}

fn dx_det(y: &[f64; N]) -> f64 {
    Matrix4::from_fn(|i, c| y[8 + 4 * i + c]).determinant()
}

/// Flow of the base ray together with its variations.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSample {
    pub s: f64,
    pub point: PhasePoint,
    /// `δx[i][c]`: component `i` of the variation started with `δξ = e_c`
    pub dx: [[f64; 4]; 4],
    pub dx_det: f64,
}

pub fn jacobi_fields(spec: &MetricSpec, start: PhasePoint, s_max: f64, ds: f64) -> Result<Vec<JacobiSample>> {
    check_args(&start, s_max, ds)?;
    let f = |y: &[f64; N]| -> Result<[f64; N]> {
        let jet = spec.jet(&[y[0], y[1], y[2], y[3]], 2)?;
        Ok(rhs(&jet, y))
    };
    let steps = (s_max / ds).round() as usize;
    let mut y = initial_state(&start);
    let mut out = Vec::with_capacity(steps + 1);
    for n in 0..=steps {
        if n > 0 {
            y = rk4_step(&f, &y, ds)?;
        }
        out.push(JacobiSample {
            s: n as f64 * ds,
            point: PhasePoint::from_state(&y[..8]),
            dx: std::array::from_fn(|i| std::array::from_fn(|c| y[8 + 4 * i + c])),
            dx_det: dx_det(&y),
        });
    }
    Ok(out)
}

fn check_args(start: &PhasePoint, s_max: f64, ds: f64) -> Result<()> {
    if start.xi.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidArgument("initial covector must be nonzero".into()));
    }
    if !(ds > 0.0 && s_max > 0.0) {
        return Err(Error::InvalidArgument(format!("need ds > 0 and s_max > 0, got {ds}, {s_max}")));
    }
    Ok(())
}

/// Smallest `s ∈ (0, s_max]` where `det δx(s)` changes sign, refined by
/// bisection on a single RK4 step from the last bracketing sample.
///
/// A conjugate point of even multiplicity (e.g. a rotationally symmetric
/// lens) gives a double root without a sign change and is not reported.
/// Leaving the metric's domain ends the search with `None`.
pub fn first_conjugate_parameter(spec: &MetricSpec, start: PhasePoint, s_max: f64, ds: f64) -> Result<Option<f64>> {
    check_args(&start, s_max, ds)?;
    let f = |y: &[f64; N]| -> Result<[f64; N]> {
        let jet = spec.jet(&[y[0], y[1], y[2], y[3]], 2)?;
        Ok(rhs(&jet, y))
    };
    let steps = (s_max / ds).round() as usize;
    let mut y = initial_state(&start);
    let mut ref_sign = 0.0;
    for n in 0..steps {
        let next = match rk4_step(&f, &y, ds) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        let d = dx_det(&next);
        if !d.is_finite() {
            return Ok(None);
        }
        if ref_sign == 0.0 {
            ref_sign = d.signum();
        } else if d != 0.0 && d.signum() != ref_sign {
            let s0 = n as f64 * ds;
            let (mut lo, mut hi) = (0.0, ds);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let dm = dx_det(&rk4_step(&f, &y, mid)?);
                if dm.signum() == ref_sign {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            return Ok(Some(s0 + 0.5 * (lo + hi)));
        }
        y = next;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;

    fn sf(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    #[test]
    fn flat_variations_are_linear() {
        let m = MetricSpec::minkowski();
        let st = PhasePoint::new([0.0; 4], [-0.5, 0.5, 0.0, 0.0]);
        let js = jacobi_fields(&m, st, 1.0, 0.25).unwrap();
        let last = js.last().unwrap();
        // δx = 2 s η⁻¹
        assert!((last.dx[0][0] + 2.0).abs() < 1e-14);
        assert!((last.dx[2][2] - 2.0).abs() < 1e-14);
        assert!(last.dx[1][2].abs() < 1e-14);
        assert_eq!(first_conjugate_parameter(&m, st, 10.0, 0.1).unwrap(), None);
    }

    #[test]
    fn scaled_flat_coordinates_have_no_conjugate_point() {
        let m = MetricSpec::product_diagonal(sf("4"), [sf("2"), sf("0.5"), sf("1")]).unwrap();
        let st = PhasePoint::new([0.0; 4], [-2.0, std::f64::consts::SQRT_2, 0.0, 0.0]);
        assert_eq!(first_conjugate_parameter(&m, st, 10.0, 0.1).unwrap(), None);
    }

    #[test]
    fn astigmatic_lens_focuses() {
        let m = MetricSpec::product_diagonal(
            sf("1 - 0.5*exp(-(x1^2 + x2^2 + 0.4*x3^2))"),
            [sf("1"), sf("1"), sf("1")],
        )
        .unwrap();
        let st = PhasePoint::new([0.0, -3.0, 0.0, 0.0], [-0.5, 0.5, 0.0, 0.0]);
        let s = first_conjugate_parameter(&m, st, 12.0, 0.02).unwrap();
        assert!(s.is_some(), "expected focusing");
    }
}
