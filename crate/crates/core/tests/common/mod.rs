//! Independent oracles shared by the integration tests. They use only the
//! metric's pointwise `g` and `g_inv` and finite differences, never jets.

#![allow(dead_code)]

use nalgebra::Matrix4;
use wavelab::metric::MetricSpec;

/// Fourth-order central difference of `f` along coordinate `k`.
pub fn d4<F: Fn(&[f64; 4]) -> Matrix4<f64>>(f: &F, x: &[f64; 4], k: usize, h: f64) -> Matrix4<f64> {
    let at = |s: f64| {
        let mut y = *x;
        y[k] += s * h;
        f(&y)
    };
    (at(-2.0) - at(-1.0) * 8.0 + at(1.0) * 8.0 - at(2.0)) / (12.0 * h)
}

pub fn g(spec: &MetricSpec, x: &[f64; 4]) -> Matrix4<f64> {
    spec.g(x).unwrap()
}

pub fn g_inv(spec: &MetricSpec, x: &[f64; 4]) -> Matrix4<f64> {
    g(spec, x).try_inverse().unwrap()
}

/// Right-hand side of the flow of `P = g^{ij} ξ_i ξ_j` with finite-difference
/// derivatives of the inverse metric.
pub fn hamilton_fd(spec: &MetricSpec, y: &[f64; 8]) -> [f64; 8] {
    let x = [y[0], y[1], y[2], y[3]];
    let xi = [y[4], y[5], y[6], y[7]];
    let gi = g_inv(spec, &x);
    let mut out = [0.0; 8];
    for i in 0..4 {
        out[i] = 2.0 * (0..4).map(|j| gi[(i, j)] * xi[j]).sum::<f64>();
    }
    let f = |p: &[f64; 4]| g_inv(spec, p);
    for k in 0..4 {
        let d = d4(&f, &x, k, 1e-3);
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += d[(i, j)] * xi[i] * xi[j];
            }
        }
        out[4 + k] = -s;
    }
    out
}

/// Adaptive Dormand-Prince 5(4) from 0 to `t_end`.
pub fn dopri<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y0: [f64; N], t_end: f64, tol: f64) -> [f64; N] {
    const C: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut y = y0;
    let mut t = 0.0;
    let mut h = 1e-3_f64.min(t_end);
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = [[0.0; N]; 7];
        k[0] = f(&y);
        for s in 0..6 {
            let mut ys = y;
            for n in 0..N {
                ys[n] += h * (0..=s).map(|j| C[s][j] * k[j][n]).sum::<f64>();
            }
            k[s + 1] = f(&ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for n in 0..N {
            y5[n] += h * (0..6).map(|j| C[5][j] * k[j][n]).sum::<f64>();
            let y4 = y[n] + h * (0..7).map(|j| B4[j] * k[j][n]).sum::<f64>();
            err = err.max((y5[n] - y4).abs() / (1.0 + y5[n].abs()));
        }
        if err <= tol {
            t += h;
            y = y5;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    y
}

/// Scalar curvature with the usual sign, from nested finite differences of `g`.
pub fn scalar_curvature_fd(spec: &MetricSpec, x: &[f64; 4]) -> f64 {
    let h = 2e-3;
    let christoffel = |p: &[f64; 4]| -> [Matrix4<f64>; 4] {
        let gi = g_inv(spec, p);
        let gf = |q: &[f64; 4]| g(spec, q);
        let dg: Vec<Matrix4<f64>> = (0..4).map(|k| d4(&gf, p, k, h)).collect();
        let mut gam = [Matrix4::zeros(); 4];
        for r in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    let mut s = 0.0;
                    for l in 0..4 {
                        s += gi[(r, l)] * (dg[m][(l, n)] + dg[n][(l, m)] - dg[l][(m, n)]);
                    }
                    gam[r][(m, n)] = 0.5 * s;
                }
            }
        }
        gam
    };
    let gam = christoffel(x);
    // dgam[k][r][(m, n)] = ∂_k Γ^r_{mn}
    let dgam: Vec<Vec<Matrix4<f64>>> = (0..4)
        .map(|k| (0..4).map(|r| d4(&|p: &[f64; 4]| christoffel(p)[r], x, k, h)).collect())
        .collect();
    let gi = g_inv(spec, x);
    let mut ric = Matrix4::zeros();
    for s in 0..4 {
        for n in 0..4 {
            let mut v = 0.0;
            for r in 0..4 {
                v += dgam[r][r][(n, s)] - dgam[n][r][(r, s)];
                for l in 0..4 {
                    v += gam[r][(r, l)] * gam[l][(n, s)] - gam[r][(n, l)] * gam[l][(r, s)];
                }
            }
            ric[(s, n)] = v;
        }
    }
    (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).map(|(a, b)| gi[(a, b)] * ric[(a, b)]).sum()
}

/// `-(1/2) ∬_{|y - x| <= t - s} f(s, y) dy ds`: the retarded solution of
/// `(-∂t² + ∂x²) v = f` in 1+1 dimensions with zero data at `t0`.
pub fn retarded_1p1(f: impl Fn(f64, f64) -> f64, t0: f64, t: f64, x: f64, n: usize) -> f64 {
    let simpson = |a: f64, b: f64, g: &dyn Fn(f64) -> f64| -> f64 {
        let m = 2 * n;
        let h = (b - a) / m as f64;
        let mut s = g(a) + g(b);
        for j in 1..m {
            s += g(a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    -0.5 * simpson(t0, t, &|s| simpson(x - (t - s), x + (t - s), &|y| f(s, y)))
}
