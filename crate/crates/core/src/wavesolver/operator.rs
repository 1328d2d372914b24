//! Divergence-form discretization of `□_g + V`.
//!
//! For time-orthogonal metrics with diagonal spatial part,
//! `□_g u = w⁻¹ [∂_t(A ∂_t u) + Σ_a ∂_a(B_a ∂_a u)]` with `w = √(−det g)`,
//! `A = w g⁰⁰`, `B_a = w g^{aa}`. `A` is sampled at half time steps and
//! `B_a` at half cells, which gives the standard second-order centered
//! scheme. On 1+1 grids the metric must not depend on `x², x³` and `x¹`
//! must decouple from them; the operator is then the exact restriction of
//! the four-dimensional one to plane-symmetric fields.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::metric::MetricSpec;
use crate::wavesolver::field::Field;
use crate::wavesolver::grid::{Dim, Grid};

/// Zeroth-order term `V u`.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Zero,
    Field(ScalarField),
    /// `R_g / 6`, making the operator the conformal wave operator.
    Yamabe,
}

#[derive(Debug, Clone)]
pub struct WaveOperator {
    pub grid: Grid,
    w: Vec<f64>,
    /// `A` at `t_{n+1/2}`, `n = 0..nt−1`
    a_half: Vec<f64>,
    /// `B_a` at `x + dx_a/2`, every time level
    b_half: Vec<Vec<f64>>,
    potential: Vec<f64>,
    c_max: f64,
    pub metric: String,
}

fn check_layout(spec: &MetricSpec, dim: Dim) -> Result<()> {
    if !spec.is_time_orthogonal() {
        return Err(Error::InvalidArgument("grid solver needs a time-orthogonal metric".into()));
    }
    let bad = |what: &str| Err(Error::InvalidArgument(format!("grid solver on {dim:?}: {what}")));
    match dim {
        Dim::OnePlusOne => {
            if !(spec.component(1, 2).is_zero() && spec.component(1, 3).is_zero()) {
                return bad("x1 must decouple from x2, x3");
            }
            for i in 0..4 {
                for j in i..4 {
                    let c = spec.component(i, j);
                    if c.depends_on(2) || c.depends_on(3) {
                        return bad("metric must not depend on x2, x3");
                    }
                }
            }
        }
        Dim::OnePlusThree => {
            for a in 1..4 {
                for b in a + 1..4 {
                    if !spec.component(a, b).is_zero() {
                        return bad("spatial metric must be diagonal");
                    }
                }
            }
        }
    }
    Ok(())
}

// per time level: w, A at the upper half step, B per axis, V and the largest squared wave speed
type LevelCoefficients = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>, f64);

impl WaveOperator {
    pub fn new(spec: &MetricSpec, grid: Grid, potential: Potential) -> Result<Self> {
        check_layout(spec, grid.dim)?;
        let ns = grid.space_len();
        let axes = grid.dim.spatial_axes();
        let point = |t: f64, y: [f64; 3]| [t, y[0], y[1], y[2]];

        let levels: Vec<Result<LevelCoefficients>> = (0..grid.nt)
            .into_par_iter()
            .map(|n| {
                let t = grid.t(n);
                let mut w = vec![0.0; ns];
                let mut a = vec![0.0; ns];
                let mut b = vec![vec![0.0; ns]; axes];
                let mut v = vec![0.0; ns];
                let mut c2: f64 = 0.0;
                for s in 0..ns {
                    let y = grid.position(s, None);
                    let x = point(t, y);
                    let g = spec.g(&x)?;
                    let gi = spec.g_inv(&x)?;
                    w[s] = (-g.determinant()).sqrt();
                    for ax in 0..axes {
                        c2 = c2.max(gi[(ax + 1, ax + 1)] / -gi[(0, 0)]);
                    }
                    if n + 1 < grid.nt {
                        let xh = point(t + 0.5 * grid.dt, y);
                        let gh = spec.g(&xh)?;
                        a[s] = (-gh.determinant()).sqrt() / gh[(0, 0)];
                    }
                    for (ax, bx) in b.iter_mut().enumerate() {
                        let xh = point(t, grid.position(s, Some(ax)));
                        let gh = spec.g(&xh)?;
                        bx[s] = (-gh.determinant()).sqrt() / gh[(ax + 1, ax + 1)];
                    }
                    v[s] = match &potential {
                        Potential::Zero => 0.0,
                        Potential::Field(e) => e.eval(&x),
                        Potential::Yamabe => spec.scalar_curvature(&x)? / 6.0,
                    };
                }
                Ok((w, a, b, v, c2))
            })
            .collect();

        let mut w = Vec::with_capacity(grid.len());
        let mut a_half = Vec::with_capacity(grid.len());
        let mut b_half = vec![Vec::with_capacity(grid.len()); axes];
        let mut pot = Vec::with_capacity(grid.len());
        let mut c2max: f64 = 0.0;
        for (n, lv) in levels.into_iter().enumerate() {
            let (lw, la, lb, lv, c2) = lv?;
            w.extend(lw);
            if n + 1 < grid.nt {
                a_half.extend(la);
            }
            for (dst, src) in b_half.iter_mut().zip(lb) {
                dst.extend(src);
            }
            pot.extend(lv);
            c2max = c2max.max(c2);
        }
        Ok(WaveOperator {
            grid,
            w,
            a_half,
            b_half,
            potential: pot,
            c_max: c2max.sqrt(),
            metric: spec.describe(),
        })
    }

    /// Largest coordinate speed of light over the grid nodes.
    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    pub fn cfl_limit(&self, safety: f64) -> f64 {
        let axes = self.grid.dim.spatial_axes();
        let dx = (0..axes).map(|a| self.grid.dx[a]).fold(f64::INFINITY, f64::min);
        safety * dx / self.c_max
    }

    pub fn check_cfl(&self, safety: f64) -> Result<()> {
        let limit = self.cfl_limit(safety);
        if self.grid.dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt: self.grid.dt,
                limit,
            });
        }
        Ok(())
    }

    pub fn potential_at(&self, idx: usize) -> f64 {
        self.potential[idx]
    }

    pub fn volume_at(&self, idx: usize) -> f64 {
        self.w[idx]
    }

    /// `Σ_a [B⁺(u_{s+} − u_s) − B⁻(u_s − u_{s−})] / dx_a²` at level `n`.
    fn spatial(&self, n: usize, level: &[f64], s: usize) -> f64 {
        let g = &self.grid;
        let ns = g.space_len();
        let mut acc = 0.0;
        for (ax, b) in self.b_half.iter().enumerate() {
            let sp = g.neighbour(s, ax, true);
            let sm = g.neighbour(s, ax, false);
            let bp = b[n * ns + s];
            let bm = b[n * ns + sm];
            acc += (bp * (level[sp] - level[s]) - bm * (level[s] - level[sm])) / (g.dx[ax] * g.dx[ax]);
        }
        acc
    }

    /// `(□_g + V) u` on time levels `1..nt−1`; the first and last levels,
    /// which lack a time neighbour, are set to zero.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        self.apply_inner(u, true)
    }

    /// `□_g u` without the potential.
    pub fn apply_box(&self, u: &Field) -> Result<Field> {
        self.apply_inner(u, false)
    }

    fn apply_inner(&self, u: &Field, with_potential: bool) -> Result<Field> {
        if u.grid != self.grid {
            return Err(Error::InvalidArgument("field and operator grids differ".into()));
        }
        let g = self.grid;
        let ns = g.space_len();
        let dt2 = g.dt * g.dt;
        let mut out = Field::zeros(g);
        out.data[ns..(g.nt - 1) * ns]
            .par_chunks_mut(ns)
            .enumerate()
            .for_each(|(k, lvl)| {
                let n = k + 1;
                let (um, u0, up) = (u.level(n - 1), u.level(n), u.level(n + 1));
                for (s, o) in lvl.iter_mut().enumerate() {
                    let idx = n * ns + s;
                    let ap = self.a_half[idx];
                    let am = self.a_half[idx - ns];
                    let time = (ap * (up[s] - u0[s]) - am * (u0[s] - um[s])) / dt2;
                    let mut v = (time + self.spatial(n, u0, s)) / self.w[idx];
                    if with_potential {
                        v += self.potential[idx] * u0[s];
                    }
                    *o = v;
                }
            });
        Ok(out)
    }

    /// One leapfrog step: fills level `n+1` from levels `n−1`, `n` and the
    /// right-hand side `r = f − H(u)` at level `n`.
    pub(crate) fn step(&self, n: usize, prev: &[f64], cur: &[f64], rhs: &[f64], next: &mut [f64]) {
        let g = &self.grid;
        let ns = g.space_len();
        let dt2 = g.dt * g.dt;
        let body = |s: usize, o: &mut f64| {
            let idx = n * ns + s;
            let ap = self.a_half[idx];
            let back = if n == 0 { 0.0 } else { self.a_half[idx - ns] * (cur[s] - prev[s]) };
            let src = self.w[idx] * (rhs[s] - self.potential[idx] * cur[s]) - self.spatial(n, cur, s);
            *o = cur[s] + (back + dt2 * src) / ap;
        };
        if ns >= 4096 {
            next.par_iter_mut().enumerate().for_each(|(s, o)| body(s, o));
        } else {
            next.iter_mut().enumerate().for_each(|(s, o)| body(s, o));
        }
    }
}
