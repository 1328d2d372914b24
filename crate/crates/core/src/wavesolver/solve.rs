//! Explicit causal solves of `(□_g + V) u + H(x, u) = f` with zero past data.

use crate::error::{Error, Result};
use crate::symbolics::nonlinearity::TaylorNonlinearity;
use crate::wavesolver::field::Field;
use crate::wavesolver::grid::Grid;
use crate::wavesolver::operator::WaveOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub cfl_safety: f64,
    /// Abort when `max |u|` exceeds this.
    pub blowup_bound: f64,
    /// Refuse sources with `max |f|` above this.
    pub smallness: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cfl_safety: 0.5,
            blowup_bound: 1e6,
            smallness: f64::INFINITY,
        }
    }
}

/// Coefficients `h_k` sampled on every node.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledNonlinearity {
    grid: Grid,
    terms: Vec<(i32, Vec<f64>)>,
}

impl SampledNonlinearity {
    pub fn new(h: &TaylorNonlinearity, grid: Grid) -> Self {
        let terms = h
            .iter()
            .filter(|(_, e)| !e.is_zero())
            .map(|(k, e)| (k as i32, Field::sample(grid, e).data))
            .collect();
        SampledNonlinearity { grid, terms }
    }

    pub fn zero(grid: Grid) -> Self {
        SampledNonlinearity { grid, terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, k: usize) -> Option<&[f64]> {
        self.terms.iter().find(|(j, _)| *j as usize == k).map(|(_, v)| v.as_slice())
    }

    #[inline]
    pub fn eval(&self, idx: usize, u: f64) -> f64 {
        self.terms.iter().map(|(k, h)| h[idx] * u.powi(*k)).sum()
    }
}

pub fn solve_linear_causal(op: &WaveOperator, f: &Field) -> Result<Field> {
    solve_semilinear(op, &SampledNonlinearity::zero(op.grid), f, &SolveOptions::default())
}

pub fn solve_semilinear(op: &WaveOperator, h: &SampledNonlinearity, f: &Field, opts: &SolveOptions) -> Result<Field> {
    let g = op.grid;
    if f.grid != g || h.grid != g {
        return Err(Error::InvalidArgument("source, nonlinearity and operator grids differ".into()));
    }
    op.check_cfl(opts.cfl_safety)?;
    let fmax = f.max_abs();
    if fmax > opts.smallness {
        return Err(Error::InvalidArgument(format!(
            "source amplitude {fmax:e} above the smallness threshold {:e}",
            opts.smallness
        )));
    }
    if f.level(0).iter().chain(f.level(1)).any(|&v| v != 0.0) {
        return Err(Error::InvalidArgument("source must vanish on the first two time levels".into()));
    }
    let ns = g.space_len();
    let mut u = Field::zeros(g);
    let mut rhs = vec![0.0; ns];
    for n in 1..g.nt - 1 {
        let (head, tail) = u.data.split_at_mut((n + 1) * ns);
        let prev = &head[(n - 1) * ns..n * ns];
        let cur = &head[n * ns..];
        let next = &mut tail[..ns];
        let fl = f.level(n);
        if h.is_zero() {
            rhs.copy_from_slice(fl);
        } else {
            for s in 0..ns {
                rhs[s] = fl[s] - h.eval(n * ns + s, cur[s]);
            }
        }
        op.step(n, prev, cur, &rhs, next);
        let m = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(m <= opts.blowup_bound) {
            return Err(Error::BlowUp {
                bound: opts.blowup_bound,
                step: n + 1,
                value: m,
            });
        }
    }
    Ok(u)
}
