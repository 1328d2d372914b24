use crate::error::{Error, Result};
use crate::metric::Point4;
use crate::wavesolver::field::Field;
use crate::wavesolver::grid::{Dim, Grid};

/// Smooth compactly supported source
/// `f(x) = A Π_i b((x^i − c^i)/w_i) cos(k·(x − c))`, `b(s) = exp(1 − 1/(1 − s²))`.
///
/// On a 1+1 grid only the `t` and `x¹` factors are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub center: Point4,
    pub widths: [f64; 4],
    pub amplitude: f64,
    pub wave_vector: Option<[f64; 4]>,
}

pub fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

impl SourceSpec {
    pub fn new(center: Point4, widths: [f64; 4], amplitude: f64) -> Result<Self> {
        if widths.iter().any(|w| !(*w > 0.0)) || !amplitude.is_finite() {
            return Err(Error::InvalidArgument("source widths must be positive".into()));
        }
        Ok(SourceSpec {
            center,
            widths,
            amplitude,
            wave_vector: None,
        })
    }

    pub fn modulated(mut self, k: [f64; 4]) -> Self {
        self.wave_vector = Some(k);
        self
    }

    fn axes(dim: Dim) -> usize {
        1 + dim.spatial_axes()
    }

    pub fn eval(&self, x: &Point4, dim: Dim) -> f64 {
        let mut v = self.amplitude;
        for i in 0..Self::axes(dim) {
            v *= bump((x[i] - self.center[i]) / self.widths[i]);
            if v == 0.0 {
                return 0.0;
            }
        }
        if let Some(k) = self.wave_vector {
            let phase: f64 = (0..Self::axes(dim)).map(|i| k[i] * (x[i] - self.center[i])).sum();
            v *= phase.cos();
        }
        v
    }

    /// Support must stay at least two nodes inside the grid, and away from
    /// the spatial seam, so that the causal solve starts from rest.
    pub fn check_inside(&self, grid: &Grid) -> Result<()> {
        let lo_t = self.center[0] - self.widths[0];
        if lo_t < grid.t0 + 2.0 * grid.dt {
            return Err(Error::InvalidArgument(format!(
                "source support starts at t = {lo_t}, before t0 + 2dt = {}",
                grid.t0 + 2.0 * grid.dt
            )));
        }
        for a in 0..grid.dim.spatial_axes() {
            let lo = grid.origin[a] + grid.dx[a];
            let hi = grid.origin[a] + (grid.nx[a] as f64 - 2.0) * grid.dx[a];
            let (c, w) = (self.center[a + 1], self.widths[a + 1]);
            if c - w < lo || c + w > hi {
                return Err(Error::InvalidArgument(format!("source support leaves the grid on axis x{}", a + 1)));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        self.check_inside(grid)?;
        let dim = grid.dim;
        Ok(Field::from_fn(*grid, |x| self.eval(x, dim)))
    }
}
