use crate::error::{Error, Result};
use crate::metric::Point4;

/// Spatial dimension of a grid. `OnePlusOne` fields depend on `(t, x¹)` only
/// and represent plane-symmetric solutions in four dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    OnePlusOne,
    OnePlusThree,
}

impl Dim {
    pub fn spatial_axes(self) -> usize {
        match self {
            Dim::OnePlusOne => 1,
            Dim::OnePlusThree => 3,
        }
    }
}

/// Uniform spacetime grid, periodic in space.
///
/// Node `(n, i)` sits at `t = t0 + n dt`, `x^a = origin_a + i_a dx_a`; axes
/// beyond the grid's dimension have a single node at coordinate 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: Dim,
    pub nt: usize,
    pub nx: [usize; 3],
    pub dt: f64,
    pub dx: [f64; 3],
    pub t0: f64,
    pub origin: [f64; 3],
}

/// Axis-aligned spacetime box, closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub t: (f64, f64),
    pub x: [(f64, f64); 3],
}

impl Region {
    pub fn everything() -> Self {
        Region {
            t: (f64::NEG_INFINITY, f64::INFINITY),
            x: [(f64::NEG_INFINITY, f64::INFINITY); 3],
        }
    }

    pub fn slab(t: (f64, f64), x1: (f64, f64)) -> Self {
        Region {
            t,
            x: [x1, (f64::NEG_INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY)],
        }
    }

    pub fn contains(&self, p: &Point4) -> bool {
        p[0] >= self.t.0 && p[0] <= self.t.1 && (0..3).all(|a| p[a + 1] >= self.x[a].0 && p[a + 1] <= self.x[a].1)
    }
}

impl Grid {
    /// `nt × nx` grid on `[t0, t0 + (nt−1) dt] × [x0, x0 + nx dx)` with
    /// `dt = cfl · dx`.
    pub fn new_1p1(nt: usize, nx: usize, t0: f64, x0: f64, dx: f64, cfl: f64) -> Result<Self> {
        Self::validate(nt, &[nx], dx, cfl)?;
        Ok(Grid {
            dim: Dim::OnePlusOne,
            nt,
            nx: [nx, 1, 1],
            dt: cfl * dx,
            dx: [dx, 1.0, 1.0],
            t0,
            origin: [x0, 0.0, 0.0],
        })
    }

    /// Cubic spatial lattice with equal spacing on all axes.
    pub fn new_1p3(nt: usize, nx: [usize; 3], t0: f64, x0: [f64; 3], dx: f64, cfl: f64) -> Result<Self> {
        Self::validate(nt, &nx, dx, cfl)?;
        Ok(Grid {
            dim: Dim::OnePlusThree,
            nt,
            nx,
            dt: cfl * dx,
            dx: [dx; 3],
            t0,
            origin: x0,
        })
    }

    fn validate(nt: usize, nx: &[usize], dx: f64, cfl: f64) -> Result<()> {
        if nt < 3 || nx.iter().any(|&n| n < 3) {
            return Err(Error::InvalidArgument("grid needs at least 3 nodes per axis".into()));
        }
        if !(dx > 0.0 && cfl > 0.0 && dx.is_finite() && cfl.is_finite()) {
            return Err(Error::InvalidArgument(format!("need dx > 0 and cfl > 0, got {dx}, {cfl}")));
        }
        Ok(())
    }

    pub fn space_len(&self) -> usize {
        self.nx.iter().product()
    }

    pub fn len(&self) -> usize {
        self.nt * self.space_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn t(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn spatial_index(&self, i: [usize; 3]) -> usize {
        i[0] + self.nx[0] * (i[1] + self.nx[1] * i[2])
    }

    pub fn spatial_coords(&self, s: usize) -> [usize; 3] {
        let i0 = s % self.nx[0];
        let r = s / self.nx[0];
        [i0, r % self.nx[1], r / self.nx[1]]
    }

    /// Spatial position of node `s`, optionally shifted by half a cell on
    /// `axis`.
    pub fn position(&self, s: usize, half_shift: Option<usize>) -> [f64; 3] {
        let i = self.spatial_coords(s);
        std::array::from_fn(|a| {
            if a >= self.dim.spatial_axes() {
                return 0.0;
            }
            let shift = if half_shift == Some(a) { 0.5 } else { 0.0 };
            self.origin[a] + (i[a] as f64 + shift) * self.dx[a]
        })
    }

    pub fn point(&self, n: usize, s: usize) -> Point4 {
        let y = self.position(s, None);
        [self.t(n), y[0], y[1], y[2]]
    }

    /// Periodic neighbour of `s` along `axis`, `+1` or `−1`.
    pub fn neighbour(&self, s: usize, axis: usize, forward: bool) -> usize {
        let mut i = self.spatial_coords(s);
        let n = self.nx[axis];
        i[axis] = if forward { (i[axis] + 1) % n } else { (i[axis] + n - 1) % n };
        self.spatial_index(i)
    }

    /// True for nodes away from the first and last time level and, along
    /// every spatial axis, from the periodic seam.
    pub fn is_interior(&self, n: usize, s: usize) -> bool {
        if n == 0 || n + 1 >= self.nt {
            return false;
        }
        let i = self.spatial_coords(s);
        (0..self.dim.spatial_axes()).all(|a| i[a] > 0 && i[a] + 1 < self.nx[a])
    }

    /// Cell volume `dt Π dx_a` used by discrete L² norms.
    pub fn cell_volume(&self) -> f64 {
        self.dt * (0..self.dim.spatial_axes()).map(|a| self.dx[a]).product::<f64>()
    }

    /// Same extents with the spacing halved (node counts doubled).
    pub fn refined(&self) -> Self {
        let axes = self.dim.spatial_axes();
        Grid {
            nt: 2 * self.nt - 1,
            nx: std::array::from_fn(|a| if a < axes { 2 * self.nx[a] } else { 1 }),
            dt: 0.5 * self.dt,
            dx: std::array::from_fn(|a| if a < axes { 0.5 * self.dx[a] } else { 1.0 }),
            ..*self
        }
    }
}
