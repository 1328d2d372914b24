use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::metric::Point4;
use crate::wavesolver::grid::{Grid, Region};

/// Values on every node of a grid, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&Point4) -> f64 + Sync) -> Self {
        let ns = grid.space_len();
        let mut data = vec![0.0; grid.len()];
        data.par_chunks_mut(ns).enumerate().for_each(|(n, level)| {
            for (s, v) in level.iter_mut().enumerate() {
                *v = f(&grid.point(n, s));
            }
        });
        Field { grid, data }
    }

    pub fn sample(grid: Grid, expr: &ScalarField) -> Self {
        Self::from_fn(grid, |x| expr.eval(x))
    }

    pub fn level(&self, n: usize) -> &[f64] {
        let ns = self.grid.space_len();
        &self.data[n * ns..(n + 1) * ns]
    }

    pub fn at(&self, n: usize, s: usize) -> f64 {
        self.data[n * self.grid.space_len() + s]
    }

    fn check_same(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        Ok(())
    }

    pub fn add_scaled(&mut self, s: f64, other: &Field) -> Result<()> {
        self.check_same(other)?;
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += s * b);
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Field {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|v| s * v).collect(),
        }
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.check_same(other)?;
        Ok(Field {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let mut out = self.clone();
        out.add_scaled(-1.0, other)?;
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Discrete L² norm over nodes selected by `keep(n, s)`.
    pub fn l2_where(&self, keep: impl Fn(usize, usize) -> bool) -> f64 {
        let ns = self.grid.space_len();
        let mut acc = 0.0;
        for (k, v) in self.data.iter().enumerate() {
            if keep(k / ns, k % ns) {
                acc += v * v;
            }
        }
        (acc * self.grid.cell_volume()).sqrt()
    }

    pub fn l2(&self) -> f64 {
        self.l2_where(|_, _| true)
    }

    pub fn l2_in(&self, region: &Region) -> f64 {
        let g = self.grid;
        self.l2_where(|n, s| region.contains(&g.point(n, s)))
    }

    pub fn l2_interior(&self) -> f64 {
        let g = self.grid;
        self.l2_where(|n, s| g.is_interior(n, s))
    }

    /// First time level holding a nonzero value.
    pub fn first_nonzero_level(&self) -> Option<usize> {
        (0..self.grid.nt).find(|&n| self.level(n).iter().any(|&v| v != 0.0))
    }
}

/// `‖a − b‖ / ‖b‖` over a region; `0` when both vanish there.
pub fn relative_l2_in(a: &Field, b: &Field, region: &Region) -> Result<f64> {
    let d = a.sub(b)?.l2_in(region);
    let nb = b.l2_in(region);
    Ok(if nb == 0.0 {
        if d == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        d / nb
    })
}

pub fn relative_l2(a: &Field, b: &Field) -> Result<f64> {
    relative_l2_in(a, b, &Region::everything())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms_and_arithmetic() {
        let g = Grid::new_1p1(5, 8, 0.0, 0.0, 0.125, 0.5).unwrap();
        let f = Field::from_fn(g, |_| 2.0);
        let area = g.cell_volume() * g.len() as f64;
        assert!((f.l2() - 2.0 * area.sqrt()).abs() < 1e-14);
        let z = f.sub(&f).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert_eq!(relative_l2(&z, &z).unwrap(), 0.0);
        assert_eq!(f.mul(&f).unwrap().data[3], 4.0);
        assert_eq!(z.first_nonzero_level(), None);
    }

    #[test]
    fn grid_mismatch() {
        let g = Grid::new_1p1(5, 8, 0.0, 0.0, 0.125, 0.5).unwrap();
        let h = Grid::new_1p1(5, 9, 0.0, 0.0, 0.125, 0.5).unwrap();
        assert!(Field::zeros(g).mul(&Field::zeros(h)).is_err());
    }
}
