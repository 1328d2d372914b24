//! Field snapshots.
//!
//! Binary layout, little-endian: magic `WLFIELD\0`, `u32` version (1),
//! `u32` ndim (2 for 1+1, 4 for 1+3), `u64` node count per axis (time
//! first), `f64` spacing per axis, `f64` origin per axis, then the values as
//! `f64` in time-major order with `x¹` fastest.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::output::csv_row;
use crate::wavesolver::field::Field;
use crate::wavesolver::grid::{Dim, Grid};

pub const MAGIC: &[u8; 8] = b"WLFIELD\0";
pub const VERSION: u32 = 1;

pub fn write_field(mut w: impl Write, f: &Field) -> Result<()> {
    let g = &f.grid;
    let axes = g.dim.spatial_axes();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&((axes + 1) as u32).to_le_bytes())?;
    w.write_all(&(g.nt as u64).to_le_bytes())?;
    for a in 0..axes {
        w.write_all(&(g.nx[a] as u64).to_le_bytes())?;
    }
    w.write_all(&g.dt.to_le_bytes())?;
    for a in 0..axes {
        w.write_all(&g.dx[a].to_le_bytes())?;
    }
    w.write_all(&g.t0.to_le_bytes())?;
    for a in 0..axes {
        w.write_all(&g.origin[a].to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * f.data.len());
    for v in &f.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_field(mut r: impl Read) -> Result<Field> {
    let bad = |m: &str| Error::InvalidArgument(format!("field file: {m}"));
    if &take::<8>(&mut r)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let ndim = u32::from_le_bytes(take(&mut r)?) as usize;
    let dim = match ndim {
        2 => Dim::OnePlusOne,
        4 => Dim::OnePlusThree,
        _ => return Err(bad(&format!("ndim {ndim} not 2 or 4"))),
    };
    let mut sizes = [1usize; 4];
    for s in sizes.iter_mut().take(ndim) {
        *s = u64::from_le_bytes(take(&mut r)?) as usize;
    }
    let mut read_f = |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| Ok(f64::from_le_bytes(take(&mut r)?))).collect() };
    let sp = read_f(ndim)?;
    let or = read_f(ndim)?;
    let mut grid = Grid {
        dim,
        nt: sizes[0],
        nx: [sizes[1], sizes[2], sizes[3]],
        dt: sp[0],
        dx: [1.0; 3],
        t0: or[0],
        origin: [0.0; 3],
    };
    grid.dx[..ndim - 1].copy_from_slice(&sp[1..ndim]);
    grid.origin[..ndim - 1].copy_from_slice(&or[1..ndim]);
    let data = read_f(grid.len())?;
    Ok(Field { grid, data })
}

/// One time level as CSV: `t,x1,x2,x3,u`.
pub fn write_level_csv(mut w: impl Write, f: &Field, n: usize) -> Result<()> {
    if n >= f.grid.nt {
        return Err(Error::InvalidArgument(format!("time level {n} outside 0..{}", f.grid.nt)));
    }
    writeln!(w, "t,x1,x2,x3,u")?;
    for (s, v) in f.level(n).iter().enumerate() {
        let x = f.grid.point(n, s);
        writeln!(w, "{}", csv_row(&[x[0], x[1], x[2], x[3], *v]))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        for g in [
            Grid::new_1p1(5, 7, 0.25, -1.0, 0.1, 0.4).unwrap(),
            Grid::new_1p3(3, [3, 4, 5], 0.0, [0.5, -0.5, 1.0], 0.2, 0.4).unwrap(),
        ] {
            let f = Field::from_fn(g, |x| x[0] - 2.0 * x[1] + x[3] / 3.0);
            let mut buf = Vec::new();
            write_field(&mut buf, &f).unwrap();
            assert_eq!(&buf[..8], MAGIC);
            let back = read_field(buf.as_slice()).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_field(&b"NOTAFIELD......."[..]).is_err());
    }
}
