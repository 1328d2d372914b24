//! Conformal wave operator identities and the gauge counter-examples.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::metric::MetricSpec;
use crate::symbolics::gauge::{det_power, gauge_transform_h};
use crate::symbolics::nonlinearity::TaylorNonlinearity;
use crate::wavesolver::field::{relative_l2_in, Field};
use crate::wavesolver::grid::{Grid, Region};
use crate::wavesolver::operator::{Potential, WaveOperator};
use crate::wavesolver::solve::{solve_semilinear, SampledNonlinearity, SolveOptions};
use crate::wavesolver::source::SourceSpec;

/// `Y_g u = □_g u + R_g u / 6`
pub fn yamabe_apply(spec: &MetricSpec, u: &Field) -> Result<Field> {
    WaveOperator::new(spec, u.grid, Potential::Yamabe)?.apply(u)
}

/// Interior L² norm of `Y_{g̃} u − φ^{−3} Y_η(φ u)` for `g̃ = φ² η`, `φ = e^γ`.
pub fn conformal_covariance_residual(gamma: &ScalarField, u: &Field) -> Result<f64> {
    let g = u.grid;
    let tilde = MetricSpec::conformal_minkowski(gamma.clone())?;
    let phi = Field::sample(g, gamma).map(f64::exp);
    let lhs = yamabe_apply(&tilde, u)?;
    let rhs = yamabe_apply(&MetricSpec::minkowski(), &phi.mul(u)?)?;
    let r = lhs.sub(&rhs.mul(&phi.map(|p| p.powi(-3)))?)?;
    Ok(r.l2_interior())
}

/// Least-squares slope of `log err` against `log h`.
pub fn refinement_slope(h: &[f64], err: &[f64]) -> Result<f64> {
    if h.len() != err.len() || h.len() < 2 {
        return Err(Error::Fit("need at least two refinement levels".into()));
    }
    if err.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Fit(format!("refinement errors must be positive, got {err:?}")));
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeExample {
    /// `H = a z²` with `a = (−det g)^{−1/4}`
    One,
    /// `H = b z³`
    Two,
}

#[derive(Debug, Clone)]
pub struct GaugeSetup {
    pub example: GaugeExample,
    pub gamma: ScalarField,
    /// `a` scale in Example 1 (multiplies `(−det g)^{−1/4}`), `b` in Example 2.
    pub coefficient: f64,
    pub source: SourceSpec,
    pub region: Region,
    /// Coarsest grid; each further level halves the spacing.
    pub grid: Grid,
    pub levels: usize,
    pub opts: SolveOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeLevel {
    pub nx: usize,
    pub dx: f64,
    pub relative_difference: f64,
    pub solution_norm: f64,
    /// Example 1 only: difference obtained with `ã = (−det g̃)^{−1/4}`.
    pub literal_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeReport {
    pub example: GaugeExample,
    pub levels: Vec<GaugeLevel>,
    pub slope: f64,
    pub terminal: f64,
    /// `max |γ|` over nodes of the measurement region on the finest grid.
    pub gamma_on_region: f64,
}

fn nonlinearities(setup: &GaugeSetup, base: &MetricSpec, tilde: &MetricSpec) -> Result<(TaylorNonlinearity, TaylorNonlinearity, Option<TaylorNonlinearity>)> {
    let c = setup.coefficient;
    match setup.example {
        GaugeExample::Two => {
            let h = TaylorNonlinearity::constant(&[(3, c)])?;
            Ok((h.clone(), gauge_transform_h(&setup.gamma, &h), None))
        }
        GaugeExample::One => {
            let a = det_power(base, -0.25)
                .ok_or_else(|| Error::InvalidArgument("det power unavailable for this metric".into()))?
                .scale(c);
            let h = TaylorNonlinearity::new().with(2, a)?;
            let lit = det_power(tilde, -0.25)
                .ok_or_else(|| Error::InvalidArgument("det power unavailable for this metric".into()))?
                .scale(c);
            Ok((h.clone(), gauge_transform_h(&setup.gamma, &h), Some(TaylorNonlinearity::new().with(2, lit)?)))
        }
    }
}

fn run_level(setup: &GaugeSetup, grid: Grid) -> Result<(GaugeLevel, f64)> {
    let base = MetricSpec::minkowski();
    let tilde = MetricSpec::conformal_minkowski(setup.gamma.clone())?;
    let (h, h_tilde, literal) = nonlinearities(setup, &base, &tilde)?;
    let f = setup.source.sample(&grid)?;
    let gamma = Field::sample(grid, &setup.gamma);
    let f_tilde = f.mul(&gamma.map(|v| (-3.0 * v).exp()))?;
    let op = WaveOperator::new(&base, grid, Potential::Yamabe)?;
    let op_t = WaveOperator::new(&tilde, grid, Potential::Yamabe)?;
    let u = solve_semilinear(&op, &SampledNonlinearity::new(&h, grid), &f, &setup.opts)?;
    let ut = solve_semilinear(&op_t, &SampledNonlinearity::new(&h_tilde, grid), &f_tilde, &setup.opts)?;
    let rel = relative_l2_in(&ut, &u, &setup.region)?;
    let literal_difference = match literal {
        Some(hl) => {
            let ul = solve_semilinear(&op_t, &SampledNonlinearity::new(&hl, grid), &f_tilde, &setup.opts)?;
            Some(relative_l2_in(&ul, &u, &setup.region)?)
        }
        None => None,
    };
    let gmax = (0..grid.nt)
        .flat_map(|n| (0..grid.space_len()).map(move |s| (n, s)))
        .filter(|&(n, s)| setup.region.contains(&grid.point(n, s)))
        .map(|(n, s)| gamma.at(n, s).abs())
        .fold(0.0, f64::max);
    Ok((
        GaugeLevel {
            nx: grid.nx[0],
            dx: grid.dx[0],
            relative_difference: rel,
            solution_norm: u.l2_in(&setup.region),
            literal_difference,
        },
        gmax,
    ))
}

/// Solves the `(g, H, f)` and gauge-transformed `(e^{2γ}g, H̃, e^{−3γ}f)`
/// problems with the conformal wave operator on successively refined grids
/// and compares the solutions on the region.
pub fn gauge_experiment(setup: &GaugeSetup) -> Result<GaugeReport> {
    if setup.levels < 1 {
        return Err(Error::InvalidArgument("need at least one grid level".into()));
    }
    let mut grids = vec![setup.grid];
    for _ in 1..setup.levels {
        let last = *grids.last().unwrap();
        grids.push(last.refined());
    }
    let results: Vec<(GaugeLevel, f64)> = grids
        .par_iter()
        .map(|g| run_level(setup, *g))
        .collect::<Result<_>>()?;
    let gamma_on_region = results.last().unwrap().1;
    let levels: Vec<GaugeLevel> = results.into_iter().map(|r| r.0).collect();
    let terminal = levels.last().unwrap().relative_difference;
    let slope = if levels.len() >= 2 {
        let hs: Vec<f64> = levels.iter().map(|l| l.dx).collect();
        let es: Vec<f64> = levels.iter().map(|l| l.relative_difference).collect();
        refinement_slope(&hs, &es).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    Ok(GaugeReport {
        example: setup.example,
        levels,
        slope,
        terminal,
        gamma_on_region,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gamma_residual_vanishes() {
        let g = Grid::new_1p1(16, 16, 0.0, 0.0, 1.0 / 16.0, 0.4).unwrap();
        let u = Field::from_fn(g, |x| (3.0 * x[1]).sin() * (x[0] + 1.0));
        let r = conformal_covariance_residual(&ScalarField::zero(), &u).unwrap();
        assert!(r < 1e-12, "{r}");
    }

    #[test]
    fn constant_u_gives_curvature_term() {
        let g = Grid::new_1p1(8, 8, 0.0, 0.0, 0.1, 0.4).unwrap();
        let spec = MetricSpec::conformal_minkowski(ScalarField::parse("0.2*sin(x1)").unwrap()).unwrap();
        let y = yamabe_apply(&spec, &Field::from_fn(g, |_| 2.0)).unwrap();
        let x = g.point(3, 4);
        assert!((y.at(3, 4) - spec.scalar_curvature(&x).unwrap() / 3.0).abs() < 1e-12);
    }

    #[test]
    fn slope_of_exact_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(2)).collect();
        assert!((refinement_slope(&h, &e).unwrap() - 2.0).abs() < 1e-12);
        assert!(refinement_slope(&h, &[1.0, 0.0, 1.0]).is_err());
    }
}
