//! Transport of the principal amplitude along a null bicharacteristic.
//!
//! `H_P σ + i σ_sub σ = 0` with `σ_sub = −(1/2i) Σ_i ∂²P/∂x^i∂ξ_i`, i.e.
//! `dσ/ds = ½ T σ` where `T = Σ_i ∂²P/∂x^i∂ξ_i = 2 Σ_{ij} ∂_i g^{ij} ξ_j`.
//! The equation is linear, so the log-amplitude is integrated jointly with
//! the ray and the initial value multiplies the result.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metric::MetricSpec;
use crate::raytrace::flow::{hamilton_rhs, rk4_step, RayTrajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSample {
    pub along: RayTrajectory,
    pub values: Vec<Complex64>,
}

impl AmplitudeSample {
    /// Amplitude interpolated at spatial arclength `l` of the ray.
    pub fn at_arclength(&self, l: f64) -> Option<Complex64> {
        let arc = self.along.spatial_arclength();
        let k = arc.partition_point(|&a| a < l);
        if k == 0 {
            return (l == 0.0).then(|| self.values[0]);
        }
        if k >= arc.len() {
            return None;
        }
        let f = (l - arc[k - 1]) / (arc[k] - arc[k - 1]);
        Some(self.values[k - 1] * (1.0 - f) + self.values[k] * f)
    }
}

/// Integrates the transport equation over the parameter range of `ray`,
/// re-tracing the ray jointly with the amplitude at the ray's step size.
pub fn transport_amplitude(spec: &MetricSpec, ray: &RayTrajectory, init: Complex64) -> Result<AmplitudeSample> {
    let first = ray
        .samples
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ray".into()))?;
    let f = |y: &[f64; 9]| -> Result<[f64; 9]> {
        let jet = spec.jet(&[y[0], y[1], y[2], y[3]], 1)?;
        let h = hamilton_rhs(&jet, &y[4..8]);
        let dgi = jet.dg_inv();
        let mut half_t = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                half_t += dgi[i][(i, j)] * y[4 + j];
            }
        }
        let mut out = [0.0; 9];
        out[..8].copy_from_slice(&h);
        out[8] = half_t;
        Ok(out)
    };
    let mut y = [0.0; 9];
    y[..8].copy_from_slice(&first.point.to_state());
    let mut values = Vec::with_capacity(ray.samples.len());
    values.push(init);
    for _ in 1..ray.samples.len() {
        y = rk4_step(&f, &y, ray.ds)?;
        values.push(init * y[8].exp());
    }
    Ok(AmplitudeSample {
        along: ray.clone(),
        values,
    })
}
