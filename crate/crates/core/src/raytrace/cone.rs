//! Forward light cones and earliest light observation sets.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{MetricSpec, Point4};
use crate::output::csv_row;
use crate::raytrace::flow::{hamilton_flow, PhasePoint, RayTrajectory};

/// `n` nearly uniform unit vectors (Fibonacci lattice).
pub fn sphere_directions(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|j| {
            let z = 1.0 - (2 * j + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * j as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Covector `ξ = ½ g v` of the future null vector `v = (1, λ n̂)`, so that
/// the ray leaves `q` with velocity `v`.
pub fn future_null_covector(spec: &MetricSpec, q: &Point4, dir: [f64; 3]) -> Result<[f64; 4]> {
    let g = spec.g(q)?;
    let b: f64 = (0..3).map(|a| g[(0, a + 1)] * dir[a]).sum();
    let mut c = 0.0;
    for a in 0..3 {
        for d in 0..3 {
            c += g[(a + 1, d + 1)] * dir[a] * dir[d];
        }
    }
    let disc = b * b - g[(0, 0)] * c;
    if !(c > 0.0 && disc >= 0.0) {
        return Err(Error::InvalidArgument(format!("no future null vector along {dir:?}")));
    }
    let lam = (-b + disc.sqrt()) / c;
    let v = [1.0, lam * dir[0], lam * dir[1], lam * dir[2]];
    Ok(std::array::from_fn(|i| 0.5 * (0..4).map(|j| g[(i, j)] * v[j]).sum::<f64>()))
}

pub fn forward_light_cone(spec: &MetricSpec, q: Point4, n_dirs: usize, s_max: f64, ds: f64) -> Result<Vec<RayTrajectory>> {
    if n_dirs == 0 {
        return Err(Error::InvalidArgument("n_dirs must be at least 1".into()));
    }
    sphere_directions(n_dirs)
        .into_par_iter()
        .map(|d| {
            let xi = future_null_covector(spec, &q, d)?;
            hamilton_flow(spec, PhasePoint::new(q, xi), s_max, ds)
        })
        .collect()
}

/// Observer region: static curves `t ↦ (t, y_k)` inside a vertical
/// cylinder. A ray hits observer `k` where its spatial projection passes
/// within `hit_radius` of `y_k`; `V` is the union of these thin tubes.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverTube {
    pub axis: [f64; 3],
    pub radius: f64,
    pub t_range: (f64, f64),
    pub observers: Vec<[f64; 3]>,
    pub hit_radius: f64,
}

impl ObserverTube {
    /// Observers on a cubic lattice of the given spacing inside the cylinder
    /// `|y − axis|_{x¹x²} ≤ radius`, `|x³ − axis₃| ≤ half_height`.
    pub fn cylinder(axis: [f64; 3], radius: f64, half_height: f64, t_range: (f64, f64), spacing: f64, hit_radius: f64) -> Result<Self> {
        if !(radius > 0.0 && spacing > 0.0 && hit_radius > 0.0 && t_range.1 > t_range.0) {
            return Err(Error::InvalidArgument("observer tube needs positive sizes and t_min < t_max".into()));
        }
        let n = (radius / spacing).floor() as i64;
        let m = (half_height / spacing).floor() as i64;
        let mut observers = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                let (a, b) = (i as f64 * spacing, j as f64 * spacing);
                if a * a + b * b > radius * radius {
                    continue;
                }
                for k in -m..=m {
                    observers.push([axis[0] + a, axis[1] + b, axis[2] + k as f64 * spacing]);
                }
            }
        }
        Ok(ObserverTube {
            axis,
            radius,
            t_range,
            observers,
            hit_radius,
        })
    }

    pub fn contains(&self, x: &Point4) -> bool {
        x[0] >= self.t_range.0
            && x[0] <= self.t_range.1
            && self.observers.iter().any(|y| spatial_dist(x, y) <= self.hit_radius * (1.0 + 1e-12))
    }
}

fn spatial_dist(x: &Point4, y: &[f64; 3]) -> f64 {
    ((x[1] - y[0]).powi(2) + (x[2] - y[1]).powi(2) + (x[3] - y[2]).powi(2)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverHit {
    pub observer: usize,
    pub ray: usize,
    pub s: f64,
    /// Point on the ray (linear interpolation between samples).
    pub point: Point4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pub source: Point4,
    pub tube: ObserverTube,
    /// Earliest hit per observer, ordered by observer id.
    pub points: Vec<ObserverHit>,
    /// Set when no ray met the region.
    pub empty: bool,
}

impl ObservationSet {
    /// Keeps the hit with the smallest `t` per observer; static observers
    /// are ordered by proper time exactly when ordered by `t`.
    pub fn from_hits(source: Point4, tube: ObserverTube, hits: &[ObserverHit]) -> Self {
        let mut best: BTreeMap<usize, ObserverHit> = BTreeMap::new();
        for h in hits {
            best.entry(h.observer)
                .and_modify(|b| {
                    if (h.point[0], h.ray) < (b.point[0], b.ray) {
                        *b = *h;
                    }
                })
                .or_insert(*h);
        }
        let points: Vec<ObserverHit> = best.into_values().collect();
        ObservationSet {
            source,
            tube,
            empty: points.is_empty(),
            points,
        }
    }

    pub fn refiltered(&self) -> Self {
        Self::from_hits(self.source, self.tube.clone(), &self.points)
    }
}

/// All crossings of the rays with the observer tubes, one per ray segment
/// and observer.
pub fn observer_hits(tube: &ObserverTube, rays: &[RayTrajectory]) -> Vec<ObserverHit> {
    rays.par_iter()
        .enumerate()
        .flat_map_iter(|(rid, ray)| {
            let mut out = Vec::new();
            for w in ray.samples.windows(2) {
                let (a, b) = (&w[0], &w[1]);
                let d: [f64; 3] = std::array::from_fn(|i| b.point.x[i + 1] - a.point.x[i + 1]);
                let dd = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                for (oid, y) in tube.observers.iter().enumerate() {
                    let r: [f64; 3] = std::array::from_fn(|i| y[i] - a.point.x[i + 1]);
                    let u = if dd > 0.0 {
                        ((r[0] * d[0] + r[1] * d[1] + r[2] * d[2]) / dd).clamp(0.0, 1.0)
                    } else {
                        0.0
                    };
                    let p: Point4 = std::array::from_fn(|i| a.point.x[i] + u * (b.point.x[i] - a.point.x[i]));
                    if spatial_dist(&p, y) <= tube.hit_radius && p[0] >= tube.t_range.0 && p[0] <= tube.t_range.1 {
                        out.push(ObserverHit {
                            observer: oid,
                            ray: rid,
                            s: a.s + u * (b.s - a.s),
                            point: p,
                        });
                    }
                }
            }
            out
        })
        .collect()
}

/// Traces the cone of `q` and keeps the earliest hit on every observer.
pub fn earliest_obs(spec: &MetricSpec, q: Point4, tube: &ObserverTube, n_dirs: usize, s_max: f64, ds: f64) -> Result<ObservationSet> {
    let rays = forward_light_cone(spec, q, n_dirs, s_max, ds)?;
    Ok(ObservationSet::from_hits(q, tube.clone(), &observer_hits(tube, &rays)))
}

/// CSV with columns `ray_id,s,t,x1,x2,x3,P_defect`.
pub fn write_rays_csv(mut w: impl Write, rays: &[RayTrajectory]) -> Result<()> {
    writeln!(w, "ray_id,s,t,x1,x2,x3,P_defect")?;
    for (id, ray) in rays.iter().enumerate() {
        for s in &ray.samples {
            let x = s.point.x;
            writeln!(w, "{id},{}", csv_row(&[s.s, x[0], x[1], x[2], x[3], s.p_defect]))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_balanced() {
        let d = sphere_directions(500);
        let mut mean = [0.0; 3];
        for v in &d {
            assert!(((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) - 1.0).abs() < 1e-14);
            for i in 0..3 {
                mean[i] += v[i] / 500.0;
            }
        }
        assert!(mean.iter().all(|m| m.abs() < 1e-2));
    }

    #[test]
    fn flat_cone_is_t_equals_r() {
        let m = MetricSpec::minkowski();
        let rays = forward_light_cone(&m, [0.0; 4], 20, 2.0, 0.1).unwrap();
        for ray in &rays {
            for s in &ray.samples {
                let x = s.point.x;
                let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
                assert!((x[0] - r).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn empty_when_cone_misses() {
        let m = MetricSpec::minkowski();
        let tube = ObserverTube::cylinder([5.0, 0.0, 0.0], 0.5, 0.0, (0.0, 10.0), 0.25, 0.1).unwrap();
        let set = earliest_obs(&m, [0.0; 4], &tube, 50, 1.0, 0.1).unwrap();
        assert!(set.empty && set.points.is_empty());
    }

    #[test]
    fn csv_header_and_rows() {
        let m = MetricSpec::minkowski();
        let rays = forward_light_cone(&m, [0.0; 4], 2, 0.2, 0.1).unwrap();
        let mut buf = Vec::new();
        write_rays_csv(&mut buf, &rays).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "ray_id,s,t,x1,x2,x3,P_defect");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert_eq!(lines[1].split(',').count(), 7);
    }
}
