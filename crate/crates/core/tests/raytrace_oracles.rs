mod common;

use common::{dopri, hamilton_fd};
use nalgebra::Matrix4;
use wavelab::expr::ScalarField;
use wavelab::metric::MetricSpec;
use wavelab::raytrace::{
    cone::observer_hits, first_conjugate_parameter, forward_light_cone, hamilton_flow, ObservationSet, ObserverTube,
    PhasePoint,
};

fn sf(s: &str) -> ScalarField {
    ScalarField::parse(s).unwrap()
}

fn curved() -> MetricSpec {
    MetricSpec::product_diagonal(sf("1 + 0.3*sin(x1)"), [sf("1 + 0.2*cos(x2)"), sf("1"), sf("1 + 0.1*x1*x3")]).unwrap()
}

fn state(p: &PhasePoint) -> [f64; 8] {
    let mut y = [0.0; 8];
    y[..4].copy_from_slice(&p.x);
    y[4..].copy_from_slice(&p.xi);
    y
}

#[test]
fn flow_matches_adaptive_oracle() {
    let spec = curved();
    for xi in [[-1.0, 0.8, 0.432f64.sqrt(), 0.0], [-1.2, 0.1, 0.5, 0.9], [0.7, -0.3, 0.2, 0.1]] {
        let start = PhasePoint::new([0.0, 0.1, -0.2, 0.3], xi);
        let ray = hamilton_flow(&spec, start, 2.0, 0.002).unwrap();
        let end = ray.last();
        assert!((end.s - 2.0).abs() < 1e-12);
        let oracle = dopri(|y| hamilton_fd(&spec, y), state(&start), 2.0, 1e-13);
        let got = state(&end.point);
        for k in 0..8 {
            assert!((got[k] - oracle[k]).abs() <= 1e-8 * (1.0 + oracle[k].abs()), "component {k}: {} vs {}", got[k], oracle[k]);
        }
    }
}

// det of ∂x(s)/∂ξ(0) by central differences of oracle trajectories.
fn shooting_det(spec: &MetricSpec, start: &PhasePoint, s: f64) -> f64 {
    let h = 1e-5;
    let mut m = Matrix4::zeros();
    for j in 0..4 {
        let mut plus = state(start);
        let mut minus = state(start);
        plus[4 + j] += h;
        minus[4 + j] -= h;
        let a = dopri(|y| hamilton_fd(spec, y), plus, s, 1e-12);
        let b = dopri(|y| hamilton_fd(spec, y), minus, s, 1e-12);
        for i in 0..4 {
            m[(i, j)] = (a[i] - b[i]) / (2.0 * h);
        }
    }
    m.determinant()
}

#[test]
fn conjugate_point_matches_shooting() {
    let spec = MetricSpec::product_diagonal(sf("1 - 0.5*exp(-(x1^2 + x2^2 + 0.4*x3^2))"), [sf("1"), sf("1"), sf("1")]).unwrap();
    let start = PhasePoint::new([0.0, -3.0, 0.0, 0.0], [-0.5, 0.5, 0.0, 0.0]);
    let s_star = first_conjugate_parameter(&spec, start, 12.0, 0.02).unwrap().expect("focusing");
    // bracket the root of the oracle determinant around the reported value
    let (mut lo, mut hi) = (s_star - 0.05, s_star + 0.05);
    let d_lo = shooting_det(&spec, &start, lo);
    assert!(d_lo * shooting_det(&spec, &start, hi) < 0.0, "no sign change near {s_star}");
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if shooting_det(&spec, &start, mid) * d_lo > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let oracle = 0.5 * (lo + hi);
    assert!((s_star - oracle).abs() <= 1e-4, "{s_star} vs oracle {oracle}");
    // no earlier sign change
    let mut prev = shooting_det(&spec, &start, 0.05);
    let mut s = 0.05;
    while s < lo - 0.2 {
        s += 0.2;
        let d = shooting_det(&spec, &start, s);
        assert!(d * prev > 0.0, "earlier sign change near {s}");
        prev = d;
    }
}

#[test]
fn conformal_rays_are_straight_lines() {
    let spec = MetricSpec::conformal_minkowski(sf("0.4*sin(x1 + t)*exp(-x2^2)")).unwrap();
    let rays = forward_light_cone(&spec, [0.0, 0.1, 0.0, -0.1], 24, 1.5, 0.005).unwrap();
    for ray in &rays {
        let p0 = ray.samples[0].point.x;
        let p1 = ray.last().point.x;
        let dir: Vec<f64> = (0..4).map(|i| (p1[i] - p0[i]) / (p1[0] - p0[0])).collect();
        let speed = (dir[1] * dir[1] + dir[2] * dir[2] + dir[3] * dir[3]).sqrt();
        assert!((speed - 1.0).abs() < 1e-9, "{speed}");
        for s in &ray.samples {
            let dt = s.point.x[0] - p0[0];
            for i in 1..4 {
                assert!((s.point.x[i] - p0[i] - dir[i] * dt).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn observation_set_is_exhaustively_earliest() {
    let spec = MetricSpec::product_diagonal(sf("1 - 0.3*exp(-((x1 - 1)^2 + x2^2 + x3^2))"), [sf("1"), sf("1"), sf("1")]).unwrap();
    let tube = ObserverTube::cylinder([2.0, 0.0, 0.0], 0.4, 0.3, (0.0, 6.0), 0.2, 0.1).unwrap();
    let rays = forward_light_cone(&spec, [0.0; 4], 600, 4.0, 0.02).unwrap();
    let set = ObservationSet::from_hits([0.0; 4], tube.clone(), &observer_hits(&tube, &rays));
    assert!(!set.empty);
    assert_eq!(set.refiltered(), set);
    // brute force: earliest sample of any ray within hit_radius of each observer
    for (o, obs) in tube.observers.iter().enumerate() {
        let mut best = f64::INFINITY;
        for ray in &rays {
            for s in &ray.samples {
                let x = s.point.x;
                let d = ((x[1] - obs[0]).powi(2) + (x[2] - obs[1]).powi(2) + (x[3] - obs[2]).powi(2)).sqrt();
                if d <= tube.hit_radius && x[0] >= tube.t_range.0 && x[0] <= tube.t_range.1 {
                    best = best.min(x[0]);
                }
            }
        }
        match set.points.iter().find(|h| h.observer == o) {
            // the reported hit may lie between samples, so it is no later than any sampled hit
            Some(h) => assert!(h.point[0] <= best + 1e-12, "observer {o}: {} > {best}", h.point[0]),
            None => assert!(best.is_infinite(), "observer {o} missed, sampled hit at t = {best}"),
        }
    }
}
