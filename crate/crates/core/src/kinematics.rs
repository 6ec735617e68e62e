//! Kinematic signals of a plan by finite differences of positions.
//!
//! Second-order stencils are used everywhere (central in the interior,
//! one-sided three-point at the ends), so the derivatives are exact for
//! quadratic motion.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::geometry::Point2;
use crate::math;
use crate::trace::EgoPlanPoint;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Kinematics {
    /// Signed acceleration along the heading, m/s^2.
    pub longitudinal: Vec<f64>,
    /// Signed acceleration to the left of the heading, m/s^2.
    pub lateral: Vec<f64>,
    pub forward: Vec<f64>,
    pub backward: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Derivative of the longitudinal acceleration, m/s^3.
    pub jerk_longitudinal: Vec<f64>,
    /// Derivative of the lateral acceleration, m/s^3.
    pub jerk_lateral: Vec<f64>,
}

impl Kinematics {
    /// Largest acceleration in each direction (forward, backward, left,
    /// right), clamped at zero.
    pub fn directional_maxima(&self) -> [f64; 4] {
        let m = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
        [m(&self.forward), m(&self.backward), m(&self.left), m(&self.right)]
    }
}

fn second_difference(p: &[Point2], dt: f64) -> Vec<Point2> {
    let n = p.len();
    let inv = 1.0 / (dt * dt);
    let dd = |a: Point2, b: Point2, c: Point2| {
        Point2::new((a.x - 2.0 * b.x + c.x) * inv, (a.y - 2.0 * b.y + c.y) * inv)
    };
    let mut out = Vec::with_capacity(n);
    out.push(dd(p[0], p[1], p[2]));
    for k in 1..n - 1 {
        out.push(dd(p[k - 1], p[k], p[k + 1]));
    }
    out.push(dd(p[n - 3], p[n - 2], p[n - 1]));
    out
}

fn first_difference(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt));
    for k in 1..n - 1 {
        out.push((v[k + 1] - v[k - 1]) / (2.0 * dt));
    }
    out.push((3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt));
    out
}

pub fn derive_kinematics(plan: &[EgoPlanPoint], dt: f64) -> Result<Kinematics> {
    if plan.len() < 3 {
        return Err(invalid("kinematics need at least 3 plan points"));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt must be positive"));
    }
    let pos: Vec<Point2> = plan.iter().map(|p| p.pos()).collect();
    let acc = second_difference(&pos, dt);
    let n = plan.len();
    let mut k = Kinematics {
        longitudinal: Vec::with_capacity(n),
        lateral: Vec::with_capacity(n),
        forward: Vec::with_capacity(n),
        backward: Vec::with_capacity(n),
        left: Vec::with_capacity(n),
        right: Vec::with_capacity(n),
        ..Default::default()
    };
    for (a, p) in acc.iter().zip(plan) {
        let (s, c) = (math::sin(p.heading), math::cos(p.heading));
        let lon = a.x * c + a.y * s;
        let lat = -a.x * s + a.y * c;
        k.longitudinal.push(lon);
        k.lateral.push(lat);
        k.forward.push(lon.max(0.0));
        k.backward.push((-lon).max(0.0));
        k.left.push(lat.max(0.0));
        k.right.push((-lat).max(0.0));
    }
    k.jerk_longitudinal = first_difference(&k.longitudinal, dt);
    k.jerk_lateral = first_difference(&k.lateral, dt);
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_velocity_has_no_acceleration() {
        let plan: Vec<_> = (0..81)
            .map(|k| EgoPlanPoint::new(3.0 + 0.5 * k as f64, 1.0 + 0.25 * k as f64, 11.18, 0.4636))
            .collect();
        let k = derive_kinematics(&plan, 0.05).unwrap();
        for v in k.longitudinal.iter().chain(&k.lateral) {
            assert!(v.abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn linear_speed_ramp_gives_unit_forward_acceleration() {
        let dt = 0.05;
        let plan: Vec<_> = (0..81)
            .map(|k| {
                let t = k as f64 * dt;
                EgoPlanPoint::new(5.0 * t + 0.5 * t * t, 0.0, 5.0 + t, 0.0)
            })
            .collect();
        let k = derive_kinematics(&plan, dt).unwrap();
        for v in &k.forward {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
        assert!(k.backward.iter().all(|v| *v == 0.0));
        for j in &k.jerk_longitudinal {
            assert!(j.abs() < 1e-3);
        }
    }

    #[test]
    fn circular_arc_lateral_acceleration() {
        let (v, r, dt) = (10.0, 50.0, 0.05);
        let plan: Vec<_> = (0..81)
            .map(|k| {
                let phi = v * dt * k as f64 / r;
                let heading = crate::math::wrap_angle(phi + core::f64::consts::FRAC_PI_2);
                EgoPlanPoint::new(r * math::cos(phi), r * math::sin(phi), v, heading)
            })
            .collect();
        let k = derive_kinematics(&plan, dt).unwrap();
        let expected = v * v / r;
        for a in &k.lateral {
            assert!(((a - expected) / expected).abs() < 1e-3, "{a}");
        }
        assert!(k.right.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn too_short_plan_is_rejected() {
        let plan = [EgoPlanPoint::default(); 2];
        assert!(derive_kinematics(&plan, 0.05).is_err());
        assert!(derive_kinematics(&[EgoPlanPoint::default(); 3], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn scaling_positions_scales_accelerations(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -3.0f64..3.0), 3..30),
            s in 0.1f64..5.0,
        ) {
            let plan: Vec<_> = pts.iter().map(|&(x, y, h)| EgoPlanPoint::new(x, y, 1.0, h)).collect();
            let scaled: Vec<_> = plan.iter().map(|p| EgoPlanPoint::new(p.x * s, p.y * s, p.v * s, p.heading)).collect();
            let a = derive_kinematics(&plan, 0.1).unwrap();
            let b = derive_kinematics(&scaled, 0.1).unwrap();
            for (x, y) in a.longitudinal.iter().zip(&b.longitudinal).chain(a.lateral.iter().zip(&b.lateral)) {
                prop_assert!((x * s - y).abs() <= 1e-6 * (1.0 + y.abs()));
            }
        }
    }
}
