//! Candidate generators: kinematic rollouts along the scenario route.

use alloc::vec::Vec;

use rand::Rng as _;

use super::path::Path;
use super::scenario::{integrate, Scenario};
use crate::error::{invalid, Result};
use crate::math;
use crate::rng;
use crate::scoring::Proposer;
use crate::trace::{horizon_steps, EgoPlanPoint, Frame, DEFAULT_HORIZON_S};

pub const V_MAX: f64 = 25.0;
/// Below this speed the lattice does not offer lane changes.
const MIN_LANE_CHANGE_SPEED: f64 = 2.0;

/// Longitudinal acceleration `a1` for `t1` seconds then `a2`; lateral
/// quintic move to offset `d_target` over `lat_duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub a1: f64,
    pub t1: f64,
    pub a2: f64,
    pub d_target: f64,
    pub lat_duration: f64,
}

impl Profile {
    pub fn constant(a: f64, d_target: f64) -> Self {
        Self {
            a1: a,
            t1: f64::INFINITY,
            a2: a,
            d_target,
            lat_duration: 4.0,
        }
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        if t < self.t1 {
            self.a1
        } else {
            self.a2
        }
    }
}

/// Offset, rate and second derivative of the lateral quintic at time `t`.
fn lateral(d0: f64, d1: f64, duration: f64, t: f64) -> (f64, f64, f64) {
    if t >= duration || d0 == d1 {
        return (if t >= duration { d1 } else { d0 }, 0.0, 0.0);
    }
    let x = t / duration;
    let q = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    let dq = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    let ddq = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    let span = d1 - d0;
    (d0 + span * q, span * dq / duration, span * ddq / (duration * duration))
}

/// Rolls `profile` out from `start` along `route`, `n_points` samples `dt`
/// apart. Headings follow the exact tangent of the rolled-out curve.
pub fn rollout(
    route: &Path,
    start: &EgoPlanPoint,
    profile: &Profile,
    n_points: usize,
    dt: f64,
    v_max: f64,
) -> Vec<EgoPlanPoint> {
    let (s0, d0) = route.project(start.pos());
    let (mut s, mut v) = (s0, start.v.max(0.0));
    let mut out = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let t = k as f64 * dt;
        let (d, dd, _) = lateral(d0, profile.d_target, profile.lat_duration, t);
        let pose = route.pose(s);
        let pos = pose.pos.add(pose.normal().scale(d));
        let along = v * (1.0 - pose.curvature * d);
        let (heading, speed) = if along == 0.0 && dd == 0.0 {
            (pose.heading, 0.0)
        } else {
            (math::wrap_angle(pose.heading + math::atan2(dd, along)), math::hypot(along, dd))
        };
        let heading = if k == 0 && speed == 0.0 { start.heading } else { heading };
        out.push(EgoPlanPoint::new(pos.x, pos.y, speed, heading));
        (s, v) = integrate(s, v, profile.acceleration(t), dt, v_max);
    }
    out
}

fn current_lane(offsets: &[f64], d: f64) -> f64 {
    offsets
        .iter()
        .copied()
        .min_by(|a, b| (a - d).abs().total_cmp(&(b - d).abs()))
        .unwrap_or(0.0)
}

/// Constant speed, back to the nearest lane center.
pub fn zero_action(scn: &Scenario, state: &EgoPlanPoint, n_points: usize) -> Vec<EgoPlanPoint> {
    let (_, d0) = scn.route.project(state.pos());
    let target = current_lane(&scn.lane_offsets, d0);
    rollout(&scn.route, state, &Profile::constant(0.0, target), n_points, scn.dt(), V_MAX)
}

/// Acceleration range of the lattice, m/s^2.
const A_MIN: f64 = -6.0;
const A_MAX: f64 = 3.0;
/// Bisection levels before the lattice falls back to its tail.
const LEVELS: usize = 6;

/// Accelerations of each lattice level: the range ends, zero and -3 first,
/// then the midpoints of every gap left by the levels before. Gentle values
/// come first within a level.
fn acceleration_levels() -> Vec<Vec<f64>> {
    let mut known = alloc::vec![A_MIN, -3.0, 0.0, A_MAX];
    let mut levels = alloc::vec![alloc::vec![0.0, -3.0, A_MAX, A_MIN]];
    for _ in 1..LEVELS {
        let mut mids: Vec<f64> = known.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        known.extend_from_slice(&mids);
        known.sort_by(f64::total_cmp);
        mids.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        levels.push(mids);
    }
    levels
}

fn same_plan(a: &[EgoPlanPoint], b: &[EgoPlanPoint]) -> bool {
    a.iter().zip(b).all(|(p, q)| p.pos().dist(q.pos()) < 1e-6)
}

/// Acceleration-time lattice: constant accelerations crossed with lane
/// targets, refined level by level so any prefix spans the whole
/// acceleration range. The zero action is at index 0.
#[derive(Debug, Clone)]
pub struct AtSampler {
    route: Path,
    lane_offsets: Vec<f64>,
    n: usize,
    dt: f64,
    n_points: usize,
}

impl AtSampler {
    pub fn new(scn: &Scenario, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("the sampler needs n >= 1"));
        }
        Ok(Self {
            route: scn.route.clone(),
            lane_offsets: scn.lane_offsets.clone(),
            n,
            dt: scn.dt(),
            n_points: horizon_steps(scn.rate_hz, DEFAULT_HORIZON_S) + 1,
        })
    }

    fn lattice(&self, state: &EgoPlanPoint) -> impl Iterator<Item = Profile> {
        let (_, d0) = self.route.project(state.pos());
        let cur = current_lane(&self.lane_offsets, d0);
        let others: Vec<f64> = if state.v < MIN_LANE_CHANGE_SPEED {
            Vec::new()
        } else {
            let mut o: Vec<f64> = self.lane_offsets.iter().copied().filter(|&d| d != cur).collect();
            o.sort_by(|a, b| (a - d0).abs().total_cmp(&(b - d0).abs()));
            o
        };
        let mut items = Vec::new();
        for set in acceleration_levels() {
            items.extend(set.iter().map(|&a| Profile::constant(a, cur)));
            for &d in &others {
                items.extend(set.iter().map(|&a| Profile::constant(a, d)));
            }
        }
        // an unbounded tail of gentle accelerations keeps any n reachable
        let tail = (1..).map(move |k| Profile::constant(0.1 * k as f64 + 0.05, cur));
        items.into_iter().chain(tail)
    }

    /// The first `n` distinct lattice rollouts from `state`.
    pub fn plans(&self, state: &EgoPlanPoint) -> Vec<Vec<EgoPlanPoint>> {
        let mut out: Vec<Vec<EgoPlanPoint>> = Vec::with_capacity(self.n);
        for profile in self.lattice(state) {
            if out.len() == self.n {
                break;
            }
            let plan = rollout(&self.route, state, &profile, self.n_points, self.dt, V_MAX);
            if !out.iter().any(|p| same_plan(p, &plan)) {
                out.push(plan);
            }
        }
        out
    }
}

impl Proposer for AtSampler {
    fn propose(&mut self, env: &Frame) -> Result<Vec<Vec<EgoPlanPoint>>> {
        let state = env.ego_plan.first().ok_or_else(|| invalid("frame has no ego state"))?;
        Ok(self.plans(state))
    }
}

pub fn at_sampler(scn: &Scenario, state: &Frame, n: usize) -> Result<Vec<Vec<EgoPlanPoint>>> {
    AtSampler::new(scn, n)?.propose(state)
}

/// Random two-phase accelerations with an occasional lane change.
#[derive(Debug, Clone)]
pub struct RandomProposer {
    route: Path,
    lane_offsets: Vec<f64>,
    n: usize,
    dt: f64,
    n_points: usize,
    rng: rng::Rng,
}

impl RandomProposer {
    pub fn new(scn: &Scenario, n: usize, n_points: usize, seed: u64) -> Self {
        Self {
            route: scn.route.clone(),
            lane_offsets: scn.lane_offsets.clone(),
            n,
            dt: scn.dt(),
            n_points,
            rng: rng::derive(seed, 0x7A9D),
        }
    }

    pub fn sample_profile(&mut self, state: &EgoPlanPoint) -> Profile {
        let (_, d0) = self.route.project(state.pos());
        let cur = current_lane(&self.lane_offsets, d0);
        let r = &mut self.rng;
        let a1 = if state.v < 0.5 {
            r.gen_range(0.0..2.5)
        } else {
            r.gen_range(-3.5..2.5)
        };
        let t1 = r.gen_range(0.5..4.0);
        let a2 = r.gen_range(-2.5..2.0);
        let others: Vec<f64> = self.lane_offsets.iter().copied().filter(|&d| d != cur).collect();
        let d_target = if state.v >= MIN_LANE_CHANGE_SPEED && !others.is_empty() && r.gen_bool(0.35) {
            others[r.gen_range(0..others.len())]
        } else {
            cur + r.gen_range(-0.4..0.4)
        };
        let lat_duration = r.gen_range(2.5..6.0);
        Profile {
            a1,
            t1,
            a2,
            d_target,
            lat_duration,
        }
    }

    pub fn sample(&mut self, state: &EgoPlanPoint) -> Vec<EgoPlanPoint> {
        let profile = self.sample_profile(state);
        rollout(&self.route, state, &profile, self.n_points, self.dt, V_MAX)
    }
}

impl Proposer for RandomProposer {
    fn propose(&mut self, env: &Frame) -> Result<Vec<Vec<EgoPlanPoint>>> {
        let state = *env.ego_plan.first().ok_or_else(|| invalid("frame has no ego state"))?;
        Ok((0..self.n).map(|_| self.sample(&state)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::derive_kinematics;
    use crate::sim::scenario::{generate_scenario, ScenarioKind, ScenarioSpec};

    fn following() -> Scenario {
        generate_scenario(ScenarioSpec::new(ScenarioKind::Following, 4))
    }

    #[test]
    fn single_candidate_is_zero_action() {
        let scn = following();
        let f = scn.initial_frame(80);
        let plans = at_sampler(&scn, &f, 1).unwrap();
        assert_eq!(plans.len(), 1);
        assert_eq!(plans[0], zero_action(&scn, &scn.ego, 81));
        let dx = plans[0][80].x - plans[0][0].x;
        assert!((dx - scn.ego.v * 4.0).abs() < 1e-9);
    }

    #[test]
    fn fifteen_distinct_horizon_length_plans() {
        for kind in ScenarioKind::ALL {
            let scn = generate_scenario(ScenarioSpec::new(kind, 2));
            let f = scn.initial_frame(80);
            let plans = at_sampler(&scn, &f, 15).unwrap();
            assert_eq!(plans.len(), 15);
            for (i, p) in plans.iter().enumerate() {
                assert_eq!(p.len(), 81);
                assert!(!plans[..i].iter().any(|q| same_plan(p, q)), "{kind}");
            }
        }
    }

    #[test]
    fn lattice_matches_commanded_accelerations() {
        let scn = following();
        let mut state = scn.ego;
        state.v = 10.0;
        let sampler = AtSampler::new(&scn, 30).unwrap();
        for profile in sampler.lattice(&state).take(30) {
            let plan = rollout(&scn.route, &state, &profile, 81, 0.05, V_MAX);
            let k = derive_kinematics(&plan, 0.05).unwrap();
            let dt = 0.05;
            for j in 1..80 {
                let v_end = state.v + profile.a1 * (j + 1) as f64 * dt;
                if v_end <= 0.0 || v_end >= V_MAX {
                    continue;
                }
                let t = j as f64 * dt;
                let (_, rate, dd) = lateral(0.0, profile.d_target, profile.lat_duration, t);
                let v = state.v + profile.a1 * t;
                let psi = math::atan2(rate, v);
                let (sn, cs) = (math::sin(psi), math::cos(psi));
                let lon = profile.a1 * cs + dd * sn;
                let lat = -profile.a1 * sn + dd * cs;
                // quintic lateral moves leave an O(dt^2) stencil error
                let tol = if profile.d_target == 0.0 { 1e-6 } else { 5e-3 };
                assert!((k.longitudinal[j] - lon).abs() < tol, "{profile:?} {j}");
                assert!((k.lateral[j] - lat).abs() < tol, "{} {}", k.lateral[j], lat);
            }
        }
    }

    #[test]
    fn levels_bisect_the_range() {
        let levels = acceleration_levels();
        assert_eq!(levels[0], alloc::vec![0.0, -3.0, 3.0, -6.0]);
        assert_eq!(levels[1], alloc::vec![-1.5, 1.5, -4.5]);
        let mut all: Vec<f64> = levels.concat();
        let n = all.len();
        all.sort_by(f64::total_cmp);
        all.dedup();
        assert_eq!(all.len(), n);
        let step = (A_MAX - A_MIN) / (n - 1) as f64;
        assert!(all.windows(2).all(|w| (w[1] - w[0] - step).abs() < 1e-12));
    }

    #[test]
    fn random_proposer_is_seeded() {
        let scn = following();
        let f = scn.initial_frame(80);
        let a = RandomProposer::new(&scn, 4, 100, 9).propose(&f).unwrap();
        let b = RandomProposer::new(&scn, 4, 100, 9).propose(&f).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.len() == 100));
    }

    #[test]
    fn stopping_rollout_never_reverses() {
        let scn = following();
        let plan = rollout(&scn.route, &scn.ego, &Profile::constant(-6.0, 0.0), 81, 0.05, V_MAX);
        assert!(plan.windows(2).all(|w| w[1].x >= w[0].x - 1e-12));
        assert_eq!(plan[80].v, 0.0);
    }
}
