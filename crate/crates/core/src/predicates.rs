//! Parameterized predicates.
//!
//! Every builtin predicate has the shape
//!
//! ```text
//! P(trace, t; theta) = tanh( min_k (sign_k * theta_k + offset_k(trace, t)) / scale )
//! ```
//!
//! where `offset_k` is a theta-independent physical quantity measured on the
//! frame (a distance, a speed, an acceleration maximum...). Keeping theta out
//! of the measurement makes predicate values cheap to recompute during
//! training and gives an exact parameter gradient: only the active (smallest)
//! term contributes, ties going to the lowest index.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::Point2;
use crate::kinematics::derive_kinematics;
use crate::math;
use crate::trace::{AreaKind, Extent, LightState, Trace};

pub const MAX_PARAMS: usize = 4;

/// Saturation value used when the measured object is absent (no lead
/// vehicle, no stop point...).
pub const ABSENT: f64 = 100.0;

/// Footprint assumed for the ego vehicle.
pub const EGO_EXTENT: Extent = Extent {
    length: 4.5,
    width: 1.9,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PredicateKind {
    Condition,
    Action,
}

impl PredicateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PredicateKind::Condition => "condition",
            PredicateKind::Action => "action",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub unit: &'static str,
    pub lower: f64,
    pub upper: f64,
    pub default: f64,
    /// +1 when raising the parameter raises the predicate value.
    pub sign: f64,
}

/// Writes the theta-independent offsets of every margin term for frame `t`.
pub type MeasureFn = fn(&Trace, usize, &mut [f64]) -> Result<()>;

#[derive(Clone)]
pub struct PredicateDescriptor {
    pub id: String,
    pub kind: PredicateKind,
    pub params: Vec<ParamSpec>,
    /// Normalization of the margin inside tanh, in the margin's unit.
    pub scale: f64,
    /// Temperature of the smooth minimum over margin terms; zero takes the
    /// hard minimum.
    pub blend: f64,
    pub doc: &'static str,
    pub theta: Vec<f64>,
    pub measure: MeasureFn,
}

impl core::fmt::Debug for PredicateDescriptor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PredicateDescriptor")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("theta", &self.theta)
            .finish()
    }
}

impl PartialEq for PredicateDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.kind == other.kind
            && self.params == other.params
            && self.scale == other.scale
            && self.blend == other.blend
            && self.theta == other.theta
    }
}

/// Per-frame predicate values over a whole trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PredicateSignal {
    pub values: Vec<f64>,
}

impl PredicateDescriptor {
    pub fn new(
        id: &str,
        kind: PredicateKind,
        params: Vec<ParamSpec>,
        scale: f64,
        doc: &'static str,
        measure: MeasureFn,
    ) -> Self {
        assert!(!params.is_empty() && params.len() <= MAX_PARAMS);
        let theta = params.iter().map(|p| p.default).collect();
        Self {
            id: id.to_string(),
            kind,
            params,
            scale,
            blend: 0.0,
            doc,
            theta,
            measure,
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn with_blend(mut self, blend: f64) -> Self {
        self.blend = blend;
        self
    }

    pub fn with_theta(mut self, theta: &[f64]) -> Self {
        self.theta = theta.to_vec();
        self
    }

    pub fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.params.len() {
            return Err(invalid(format!(
                "{} expects {} parameters, got {}",
                self.id,
                self.params.len(),
                theta.len()
            )));
        }
        for (p, &v) in self.params.iter().zip(theta) {
            if !(v >= p.lower && v <= p.upper) {
                return Err(invalid(format!(
                    "{}.{} = {v} outside [{}, {}]",
                    self.id, p.name, p.lower, p.upper
                )));
            }
        }
        Ok(())
    }

    pub fn clamp_theta(&self, theta: &mut [f64]) {
        for (p, v) in self.params.iter().zip(theta.iter_mut()) {
            *v = v.clamp(p.lower, p.upper);
        }
    }

    /// Offsets for frame `t`, one per parameter.
    pub fn measure_at(&self, trace: &Trace, t: usize) -> Result<[f64; MAX_PARAMS]> {
        if t >= trace.frames.len() {
            return Err(Error::Index {
                index: t,
                len: trace.frames.len(),
            });
        }
        let mut out = [0.0; MAX_PARAMS];
        (self.measure)(trace, t, &mut out[..self.params.len()])?;
        Ok(out)
    }

    /// Value and index of the smallest margin term.
    #[inline]
    pub fn value_from_measure(&self, offsets: &[f64], theta: &[f64]) -> (f64, usize) {
        let (best, arg) = self.min_margin(offsets, theta);
        if self.blend > 0.0 && self.params.len() > 1 {
            let mut z = 0.0;
            for (k, p) in self.params.iter().enumerate() {
                z += math::exp(-(p.sign * theta[k] + offsets[k] - best) / self.blend);
            }
            let soft = best - self.blend * libm::log(z);
            return (math::tanh(soft / self.scale), arg);
        }
        (math::tanh(best / self.scale), arg)
    }

    #[inline]
    fn min_margin(&self, offsets: &[f64], theta: &[f64]) -> (f64, usize) {
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (k, p) in self.params.iter().enumerate() {
            let m = p.sign * theta[k] + offsets[k];
            if m < best {
                best = m;
                arg = k;
            }
        }
        (best, arg)
    }

    /// d value / d theta_k for the same inputs as
    /// [`value_from_measure`](Self::value_from_measure); `active` is the
    /// index it returned.
    #[inline]
    pub fn gradient_at(&self, offsets: &[f64], theta: &[f64], active: usize, out: &mut [f64]) {
        let best = self.params[active].sign * theta[active] + offsets[active];
        if self.blend > 0.0 && self.params.len() > 1 {
            let mut z = 0.0;
            for (k, p) in self.params.iter().enumerate() {
                out[k] = math::exp(-(p.sign * theta[k] + offsets[k] - best) / self.blend);
                z += out[k];
            }
            let outer = sech2((best - self.blend * libm::log(z)) / self.scale) / self.scale;
            for (k, p) in self.params.iter().enumerate() {
                out[k] *= outer * p.sign / z;
            }
            return;
        }
        for o in out.iter_mut() {
            *o = 0.0;
        }
        out[active] = sech2(best / self.scale) / self.scale * self.params[active].sign;
    }

    pub fn evaluate(&self, trace: &Trace, t: usize) -> Result<f64> {
        self.check_theta(&self.theta)?;
        let m = self.measure_at(trace, t)?;
        Ok(self.value_from_measure(&m, &self.theta).0)
    }

    pub fn evaluate_signal(&self, trace: &Trace) -> Result<PredicateSignal> {
        self.check_theta(&self.theta)?;
        let values = (0..trace.frames.len())
            .map(|t| {
                let m = self.measure_at(trace, t)?;
                Ok(self.value_from_measure(&m, &self.theta).0)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PredicateSignal { values })
    }

    pub fn param_gradient(&self, trace: &Trace, t: usize) -> Result<Vec<f64>> {
        self.check_theta(&self.theta)?;
        let m = self.measure_at(trace, t)?;
        let (_, k) = self.value_from_measure(&m, &self.theta);
        let mut g = alloc::vec![0.0; self.params.len()];
        self.gradient_at(&m, &self.theta, k, &mut g);
        Ok(g)
    }
}

/// 1 - tanh(x)^2 without the cancellation that zeroes it for large |x|.
#[inline]
fn sech2(x: f64) -> f64 {
    let e = math::exp(-2.0 * x.abs());
    4.0 * e / ((1.0 + e) * (1.0 + e))
}

/// Registry keyed by predicate id, iterated in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredicateRegistry {
    preds: Vec<PredicateDescriptor>,
    index: BTreeMap<String, usize>,
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, desc: PredicateDescriptor) -> Result<()> {
        if self.index.contains_key(&desc.id) {
            return Err(Error::Conflict(desc.id));
        }
        if matches!(desc.id.as_str(), "G" | "F" | "T" | "true" | "false") {
            return Err(invalid(format!("`{}` is a reserved word", desc.id)));
        }
        self.index.insert(desc.id.clone(), self.preds.len());
        self.preds.push(desc);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&PredicateDescriptor> {
        self.index.get(id).map(|&i| &self.preds[i])
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut PredicateDescriptor> {
        self.index.get(id).map(|&i| &mut self.preds[i])
    }

    pub fn require(&self, id: &str) -> Result<&PredicateDescriptor> {
        self.get(id).ok_or_else(|| Error::UnknownPredicate(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PredicateDescriptor> {
        self.preds.iter()
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.preds.iter().map(|p| p.id.clone()).collect()
    }

    pub fn kind_of(&self, id: &str) -> Option<PredicateKind> {
        self.get(id).map(|p| p.kind)
    }

    /// Descriptors for `ids`, in that order.
    pub fn subset(&self, ids: &[&str]) -> Result<Vec<PredicateDescriptor>> {
        ids.iter().map(|id| self.require(id).cloned()).collect()
    }
}

// ---------------------------------------------------------------------------
// Frame-level measurements

fn ego_now(trace: &Trace, t: usize) -> crate::trace::EgoPlanPoint {
    trace.frames[t].ego_plan[0]
}

/// Position of `p` in the ego frame: (ahead, left).
fn to_ego_frame(ego: &crate::trace::EgoPlanPoint, p: Point2) -> (f64, f64) {
    let d = p.sub(ego.pos());
    let (s, c) = (math::sin(ego.heading), math::cos(ego.heading));
    (d.x * c + d.y * s, -d.x * s + d.y * c)
}

fn collision_radius(e: Extent) -> f64 {
    0.5 * e.width + 0.5
}

/// Earliest time at which two discs moving at constant velocity touch,
/// capped at `ABSENT`.
fn disc_ttc(dp: Point2, dv: Point2, radius: f64) -> f64 {
    let c = dp.dot(dp) - radius * radius;
    if c <= 0.0 {
        return 0.0;
    }
    let a = dv.dot(dv);
    let b = 2.0 * dp.dot(dv);
    if a <= 1e-12 || b >= 0.0 {
        return ABSENT;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return ABSENT;
    }
    ((-b - math::sqrt(disc)) / (2.0 * a)).min(ABSENT)
}

fn measure_safe_ttc(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let frame = &trace.frames[t];
    let ego = ego_now(trace, t);
    let mut ttc = ABSENT;
    for agent in &frame.agents {
        let a = agent.points[0];
        let dp = a.pos().sub(ego.pos());
        let dv = a.velocity().sub(ego.velocity());
        let r = collision_radius(EGO_EXTENT) + collision_radius(agent.extent);
        ttc = ttc.min(disc_ttc(dp, dv, r));
    }
    out[0] = ttc;
    Ok(())
}

/// Longitudinal gap to the closest vehicle ahead in the ego lane, and that
/// vehicle's speed.
fn lead_vehicle(trace: &Trace, t: usize) -> Option<(f64, f64)> {
    let frame = &trace.frames[t];
    let ego = ego_now(trace, t);
    frame
        .agents
        .iter()
        .filter(|a| !a.is_vru())
        .filter_map(|a| {
            let (ahead, left) = to_ego_frame(&ego, a.points[0].pos());
            (ahead > 0.0 && left.abs() < 1.75).then_some((ahead, a.points[0].v))
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
}

fn measure_lead_vehicle(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    out[0] = -lead_vehicle(trace, t).map_or(ABSENT, |(gap, _)| gap.min(ABSENT));
    Ok(())
}

fn measure_slow_lead(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let ego = ego_now(trace, t);
    let limit = trace.frames[t]
        .map
        .nearest_lane(ego.pos())
        .map_or(ABSENT, |(i, _)| trace.frames[t].map.lanes[i].speed_limit);
    out[0] = match lead_vehicle(trace, t) {
        Some((gap, v)) if gap < 50.0 => limit - v,
        _ => -ABSENT,
    };
    Ok(())
}

fn ahead_distance(trace: &Trace, t: usize, pts: impl Iterator<Item = Point2>, lateral_window: f64) -> f64 {
    let ego = ego_now(trace, t);
    pts.filter_map(|p| {
        let (ahead, left) = to_ego_frame(&ego, p);
        (ahead > 0.0 && left.abs() < lateral_window).then_some(ahead)
    })
    .fold(ABSENT, f64::min)
}

fn measure_approaching_stop(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let map = &trace.frames[t].map;
    out[0] = -ahead_distance(trace, t, map.stop_points.iter().copied(), 3.0);
    Ok(())
}

fn measure_red_light(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let map = &trace.frames[t].map;
    let reds = map
        .traffic_lights
        .iter()
        .filter(|l| l.state == LightState::Red)
        .map(|l| l.position);
    out[0] = -ahead_distance(trace, t, reds, 6.0);
    Ok(())
}

fn lane_curvature_at(map: &crate::trace::MapContext, p: Point2) -> f64 {
    match map.nearest_lane(p) {
        Some((i, pr)) => {
            let lane = &map.lanes[i];
            let a = lane.curvature.get(pr.segment).copied().unwrap_or(0.0);
            let b = lane.curvature.get(pr.segment + 1).copied().unwrap_or(a);
            a.abs().max(b.abs())
        }
        None => 0.0,
    }
}

fn measure_curvature(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let frame = &trace.frames[t];
    out[0] = frame
        .ego_plan
        .iter()
        .map(|p| lane_curvature_at(&frame.map, p.pos()))
        .fold(0.0, f64::max);
    Ok(())
}

fn measure_agent_nearby(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let ego = ego_now(trace, t);
    let d = trace.frames[t]
        .agents
        .iter()
        .map(|a| a.points[0].pos().dist(ego.pos()))
        .fold(ABSENT, f64::min);
    out[0] = -d;
    Ok(())
}

fn measure_near_vru(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let ego = ego_now(trace, t);
    let d = trace.frames[t]
        .agents
        .iter()
        .filter(|a| a.is_vru())
        .map(|a| a.points[0].pos().dist(ego.pos()))
        .fold(ABSENT, f64::min);
    out[0] = -d;
    Ok(())
}

fn measure_in_intersection(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let ego = ego_now(trace, t);
    out[0] = trace.frames[t]
        .map
        .drivable
        .iter()
        .filter(|a| a.kind == AreaKind::Intersection)
        .map(|a| a.polygon.signed_distance(ego.pos()))
        .fold(-ABSENT, f64::max);
    Ok(())
}

fn measure_overtaking(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let ego = ego_now(trace, t);
    out[0] = trace.frames[t]
        .agents
        .iter()
        .filter(|a| !a.is_vru())
        .filter_map(|a| {
            let p = a.points[0];
            let (ahead, left) = to_ego_frame(&ego, p.pos());
            let adjacent = left.abs() >= 1.75 && left.abs() <= 5.25;
            (adjacent && ahead.abs() <= 15.0).then_some(ego.v - p.v)
        })
        .fold(-ABSENT, f64::max);
    Ok(())
}

fn measure_comfortable(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let k = derive_kinematics(&trace.frames[t].ego_plan, trace.dt())?;
    let maxima = k.directional_maxima();
    for i in 0..4 {
        out[i] = -maxima[i];
    }
    Ok(())
}

fn measure_in_drivable(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let frame = &trace.frames[t];
    out[0] = frame
        .ego_plan
        .iter()
        .map(|p| frame.map.drivable_margin(p.pos()))
        .fold(f64::INFINITY, f64::min)
        .clamp(-ABSENT, ABSENT);
    Ok(())
}

fn measure_speed_limit(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let frame = &trace.frames[t];
    out[0] = frame
        .ego_plan
        .iter()
        .map(|p| {
            let limit = frame
                .map
                .nearest_lane(p.pos())
                .map_or(ABSENT, |(i, _)| frame.map.lanes[i].speed_limit);
            limit - p.v
        })
        .fold(ABSENT, f64::min);
    Ok(())
}

fn measure_stopped(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    out[0] = -trace.frames[t]
        .ego_plan
        .iter()
        .map(|p| p.v)
        .fold(f64::INFINITY, f64::min);
    Ok(())
}

fn measure_in_lane(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let frame = &trace.frames[t];
    out[0] = -frame
        .ego_plan
        .iter()
        .map(|p| frame.map.nearest_lane(p.pos()).map_or(ABSENT, |(_, pr)| pr.distance))
        .fold(0.0, f64::max);
    Ok(())
}

fn measure_progress(trace: &Trace, t: usize, out: &mut [f64]) -> Result<()> {
    let plan = &trace.frames[t].ego_plan;
    out[0] = plan.windows(2).map(|w| w[0].pos().dist(w[1].pos())).sum();
    Ok(())
}

const fn param(name: &'static str, unit: &'static str, lower: f64, upper: f64, default: f64, sign: f64) -> ParamSpec {
    ParamSpec {
        name,
        unit,
        lower,
        upper,
        default,
        sign,
    }
}

/// Comfort margins are sharp (m/s^2) and blended so every direction keeps
/// a share of the gradient.
pub const COMFORT_SCALE: f64 = 0.1;
pub const COMFORT_BLEND: f64 = 0.05;

pub const CONDITION_IDS: [&str; 10] = [
    "SafeTTC",
    "LeadVehicleAhead",
    "ApproachingStop",
    "TrafficLightRed",
    "HighLaneCurvature",
    "AgentNearby",
    "InIntersection",
    "OvertakingContext",
    "SlowLeadVehicle",
    "NearVRU",
];

pub const ACTION_IDS: [&str; 6] = [
    "Comfortable",
    "InDrivable",
    "SpeedLimitCompliant",
    "Stopped",
    "InLane",
    "ProgressMade",
];

/// The builtin catalog: ten condition and six action predicates.
pub fn builtin_predicates() -> Vec<PredicateDescriptor> {
    use PredicateKind::{Action, Condition};
    fn v<const N: usize>(p: [ParamSpec; N]) -> Vec<ParamSpec> {
        p.to_vec()
    }
    alloc::vec![
        PredicateDescriptor::new(
            "SafeTTC",
            Condition,
            v([param("min_ttc", "s", 0.0, 10.0, 0.5, -1.0)]),
            1.0,
            "constant-velocity time-to-collision with every agent exceeds min_ttc",
            measure_safe_ttc,
        ),
        PredicateDescriptor::new(
            "LeadVehicleAhead",
            Condition,
            v([param("range", "m", 0.0, 100.0, 30.0, 1.0)]),
            5.0,
            "a vehicle is ahead in the ego lane within range",
            measure_lead_vehicle,
        ),
        PredicateDescriptor::new(
            "ApproachingStop",
            Condition,
            v([param("range", "m", 0.0, 100.0, 30.0, 1.0)]),
            5.0,
            "a stop point lies ahead within range",
            measure_approaching_stop,
        ),
        PredicateDescriptor::new(
            "TrafficLightRed",
            Condition,
            v([param("range", "m", 0.0, 100.0, 40.0, 1.0)]),
            5.0,
            "a red traffic light lies ahead within range",
            measure_red_light,
        ),
        PredicateDescriptor::new(
            "HighLaneCurvature",
            Condition,
            v([param("min_curvature", "1/m", 0.0, 1.0, 0.02, -1.0)]),
            0.01,
            "the lane under the plan curves more than min_curvature",
            measure_curvature,
        ),
        PredicateDescriptor::new(
            "AgentNearby",
            Condition,
            v([param("radius", "m", 0.0, 100.0, 10.0, 1.0)]),
            2.0,
            "some agent is within radius of the ego vehicle",
            measure_agent_nearby,
        ),
        PredicateDescriptor::new(
            "InIntersection",
            Condition,
            v([param("depth", "m", -10.0, 10.0, 0.0, -1.0)]),
            1.0,
            "the ego vehicle is inside an intersection polygon by more than depth",
            measure_in_intersection,
        ),
        PredicateDescriptor::new(
            "OvertakingContext",
            Condition,
            v([param("min_speed_gap", "m/s", -10.0, 10.0, 0.5, -1.0)]),
            1.0,
            "the ego vehicle passes a slower vehicle in an adjacent lane",
            measure_overtaking,
        ),
        PredicateDescriptor::new(
            "SlowLeadVehicle",
            Condition,
            v([param("min_deficit", "m/s", -10.0, 30.0, 2.0, -1.0)]),
            1.0,
            "the lead vehicle drives at least min_deficit below the speed limit",
            measure_slow_lead,
        ),
        PredicateDescriptor::new(
            "NearVRU",
            Condition,
            v([param("radius", "m", 0.0, 100.0, 15.0, 1.0)]),
            2.0,
            "a vulnerable road user is within radius",
            measure_near_vru,
        ),
        PredicateDescriptor::new(
            "Comfortable",
            Action,
            v([
                param("accel_forward", "m/s^2", 0.05, 10.0, 3.0, 1.0),
                param("accel_backward", "m/s^2", 0.05, 10.0, 3.0, 1.0),
                param("accel_left", "m/s^2", 0.05, 10.0, 3.0, 1.0),
                param("accel_right", "m/s^2", 0.05, 10.0, 3.0, 1.0),
            ]),
            COMFORT_SCALE,
            "every directional acceleration maximum of the plan stays below its threshold",
            measure_comfortable,
        )
        .with_blend(COMFORT_BLEND),
        PredicateDescriptor::new(
            "InDrivable",
            Action,
            v([param("min_margin", "m", -3.0, 5.0, 0.0, -1.0)]),
            1.0,
            "every plan point is inside the drivable area by at least min_margin",
            measure_in_drivable,
        ),
        PredicateDescriptor::new(
            "SpeedLimitCompliant",
            Action,
            v([param("tolerance", "m/s", -10.0, 10.0, 0.0, 1.0)]),
            1.0,
            "plan speed never exceeds the lane speed limit plus tolerance",
            measure_speed_limit,
        ),
        PredicateDescriptor::new(
            "Stopped",
            Action,
            v([param("max_speed", "m/s", 0.0, 10.0, 0.5, 1.0)]),
            1.0,
            "the plan slows below max_speed at some point",
            measure_stopped,
        ),
        PredicateDescriptor::new(
            "InLane",
            Action,
            v([param("max_offset", "m", 0.0, 10.0, 1.5, 1.0)]),
            0.5,
            "every plan point stays within max_offset of a lane centerline",
            measure_in_lane,
        ),
        PredicateDescriptor::new(
            "ProgressMade",
            Action,
            v([param("min_progress", "m", 0.0, 200.0, 1.0, -1.0)]),
            5.0,
            "the plan covers at least min_progress meters",
            measure_progress,
        ),
    ]
}

pub fn register_builtin_predicates() -> PredicateRegistry {
    let mut reg = PredicateRegistry::new();
    for p in builtin_predicates() {
        reg.register(p).expect("builtin ids are unique");
    }
    reg
}
