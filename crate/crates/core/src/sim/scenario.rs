//! Scenario families and their deterministic generation.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;
use core::fmt;
use core::str::FromStr;

use rand::Rng as _;

use super::path::{Path, Piece};
use crate::error::{invalid, Error};
use crate::geometry::{Point2, Polygon};
use crate::predicates::EGO_EXTENT;
use crate::rng;
use crate::trace::{
    AgentTrack, AreaKind, DrivableArea, EgoPlanPoint, Extent, Frame, Lane, LightState, MapContext, TrafficLight,
};

pub const LANE_WIDTH: f64 = 3.5;
pub const CAR: Extent = Extent {
    length: 4.5,
    width: 1.9,
};
pub const PEDESTRIAN: Extent = Extent {
    length: 0.6,
    width: 0.6,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioKind {
    Following,
    Stopping,
    Turn,
    ChangeLane,
    NearStatic,
    Stationary,
    Starting,
    Traversing,
    NearVru,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::Following,
        ScenarioKind::Stopping,
        ScenarioKind::Turn,
        ScenarioKind::ChangeLane,
        ScenarioKind::NearStatic,
        ScenarioKind::Stationary,
        ScenarioKind::Starting,
        ScenarioKind::Traversing,
        ScenarioKind::NearVru,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Following => "following",
            ScenarioKind::Stopping => "stopping",
            ScenarioKind::Turn => "turn",
            ScenarioKind::ChangeLane => "change_lane",
            ScenarioKind::NearStatic => "near_static",
            ScenarioKind::Stationary => "stationary",
            ScenarioKind::Starting => "starting",
            ScenarioKind::Traversing => "traversing",
            ScenarioKind::NearVru => "near_vru",
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown scenario kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        Self { kind, seed }
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind, self.seed)
    }
}

/// A non-reactive agent: it follows a path at an offset with a scripted
/// speed profile (piecewise constant acceleration, never reversing).
#[derive(Debug, Clone, PartialEq)]
pub struct AgentScript {
    pub id: u32,
    pub path: Path,
    pub offset: f64,
    pub s0: f64,
    pub v0: f64,
    /// `(start time, acceleration)` events in increasing time order.
    pub events: Vec<(f64, f64)>,
    pub v_max: f64,
    pub extent: Extent,
}

impl AgentScript {
    fn acceleration(&self, t: f64) -> f64 {
        self.events.iter().take_while(|e| e.0 <= t).last().map_or(0.0, |e| e.1)
    }

    /// Station and speed at each of `len` steps starting at step `k0`.
    fn motion(&self, k0: usize, len: usize, dt: f64) -> Vec<(f64, f64)> {
        let (mut s, mut v) = (self.s0, self.v0);
        let mut out = Vec::with_capacity(len);
        for k in 0..k0 + len {
            if k >= k0 {
                out.push((s, v));
            }
            let a = self.acceleration(k as f64 * dt);
            (s, v) = integrate(s, v, a, dt, self.v_max);
        }
        out
    }

    pub fn points(&self, k0: usize, len: usize, dt: f64) -> Vec<EgoPlanPoint> {
        self.motion(k0, len, dt)
            .into_iter()
            .map(|(s, v)| {
                let pose = self.path.pose(s);
                let p = pose.pos.add(pose.normal().scale(self.offset));
                EgoPlanPoint::new(p.x, p.y, v, pose.heading)
            })
            .collect()
    }

    pub fn track(&self, k0: usize, len: usize, dt: f64) -> AgentTrack {
        AgentTrack {
            id: self.id,
            points: self.points(k0, len, dt),
            extent: self.extent,
        }
    }
}

/// Exact constant-acceleration step with the speed held in `[0, v_max]`.
pub fn integrate(s: f64, v: f64, a: f64, dt: f64, v_max: f64) -> (f64, f64) {
    let v1 = v + a * dt;
    if v1 < 0.0 {
        let t_stop = if a < 0.0 { v / -a } else { 0.0 };
        return (s + v * t_stop / 2.0, 0.0);
    }
    if v1 > v_max && a > 0.0 {
        let t_cap = ((v_max - v) / a).max(0.0);
        let s_cap = s + (v + v_max) / 2.0 * t_cap;
        return (s_cap + v_max * (dt - t_cap), v_max);
    }
    (s + (v + v1) / 2.0 * dt, v1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: ScenarioSpec,
    pub map: Arc<MapContext>,
    /// The ego route; lane centers sit at `lane_offsets` from it.
    pub route: Path,
    pub lane_offsets: Vec<f64>,
    pub speed_limit: f64,
    pub ego: EgoPlanPoint,
    pub agents: Vec<AgentScript>,
    pub rate_hz: u32,
}

impl Scenario {
    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz as f64
    }

    /// Environment at step `k` with agent windows of `len` points.
    pub fn frame_at(&self, k: usize, ego_plan: Vec<EgoPlanPoint>, len: usize) -> Frame {
        Frame {
            t_index: k,
            ego_plan,
            agents: self.agents.iter().map(|a| a.track(k, len, self.dt())).collect(),
            map: self.map.clone(),
        }
    }

    /// The initial frame, holding a constant-speed lane-keeping plan.
    pub fn initial_frame(&self, steps: usize) -> Frame {
        let plan = super::proposer::zero_action(self, &self.ego, steps + 1);
        self.frame_at(0, plan, steps + 1)
    }
}

struct Builder<'a> {
    rng: &'a mut rng::Rng,
    agents: Vec<AgentScript>,
}

impl Builder<'_> {
    fn u(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn car(&mut self, path: &Path, offset: f64, s0: f64, v0: f64, events: Vec<(f64, f64)>, v_max: f64) {
        self.agents.push(AgentScript {
            id: self.agents.len() as u32 + 1,
            path: path.clone(),
            offset,
            s0,
            v0,
            events,
            v_max,
            extent: CAR,
        });
    }
}

const ROAD_START: f64 = -100.0;
const ROAD_LENGTH: f64 = 800.0;

fn two_lane_map(route: &Path, speed_limit: f64) -> MapContext {
    let len = route.length();
    let right = route.polyline(-LANE_WIDTH / 2.0, 0.0, len, 2.0).0;
    let mut left = route.polyline(1.5 * LANE_WIDTH, 0.0, len, 2.0).0;
    left.reverse();
    let mut boundary = right;
    boundary.extend(left);
    let lanes = [0.0, LANE_WIDTH]
        .iter()
        .map(|&d| {
            let (centerline, curvature) = route.polyline(d, 0.0, len, 2.0);
            Lane {
                centerline,
                speed_limit,
                curvature,
            }
        })
        .collect();
    MapContext {
        drivable: vec![DrivableArea {
            kind: AreaKind::Road,
            polygon: Polygon::new(boundary),
        }],
        lanes,
        stop_points: Vec::new(),
        traffic_lights: Vec::new(),
    }
}

fn straight_route() -> Path {
    Path::straight(Point2::new(ROAD_START, 0.0), 0.0, ROAD_LENGTH)
}

/// Builds the scene for `spec`; the same spec always yields the same scene.
pub fn generate_scenario(spec: ScenarioSpec) -> Scenario {
    let mut r = rng::derive(spec.seed, 0x5CE0 + spec.kind.stream());
    let mut b = Builder {
        rng: &mut r,
        agents: Vec::new(),
    };
    let limit = b.u(10.0, 16.0);
    let mut route = straight_route();
    let mut v0;
    let mut stops = Vec::new();
    let mut lights = Vec::new();
    let mut extra_areas = Vec::new();
    let lane1 = LANE_WIDTH;
    match spec.kind {
        ScenarioKind::Following => {
            let v_lead = limit * b.u(0.5, 0.9);
            v0 = (v_lead + b.u(-2.0, 3.0)).max(0.0);
            let gap = b.u(12.0, 40.0);
            let events = if b.chance(0.35) {
                vec![(b.u(0.3, 2.0), b.u(-6.0, -3.0))]
            } else {
                vec![(b.u(0.0, 3.0), b.u(-0.5, 0.5))]
            };
            b.car(&route, 0.0, -ROAD_START + gap, v_lead, events, limit);
            if b.chance(0.5) {
                let s = -ROAD_START + b.u(-30.0, 60.0);
                let v = limit * b.u(0.6, 1.0);
                b.car(&route, lane1, s, v, vec![], limit);
            }
        }
        ScenarioKind::Stopping => {
            v0 = b.u(5.0, 12.0);
            let x_stop = v0 * v0 / 5.0 + b.u(8.0, 35.0);
            stops.push(Point2::new(x_stop, 0.0));
            if b.chance(0.5) {
                lights.push(TrafficLight {
                    position: Point2::new(x_stop + 1.0, -LANE_WIDTH / 2.0 - 0.5),
                    state: LightState::Red,
                });
            }
        }
        ScenarioKind::Turn => {
            v0 = b.u(3.0, 6.5);
            let lead_in = b.u(5.0, 30.0) - ROAD_START;
            let radius = b.u(20.0, 40.0);
            let k = if b.chance(0.5) { 1.0 } else { -1.0 } / radius;
            route = Path::new(
                Point2::new(ROAD_START, 0.0),
                0.0,
                vec![
                    Piece::Line { length: lead_in },
                    Piece::Arc {
                        curvature: k,
                        length: radius * FRAC_PI_2,
                    },
                    Piece::Line { length: 300.0 },
                ],
            );
            if b.chance(0.4) {
                let s = lead_in + b.u(20.0, 60.0);
                let v = b.u(4.0, 8.0);
                b.car(&route, 0.0, s, v, vec![], limit);
            }
        }
        ScenarioKind::ChangeLane => {
            v0 = limit * b.u(0.8, 1.15);
            let gap = b.u(15.0, 30.0);
            let v = limit * b.u(0.4, 0.6);
            b.car(&route, 0.0, -ROAD_START + gap, v, vec![], limit);
            if b.chance(0.6) {
                let ahead = b.u(6.0, 14.0);
                let v = (v0 - b.u(1.0, 4.0)).max(1.0);
                b.car(&route, lane1, -ROAD_START + ahead, v, vec![], limit);
            }
        }
        ScenarioKind::NearStatic => {
            v0 = limit * b.u(0.5, 0.9);
            let x = b.u(15.0, 50.0);
            let offset = if b.chance(0.5) { lane1 } else { lane1 + b.u(0.0, 0.6) };
            b.car(&route, offset, -ROAD_START + x, 0.0, vec![], limit);
        }
        ScenarioKind::Stationary => {
            v0 = 0.0;
            let x = b.u(4.0, 8.0);
            stops.push(Point2::new(x, 0.0));
            lights.push(TrafficLight {
                position: Point2::new(x + 1.0, -LANE_WIDTH / 2.0 - 0.5),
                state: LightState::Red,
            });
            if b.chance(0.5) {
                let x = b.u(-6.0, 6.0);
                b.car(&route, lane1, -ROAD_START + x, 0.0, vec![], limit);
            }
        }
        ScenarioKind::Starting => {
            v0 = 0.0;
            if b.chance(0.7) {
                let gap = b.u(7.0, 12.0);
                let a = b.u(1.0, 2.0);
                let t = b.u(0.0, 1.0);
                b.car(&route, 0.0, -ROAD_START + gap, 0.0, vec![(t, a)], limit);
            }
        }
        ScenarioKind::Traversing => {
            v0 = b.u(5.0, 12.0);
            let xc = b.u(20.0, 60.0);
            let half = LANE_WIDTH;
            extra_areas.push(DrivableArea {
                kind: AreaKind::Road,
                polygon: Polygon::rect(xc - half, -80.0, xc + half, 80.0),
            });
            extra_areas.push(DrivableArea {
                kind: AreaKind::Intersection,
                polygon: Polygon::rect(xc - half, -LANE_WIDTH / 2.0, xc + half, 1.5 * LANE_WIDTH),
            });
            if b.chance(0.6) {
                let cross = Path::straight(Point2::new(xc + LANE_WIDTH / 2.0, -80.0), FRAC_PI_2, 160.0);
                let s = b.u(0.0, 25.0);
                let v = b.u(4.0, 9.0);
                b.car(&cross, 0.0, s, v, vec![], limit);
            }
        }
        ScenarioKind::NearVru => {
            v0 = b.u(4.0, 10.0);
            let x = b.u(10.0, 40.0);
            let (origin, heading, speed) = if b.chance(0.5) {
                (Point2::new(x, -LANE_WIDTH / 2.0 - b.u(0.4, 1.2)), 0.0, b.u(0.8, 1.6))
            } else {
                (Point2::new(x + 20.0, -LANE_WIDTH / 2.0 - 3.0), FRAC_PI_2, b.u(0.5, 1.0))
            };
            let path = Path::straight(origin, heading, 200.0);
            b.agents.push(AgentScript {
                id: b.agents.len() as u32 + 1,
                path,
                offset: 0.0,
                s0: 0.0,
                v0: speed,
                events: vec![],
                v_max: 2.0,
                extent: PEDESTRIAN,
            });
        }
    }
    if spec.kind == ScenarioKind::Stationary || spec.kind == ScenarioKind::Starting {
        v0 = 0.0;
    }
    let agents = b.agents;
    let mut map = two_lane_map(&route, limit);
    map.drivable.extend(extra_areas);
    map.stop_points = stops;
    map.traffic_lights = lights;
    let s_ego = -ROAD_START;
    let pose = route.pose(s_ego);
    let ego = EgoPlanPoint::new(pose.pos.x, pose.pos.y, v0, pose.heading);
    Scenario {
        spec,
        map: Arc::new(map),
        route,
        lane_offsets: vec![0.0, LANE_WIDTH],
        speed_limit: limit,
        ego,
        agents,
        rate_hz: 20,
    }
}

/// Ego and agent boxes overlap at step `k`.
pub fn collides(ego: &EgoPlanPoint, agents: &[AgentTrack], j: usize) -> bool {
    agents.iter().any(|a| {
        let p = a.points[j.min(a.points.len() - 1)];
        crate::geometry::boxes_overlap(
            ego.pos(),
            ego.heading,
            EGO_EXTENT.length,
            EGO_EXTENT.width,
            p.pos(),
            p.heading,
            a.extent.length,
            a.extent.width,
        )
    })
}
