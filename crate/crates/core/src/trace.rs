//! Frames, traces and datasets.
//!
//! A [`Trace`] is a time-indexed sequence of [`Frame`]s sampled at a fixed
//! rate. Every frame carries the ego plan over the lookahead horizon, the
//! future tracks of the other agents over the same horizon, and a shared
//! [`MapContext`].

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;

use crate::error::{invalid, Result};
use crate::geometry::{Point2, Polygon};
use crate::math;

pub const SUPPORTED_RATES: [u32; 3] = [20, 10, 5];
pub const DEFAULT_HORIZON_S: f64 = 4.0;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EgoPlanPoint {
    pub x: f64,
    pub y: f64,
    /// Speed, m/s.
    pub v: f64,
    /// Heading, radians in (-pi, pi].
    pub heading: f64,
}

impl EgoPlanPoint {
    pub const fn new(x: f64, y: f64, v: f64, heading: f64) -> Self {
        Self { x, y, v, heading }
    }

    pub fn pos(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Point2 {
        Point2::new(self.v * math::cos(self.heading), self.v * math::sin(self.heading))
    }

    /// Constant-velocity extrapolation by `dt` seconds.
    pub fn advanced(&self, dt: f64) -> Self {
        let vel = self.velocity();
        Self::new(self.x + vel.x * dt, self.y + vel.y * dt, self.v, self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub length: f64,
    pub width: f64,
}

/// Vehicles shorter than this are treated as vulnerable road users.
pub const VRU_MAX_LENGTH: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentTrack {
    pub id: u32,
    pub points: Vec<EgoPlanPoint>,
    pub extent: Extent,
}

impl AgentTrack {
    pub fn is_vru(&self) -> bool {
        self.extent.length <= VRU_MAX_LENGTH
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaKind {
    Road,
    Intersection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivableArea {
    pub kind: AreaKind,
    pub polygon: Polygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub centerline: Vec<Point2>,
    /// m/s
    pub speed_limit: f64,
    /// One curvature sample (1/m) per centerline vertex.
    pub curvature: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LightState {
    Red,
    Yellow,
    Green,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficLight {
    pub position: Point2,
    pub state: LightState,
}

/// Polygon/polyline stand-in for an HD map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MapContext {
    pub drivable: Vec<DrivableArea>,
    pub lanes: Vec<Lane>,
    pub stop_points: Vec<Point2>,
    pub traffic_lights: Vec<TrafficLight>,
}

impl MapContext {
    /// Signed distance to the drivable area boundary (positive inside),
    /// taken as the best value over all drivable polygons.
    pub fn drivable_margin(&self, p: Point2) -> f64 {
        self.drivable
            .iter()
            .map(|a| a.polygon.signed_distance(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and projection of the lane whose centerline is closest to `p`.
    pub fn nearest_lane(&self, p: Point2) -> Option<(usize, crate::geometry::Projection)> {
        let mut best: Option<(usize, crate::geometry::Projection)> = None;
        for (i, lane) in self.lanes.iter().enumerate() {
            if let Some(pr) = crate::geometry::project_onto_polyline(p, &lane.centerline) {
                if best.is_none_or(|(_, b)| pr.distance < b.distance) {
                    best = Some((i, pr));
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub t_index: usize,
    pub ego_plan: Vec<EgoPlanPoint>,
    pub agents: Vec<AgentTrack>,
    pub map: Arc<MapContext>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub frames: Vec<Frame>,
    pub rate_hz: u32,
    pub horizon_s: f64,
}

/// Number of plan steps `T = rate * horizon`.
pub fn horizon_steps(rate_hz: u32, horizon_s: f64) -> usize {
    math::round(rate_hz as f64 * horizon_s) as usize
}

impl Trace {
    pub fn horizon_steps(&self) -> usize {
        horizon_steps(self.rate_hz, self.horizon_s)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz as f64
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn map(&self) -> Option<&Arc<MapContext>> {
        self.frames.first().map(|f| &f.map)
    }

    /// Builds the trace an executed candidate plan would produce: frame `k`
    /// sees the plan and the agent tracks advanced by `k` steps, padded at the
    /// end by constant-velocity extrapolation so every frame keeps `T + 1`
    /// points.
    pub fn from_plan(
        env: &Frame,
        plan: &[EgoPlanPoint],
        n_frames: usize,
        rate_hz: u32,
        horizon_s: f64,
    ) -> Result<Trace> {
        let steps = horizon_steps(rate_hz, horizon_s);
        if plan.is_empty() {
            return Err(invalid("empty plan"));
        }
        if n_frames == 0 {
            return Err(invalid("a trace needs at least one frame"));
        }
        let dt = 1.0 / rate_hz as f64;
        let frames = (0..n_frames)
            .map(|k| Frame {
                t_index: env.t_index + k,
                ego_plan: shifted_window(plan, k, steps + 1, dt),
                agents: env
                    .agents
                    .iter()
                    .map(|a| AgentTrack {
                        id: a.id,
                        points: shifted_window(&a.points, k, steps + 1, dt),
                        extent: a.extent,
                    })
                    .collect(),
                map: env.map.clone(),
            })
            .collect();
        Ok(Trace { frames, rate_hz, horizon_s })
    }
}

/// `points[start..]` extended to `len` entries by constant-velocity
/// extrapolation of the last point.
pub fn shifted_window(points: &[EgoPlanPoint], start: usize, len: usize, dt: f64) -> Vec<EgoPlanPoint> {
    let last = *points.last().expect("non-empty track");
    let mut out = Vec::with_capacity(len);
    for j in 0..len {
        let idx = start + j;
        if idx < points.len() {
            out.push(points[idx]);
        } else {
            let extra = (idx + 1 - points.len()) as f64;
            out.push(last.advanced(extra * dt));
        }
    }
    out
}

/// One invariant violation, naming the frame and field at fault.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub frame: usize,
    pub field: String,
    pub message: String,
}

fn check_point(out: &mut Vec<Violation>, frame: usize, field: &str, i: usize, p: &EgoPlanPoint) {
    let finite = p.x.is_finite() && p.y.is_finite() && p.v.is_finite() && p.heading.is_finite();
    if !finite {
        out.push(Violation {
            frame,
            field: format!("{field}[{i}]"),
            message: "non-finite value".into(),
        });
        return;
    }
    if p.v < 0.0 {
        out.push(Violation {
            frame,
            field: format!("{field}[{i}].v"),
            message: format!("negative speed {}", p.v),
        });
    }
    if !(p.heading > -PI && p.heading <= PI) {
        out.push(Violation {
            frame,
            field: format!("{field}[{i}].heading"),
            message: format!("heading {} outside (-pi, pi]", p.heading),
        });
    }
}

fn check_map(out: &mut Vec<Violation>, map: &MapContext) {
    for (i, area) in map.drivable.iter().enumerate() {
        if !area.polygon.is_simple() {
            out.push(Violation {
                frame: 0,
                field: format!("map.drivable[{i}]"),
                message: "polygon is not simple".into(),
            });
        }
    }
    for (i, lane) in map.lanes.iter().enumerate() {
        if !(lane.speed_limit > 0.0) {
            out.push(Violation {
                frame: 0,
                field: format!("map.lanes[{i}].speed_limit"),
                message: format!("speed limit {} must be positive", lane.speed_limit),
            });
        }
        if lane.centerline.len() < 2 {
            out.push(Violation {
                frame: 0,
                field: format!("map.lanes[{i}].centerline"),
                message: "centerline needs at least two points".into(),
            });
        }
        if lane.curvature.len() != lane.centerline.len() {
            out.push(Violation {
                frame: 0,
                field: format!("map.lanes[{i}].curvature"),
                message: "one curvature sample per centerline vertex expected".into(),
            });
        }
    }
}

/// Checks every trace invariant. An empty result means the trace is valid.
pub fn validate_trace(trace: &Trace) -> Vec<Violation> {
    let mut out = Vec::new();
    if !SUPPORTED_RATES.contains(&trace.rate_hz) {
        out.push(Violation {
            frame: 0,
            field: "rate_hz".into(),
            message: format!("unsupported rate {} Hz", trace.rate_hz),
        });
    }
    if !(trace.horizon_s > 0.0) {
        out.push(Violation {
            frame: 0,
            field: "horizon_s".into(),
            message: format!("horizon {} must be positive", trace.horizon_s),
        });
        return out;
    }
    let expected = trace.horizon_steps() + 1;
    if let Some(first) = trace.frames.first() {
        check_map(&mut out, &first.map);
    }
    let mut map_mismatch_reported = false;
    let mut prev_t: Option<usize> = None;
    for (fi, frame) in trace.frames.iter().enumerate() {
        if let Some(p) = prev_t {
            if frame.t_index <= p {
                out.push(Violation {
                    frame: fi,
                    field: "t".into(),
                    message: format!("t_index {} not increasing", frame.t_index),
                });
            }
        }
        prev_t = Some(frame.t_index);
        if frame.ego_plan.len() != expected {
            out.push(Violation {
                frame: fi,
                field: "ego_plan".into(),
                message: format!("length {} but horizon needs {}", frame.ego_plan.len(), expected),
            });
        }
        for (i, p) in frame.ego_plan.iter().enumerate() {
            check_point(&mut out, fi, "ego_plan", i, p);
        }
        for agent in &frame.agents {
            let field = format!("agents[{}]", agent.id);
            if agent.points.len() != expected {
                out.push(Violation {
                    frame: fi,
                    field: format!("{field}.points"),
                    message: format!("length {} but horizon needs {}", agent.points.len(), expected),
                });
            }
            if !(agent.extent.length > 0.0 && agent.extent.width > 0.0) {
                out.push(Violation {
                    frame: fi,
                    field: format!("{field}.extent"),
                    message: "extent must be positive".into(),
                });
            }
            for (i, p) in agent.points.iter().enumerate() {
                check_point(&mut out, fi, &format!("{field}.points"), i, p);
            }
        }
        if fi > 0 && !map_mismatch_reported {
            let first = &trace.frames[0].map;
            if !Arc::ptr_eq(first, &frame.map) && **first != *frame.map {
                out.push(Violation {
                    frame: fi,
                    field: "map".into(),
                    message: "frame refers to a different map context".into(),
                });
                map_mismatch_reported = true;
            }
        }
    }
    out
}

/// Decimates a trace to `target_hz`, keeping every `rate/target`-th frame,
/// plan point and agent point.
pub fn resample(trace: &Trace, target_hz: u32) -> Result<Trace> {
    if target_hz == 0 || trace.rate_hz % target_hz != 0 {
        return Err(invalid(format!(
            "{target_hz} Hz does not divide {} Hz",
            trace.rate_hz
        )));
    }
    let stride = (trace.rate_hz / target_hz) as usize;
    if stride == 1 {
        return Ok(trace.clone());
    }
    let decimate = |pts: &[EgoPlanPoint]| pts.iter().step_by(stride).copied().collect::<Vec<_>>();
    let frames = trace
        .frames
        .iter()
        .step_by(stride)
        .map(|f| Frame {
            t_index: f.t_index / stride,
            ego_plan: decimate(&f.ego_plan),
            agents: f
                .agents
                .iter()
                .map(|a| AgentTrack {
                    id: a.id,
                    points: decimate(&a.points),
                    extent: a.extent,
                })
                .collect(),
            map: f.map.clone(),
        })
        .collect();
    Ok(Trace {
        frames,
        rate_hz: target_hz,
        horizon_s: trace.horizon_s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub traces: Vec<Trace>,
    /// Fraction of traces assigned to training; the rest validate.
    pub train_fraction: f64,
}

impl Default for Dataset {
    fn default() -> Self {
        Self::new(Vec::new())
    }
}

impl Dataset {
    pub fn new(traces: Vec<Trace>) -> Self {
        Self {
            traces,
            train_fraction: DEFAULT_TRAIN_FRACTION,
        }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Seeded train/validation partition, returned as trace indices.
    pub fn split(&self, seed: u64) -> (Vec<usize>, Vec<usize>) {
        let mut idx: Vec<usize> = (0..self.traces.len()).collect();
        idx.shuffle(&mut crate::rng::derive(seed, 0x5917));
        let n_train = math::round(self.train_fraction * idx.len() as f64) as usize;
        let n_train = n_train.min(idx.len());
        let val = idx.split_off(n_train);
        (idx, val)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Straight road along +x, two lanes, ego driving at constant speed.
    pub fn straight_map() -> Arc<MapContext> {
        let line = |y: f64| Lane {
            centerline: alloc::vec![Point2::new(-50.0, y), Point2::new(250.0, y)],
            speed_limit: 13.9,
            curvature: alloc::vec![0.0, 0.0],
        };
        Arc::new(MapContext {
            drivable: alloc::vec![DrivableArea {
                kind: AreaKind::Road,
                polygon: Polygon::rect(-50.0, -1.75, 250.0, 5.25),
            }],
            lanes: alloc::vec![line(0.0), line(3.5)],
            stop_points: Vec::new(),
            traffic_lights: Vec::new(),
        })
    }

    pub fn constant_plan(x0: f64, y: f64, v: f64, n: usize, dt: f64) -> Vec<EgoPlanPoint> {
        (0..n)
            .map(|k| EgoPlanPoint::new(x0 + v * dt * k as f64, y, v, 0.0))
            .collect()
    }

    pub fn cruise_trace(n_frames: usize, rate_hz: u32) -> Trace {
        let steps = horizon_steps(rate_hz, DEFAULT_HORIZON_S);
        let dt = 1.0 / rate_hz as f64;
        let plan = constant_plan(0.0, 0.0, 10.0, steps + 1 + n_frames, dt);
        let env = Frame {
            t_index: 0,
            ego_plan: plan[..steps + 1].to_vec(),
            agents: Vec::new(),
            map: straight_map(),
        };
        Trace::from_plan(&env, &plan, n_frames, rate_hz, DEFAULT_HORIZON_S).unwrap()
    }
}
