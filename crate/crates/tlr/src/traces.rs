//! Line-delimited trace files.
//!
//! Every line after the optional header is one trace record:
//!
//! ```text
//! {"format":"tlr-traces","version":1}
//! {"rate_hz":20,"horizon_s":4.0,"map":{...},"frames":[{"t":0,"ego_plan":[[x,y,v,heading],...],"agents":[...]}]}
//! ```
//!
//! Points are `[x, y, v, heading]` arrays. Writing always emits the header and
//! the canonical compact form, so `write(parse(x)) == x` for canonical input.

use std::io::{BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use tlr_core::geometry::{Point2, Polygon};
use tlr_core::trace::{
    horizon_steps, validate_trace, AgentTrack, AreaKind, Dataset, DrivableArea, EgoPlanPoint, Extent, Frame, Lane,
    LightState, MapContext, TrafficLight, Trace,
};

use crate::error::{CliError, CliResult};
use crate::header::Header;

pub const TRACES_FORMAT: &str = "tlr-traces";
pub const TRACES_VERSION: u32 = 1;

type Pt = [f64; 2];
type Pose = [f64; 4];

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceRec {
    rate_hz: u32,
    horizon_s: f64,
    map: MapRec,
    frames: Vec<FrameRec>,
}

#[derive(Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct MapRec {
    #[serde(default)]
    drivable: Vec<AreaRec>,
    #[serde(default)]
    lanes: Vec<LaneRec>,
    #[serde(default)]
    stop_points: Vec<Pt>,
    #[serde(default)]
    traffic_lights: Vec<LightRec>,
}

#[derive(Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct AreaRec {
    kind: AreaKindRec,
    polygon: Vec<Pt>,
}

#[derive(Serialize, Deserialize, PartialEq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum AreaKindRec {
    Road,
    Intersection,
}

#[derive(Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct LaneRec {
    centerline: Vec<Pt>,
    speed_limit: f64,
    curvature: Vec<f64>,
}

#[derive(Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct LightRec {
    position: Pt,
    state: LightStateRec,
}

#[derive(Serialize, Deserialize, PartialEq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum LightStateRec {
    Red,
    Yellow,
    Green,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRec {
    t: usize,
    ego_plan: Vec<Pose>,
    #[serde(default)]
    agents: Vec<AgentRec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentRec {
    id: u32,
    extent: [f64; 2],
    points: Vec<Pose>,
}

fn pose(p: &Pose) -> EgoPlanPoint {
    EgoPlanPoint::new(p[0], p[1], p[2], p[3])
}

fn pose_rec(p: &EgoPlanPoint) -> Pose {
    [p.x, p.y, p.v, p.heading]
}

fn pt(p: &Pt) -> Point2 {
    Point2::new(p[0], p[1])
}

fn pt_rec(p: &Point2) -> Pt {
    [p.x, p.y]
}

impl MapRec {
    fn from_map(m: &MapContext) -> Self {
        Self {
            drivable: m
                .drivable
                .iter()
                .map(|a| AreaRec {
                    kind: match a.kind {
                        AreaKind::Road => AreaKindRec::Road,
                        AreaKind::Intersection => AreaKindRec::Intersection,
                    },
                    polygon: a.polygon.vertices.iter().map(pt_rec).collect(),
                })
                .collect(),
            lanes: m
                .lanes
                .iter()
                .map(|l| LaneRec {
                    centerline: l.centerline.iter().map(pt_rec).collect(),
                    speed_limit: l.speed_limit,
                    curvature: l.curvature.clone(),
                })
                .collect(),
            stop_points: m.stop_points.iter().map(pt_rec).collect(),
            traffic_lights: m
                .traffic_lights
                .iter()
                .map(|l| LightRec {
                    position: pt_rec(&l.position),
                    state: match l.state {
                        LightState::Red => LightStateRec::Red,
                        LightState::Yellow => LightStateRec::Yellow,
                        LightState::Green => LightStateRec::Green,
                    },
                })
                .collect(),
        }
    }

    fn to_map(&self) -> MapContext {
        MapContext {
            drivable: self
                .drivable
                .iter()
                .map(|a| DrivableArea {
                    kind: match a.kind {
                        AreaKindRec::Road => AreaKind::Road,
                        AreaKindRec::Intersection => AreaKind::Intersection,
                    },
                    polygon: Polygon::new(a.polygon.iter().map(pt).collect()),
                })
                .collect(),
            lanes: self
                .lanes
                .iter()
                .map(|l| Lane {
                    centerline: l.centerline.iter().map(pt).collect(),
                    speed_limit: l.speed_limit,
                    curvature: l.curvature.clone(),
                })
                .collect(),
            stop_points: self.stop_points.iter().map(pt).collect(),
            traffic_lights: self
                .traffic_lights
                .iter()
                .map(|l| TrafficLight {
                    position: pt(&l.position),
                    state: match l.state {
                        LightStateRec::Red => LightState::Red,
                        LightStateRec::Yellow => LightState::Yellow,
                        LightStateRec::Green => LightState::Green,
                    },
                })
                .collect(),
        }
    }
}

fn to_trace(rec: TraceRec, line: usize, validate: bool) -> CliResult<Trace> {
    let steps = horizon_steps(rec.rate_hz, rec.horizon_s);
    for (i, f) in rec.frames.iter().enumerate() {
        if f.ego_plan.len() != steps + 1 {
            return Err(CliError::input(format!(
                "line {line}: frame {i}: ego_plan has {} points, horizon needs {}",
                f.ego_plan.len(),
                steps + 1
            )));
        }
        if let Some(a) = f.agents.iter().find(|a| a.points.len() != steps + 1) {
            return Err(CliError::input(format!(
                "line {line}: frame {i}: agent {} has {} points, horizon needs {}",
                a.id,
                a.points.len(),
                steps + 1
            )));
        }
    }
    let map = Arc::new(rec.map.to_map());
    let frames = rec
        .frames
        .into_iter()
        .map(|f| Frame {
            t_index: f.t,
            ego_plan: f.ego_plan.iter().map(pose).collect(),
            agents: f
                .agents
                .into_iter()
                .map(|a| AgentTrack {
                    id: a.id,
                    points: a.points.iter().map(pose).collect(),
                    extent: Extent {
                        length: a.extent[0],
                        width: a.extent[1],
                    },
                })
                .collect(),
            map: map.clone(),
        })
        .collect();
    let trace = Trace {
        frames,
        rate_hz: rec.rate_hz,
        horizon_s: rec.horizon_s,
    };
    if !validate {
        return Ok(trace);
    }
    if let Some(v) = validate_trace(&trace).first() {
        return Err(CliError::input(format!(
            "line {line}: frame {}: {}: {}",
            v.frame, v.field, v.message
        )));
    }
    Ok(trace)
}

fn to_rec(trace: &Trace) -> CliResult<TraceRec> {
    let map = trace
        .map()
        .ok_or_else(|| CliError::input("cannot write a trace without frames"))?;
    let frames = trace
        .frames
        .iter()
        .map(|f| FrameRec {
            t: f.t_index,
            ego_plan: f.ego_plan.iter().map(pose_rec).collect(),
            agents: f
                .agents
                .iter()
                .map(|a| AgentRec {
                    id: a.id,
                    extent: [a.extent.length, a.extent.width],
                    points: a.points.iter().map(pose_rec).collect(),
                })
                .collect(),
        })
        .collect();
    Ok(TraceRec {
        rate_hz: trace.rate_hz,
        horizon_s: trace.horizon_s,
        map: MapRec::from_map(map),
        frames,
    })
}

/// Parses a trace file. Blank lines are skipped; a header line, if present,
/// must come first. Every trace is validated.
pub fn parse_traces(reader: impl BufRead) -> CliResult<Dataset> {
    parse_traces_with(reader, true)
}

/// Like [`parse_traces`], optionally checking only the record structure
/// (fields, horizon lengths) and leaving invariant checks to the caller.
pub fn parse_traces_with(reader: impl BufRead, validate: bool) -> CliResult<Dataset> {
    let mut traces = Vec::new();
    let mut first = true;
    for (i, line) in reader.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| CliError::input(format!("line {n}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        if first {
            first = false;
            if let Some(h) = Header::detect(&line) {
                h.expect(TRACES_FORMAT, TRACES_VERSION).map_err(|e| CliError::input(format!("line {n}: {e}")))?;
                continue;
            }
        }
        let rec: TraceRec =
            serde_json::from_str(&line).map_err(|e| CliError::input(format!("line {n}: {e}")))?;
        traces.push(to_trace(rec, n, validate)?);
    }
    Ok(Dataset::new(traces))
}

pub fn write_traces(mut out: impl Write, traces: &[Trace]) -> CliResult<()> {
    Header::new(TRACES_FORMAT, TRACES_VERSION).write(&mut out)?;
    for t in traces {
        serde_json::to_writer(&mut out, &to_rec(t)?).map_err(CliError::internal)?;
        out.write_all(b"\n").map_err(CliError::internal)?;
    }
    Ok(())
}

pub fn traces_to_string(traces: &[Trace]) -> CliResult<String> {
    let mut buf = Vec::new();
    write_traces(&mut buf, traces)?;
    String::from_utf8(buf).map_err(CliError::internal)
}

pub fn read_traces_file(path: &std::path::Path, validate: bool) -> CliResult<Dataset> {
    let f = std::fs::File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    parse_traces_with(std::io::BufReader::new(f), validate).map_err(|e| e.context(path.display()))
}
