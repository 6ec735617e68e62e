//! Reference paths built from straight and circular pieces, with exact
//! poses so rolled-out plans carry no discretization noise.

use alloc::vec::Vec;

use crate::geometry::Point2;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    Line { length: f64 },
    /// Signed curvature: positive turns left.
    Arc { curvature: f64, length: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match *self {
            Piece::Line { length } | Piece::Arc { length, .. } => length,
        }
    }

    fn curvature(&self) -> f64 {
        match *self {
            Piece::Line { .. } => 0.0,
            Piece::Arc { curvature, .. } => curvature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub pos: Point2,
    pub heading: f64,
    pub curvature: f64,
}

impl Pose {
    pub fn normal(&self) -> Point2 {
        Point2::new(-math::sin(self.heading), math::cos(self.heading))
    }

    pub fn tangent(&self) -> Point2 {
        Point2::new(math::cos(self.heading), math::sin(self.heading))
    }
}

/// A chain of pieces starting at a given pose. Stations before zero and past
/// the end continue along straight tangent extensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pieces: Vec<Piece>,
    starts: Vec<Pose>,
    stations: Vec<f64>,
    length: f64,
}

impl Path {
    pub fn new(origin: Point2, heading: f64, pieces: Vec<Piece>) -> Self {
        let mut starts = Vec::with_capacity(pieces.len() + 1);
        let mut stations = Vec::with_capacity(pieces.len() + 1);
        let mut pose = Pose {
            pos: origin,
            heading,
            curvature: 0.0,
        };
        let mut s = 0.0;
        for p in &pieces {
            pose.curvature = p.curvature();
            starts.push(pose);
            stations.push(s);
            pose = advance(pose, p.length());
            s += p.length();
        }
        pose.curvature = 0.0;
        starts.push(pose);
        stations.push(s);
        Self {
            pieces,
            starts,
            stations,
            length: s,
        }
    }

    pub fn straight(origin: Point2, heading: f64, length: f64) -> Self {
        Self::new(origin, heading, alloc::vec![Piece::Line { length }])
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    fn piece_at(&self, s: f64) -> usize {
        let n = self.pieces.len();
        (0..n).rev().find(|&i| s >= self.stations[i]).unwrap_or(0)
    }

    /// Pose on the centerline at station `s`.
    pub fn pose(&self, s: f64) -> Pose {
        if s < 0.0 || self.pieces.is_empty() {
            let start = Pose {
                curvature: 0.0,
                ..self.starts[0]
            };
            return advance(start, s);
        }
        if s >= self.length {
            return advance(*self.starts.last().unwrap(), s - self.length);
        }
        let i = self.piece_at(s);
        let mut pose = advance(self.starts[i], s - self.stations[i]);
        pose.curvature = self.pieces[i].curvature();
        pose
    }

    /// Point at station `s`, offset `d` to the left.
    pub fn point(&self, s: f64, d: f64) -> Point2 {
        let pose = self.pose(s);
        pose.pos.add(pose.normal().scale(d))
    }

    /// Station and signed left offset of the closest point.
    pub fn project(&self, p: Point2) -> (f64, f64) {
        let n = self.pieces.len();
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..n {
            let start = self.starts[i];
            let len = self.pieces[i].length();
            let lo = if i == 0 { f64::NEG_INFINITY } else { 0.0 };
            let hi = if i + 1 == n { f64::INFINITY } else { len };
            let u = match self.pieces[i] {
                Piece::Line { .. } => p.sub(start.pos).dot(start.tangent()),
                Piece::Arc { curvature, .. } => {
                    let center = start.pos.add(start.normal().scale(1.0 / curvature));
                    let r = p.sub(center);
                    // heading of the tangent at the closest point on the circle
                    let phi = math::atan2(r.y, r.x);
                    let h = if curvature > 0.0 {
                        phi + core::f64::consts::FRAC_PI_2
                    } else {
                        phi - core::f64::consts::FRAC_PI_2
                    };
                    let turn = math::wrap_angle(h - start.heading);
                    let u = turn / curvature;
                    // the circle wraps; keep the closer of the two ends when outside
                    if u < 0.0 || u > len {
                        let d0 = p.dist(start.pos);
                        let d1 = p.dist(self.starts[i + 1].pos);
                        if d0 <= d1 {
                            0.0
                        } else {
                            len
                        }
                    } else {
                        u
                    }
                }
            };
            let u = u.clamp(lo, hi);
            let s = self.stations[i] + u;
            let pose = self.pose(s);
            let delta = p.sub(pose.pos);
            let dist = delta.norm();
            if dist < best.0 {
                best = (dist, s, delta.dot(pose.normal()));
            }
        }
        if n == 0 {
            let start = self.starts[0];
            let delta = p.sub(start.pos);
            return (delta.dot(start.tangent()), delta.dot(start.normal()));
        }
        (best.1, best.2)
    }

    /// Offset curve sampled as a polyline: lines contribute their endpoints,
    /// arcs a vertex every `step` meters. Returns vertices and the curvature
    /// of the offset curve at each one.
    pub fn polyline(&self, d: f64, s0: f64, s1: f64, step: f64) -> (Vec<Point2>, Vec<f64>) {
        let mut pts = Vec::new();
        let mut curv = Vec::new();
        let mut push = |s: f64, k: f64| {
            pts.push(self.point(s, d));
            curv.push(k / (1.0 - k * d));
        };
        push(s0, self.pose(s0).curvature);
        for (i, piece) in self.pieces.iter().enumerate() {
            let a = self.stations[i].max(s0);
            let b = self.stations[i + 1].min(s1);
            if b <= a {
                continue;
            }
            let k = piece.curvature();
            if k != 0.0 {
                let n = math::ceil((b - a) / step).max(1.0) as usize;
                for j in 0..n {
                    push(a + (b - a) * j as f64 / n as f64, k);
                }
            }
            push(b, k);
        }
        push(s1, 0.0);
        dedup(&mut pts, &mut curv);
        (pts, curv)
    }
}

fn dedup(pts: &mut Vec<Point2>, curv: &mut Vec<f64>) {
    let mut i = 1;
    while i < pts.len() {
        if pts[i].dist(pts[i - 1]) < 1e-9 {
            pts.remove(i);
            let k = curv.remove(i);
            if k != 0.0 {
                curv[i - 1] = k;
            }
        } else {
            i += 1;
        }
    }
}

fn advance(pose: Pose, u: f64) -> Pose {
    let k = pose.curvature;
    if k == 0.0 {
        return Pose {
            pos: pose.pos.add(pose.tangent().scale(u)),
            ..pose
        };
    }
    let center = pose.pos.add(pose.normal().scale(1.0 / k));
    let heading = pose.heading + k * u;
    let normal = Point2::new(-math::sin(heading), math::cos(heading));
    Pose {
        pos: center.sub(normal.scale(1.0 / k)),
        heading: math::wrap_angle(heading),
        curvature: k,
    }
}
