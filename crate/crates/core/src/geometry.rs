//! Planar primitives backing the map queries: point-in-polygon, distance to a
//! polygon boundary and projection onto polylines.

use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }
}

/// Closed polygon given by its vertices (the closing edge is implicit).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    /// Axis-aligned rectangle.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(alloc::vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Even-odd rule point containment.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance to the boundary, positive inside and negative outside.
    pub fn signed_distance(&self, p: Point2) -> f64 {
        let d = self.boundary_distance(p);
        if self.contains(p) {
            d
        } else {
            -d
        }
    }

    /// True when no two non-adjacent edges intersect.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<(Point2, Point2)> = self.edges().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return false;
                }
            }
        }
        true
    }
}

pub fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(a.add(ab.scale(t)))
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

pub fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point2, b: Point2, c: Point2, d: f64| {
        d == 0.0
            && c.x >= a.x.min(b.x)
            && c.x <= a.x.max(b.x)
            && c.y >= a.y.min(b.y)
            && c.y <= a.y.max(b.y)
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Unsigned distance to the polyline.
    pub distance: f64,
    /// Signed lateral offset, positive to the left of the travel direction.
    pub lateral: f64,
    /// Arc length of the foot point from the first vertex.
    pub station: f64,
    /// Index of the segment holding the foot point.
    pub segment: usize,
    /// Travel direction at the foot point, radians.
    pub heading: f64,
}

pub fn project_onto_polyline(p: Point2, line: &[Point2]) -> Option<Projection> {
    if line.len() < 2 {
        return None;
    }
    let mut best: Option<Projection> = None;
    let mut station0 = 0.0;
    for i in 0..line.len() - 1 {
        let a = line[i];
        let b = line[i + 1];
        let ab = b.sub(a);
        let len2 = ab.dot(ab);
        let len = math::sqrt(len2);
        let t = if len2 > 0.0 {
            (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let foot = a.add(ab.scale(t));
        let d = p.dist(foot);
        if best.is_none_or(|b| d < b.distance) {
            let side = ab.cross(p.sub(a));
            best = Some(Projection {
                distance: d,
                lateral: if side >= 0.0 { d } else { -d },
                station: station0 + t * len,
                segment: i,
                heading: math::atan2(ab.y, ab.x),
            });
        }
        station0 += len;
    }
    best
}

pub fn polyline_length(line: &[Point2]) -> f64 {
    line.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Oriented rectangle overlap test (separating axis theorem).
pub fn boxes_overlap(
    c1: Point2,
    h1: f64,
    len1: f64,
    wid1: f64,
    c2: Point2,
    h2: f64,
    len2: f64,
    wid2: f64,
) -> bool {
    let corners = |c: Point2, h: f64, l: f64, w: f64| {
        let (s, co) = (math::sin(h), math::cos(h));
        let f = Point2::new(co, s).scale(l / 2.0);
        let n = Point2::new(-s, co).scale(w / 2.0);
        [
            c.add(f).add(n),
            c.add(f).sub(n),
            c.sub(f).sub(n),
            c.sub(f).add(n),
        ]
    };
    let a = corners(c1, h1, len1, wid1);
    let b = corners(c2, h2, len2, wid2);
    let axes = [
        Point2::new(math::cos(h1), math::sin(h1)),
        Point2::new(-math::sin(h1), math::cos(h1)),
        Point2::new(math::cos(h2), math::sin(h2)),
        Point2::new(-math::sin(h2), math::cos(h2)),
    ];
    for axis in axes {
        let (mut amin, mut amax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in a {
            let d = p.dot(axis);
            amin = amin.min(d);
            amax = amax.max(d);
        }
        let (mut bmin, mut bmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in b {
            let d = p.dot(axis);
            bmin = bmin.min(d);
            bmax = bmax.max(d);
        }
        if amax < bmin || bmax < amin {
            return false;
        }
    }
    true
}
