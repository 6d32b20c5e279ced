//! Small 2D geometry kit shared by the world model, perception and the
//! search-position heuristics: points, poses, polygons with even-odd
//! containment, and segment intersection tests.

use serde::{Deserialize, Serialize};

/// Tolerance for "on the boundary" decisions in containment tests.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// A point in the map frame, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

/// A free 2D vector, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// A planar robot pose: position plus heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: Point2) -> f64 {
        (*self - other).norm()
    }

    pub fn midpoint(&self, other: Point2) -> Point2 {
        Point2::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(&self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(&self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn scaled(&self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn normalized(&self) -> Vec2 {
        let n = self.norm();
        if n == 0.0 {
            Vec2::new(0.0, 0.0)
        } else {
            self.scaled(1.0 / n)
        }
    }

    /// Rotation by 90 degrees counter-clockwise.
    pub fn perp(&self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn angle(&self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Vec2;
    fn sub(self, rhs: Point2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add<Vec2> for Point2 {
    type Output = Point2;
    fn add(self, rhs: Vec2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Pose2 {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

impl From<Point2> for Pose2 {
    fn from(p: Point2) -> Self {
        Pose2::new(p.x, p.y, 0.0)
    }
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * std::f64::consts::PI);
    if a <= -std::f64::consts::PI {
        a += 2.0 * std::f64::consts::PI;
    } else if a > std::f64::consts::PI {
        a -= 2.0 * std::f64::consts::PI;
    }
    a
}

/// A simple polygon given by its vertices in order (either winding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Self {
        Self { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Even-odd (ray cast) containment. Points within [`BOUNDARY_EPS`] of an
    /// edge count as inside (closed polygon).
    pub fn contains(&self, p: Point2) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        if self.on_boundary(p, BOUNDARY_EPS) {
            return true;
        }
        // Half-open ray cast towards +x.
        let mut inside = false;
        for (a, b) in self.edges() {
            let crosses = (a.y > p.y) != (b.y > p.y);
            if crosses {
                let t = (p.y - a.y) / (b.y - a.y);
                let x_hit = a.x + t * (b.x - a.x);
                if x_hit > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn on_boundary(&self, p: Point2, eps: f64) -> bool {
        self.edges().any(|(a, b)| dist_point_segment(p, a, b) <= eps)
    }

    /// Signed area (positive for counter-clockwise winding).
    pub fn signed_area(&self) -> f64 {
        let mut s = 0.0;
        for (a, b) in self.edges() {
            s += a.x * b.y - b.x * a.y;
        }
        s / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Point2 {
        let a = self.signed_area();
        if a.abs() < 1e-12 {
            // Degenerate: fall back to vertex mean.
            let n = self.vertices.len() as f64;
            let (sx, sy) = self
                .vertices
                .iter()
                .fold((0.0, 0.0), |(sx, sy), v| (sx + v.x, sy + v.y));
            return Point2::new(sx / n, sy / n);
        }
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (p, q) in self.edges() {
            let w = p.x * q.y - q.x * p.y;
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            min.x = min.x.min(v.x);
            min.y = min.y.min(v.y);
            max.x = max.x.max(v.x);
            max.y = max.y.max(v.y);
        }
        (min, max)
    }

    /// True when no two non-adjacent edges intersect and no edge has zero
    /// length.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<(Point2, Point2)> = self.edges().collect();
        for (a, b) in &edges {
            if a.dist(*b) <= BOUNDARY_EPS {
                return false;
            }
        }
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

    /// True when the two polygons share interior area: an edge of one
    /// properly crosses an edge of the other, or one strictly contains a
    /// vertex of the other.
    pub fn overlaps(&self, other: &Polygon) -> bool {
        for (a, b) in self.edges() {
            for (c, d) in other.edges() {
                if segments_properly_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        let strictly_inside = |poly: &Polygon, p: Point2| {
            poly.contains(p) && !poly.on_boundary(p, BOUNDARY_EPS)
        };
        self.vertices.iter().any(|&v| strictly_inside(other, v))
            || other.vertices.iter().any(|&v| strictly_inside(self, v))
    }
}

/// Distance from point `p` to segment `ab`.
pub fn dist_point_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab.scaled(t))
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// Inclusive segment intersection (touching endpoints count).
pub fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |o: f64, p: Point2, q: Point2, r: Point2| {
        o.abs() <= BOUNDARY_EPS && dist_point_segment(r, p, q) <= BOUNDARY_EPS
    };
    on(d1, c, d, a) || on(d2, c, d, b) || on(d3, a, b, c) || on(d4, a, b, d)
}

/// Proper intersection: the segments cross at a single interior point.
pub fn segments_properly_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// An axis-aligned rectangle, used for grid-cell geometry.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x - BOUNDARY_EPS
            && p.x <= self.max.x + BOUNDARY_EPS
            && p.y >= self.min.y - BOUNDARY_EPS
            && p.y <= self.max.y + BOUNDARY_EPS
    }

    /// Closed intersection test against a polygon (boundary contact counts).
    pub fn intersects_polygon(&self, poly: &Polygon) -> bool {
        if poly.vertices.iter().any(|&v| self.contains(v)) {
            return true;
        }
        if self.corners().iter().any(|&c| poly.contains(c)) {
            return true;
        }
        let cs = self.corners();
        for i in 0..4 {
            let (a, b) = (cs[i], cs[(i + 1) % 4]);
            for (c, d) in poly.edges() {
                if segments_intersect(a, b, c, d) {
                    return true;
                }
            }
        }
        false
    }
}
