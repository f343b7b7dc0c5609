//! Small planar geometry primitives shared by all modules.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

pub const fn pt(x: f64, y: f64) -> Point {
    Point { x, y }
}

impl Point {
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self / n
        }
    }

    /// Rotation by +90 degrees; the leftward normal of a direction vector.
    pub fn left_normal(self) -> Point {
        pt(-self.y, self.x)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        pt(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        pt(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        pt(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        pt(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point {
    type Output = Point;
    fn div(self, s: f64) -> Point {
        pt(self.x / s, self.y / s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        pt(-self.x, -self.y)
    }
}

/// Closest point on segment [a, b]; returns (fraction, point).
pub fn closest_on_segment(a: Point, b: Point, p: Point) -> (f64, Point) {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return (0.0, a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    (t, a.lerp(b, t))
}

pub fn dist_point_segment(a: Point, b: Point, p: Point) -> f64 {
    closest_on_segment(a, b, p).1.dist(p)
}

/// Proper or touching intersection of segments [a,b] and [c,d].
/// Returns the intersection point when the segments cross (endpoints included).
pub fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<Point> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    let qp = c - a;
    if denom.abs() < 1e-30 {
        return None; // parallel or degenerate; overlap handled by the sampling density
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let eps = 1e-12;
    if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
        Some(a + r * t)
    } else {
        None
    }
}

/// Signed area of a closed polygon (positive for counter-clockwise).
pub fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        acc += a.cross(b);
    }
    0.5 * acc
}

/// Winding number of a closed polyline around p; nonzero means inside.
pub fn winding_number(pts: &[Point], p: Point) -> i32 {
    let n = pts.len();
    let mut wn = 0i32;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && (b - a).cross(p - a) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && (b - a).cross(p - a) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Minimum distance from p to a polyline (open).
pub fn dist_point_polyline(pts: &[Point], p: Point) -> f64 {
    let mut best = f64::INFINITY;
    for w in pts.windows(2) {
        best = best.min(dist_point_segment(w[0], w[1], p));
    }
    if pts.len() == 1 {
        best = pts[0].dist(p);
    }
    best
}

/// Circumcenter of a triangle, or None if degenerate.
pub fn circumcenter(a: Point, b: Point, c: Point) -> Option<Point> {
    let d = 2.0 * ((b - a).cross(c - a));
    if d.abs() < 1e-30 {
        return None;
    }
    let ba = b - a;
    let ca = c - a;
    let ba2 = ba.norm_sq();
    let ca2 = ca.norm_sq();
    let ux = (ca.y * ba2 - ba.y * ca2) / d;
    let uy = (ba.x * ca2 - ca.x * ba2) / d;
    Some(pt(a.x + ux, a.y + uy))
}
