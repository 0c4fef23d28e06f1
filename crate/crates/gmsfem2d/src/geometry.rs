//! Planar geometry primitives shared by the mesher and the FEM kernels.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl Circle {
    pub const fn new(cx: f64, cy: f64, radius: f64) -> Self {
        Circle {
            center: Point::new(cx, cy),
            radius,
        }
    }

    /// Vertices of the inscribed regular polygon, counter-clockwise,
    /// first vertex at angle zero.
    pub fn inscribed_polygon(&self, segments: usize) -> Vec<Point> {
        (0..segments)
            .map(|k| {
                let theta = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
                Point::new(
                    self.center.x + self.radius * theta.cos(),
                    self.center.y + self.radius * theta.sin(),
                )
            })
            .collect()
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub const fn new(min: Point, max: Point) -> Self {
        Rect { min, max }
    }

    pub const fn unit_square() -> Self {
        Rect::new(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Distance from `p` to the rectangle's boundary (0 if on it).
    pub fn boundary_dist(&self, p: Point) -> f64 {
        let dx = (p.x - self.min.x).min(self.max.x - p.x);
        let dy = (p.y - self.min.y).min(self.max.y - p.y);
        dx.min(dy).max(0.0)
    }

    pub fn on_boundary(&self, p: Point, tol: f64) -> bool {
        self.contains_loose(p, tol) && self.boundary_dist(p) <= tol
    }

    fn contains_loose(&self, p: Point, tol: f64) -> bool {
        p.x >= self.min.x - tol
            && p.x <= self.max.x + tol
            && p.y >= self.min.y - tol
            && p.y <= self.max.y + tol
    }
}

/// Twice the signed area of triangle (a, b, c); positive for CCW order.
pub fn signed_area2(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * signed_area2(a, b, c)
}

pub fn triangle_centroid(a: Point, b: Point, c: Point) -> Point {
    Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
}

/// Minimum interior angle of the triangle, in degrees.
pub fn min_angle_deg(a: Point, b: Point, c: Point) -> f64 {
    let la = b.dist(c);
    let lb = c.dist(a);
    let lc = a.dist(b);
    let angle = |opp: f64, s1: f64, s2: f64| {
        let cos = ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0);
        cos.acos().to_degrees()
    };
    angle(la, lb, lc).min(angle(lb, lc, la)).min(angle(lc, la, lb))
}

/// Shoelace area of a simple polygon (positive for CCW orientation).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut twice = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        twice += poly[i].cross(poly[j]);
    }
    0.5 * twice
}

/// Even-odd crossing test. Points on the boundary may land on either side;
/// callers only probe points well inside or outside.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Distance from point `p` to segment [a, b].
pub fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Intersection of segments [a, b] and [c, d], excluding shared endpoints.
/// Returns the intersection parameter along [a, b] and the point.
pub fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<(f64, Point)> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom.abs() < 1e-14 * r.norm() * s.norm() {
        return None; // parallel or degenerate
    }
    let t = (c - a).cross(s) / denom;
    let u = (c - a).cross(r) / denom;
    let eps = 1e-12;
    if t > eps && t < 1.0 - eps && u > -eps && u < 1.0 + eps {
        Some((t, a + r * t))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_area_of_inscribed_ngon() {
        // area of inscribed regular n-gon: n/2 * r^2 * sin(2*pi/n)
        let c = Circle::new(0.5, 0.5, 0.1);
        let poly = c.inscribed_polygon(16);
        let expected = 0.5 * 16.0 * 0.01 * (2.0 * std::f64::consts::PI / 16.0).sin();
        assert!((polygon_area(&poly) - expected).abs() < 1e-14);
    }

    #[test]
    fn point_in_polygon_basic() {
        let poly = Circle::new(0.0, 0.0, 1.0).inscribed_polygon(32);
        assert!(point_in_polygon(Point::new(0.1, 0.2), &poly));
        assert!(!point_in_polygon(Point::new(1.5, 0.0), &poly));
    }

    #[test]
    fn segment_distance() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        assert!((point_segment_dist(Point::new(0.5, 0.3), a, b) - 0.3).abs() < 1e-15);
        assert!((point_segment_dist(Point::new(2.0, 0.0), a, b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn segment_intersection_crossing() {
        let (t, p) = segment_intersection(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.25, -1.0),
            Point::new(0.25, 1.0),
        )
        .unwrap();
        assert!((t - 0.25).abs() < 1e-14);
        assert!((p.x - 0.25).abs() < 1e-14 && p.y.abs() < 1e-14);
    }

    #[test]
    fn min_angle_right_triangle() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(0.0, 1.0);
        assert!((min_angle_deg(a, b, c) - 45.0).abs() < 1e-12);
    }
}
