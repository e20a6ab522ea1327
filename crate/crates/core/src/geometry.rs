//! 2D primitives, ray casting and sampled visibility.
//!
//! The visible region around a point is represented by a [`VisibilityFan`]:
//! line-of-sight distances `f(θ)` sampled at `K` evenly spaced directions.
//! Areas of angular sectors of the visible region are integrals of
//! `½ f(θ)²`, evaluated on the piecewise-linear interpolant of the sampled
//! `½ f²` values. Because every sector integral comes from the same
//! interpolant, sector areas are exactly additive.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::env::PhysicalSpace;
use crate::error::{domain, Result};

/// Tolerance for accepting ray/edge hits near segment endpoints.
pub const EDGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `theta`.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn rotated(self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn closest_point(&self, p: Point2) -> Point2 {
        let ab = self.b - self.a;
        let len_sq = ab.norm_sq();
        if len_sq == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(ab) / len_sq).clamp(0.0, 1.0);
        self.a + ab * t
    }

    pub fn distance(&self, p: Point2) -> f64 {
        p.distance(self.closest_point(p))
    }

    /// Unit normal of the segment's supporting line, oriented toward `p`.
    pub fn normal_toward(&self, p: Point2) -> Point2 {
        let n = (self.b - self.a).perp();
        let n = n * (1.0 / n.norm());
        if n.dot(p - self.a) >= 0.0 {
            n
        } else {
            -n
        }
    }

    /// Distance along the ray `origin + t·dir` (unit `dir`) to this segment,
    /// or `None` when the ray misses or runs parallel to it.
    pub fn ray_hit(&self, origin: Point2, dir: Point2) -> Option<f64> {
        let e = self.b - self.a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-15 {
            return None;
        }
        let w = self.a - origin;
        let t = w.cross(e) / denom;
        let s = w.cross(dir) / denom;
        if t < 0.0 {
            return None;
        }
        if (0.0..=1.0).contains(&s) {
            return Some(t);
        }
        let tol = EDGE_TOLERANCE / e.norm().max(EDGE_TOLERANCE);
        (-tol..=1.0 + tol).contains(&s).then_some(t)
    }

    /// True when the open segments properly cross or touch.
    pub fn intersects(&self, o: &Segment) -> bool {
        let d1 = (o.b - o.a).cross(self.a - o.a);
        let d2 = (o.b - o.a).cross(self.b - o.a);
        let d3 = (self.b - self.a).cross(o.a - self.a);
        let d4 = (self.b - self.a).cross(o.b - self.a);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        let on = |p: Point2, s: &Segment| s.distance(p) < EDGE_TOLERANCE;
        on(self.a, o) || on(self.b, o) || on(o.a, self) || on(o.b, self)
    }
}

/// A simple polygon. Obstacles are stored clockwise, the room boundary
/// counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(domain(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(domain("polygon has non-finite vertices"));
        }
        let poly = Self { vertices };
        if poly.signed_area().abs() < 1e-12 {
            return Err(domain("polygon has zero area"));
        }
        if !poly.is_simple() {
            return Err(domain("polygon is self-intersecting"));
        }
        Ok(poly)
    }

    pub fn rectangle(min: Point2, max: Point2) -> Result<Self> {
        Self::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    /// Regular `n`-gon inscribed in the circle of given center and radius.
    pub fn regular(center: Point2, radius: f64, n: usize) -> Result<Self> {
        let vertices = (0..n)
            .map(|k| center + Point2::from_angle(TAU * k as f64 / n as f64) * radius)
            .collect();
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area; positive for counter-clockwise order.
    pub fn signed_area(&self) -> f64 {
        self.edges().map(|e| e.a.cross(e.b)).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn is_clockwise(&self) -> bool {
        self.signed_area() < 0.0
    }

    pub fn to_clockwise(mut self) -> Self {
        if !self.is_clockwise() {
            self.vertices.reverse();
        }
        self
    }

    pub fn centroid(&self) -> Point2 {
        let a = self.signed_area();
        let (cx, cy) = self.edges().fold((0.0, 0.0), |(cx, cy), e| {
            let c = e.a.cross(e.b);
            (cx + (e.a.x + e.b.x) * c, cy + (e.a.y + e.b.y) * c)
        });
        Point2::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for e in self.edges() {
            if (e.a.y > p.y) != (e.b.y > p.y) {
                let x = e.a.x + (p.y - e.a.y) * (e.b.x - e.a.x) / (e.b.y - e.a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|e| e.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn transformed(&self, f: impl Fn(Point2) -> Point2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
        }
    }

    fn is_simple(&self) -> bool {
        let edges: Vec<Segment> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && edges[i].intersects(&edges[j]) {
                    return false;
                }
            }
        }
        true
    }
}

/// A circular blocker, used for other users' bodies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    pub const fn new(center: Point2, radius: f64) -> Self {
        Self { center, radius }
    }

    /// First non-negative ray parameter hitting the disc boundary. Rays
    /// starting inside the disc ignore it.
    pub fn ray_hit(&self, origin: Point2, dir: Point2) -> Option<f64> {
        let oc = origin - self.center;
        let c = oc.norm_sq() - self.radius * self.radius;
        if c <= 0.0 {
            return None;
        }
        let b = oc.dot(dir);
        let disc = b * b - c;
        if disc < 0.0 {
            return None;
        }
        let t = -b - disc.sqrt();
        (t >= 0.0).then_some(t)
    }
}

/// Line-of-sight distance from `origin` along `theta` to the nearest wall,
/// obstacle edge or blocker disc.
pub fn ray_distance(
    space: &PhysicalSpace,
    blockers: &[Disc],
    origin: Point2,
    theta: f64,
) -> Result<f64> {
    if !space.contains_free(origin) {
        return Err(domain(format!(
            "ray origin ({:.4}, {:.4}) is outside free space",
            origin.x, origin.y
        )));
    }
    Ok(cast(space, blockers, origin, Point2::from_angle(theta)))
}

fn cast(space: &PhysicalSpace, blockers: &[Disc], origin: Point2, dir: Point2) -> f64 {
    let walls = space
        .edges()
        .iter()
        .filter_map(|e| e.ray_hit(origin, dir))
        .fold(f64::INFINITY, f64::min);
    blockers
        .iter()
        .filter_map(|d| d.ray_hit(origin, dir))
        .fold(walls, f64::min)
}

/// Sampled line-of-sight distances around a point.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityFan {
    pub origin: Point2,
    /// `samples[k] = f(-π + 2πk/K)`.
    pub samples: Vec<f64>,
    /// Prefix integrals of the interpolated `½ f²`, one per bin boundary.
    prefix: Vec<f64>,
}

impl VisibilityFan {
    /// Builds a fan from raw samples; the first sample is at `-π`.
    pub fn from_samples(origin: Point2, samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain("visibility fan needs at least one sample"));
        }
        if samples.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(domain("visibility samples must be finite and non-negative"));
        }
        let k = samples.len();
        let step = TAU / k as f64;
        let mut prefix = Vec::with_capacity(k + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for i in 0..k {
            let h0 = 0.5 * samples[i] * samples[i];
            let h1 = 0.5 * samples[(i + 1) % k] * samples[(i + 1) % k];
            acc += 0.5 * (h0 + h1) * step;
            prefix.push(acc);
        }
        Ok(Self {
            origin,
            samples,
            prefix,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn direction(&self, k: usize) -> f64 {
        -PI + TAU * k as f64 / self.samples.len() as f64
    }

    /// Area of the whole visible region.
    pub fn total_area(&self) -> f64 {
        self.prefix[self.samples.len()]
    }

    /// Integral of the interpolant from `-π` to `theta ∈ [-π, π]`.
    fn cumulative(&self, theta: f64) -> f64 {
        let k = self.samples.len();
        let step = TAU / k as f64;
        let x = ((theta + PI) / step).clamp(0.0, k as f64);
        let i = (x.floor() as usize).min(k - 1);
        let t = (x - i as f64) * step;
        let h0 = 0.5 * self.samples[i] * self.samples[i];
        let h1 = 0.5 * self.samples[(i + 1) % k] * self.samples[(i + 1) % k];
        self.prefix[i] + h0 * t + (h1 - h0) * t * t / (2.0 * step)
    }

    /// Visible area inside the angular sector `[theta_lo, theta_hi]`,
    /// angles taken modulo 2π.
    pub fn cone_area(&self, theta_lo: f64, theta_hi: f64) -> Result<f64> {
        let width = theta_hi - theta_lo;
        if !(width > 0.0 && width <= TAU + 1e-12) || !theta_lo.is_finite() {
            return Err(domain(format!(
                "cone width must lie in (0, 2π], got {width}"
            )));
        }
        if width >= TAU - 1e-12 {
            return Ok(self.total_area());
        }
        let lo = (theta_lo + PI).rem_euclid(TAU) - PI;
        let hi = lo + width;
        if hi <= PI {
            Ok(self.cumulative(hi) - self.cumulative(lo))
        } else {
            Ok(self.total_area() - self.cumulative(lo) + self.cumulative(hi - TAU))
        }
    }
}

/// Samples `k` line-of-sight distances evenly over `[-π, π)`.
pub fn visibility_fan(
    space: &PhysicalSpace,
    blockers: &[Disc],
    origin: Point2,
    k: usize,
) -> Result<VisibilityFan> {
    if k == 0 {
        return Err(domain("visibility fan needs at least one ray"));
    }
    if !space.contains_free(origin) {
        return Err(domain(format!(
            "fan origin ({:.4}, {:.4}) is outside free space",
            origin.x, origin.y
        )));
    }
    let samples = (0..k)
        .map(|i| {
            let theta = -PI + TAU * i as f64 / k as f64;
            cast(space, blockers, origin, Point2::from_angle(theta))
        })
        .collect();
    VisibilityFan::from_samples(origin, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{build_preset, Preset};
    use proptest::prelude::*;

    fn empty(w: f64) -> PhysicalSpace {
        PhysicalSpace::empty(w, w).unwrap()
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((wrap_angle(0.25)) == 0.25);
    }

    #[test]
    fn ray_distance_empty_square() {
        let s = empty(10.0);
        let d = ray_distance(&s, &[], Point2::ORIGIN, 0.0).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
        let d = ray_distance(&s, &[], Point2::ORIGIN, PI / 4.0).unwrap();
        assert!((d - 5.0 * 2f64.sqrt()).abs() < 1e-9);
    }

    /// March along the ray in 1 mm steps until the point leaves free space.
    fn march(space: &PhysicalSpace, origin: Point2, theta: f64) -> f64 {
        let dir = Point2::from_angle(theta);
        let mut t = 0.0;
        while space.contains_free(origin + dir * (t + 1e-3)) {
            t += 1e-3;
        }
        t
    }

    #[test]
    fn ray_distance_circle_preset_matches_march() {
        let s = build_preset(Preset::Circle, 10.0, 10.0).unwrap();
        let origin = Point2::new(-3.0, 0.0);
        let d = ray_distance(&s, &[], origin, 0.0).unwrap();
        let oracle = march(&s, origin, 0.0);
        assert!((d - oracle).abs() <= 1.5e-3, "{d} vs {oracle}");
        // The near edge of the disc approximation is within the inscribed
        // and circumscribed radii.
        assert!(d > 1.4 && d < 1.6);
    }

    #[test]
    fn ray_distance_rejects_outside_origin() {
        let s = build_preset(Preset::Circle, 10.0, 10.0).unwrap();
        assert!(ray_distance(&s, &[], Point2::ORIGIN, 0.0).is_err());
        assert!(ray_distance(&s, &[], Point2::new(6.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn blockers_shorten_rays() {
        let s = empty(10.0);
        let b = [Disc::new(Point2::new(2.0, 0.0), 0.3)];
        let d = ray_distance(&s, &b, Point2::ORIGIN, 0.0).unwrap();
        assert!((d - 1.7).abs() < 1e-12);
        let d = ray_distance(&s, &b, Point2::ORIGIN, PI).unwrap();
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fan_axis_samples_and_shape() {
        let s = empty(10.0);
        let fan = visibility_fan(&s, &[], Point2::ORIGIN, 360).unwrap();
        assert_eq!(fan.len(), 360);
        for k in [0, 90, 180, 270] {
            assert!((fan.samples[k] - 5.0).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn fan_matches_per_ray_oracle() {
        let s = build_preset(Preset::Circle, 10.0, 10.0).unwrap();
        let origin = Point2::new(-1.8, 0.4);
        let fan = visibility_fan(&s, &[], origin, 128).unwrap();
        for (k, &f) in fan.samples.iter().enumerate() {
            let theta = -PI + TAU * k as f64 / 128.0;
            let dir = Point2::from_angle(theta);
            // Independent oracle: nearest hit over all edges computed by
            // solving each ray/edge pair as a 2x2 linear system.
            let mut best = f64::INFINITY;
            for e in s.edges() {
                let m = [[dir.x, e.a.x - e.b.x], [dir.y, e.a.y - e.b.y]];
                let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
                if det.abs() < 1e-15 {
                    continue;
                }
                let r = e.a - origin;
                let t = (r.x * m[1][1] - m[0][1] * r.y) / det;
                let u = (m[0][0] * r.y - r.x * m[1][0]) / det;
                if t >= 0.0 && (-1e-9..=1.0 + 1e-9).contains(&u) {
                    best = best.min(t);
                }
            }
            assert!((f - best).abs() < 1e-9, "k={k}: {f} vs {best}");
        }
    }

    #[test]
    fn constant_fan_disc_area() {
        let fan = VisibilityFan::from_samples(Point2::ORIGIN, vec![2.0; 360]).unwrap();
        let a = fan.cone_area(-PI, PI).unwrap();
        assert!((a - PI * 4.0).abs() / (PI * 4.0) < 5e-3);
    }

    #[test]
    fn full_circle_area_of_empty_square() {
        let s = empty(10.0);
        let fan = visibility_fan(&s, &[], Point2::ORIGIN, 360).unwrap();
        assert!((fan.total_area() - 100.0).abs() < 1.0);
    }

    #[test]
    fn degenerate_cone_is_rejected() {
        let fan = VisibilityFan::from_samples(Point2::ORIGIN, vec![1.0; 64]).unwrap();
        assert!(fan.cone_area(0.3, 0.3).is_err());
        assert!(fan.cone_area(0.3, 0.1).is_err());
        assert!(fan.cone_area(0.0, 7.0).is_err());
    }

    #[test]
    fn area_converges_with_k() {
        let s = build_preset(Preset::Complex, 10.0, 10.0).unwrap();
        let o = Point2::new(0.3, -0.7);
        let a = |k| visibility_fan(&s, &[], o, k).unwrap().total_area();
        let reference = a(23_040);
        let (coarse, fine) = ((a(360) - reference).abs(), (a(2880) - reference).abs());
        assert!(fine < coarse, "{fine} vs {coarse}");
        assert!(coarse / reference < 0.02);
    }

    proptest! {
        #[test]
        fn cone_plus_complement_is_total(
            samples in prop::collection::vec(0.1f64..20.0, 64..200),
            lo in -10.0f64..10.0,
            width in 0.01f64..6.2,
        ) {
            let fan = VisibilityFan::from_samples(Point2::ORIGIN, samples).unwrap();
            let total = fan.total_area();
            let cone = fan.cone_area(lo, lo + width).unwrap();
            let rest = fan.cone_area(lo + width, lo + TAU).unwrap();
            prop_assert!(((cone + rest) - total).abs() <= 1e-6 * total);
        }

        #[test]
        fn eight_cones_tile_the_circle(
            samples in prop::collection::vec(0.1f64..20.0, 64..400),
            start in -PI..PI,
        ) {
            let fan = VisibilityFan::from_samples(Point2::ORIGIN, samples).unwrap();
            let sum: f64 = (0..8)
                .map(|i| {
                    let lo = start + i as f64 * PI / 4.0;
                    fan.cone_area(lo, lo + PI / 4.0).unwrap()
                })
                .sum();
            let total = fan.total_area();
            prop_assert!((sum - total).abs() <= 1e-9 * total);
        }

        #[test]
        fn ray_distance_is_locally_continuous(theta in -PI..PI) {
            // Origin in the four-squares room; skip directions grazing a vertex.
            let s = build_preset(Preset::FourSquares, 10.0, 10.0).unwrap();
            let o = Point2::new(0.4, -0.9);
            let near_vertex = s.edges().iter().any(|e| {
                let a = wrap_angle((e.a - o).angle() - theta).abs();
                a < 1e-3
            });
            prop_assume!(!near_vertex);
            let d0 = ray_distance(&s, &[], o, theta).unwrap();
            let d1 = ray_distance(&s, &[], o, theta + 1e-7).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-4 * d0.max(1.0));
        }
    }
}
