//! Euclidean primitives shared by the tear, cut and particle modules.
//!
//! Everything here is a pure function of its inputs. Side tests take an
//! explicit tolerance so that callers can scale it to the mesh they work on
//! (see [`Tolerance`]).

mod clip;
pub mod oracle;
mod tearbox;

pub use clip::{
    is_sliver, polygon_area, split_convex_polygon, triangle_area, triangle_plane_clip, triangulate_convex,
    ClipVertex, SplitPolygon, TriangleClip,
};
pub use tearbox::{build_tear_boxes, BoxPlane, ScalpelSample, TearBox};

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("segment lies in the plane")]
    Degenerate,
    #[error("plane normal has zero length")]
    ZeroNormal,
    #[error("points are collinear")]
    Collinear,
    #[error("need at least two usable scalpel samples, got {0}")]
    TooFewSamples(usize),
}

/// Scale-aware tolerances derived from a mesh bounding-box diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Distance below which a point is classified as lying on a plane.
    pub side: f64,
    /// Area below which a triangle is treated as degenerate.
    pub area: f64,
}

impl Tolerance {
    pub fn from_diagonal(diagonal: f64) -> Self {
        let diagonal = if diagonal > 0.0 { diagonal } else { 1.0 };
        Tolerance {
            side: 1e-6 * diagonal,
            area: 1e-12 * diagonal * diagonal,
        }
    }
}

/// Oriented plane `normal · x = offset`, with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Vector,
    pub offset: f64,
}

impl Plane {
    /// Builds a plane from any non-zero normal; the normal is normalized and
    /// the offset scaled accordingly.
    pub fn new(normal: Vector, offset: f64) -> Result<Self, GeometryError> {
        let len = normal.norm();
        if !(len > 1e-300) || !len.is_finite() {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(Plane {
            normal: normal / len,
            offset: offset / len,
        })
    }

    pub fn from_point_normal(point: &Point, normal: Vector) -> Result<Self, GeometryError> {
        let len = normal.norm();
        if !(len > 1e-300) || !len.is_finite() {
            return Err(GeometryError::ZeroNormal);
        }
        let n = normal / len;
        Ok(Plane {
            normal: n,
            offset: n.dot(&point.coords),
        })
    }

    /// Plane through three points, normal by the right-hand rule
    /// `(b - a) × (c - a)`.
    pub fn through_points(a: &Point, b: &Point, c: &Point) -> Result<Self, GeometryError> {
        let n = (b - a).cross(&(c - a));
        let scale = (b - a).norm().max((c - a).norm()).max(1e-300);
        if n.norm() <= 1e-12 * scale * scale {
            return Err(GeometryError::Collinear);
        }
        Plane::from_point_normal(a, n)
    }

    /// Parses `a·x + b·y + c·z + d = 0`.
    pub fn from_coefficients(a: f64, b: f64, c: f64, d: f64) -> Result<Self, GeometryError> {
        Plane::new(Vector::new(a, b, c), -d)
    }

    #[inline]
    pub fn signed_distance(&self, p: &Point) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    pub fn flipped(&self) -> Plane {
        Plane {
            normal: -self.normal,
            offset: -self.offset,
        }
    }
}

/// Result of a point-versus-plane classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Positive,
    Negative,
    On,
}

impl Side {
    pub fn flipped(self) -> Side {
        match self {
            Side::Positive => Side::Negative,
            Side::Negative => Side::Positive,
            Side::On => Side::On,
        }
    }

    #[inline]
    pub fn of_distance(distance: f64, eps: f64) -> Side {
        if distance.abs() <= eps {
            Side::On
        } else if distance > 0.0 {
            Side::Positive
        } else {
            Side::Negative
        }
    }
}

#[inline]
pub fn plane_side(p: &Point, plane: &Plane, eps: f64) -> Side {
    Side::of_distance(plane.signed_distance(p), eps)
}

/// Intersection of the segment `a → b` with `plane`.
///
/// An endpoint lying on the plane is returned as-is with `t` of 0 or 1.
/// Returns `Ok(None)` when both endpoints are strictly on the same side, and
/// `Err(Degenerate)` when the whole segment lies in the plane.
pub fn segment_plane_intersect(
    a: &Point,
    b: &Point,
    plane: &Plane,
    eps: f64,
) -> Result<Option<(Point, f64)>, GeometryError> {
    let da = plane.signed_distance(a);
    let db = plane.signed_distance(b);
    let sa = Side::of_distance(da, eps);
    let sb = Side::of_distance(db, eps);
    match (sa, sb) {
        (Side::On, Side::On) => Err(GeometryError::Degenerate),
        (Side::On, _) => Ok(Some((*a, 0.0))),
        (_, Side::On) => Ok(Some((*b, 1.0))),
        (x, y) if x == y => Ok(None),
        _ => {
            let t = da / (da - db);
            Ok(Some((a + (b - a) * t, t)))
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn grow(&mut self, p: &Point) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&mut self, other: &Aabb) {
        if other.is_empty() {
            return;
        }
        self.grow(&other.min);
        self.grow(&other.max);
    }

    pub fn padded(&self, pad: f64) -> Aabb {
        let v = Vector::repeat(pad);
        Aabb {
            min: self.min - v,
            max: self.max + v,
        }
    }

    pub fn diagonal(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            (self.max - self.min).norm()
        }
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
            && self.min.z <= other.max.z
            && other.min.z <= self.max.z
    }

    pub fn corners(&self) -> [Point; 8] {
        let (a, b) = (self.min, self.max);
        [
            Point::new(a.x, a.y, a.z),
            Point::new(b.x, a.y, a.z),
            Point::new(a.x, b.y, a.z),
            Point::new(b.x, b.y, a.z),
            Point::new(a.x, a.y, b.z),
            Point::new(b.x, a.y, b.z),
            Point::new(a.x, b.y, b.z),
            Point::new(b.x, b.y, b.z),
        ]
    }

    /// Index of the longest extent (0 = x, 1 = y, 2 = z).
    pub fn longest_axis(&self) -> usize {
        let e = self.max - self.min;
        if e.x >= e.y && e.x >= e.z {
            0
        } else if e.y >= e.z {
            1
        } else {
            2
        }
    }
}

/// Squared distance from `p` to the segment `a b` together with the
/// parameter of the closest point.
pub fn point_segment_distance(p: &Point, a: &Point, b: &Point) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return ((p - a).norm(), 0.0);
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    ((p - (a + ab * t)).norm(), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z0() -> Plane {
        Plane::new(Vector::z(), 0.0).unwrap()
    }

    #[test]
    fn side_examples() {
        assert_eq!(plane_side(&Point::new(0.0, 0.0, 1.0), &z0(), 1e-9), Side::Positive);
        assert_eq!(plane_side(&Point::origin(), &z0(), 1e-9), Side::On);
        assert_eq!(plane_side(&Point::new(1.0, 2.0, -3.0), &z0(), 1e-9), Side::Negative);
    }

    #[test]
    fn segment_examples() {
        let (p, t) = segment_plane_intersect(
            &Point::new(0.0, 0.0, -1.0),
            &Point::new(0.0, 0.0, 1.0),
            &z0(),
            1e-9,
        )
        .unwrap()
        .unwrap();
        assert_eq!(p, Point::origin());
        assert_eq!(t, 0.5);

        let none = segment_plane_intersect(
            &Point::new(1.0, 0.0, 1.0),
            &Point::new(2.0, 0.0, 1.0),
            &z0(),
            1e-9,
        )
        .unwrap();
        assert!(none.is_none());

        let z2 = Plane::new(Vector::z(), 2.0).unwrap();
        let (p, t) = segment_plane_intersect(
            &Point::new(0.0, 0.0, 1.0),
            &Point::new(0.0, 0.0, 4.0),
            &z2,
            1e-9,
        )
        .unwrap()
        .unwrap();
        assert!((p.z - 2.0).abs() < 1e-15);
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn segment_in_plane_is_degenerate() {
        let r = segment_plane_intersect(
            &Point::new(0.0, 0.0, 0.0),
            &Point::new(1.0, 0.0, 0.0),
            &z0(),
            1e-9,
        );
        assert_eq!(r, Err(GeometryError::Degenerate));
    }

    #[test]
    fn endpoint_on_plane_returns_endpoint() {
        let (p, t) = segment_plane_intersect(
            &Point::new(0.0, 0.0, 3.0),
            &Point::new(0.0, 0.0, 0.0),
            &z0(),
            1e-9,
        )
        .unwrap()
        .unwrap();
        assert_eq!(p, Point::origin());
        assert_eq!(t, 1.0);
    }

    #[test]
    fn plane_through_points_orientation() {
        let p = Plane::through_points(
            &Point::new(0.0, 0.0, 1.0),
            &Point::new(1.0, 0.0, 1.0),
            &Point::new(0.0, 1.0, 1.0),
        )
        .unwrap();
        assert!((p.normal - Vector::z()).norm() < 1e-15);
        assert!((p.offset - 1.0).abs() < 1e-15);
    }
}
