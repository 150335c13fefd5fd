use super::{point_segment_distance, Plane, Point, Side, Tolerance, Vector};

/// Polygon vertex produced by clipping a single triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClipVertex {
    /// One of the triangle's own corners.
    Corner(usize),
    /// A point on the edge `from → to` at parameter `t` in (0, 1).
    Edge { from: usize, to: usize, t: f64 },
}

impl ClipVertex {
    /// Barycentric coordinates with respect to the clipped triangle.
    pub fn barycentric(&self) -> [f64; 3] {
        let mut b = [0.0; 3];
        match *self {
            ClipVertex::Corner(i) => b[i] = 1.0,
            ClipVertex::Edge { from, to, t } => {
                b[from] = 1.0 - t;
                b[to] = t;
            }
        }
        b
    }

    pub fn position(&self, tri: &[Point; 3]) -> Point {
        match *self {
            ClipVertex::Corner(i) => tri[i],
            ClipVertex::Edge { from, to, t } => tri[from] + (tri[to] - tri[from]) * t,
        }
    }
}

/// Both halves of a triangle split by a plane.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleClip {
    /// Polygon on the positive side, empty when that side holds no area.
    pub positive: Vec<ClipVertex>,
    pub negative: Vec<ClipVertex>,
    /// Points where the triangle boundary meets the plane. Corners lying on
    /// the plane are reported here instead of creating a new point.
    pub intersections: Vec<ClipVertex>,
}

impl TriangleClip {
    pub fn positive_area(&self, tri: &[Point; 3]) -> f64 {
        polygon_area(&self.positive.iter().map(|v| v.position(tri)).collect::<Vec<_>>())
    }

    pub fn negative_area(&self, tri: &[Point; 3]) -> f64 {
        polygon_area(&self.negative.iter().map(|v| v.position(tri)).collect::<Vec<_>>())
    }
}

/// Output of [`split_convex_polygon`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPolygon<V> {
    pub positive: Vec<V>,
    pub negative: Vec<V>,
    /// On-plane corners and newly created crossing points, in boundary order.
    pub crossings: Vec<V>,
}

/// Splits a convex polygon by the sign of `dist`.
///
/// Corners within `eps` of zero are shared by both halves; a new vertex is
/// made by `make(a, b, t)` only on edges whose endpoints are strictly on
/// opposite sides, with `t` measured from `a`. Winding is preserved.
pub fn split_convex_polygon<V: Clone>(
    poly: &[V],
    dist: impl Fn(&V) -> f64,
    eps: f64,
    mut make: impl FnMut(&V, &V, f64) -> V,
) -> SplitPolygon<V> {
    let n = poly.len();
    let d: Vec<f64> = poly.iter().map(&dist).collect();
    let mut out = SplitPolygon {
        positive: Vec::with_capacity(n + 2),
        negative: Vec::with_capacity(n + 2),
        crossings: Vec::with_capacity(2),
    };
    for i in 0..n {
        let j = (i + 1) % n;
        let si = Side::of_distance(d[i], eps);
        let sj = Side::of_distance(d[j], eps);
        match si {
            Side::On => {
                out.positive.push(poly[i].clone());
                out.negative.push(poly[i].clone());
                out.crossings.push(poly[i].clone());
            }
            Side::Positive => out.positive.push(poly[i].clone()),
            Side::Negative => out.negative.push(poly[i].clone()),
        }
        let strict_cross = matches!(
            (si, sj),
            (Side::Positive, Side::Negative) | (Side::Negative, Side::Positive)
        );
        if strict_cross {
            let t = d[i] / (d[i] - d[j]);
            let v = make(&poly[i], &poly[j], t);
            out.positive.push(v.clone());
            out.negative.push(v.clone());
            out.crossings.push(v);
        }
    }
    // A half without a strictly-inside corner carries no area.
    if out.positive.len() < 3 || !d.iter().any(|&x| x > eps) {
        out.positive.clear();
    }
    if out.negative.len() < 3 || !d.iter().any(|&x| x < -eps) {
        out.negative.clear();
    }
    out
}

/// Splits triangle `tri` by `plane`.
///
/// A corner within `eps` of the plane is snapped: it is reported as an
/// intersection and no new point is created next to it.
pub fn triangle_plane_clip(tri: &[Point; 3], plane: &Plane, eps: f64) -> TriangleClip {
    let corners = [
        ClipVertex::Corner(0),
        ClipVertex::Corner(1),
        ClipVertex::Corner(2),
    ];
    let split = split_convex_polygon(
        &corners,
        |v| plane.signed_distance(&v.position(tri)),
        eps,
        |a, b, t| match (*a, *b) {
            (ClipVertex::Corner(i), ClipVertex::Corner(j)) => ClipVertex::Edge { from: i, to: j, t },
            _ => unreachable!("triangle edges join corners"),
        },
    );
    TriangleClip {
        positive: split.positive,
        negative: split.negative,
        intersections: split.crossings,
    }
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Area of a planar polygon (vector-area magnitude).
pub fn polygon_area(points: &[Point]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let o = points[0];
    let mut acc = Vector::zeros();
    for w in points[1..].windows(2) {
        acc += (w[0] - o).cross(&(w[1] - o));
    }
    0.5 * acc.norm()
}

/// True when the triangle has no usable extent: its area is at most
/// `tol.area` or one corner lies within `tol.side` of the opposite edge.
pub fn is_sliver(a: &Point, b: &Point, c: &Point, tol: Tolerance) -> bool {
    triangle_area(a, b, c) <= tol.area
        || point_segment_distance(a, b, c).0 <= tol.side
        || point_segment_distance(b, c, a).0 <= tol.side
        || point_segment_distance(c, a, b).0 <= tol.side
}

/// Triangulates a weakly convex polygon given by vertex ids.
///
/// Ears are cut greedily, always taking the shortest diagonal; ties go to
/// the diagonal whose smaller endpoint id is lower. Sliver ears (see
/// [`is_sliver`]) are skipped, as are ears whose removal would leave only
/// collinear points behind. Winding follows the input order.
pub fn triangulate_convex(ids: &[u32], position: impl Fn(u32) -> Point, tol: Tolerance) -> Vec<[u32; 3]> {
    let mut poly: Vec<u32> = ids.to_vec();
    let mut tris = Vec::with_capacity(poly.len().saturating_sub(2));
    let mut pts: Vec<Point> = poly.iter().map(|&i| position(i)).collect();
    while poly.len() > 3 {
        let n = poly.len();
        // (diagonal length², smaller diagonal id, ear) per class: ears that
        // leave a usable remainder and ears that leave only slivers.
        let mut best: [Option<(f64, u32, usize)>; 2] = [None, None];
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            if is_sliver(&pts[prev], &pts[i], &pts[next], tol) {
                continue;
            }
            let rest: Vec<Point> = (0..n).filter(|&k| k != i).map(|k| pts[k]).collect();
            let class = usize::from(!has_area(&rest, tol));
            let len = (pts[next] - pts[prev]).norm_squared();
            let key_id = poly[prev].min(poly[next]);
            let better = match best[class] {
                None => true,
                Some((bl, bid, _)) => len < bl || (len == bl && key_id < bid),
            };
            if better {
                best[class] = Some((len, key_id, i));
            }
        }
        let (i, last) = match best {
            [Some((_, _, i)), _] => (i, false),
            [None, Some((_, _, i))] => (i, true),
            // Everything left is collinear.
            [None, None] => return tris,
        };
        let prev = (i + n - 1) % n;
        let next = (i + 1) % n;
        tris.push([poly[prev], poly[i], poly[next]]);
        if last {
            return tris;
        }
        poly.remove(i);
        pts.remove(i);
    }
    if poly.len() == 3 && !is_sliver(&pts[0], &pts[1], &pts[2], tol) {
        tris.push([poly[0], poly[1], poly[2]]);
    }
    tris
}

fn has_area(points: &[Point], tol: Tolerance) -> bool {
    let n = points.len();
    (0..n).any(|i| !is_sliver(&points[i], &points[(i + 1) % n], &points[(i + 2) % n], tol))
}
