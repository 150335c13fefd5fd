//! Brute-force reference for tear tests.
//!
//! Kept deliberately separate from the tear clipping path: no tolerances,
//! no vertex ids, plain Sutherland–Hodgman against each half-space.

use super::{Point, TearBox};

/// Total triangle area inside the union of `boxes`.
///
/// Each box contributes what it clips from the triangle minus every
/// earlier box, so overlapping boxes are counted once.
pub fn oracle_clip_area(triangles: &[[Point; 3]], boxes: &[TearBox]) -> f64 {
    let mut total = 0.0;
    for tri in triangles {
        for (k, b) in boxes.iter().enumerate() {
            let mut pieces = vec![intersect(tri, b)];
            for earlier in &boxes[..k] {
                pieces = pieces.iter().flat_map(|p| subtract(p, earlier)).collect();
            }
            total += pieces.iter().map(|p| area(p)).sum::<f64>();
        }
    }
    total
}

fn intersect(tri: &[Point; 3], b: &TearBox) -> Vec<Point> {
    let mut poly: Vec<Point> = tri.to_vec();
    for pl in &b.planes {
        poly = keep_below(&poly, |p| pl.normal.dot(&p.coords) - pl.offset);
        if poly.is_empty() {
            break;
        }
    }
    poly
}

/// Convex pieces of `poly` outside `b`.
fn subtract(poly: &[Point], b: &TearBox) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    let mut rest = poly.to_vec();
    for pl in &b.planes {
        if rest.is_empty() {
            break;
        }
        let outside = keep_below(&rest, |p| pl.offset - pl.normal.dot(&p.coords));
        if !outside.is_empty() {
            out.push(outside);
        }
        rest = keep_below(&rest, |p| pl.normal.dot(&p.coords) - pl.offset);
    }
    out
}

fn keep_below(poly: &[Point], f: impl Fn(&Point) -> f64) -> Vec<Point> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (fa, fb) = (f(&a), f(&b));
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            let t = fa / (fa - fb);
            out.push(Point::from(a.coords * (1.0 - t) + b.coords * t));
        }
    }
    if out.len() < 3 {
        out.clear();
    }
    out
}

fn area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = nalgebra::Vector3::zeros();
    for i in 1..poly.len() - 1 {
        acc += (poly[i] - poly[0]).cross(&(poly[i + 1] - poly[0]));
    }
    0.5 * acc.norm()
}
