//! Clipping a single triangle against one tear box.

use crate::geometry::{
    polygon_area, split_convex_polygon, BoxPlane, Point, Tolerance, TearBox,
};

/// Where a polygon vertex came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Source {
    Corner(u8),
    /// Created on `plane`; `None` is the tear plane of a zero-width box.
    New(Option<BoxPlane>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PieceVertex {
    pub bary: [f64; 3],
    pub source: Source,
}

impl PieceVertex {
    fn position(&self, tri: &[Point; 3]) -> Point {
        Point::from(tri[0].coords * self.bary[0] + tri[1].coords * self.bary[1] + tri[2].coords * self.bary[2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FaceOutcome {
    Untouched,
    /// The face is removed and replaced by these convex pieces (possibly
    /// none).
    Replaced(Vec<Vec<PieceVertex>>),
}

fn corners() -> Vec<PieceVertex> {
    (0..3u8)
        .map(|i| {
            let mut bary = [0.0; 3];
            bary[i as usize] = 1.0;
            PieceVertex {
                bary,
                source: Source::Corner(i),
            }
        })
        .collect()
}

fn blend(a: &PieceVertex, b: &PieceVertex, t: f64, plane: Option<BoxPlane>) -> PieceVertex {
    let bary = [0, 1, 2].map(|k| a.bary[k] * (1.0 - t) + b.bary[k] * t);
    PieceVertex {
        bary,
        source: Source::New(plane),
    }
}

/// Clips `tri` by `tear_box`, keeping the material outside the box.
pub(crate) fn clip_face(tri: &[Point; 3], tear_box: &TearBox, tol: Tolerance) -> FaceOutcome {
    let eps = tol.side;
    if tear_box.width <= eps {
        return slit_face(tri, tear_box, tol);
    }
    let dist: Vec<[f64; 3]> = tear_box
        .planes
        .iter()
        .map(|pl| [0, 1, 2].map(|i| pl.signed_distance(&tri[i])))
        .collect();
    if dist.iter().any(|d| d.iter().all(|&x| x >= -eps)) {
        return FaceOutcome::Untouched;
    }
    if dist.iter().all(|d| d.iter().all(|&x| x <= eps)) {
        return FaceOutcome::Replaced(Vec::new());
    }

    let pos = |v: &PieceVertex| v.position(tri);
    let mut rest = corners();
    let mut out: Vec<Vec<PieceVertex>> = Vec::new();
    let mut split_any = false;
    let mut skipped = false;
    for which in BoxPlane::ALL {
        let pl = tear_box.plane(which);
        let d: Vec<f64> = rest.iter().map(|v| pl.signed_distance(&pos(v))).collect();
        if d.iter().all(|&x| x <= eps) {
            continue;
        }
        if d.iter().all(|&x| x >= -eps) {
            out.push(std::mem::take(&mut rest));
            break;
        }
        let split = split_convex_polygon(&rest, |v| pl.signed_distance(&pos(v)), eps, |a, b, t| {
            blend(a, b, t, Some(which))
        });
        // Only cut along this plane where the cut line actually borders
        // the box; elsewhere the later planes decide.
        let in_band = split.crossings.len() == 2 && {
            let (a, b) = (pos(&split.crossings[0]), pos(&split.crossings[1]));
            let others = BoxPlane::ALL.into_iter().filter(move |&p| p != which);
            tear_box.clipped_length(&a, &b, others, eps) > eps
        };
        if in_band {
            if !split.positive.is_empty() {
                out.push(split.positive);
            }
            rest = split.negative;
            split_any = true;
            if rest.is_empty() {
                break;
            }
        } else {
            skipped = true;
        }
    }

    if !rest.is_empty() && skipped {
        let inside = clip_inside(&rest, tri, tear_box, eps);
        if polygon_area(&inside.iter().map(pos).collect::<Vec<_>>()) > tol.area {
            rest = ungated(rest, tri, tear_box, eps, &mut out);
            split_any = true;
        } else {
            out.push(std::mem::take(&mut rest));
        }
    }
    // Whatever is left in `rest` lies inside the box and is discarded.
    if !split_any {
        return if rest.is_empty() {
            FaceOutcome::Untouched
        } else {
            FaceOutcome::Replaced(Vec::new())
        };
    }
    FaceOutcome::Replaced(out)
}

/// Plain half-space clipping of `poly` by every plane; outside pieces are
/// appended to `out` and the inside remainder returned.
fn ungated(
    mut poly: Vec<PieceVertex>,
    tri: &[Point; 3],
    tear_box: &TearBox,
    eps: f64,
    out: &mut Vec<Vec<PieceVertex>>,
) -> Vec<PieceVertex> {
    for which in BoxPlane::ALL {
        let pl = tear_box.plane(which);
        let split = split_convex_polygon(&poly, |v| pl.signed_distance(&v.position(tri)), eps, |a, b, t| {
            blend(a, b, t, Some(which))
        });
        if !split.positive.is_empty() {
            out.push(split.positive);
        }
        poly = split.negative;
        if poly.is_empty() {
            break;
        }
    }
    poly
}

fn clip_inside(poly: &[PieceVertex], tri: &[Point; 3], tear_box: &TearBox, eps: f64) -> Vec<PieceVertex> {
    let mut scratch = Vec::new();
    ungated(poly.to_vec(), tri, tear_box, eps, &mut scratch)
}

/// Zero-width box: split along the tear plane where the cut line lies in
/// the box band. Nothing is removed.
fn slit_face(tri: &[Point; 3], tear_box: &TearBox, tol: Tolerance) -> FaceOutcome {
    let eps = tol.side;
    let plane = &tear_box.tear_plane;
    let d = [0, 1, 2].map(|i| plane.signed_distance(&tri[i]));
    if !(d.iter().any(|&x| x > eps) && d.iter().any(|&x| x < -eps)) {
        return FaceOutcome::Untouched;
    }
    let split = split_convex_polygon(&corners(), |v| plane.signed_distance(&v.position(tri)), eps, |a, b, t| {
        blend(a, b, t, None)
    });
    let band = [BoxPlane::Entry, BoxPlane::Exit, BoxPlane::Top, BoxPlane::Bottom];
    let in_band = split.crossings.len() == 2 && {
        let (a, b) = (split.crossings[0].position(tri), split.crossings[1].position(tri));
        tear_box.clipped_length(&a, &b, band.into_iter(), eps) > eps
    };
    if !in_band || split.positive.is_empty() || split.negative.is_empty() {
        return FaceOutcome::Untouched;
    }
    FaceOutcome::Replaced(vec![split.positive, split.negative])
}
