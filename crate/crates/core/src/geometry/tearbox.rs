use serde::{Deserialize, Serialize};

use super::{Aabb, GeometryError, Plane, Point, Vector};

/// One timestamped scalpel pose: the blade runs from `tip` (inside the
/// tissue) to `end` (the handle side).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalpelSample {
    pub t_ms: f64,
    pub tip: Point,
    pub end: Point,
}

impl ScalpelSample {
    pub fn new(t_ms: f64, tip: Point, end: Point) -> Self {
        ScalpelSample { t_ms, tip, end }
    }
}

/// Index of a bounding plane inside [`TearBox::planes`]. The order is also
/// the clipping order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoxPlane {
    LateralNeg = 0,
    LateralPos = 1,
    Entry = 2,
    Exit = 3,
    Top = 4,
    Bottom = 5,
}

impl BoxPlane {
    pub const ALL: [BoxPlane; 6] = [
        BoxPlane::LateralNeg,
        BoxPlane::LateralPos,
        BoxPlane::Entry,
        BoxPlane::Exit,
        BoxPlane::Top,
        BoxPlane::Bottom,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> BoxPlane {
        BoxPlane::ALL[i]
    }

    pub fn opposite(self) -> BoxPlane {
        match self {
            BoxPlane::LateralNeg => BoxPlane::LateralPos,
            BoxPlane::LateralPos => BoxPlane::LateralNeg,
            BoxPlane::Entry => BoxPlane::Exit,
            BoxPlane::Exit => BoxPlane::Entry,
            BoxPlane::Top => BoxPlane::Bottom,
            BoxPlane::Bottom => BoxPlane::Top,
        }
    }

    /// The four planes bordering this one.
    pub fn adjacent(self) -> impl Iterator<Item = BoxPlane> {
        let opp = self.opposite();
        BoxPlane::ALL
            .into_iter()
            .filter(move |&p| p != self && p != opp)
    }
}

/// Clipping volume of one tear segment: six planes with outward normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TearBox {
    pub planes: [Plane; 6],
    /// Mid-plane containing the scalpel at the segment start and both tip
    /// positions. Its normal matches the `LateralPos` normal.
    pub tear_plane: Plane,
    /// Tip position at segment start and end.
    pub segment_span: (Point, Point),
    pub width: f64,
    /// Unit scalpel axis (tip towards handle) at segment start.
    pub axis: Vector,
}

impl TearBox {
    pub fn plane(&self, which: BoxPlane) -> &Plane {
        &self.planes[which.index()]
    }

    /// Inside every plane by more than `eps`.
    pub fn contains_strict(&self, p: &Point, eps: f64) -> bool {
        self.planes.iter().all(|pl| pl.signed_distance(p) < -eps)
    }

    /// Inside or within `eps` of every plane.
    pub fn contains_closed(&self, p: &Point, eps: f64) -> bool {
        self.planes.iter().all(|pl| pl.signed_distance(p) <= eps)
    }

    /// True iff every point is on the inner side (closed, within `eps`) of
    /// the four planes adjacent to `which`.
    pub fn band_test(&self, points: &[Point], which: BoxPlane, eps: f64) -> bool {
        points.iter().all(|p| {
            which
                .adjacent()
                .all(|adj| self.plane(adj).signed_distance(p) <= eps)
        })
    }

    /// Length of the part of segment `a b` that lies inside the closed box
    /// restricted to the planes in `planes`.
    pub fn clipped_length(&self, a: &Point, b: &Point, planes: impl Iterator<Item = BoxPlane>, eps: f64) -> f64 {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let dir = b - a;
        for which in planes {
            let pl = self.plane(which);
            let da = pl.signed_distance(a) - eps;
            let dd = pl.normal.dot(&dir);
            if dd.abs() < 1e-300 {
                if da > 0.0 {
                    return 0.0;
                }
                continue;
            }
            let t = -da / dd;
            if dd > 0.0 {
                t1 = t1.min(t);
            } else {
                t0 = t0.max(t);
            }
            if t0 > t1 {
                return 0.0;
            }
        }
        (t1 - t0).max(0.0) * dir.norm()
    }

    /// Does segment `a b` touch the closed box?
    pub fn segment_intersects(&self, a: &Point, b: &Point, eps: f64) -> bool {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        let dir = b - a;
        for pl in &self.planes {
            let da = pl.signed_distance(a) - eps;
            let dd = pl.normal.dot(&dir);
            if dd.abs() < 1e-300 {
                if da > 0.0 {
                    return false;
                }
                continue;
            }
            let t = -da / dd;
            if dd > 0.0 {
                t1 = t1.min(t);
            } else {
                t0 = t0.max(t);
            }
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    /// Lower bound on the distance from `p` to the box.
    pub fn distance_lower_bound(&self, p: &Point) -> f64 {
        self.planes
            .iter()
            .map(|pl| pl.signed_distance(p))
            .fold(0.0, f64::max)
    }

    /// Conservative overlap test: false only when some plane has the whole
    /// AABB strictly outside it.
    pub fn may_overlap_aabb(&self, aabb: &Aabb, eps: f64) -> bool {
        if aabb.is_empty() {
            return false;
        }
        let corners = aabb.corners();
        self.planes.iter().all(|pl| {
            corners
                .iter()
                .any(|c| pl.signed_distance(c) <= eps)
        })
    }

    /// Does the segment from `a` to `b` cross the tear plane strictly, at a
    /// point inside the box's cross-section there (entry, exit, top and
    /// bottom planes, closed)?
    pub fn separates(&self, a: &Point, b: &Point, eps: f64) -> bool {
        let da = self.tear_plane.signed_distance(a);
        let db = self.tear_plane.signed_distance(b);
        if !((da > eps && db < -eps) || (da < -eps && db > eps)) {
            return false;
        }
        let t = da / (da - db);
        let x = a + (b - a) * t;
        self.band_test(&[x], BoxPlane::LateralPos, eps)
    }
}

/// Builds one box per tear segment from consecutive scalpel samples.
///
/// Box axes are the tip motion direction, the scalpel axis at the segment
/// start and their cross product. Consecutive boxes share an interface
/// plane that contains the common scalpel segment and bisects the turn, so
/// box `k`'s exit plane is box `k + 1`'s entry plane flipped. Samples whose
/// tip motion is (nearly) parallel to the scalpel axis are merged into the
/// previous sample.
pub fn build_tear_boxes(samples: &[ScalpelSample], width: f64) -> Result<Vec<TearBox>, GeometryError> {
    let width = width.max(0.0);
    let mut kept: Vec<ScalpelSample> = Vec::with_capacity(samples.len());
    for s in samples {
        match kept.last() {
            None => kept.push(*s),
            Some(last) => {
                if segment_frame(last, s).is_some() {
                    kept.push(*s);
                }
            }
        }
    }
    if kept.len() < 2 {
        return Err(GeometryError::TooFewSamples(kept.len()));
    }
    let frames: Vec<Frame> = kept
        .windows(2)
        .map(|w| segment_frame(&w[0], &w[1]).expect("checked above"))
        .collect();
    let half = 0.5 * width;
    let mut boxes = Vec::with_capacity(frames.len());
    for (k, f) in frames.iter().enumerate() {
        let (s0, s1) = (&kept[k], &kept[k + 1]);
        let lat = f.lateral;
        let c = lat.dot(&s0.tip.coords);
        let lateral_neg = Plane { normal: -lat, offset: -c + half };
        let lateral_pos = Plane { normal: lat, offset: c + half };

        let entry_normal = if k == 0 {
            f.forward
        } else {
            interface_normal(&frames[k - 1], f, &kept[k])
        };
        let entry = Plane {
            normal: -entry_normal,
            offset: -entry_normal.dot(&s0.tip.coords),
        };
        let exit_normal = if k + 1 == frames.len() {
            f.forward
        } else {
            interface_normal(f, &frames[k + 1], &kept[k + 1])
        };
        let exit = Plane {
            normal: exit_normal,
            offset: exit_normal.dot(&s1.tip.coords),
        };

        let a = f.axis;
        let top_off = a.dot(&s0.end.coords).max(a.dot(&s1.end.coords));
        let bottom_off = a.dot(&s0.tip.coords).min(a.dot(&s1.tip.coords)) - half;
        let top = Plane { normal: a, offset: top_off };
        let bottom = Plane { normal: -a, offset: -bottom_off };

        boxes.push(TearBox {
            planes: [lateral_neg, lateral_pos, entry, exit, top, bottom],
            tear_plane: Plane { normal: lat, offset: c },
            segment_span: (s0.tip, s1.tip),
            width,
            axis: a,
        });
    }
    Ok(boxes)
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    forward: Vector,
    axis: Vector,
    lateral: Vector,
}

fn segment_frame(from: &ScalpelSample, to: &ScalpelSample) -> Option<Frame> {
    let axis = from.end - from.tip;
    let axis_len = axis.norm();
    if !(axis_len > 0.0) {
        return None;
    }
    let axis = axis / axis_len;
    let motion = to.tip - from.tip;
    let len = motion.norm();
    if !(len > 0.0) {
        return None;
    }
    let perp = motion - axis * motion.dot(&axis);
    if perp.norm() <= 1e-6 * len {
        return None;
    }
    let forward = perp.normalize();
    let lateral = forward.cross(&axis).normalize();
    Some(Frame { forward, axis, lateral })
}

/// Normal of the plane shared by two consecutive boxes, pointing along the
/// stroke. Falls back to the leading box's forward direction on reversals.
fn interface_normal(lead: &Frame, next: &Frame, joint: &ScalpelSample) -> Vector {
    let axis = (joint.end - joint.tip).try_normalize(0.0).unwrap_or(next.axis);
    let bisector = lead.forward + next.forward;
    let projected = bisector - axis * bisector.dot(&axis);
    match projected.try_normalize(1e-9) {
        Some(m) if m.dot(&lead.forward) > 1e-6 && m.dot(&next.forward) > 1e-6 => m,
        _ => lead.forward,
    }
}
