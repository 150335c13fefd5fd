//! Turning a raw scalpel pose stream into tear samples and boxes.

use crate::geometry::{build_tear_boxes, ScalpelSample, TearBox};

/// Default distance threshold as a fraction of the mesh diagonal.
pub const DEFAULT_DISTANCE_FRACTION: f64 = 0.02;
pub const DEFAULT_ANGLE_THRESHOLD_DEG: f64 = 25.0;

/// Keeps a raw pose when it is at least `distance_threshold` from the last
/// kept pose, when the stroke turns by more than `angle_threshold_deg`
/// there, or when it is the final pose. The first pose is always kept;
/// poses that have not moved are dropped.
pub fn sample_stroke(raw: &[ScalpelSample], distance_threshold: f64, angle_threshold_deg: f64) -> Vec<ScalpelSample> {
    let mut s = Sampler::new(distance_threshold, angle_threshold_deg);
    let mut out: Vec<ScalpelSample> = raw.iter().filter_map(|r| s.push(*r)).collect();
    out.extend(s.finish());
    out
}

/// Online form of [`sample_stroke`]: a pose is decided once its successor
/// is known.
#[derive(Debug, Clone)]
struct Sampler {
    distance: f64,
    cos_angle: f64,
    last_kept: Option<ScalpelSample>,
    prev: Option<ScalpelSample>,
    pending: Option<ScalpelSample>,
}

impl Sampler {
    fn new(distance: f64, angle_deg: f64) -> Self {
        Sampler {
            distance: distance * (1.0 - 1e-9),
            cos_angle: angle_deg.to_radians().cos(),
            last_kept: None,
            prev: None,
            pending: None,
        }
    }

    fn push(&mut self, raw: ScalpelSample) -> Option<ScalpelSample> {
        let Some(last) = self.last_kept else {
            self.last_kept = Some(raw);
            self.prev = Some(raw);
            return Some(raw);
        };
        let mut out = None;
        if let Some(p) = self.pending.take() {
            let before = p.tip - self.prev.unwrap_or(last).tip;
            let after = raw.tip - p.tip;
            let (lb, la) = (before.norm(), after.norm());
            let turned = lb > 0.0 && la > 0.0 && before.dot(&after) / (lb * la) < self.cos_angle;
            let moved = (p.tip - last.tip).norm();
            if moved > 0.0 && (moved >= self.distance || turned) {
                self.last_kept = Some(p);
                out = Some(p);
            }
            self.prev = Some(p);
        }
        self.pending = Some(raw);
        out
    }

    fn finish(&mut self) -> Option<ScalpelSample> {
        let p = self.pending.take()?;
        let last = self.last_kept?;
        ((p.tip - last.tip).norm() > 0.0).then(|| {
            self.last_kept = Some(p);
            p
        })
    }
}

/// Collects a stroke progressively and hands out each tear box once it can
/// no longer change. A box's exit plane depends on the following sample,
/// so box `k` is released when box `k + 1` exists or the stroke ends.
#[derive(Debug, Clone)]
pub struct StrokeBuilder {
    sampler: Sampler,
    kept: Vec<ScalpelSample>,
    width: f64,
    released: usize,
}

impl StrokeBuilder {
    pub fn new(width: f64, distance_threshold: f64, angle_threshold_deg: f64) -> Self {
        StrokeBuilder {
            sampler: Sampler::new(distance_threshold, angle_threshold_deg),
            kept: Vec::new(),
            width,
            released: 0,
        }
    }

    pub fn samples(&self) -> &[ScalpelSample] {
        &self.kept
    }

    /// Feeds one raw pose; returns boxes that became final.
    pub fn push(&mut self, raw: ScalpelSample) -> Vec<TearBox> {
        if let Some(s) = self.sampler.push(raw) {
            self.kept.push(s);
        }
        self.release(false)
    }

    /// Ends the stroke; returns the remaining boxes.
    pub fn finish(&mut self) -> Vec<TearBox> {
        if let Some(s) = self.sampler.finish() {
            self.kept.push(s);
        }
        self.release(true)
    }

    fn release(&mut self, all: bool) -> Vec<TearBox> {
        let Ok(boxes) = build_tear_boxes(&self.kept, self.width) else {
            return Vec::new();
        };
        let end = if all { boxes.len() } else { boxes.len().saturating_sub(1) };
        if end <= self.released {
            return Vec::new();
        }
        let out = boxes[self.released..end].to_vec();
        self.released = end;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Vector};

    fn pose(t: f64, x: f64, y: f64) -> ScalpelSample {
        ScalpelSample::new(t, Point::new(x, y, 0.0), Point::new(x, y, 1.0))
    }

    #[test]
    fn straight_drag() {
        let raw: Vec<_> = (0..=100).map(|i| pose(i as f64, i as f64 * 0.01, 0.0)).collect();
        let s = sample_stroke(&raw, 0.1, 25.0);
        assert_eq!(s.len(), 11);
        assert_eq!(s[0], raw[0]);
        assert_eq!(*s.last().unwrap(), raw[100]);
    }

    #[test]
    fn turn_apex_is_kept() {
        let mut raw: Vec<_> = (0..=10).map(|i| pose(i as f64, i as f64 * 0.03, 0.0)).collect();
        raw.extend((1..=10).map(|i| pose(10.0 + i as f64, 0.3, i as f64 * 0.03)));
        let s = sample_stroke(&raw, 1.0, 25.0);
        assert!(s.iter().any(|p| p.tip == Point::new(0.3, 0.0, 0.0)));
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn stationary_scalpel() {
        let raw: Vec<_> = (0..10).map(|i| pose(i as f64, 0.5, 0.5)).collect();
        assert_eq!(sample_stroke(&raw, 0.1, 25.0).len(), 1);
    }

    #[test]
    fn builder_matches_batch_boxes() {
        let raw: Vec<_> = (0..=40)
            .map(|i| {
                let a = i as f64 * 0.05;
                ScalpelSample::new(i as f64, Point::new(a.cos(), a.sin(), 0.0), Point::new(a.cos(), a.sin(), 0.0) + Vector::z())
            })
            .collect();
        let mut b = StrokeBuilder::new(0.05, 0.2, 25.0);
        let mut boxes = Vec::new();
        for r in &raw {
            boxes.extend(b.push(*r));
        }
        boxes.extend(b.finish());
        let batch = build_tear_boxes(&sample_stroke(&raw, 0.2, 25.0), 0.05).unwrap();
        assert_eq!(boxes, batch);
    }
}
