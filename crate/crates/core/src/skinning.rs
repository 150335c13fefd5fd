//! Linear-blend skinning and skin-weight interpolation.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::geometry::Point;

/// Per-vertex `(bone id, weight)` list.
pub type BoneWeights = SmallVec<[(u32, f64); 4]>;

pub const MAX_BONES_PER_VERTEX: usize = 4;
pub const PRUNE_BELOW: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkinError {
    #[error("bone weights sum to {0}")]
    BadWeights(f64),
    #[error("bone {0} references unknown bone {1}")]
    UnknownBone(usize, u32),
    #[error("bone {0} has parent {1}, parents must come first")]
    BadParent(usize, usize),
    #[error("bind matrix of bone {0} is not invertible")]
    SingularBind(usize),
    #[error("expected {expected} pose matrices, got {got}")]
    PoseCount { expected: usize, got: usize },
    #[error("mesh has no skin")]
    NoSkin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bone {
    pub name: String,
    pub parent: Option<usize>,
    pub bind: Matrix4<f64>,
    pub pose: Matrix4<f64>,
    inv_bind: Matrix4<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Skeleton {
    pub bones: Vec<Bone>,
}

impl Skeleton {
    /// Bones as `(name, parent, bind)`. Poses start at the bind matrices, so
    /// the skin matrices start as identities.
    pub fn new(bones: Vec<(String, Option<usize>, Matrix4<f64>)>) -> Result<Self, SkinError> {
        let mut out = Vec::with_capacity(bones.len());
        for (i, (name, parent, bind)) in bones.into_iter().enumerate() {
            if let Some(p) = parent {
                if p >= i {
                    return Err(SkinError::BadParent(i, p));
                }
            }
            let inv_bind = bind.try_inverse().ok_or(SkinError::SingularBind(i))?;
            out.push(Bone {
                name,
                parent,
                bind,
                pose: bind,
                inv_bind,
            });
        }
        Ok(Skeleton { bones: out })
    }

    pub fn len(&self) -> usize {
        self.bones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bones.is_empty()
    }

    /// Sets every bone's current model-space pose.
    pub fn set_pose(&mut self, poses: &[Matrix4<f64>]) -> Result<(), SkinError> {
        if poses.len() != self.bones.len() {
            return Err(SkinError::PoseCount {
                expected: self.bones.len(),
                got: poses.len(),
            });
        }
        for (b, p) in self.bones.iter_mut().zip(poses) {
            b.pose = *p;
        }
        Ok(())
    }

    pub fn reset_pose(&mut self) {
        for b in &mut self.bones {
            b.pose = b.bind;
        }
    }

    /// `Pose_b · Bind_b⁻¹` for every bone.
    pub fn skin_matrices(&self) -> Vec<Matrix4<f64>> {
        self.bones.iter().map(|b| b.pose * b.inv_bind).collect()
    }
}

/// Poses a rest-space point: `Σ w_b · Pose_b · Bind_b⁻¹ · v`.
pub fn lbs_point(v: &Point, weights: &[(u32, f64)], skeleton: &Skeleton) -> Result<Point, SkinError> {
    let sum: f64 = weights.iter().map(|w| w.1).sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(SkinError::BadWeights(sum));
    }
    for &(b, _) in weights {
        if b as usize >= skeleton.len() {
            return Err(SkinError::UnknownBone(skeleton.len(), b));
        }
    }
    Ok(lbs_with(v, weights, &skeleton.skin_matrices()))
}

/// [`lbs_point`] with precomputed skin matrices and no validation.
pub fn lbs_with(v: &Point, weights: &[(u32, f64)], skin_matrices: &[Matrix4<f64>]) -> Point {
    let h = v.to_homogeneous();
    let mut acc = nalgebra::Vector4::zeros();
    for &(b, w) in weights {
        acc += skin_matrices[b as usize] * h * w;
    }
    Point::new(acc.x, acc.y, acc.z)
}

/// Skin weights at parameter `t` along the edge `a → b`.
pub fn interpolate_skin(a: &[(u32, f64)], b: &[(u32, f64)], t: f64) -> BoneWeights {
    if t == 0.0 {
        return a.iter().copied().collect();
    }
    if t == 1.0 {
        return b.iter().copied().collect();
    }
    blend_skin(&[(a, 1.0 - t), (b, t)])
}

/// Convex blend of several weight lists, then [`normalize_skin`].
pub fn blend_skin(parts: &[(&[(u32, f64)], f64)]) -> BoneWeights {
    let mut acc: SmallVec<[(u32, f64); 8]> = SmallVec::new();
    for &(list, lambda) in parts {
        if lambda == 0.0 {
            continue;
        }
        for &(bone, w) in list {
            match acc.iter_mut().find(|e| e.0 == bone) {
                Some(e) => e.1 += lambda * w,
                None => acc.push((bone, lambda * w)),
            }
        }
    }
    normalize_skin(&acc)
}

/// Renormalizes, drops weights below the prune threshold, keeps at most
/// four bones (largest first) and renormalizes again. Output is sorted by
/// bone id.
pub fn normalize_skin(weights: &[(u32, f64)]) -> BoneWeights {
    let mut list: Vec<(u32, f64)> = weights.iter().copied().filter(|w| w.1 > 0.0).collect();
    let sum: f64 = list.iter().map(|w| w.1).sum();
    if !(sum > 0.0) {
        return BoneWeights::new();
    }
    for w in &mut list {
        w.1 /= sum;
    }
    let largest = list.iter().map(|w| w.1).fold(0.0, f64::max);
    list.retain(|w| w.1 >= PRUNE_BELOW || w.1 == largest);
    list.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    list.truncate(MAX_BONES_PER_VERTEX);
    list.sort_by_key(|w| w.0);
    let sum: f64 = list.iter().map(|w| w.1).sum();
    list.into_iter().map(|(b, w)| (b, w / sum)).collect()
}
