use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{TriMesh, Uv};
use crate::geometry::{Point, Vector};
use crate::skinning::{blend_skin, BoneWeights};

/// A vertex appended by a delta, with the barycentric provenance it was
/// interpolated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewVertex {
    pub position: Point,
    pub normal: Vector,
    pub uv: Uv,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skin: Option<BoneWeights>,
    pub parents: SmallVec<[(u32, f64); 3]>,
}

impl NewVertex {
    /// Position, normal and uv blended from `parents`; skin left empty.
    pub fn geometric(mesh: &TriMesh, parents: &[(u32, f64)]) -> NewVertex {
        let mut position = Vector::zeros();
        let mut normal = Vector::zeros();
        let mut uv = Uv::zeros();
        for &(v, l) in parents {
            let v = v as usize;
            position += mesh.positions[v].coords * l;
            normal += mesh.normals[v] * l;
            uv += mesh.uvs[v] * l;
        }
        let normal = normal
            .try_normalize(1e-12)
            .unwrap_or_else(|| mesh.normals[parents[0].0 as usize]);
        NewVertex {
            position: Point::from(position),
            normal,
            uv,
            skin: None,
            parents: parents.iter().copied().collect(),
        }
    }

    /// Like [`NewVertex::geometric`] and also blends skin weights.
    pub fn interpolated(mesh: &TriMesh, parents: &[(u32, f64)]) -> NewVertex {
        let mut v = NewVertex::geometric(mesh, parents);
        v.skin = parent_skin(mesh, parents);
        v
    }
}

/// A vertex's skin weights and its blend factor.
type WeightedSkin<'a> = (&'a [(u32, f64)], f64);

/// Skin weights blended from `parents`, or `None` when the mesh has no skin.
pub(crate) fn parent_skin(mesh: &TriMesh, parents: &[(u32, f64)]) -> Option<BoneWeights> {
    let skin = mesh.skin.as_ref()?;
    let parts: SmallVec<[WeightedSkin; 3]> = parents
        .iter()
        .map(|&(v, l)| (skin[v as usize].as_slice(), l))
        .collect();
    Some(blend_skin(&parts))
}

/// One atomic mesh mutation. Applying the delta for epoch `n + 1` to the
/// mesh at epoch `n` yields the mesh at epoch `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDelta {
    pub epoch: u64,
    /// Id the first added vertex receives.
    pub first_vertex: u32,
    /// Id the first added face receives.
    pub first_face: u32,
    pub added_vertices: Vec<NewVertex>,
    pub removed_faces: Vec<u32>,
    pub added_faces: Vec<[u32; 3]>,
}

impl MeshDelta {
    /// A delta that changes nothing but advances the epoch of `mesh`.
    pub fn empty(mesh: &TriMesh) -> MeshDelta {
        MeshDelta {
            epoch: mesh.epoch() + 1,
            first_vertex: mesh.vertex_count() as u32,
            first_face: mesh.face_count() as u32,
            added_vertices: Vec::new(),
            removed_faces: Vec::new(),
            added_faces: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.added_vertices.is_empty() && self.removed_faces.is_empty() && self.added_faces.is_empty()
    }

    /// Single-line JSON, suitable for a delta log.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("delta serializes")
    }

    pub fn from_json_line(line: &str) -> Result<MeshDelta, serde_json::Error> {
        serde_json::from_str(line)
    }
}
