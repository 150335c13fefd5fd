//! Procedural stand-ins for the benchmark models, addressed as
//! `builtin:NAME` wherever a mesh path is accepted.

use lacerate::geometry::{ScalpelSample, Vector};
use lacerate::mesh::{procedural, TriMesh};
use lacerate::skinning::{normalize_skin, Skeleton};
use nalgebra::Matrix4;

/// Name and description of every built-in mesh.
pub const BUILTIN_MESHES: &[(&str, &str)] = &[
    ("cube", "unit cube, 12 faces"),
    ("icosphere", "unit icosphere, 1280 faces"),
    ("sphere-small", "unit sphere, 768 faces"),
    ("sphere-medium", "ellipsoid, 4968 faces"),
    ("sphere-large", "unit sphere, 18336 faces"),
    ("bunny-scale", "unit sphere, 2527 vertices"),
    ("bone", "elongated ellipsoid, 960 faces"),
    ("column", "elongated ellipsoid, 3000 faces"),
];

/// Builds a built-in mesh. Every mesh except the cube carries a two-bone
/// skin blended along y.
pub fn builtin_mesh(name: &str) -> Option<TriMesh> {
    let mesh = match name {
        "cube" => return Some(procedural::cube()),
        "icosphere" => procedural::icosphere(3, 1.0),
        "sphere-small" => procedural::uv_sphere(32, 13, Vector::repeat(1.0)),
        "sphere-medium" => procedural::uv_sphere(69, 37, Vector::new(1.0, 1.3, 0.8)),
        "sphere-large" => procedural::uv_sphere(191, 49, Vector::repeat(1.0)),
        "bunny-scale" => procedural::uv_sphere(101, 26, Vector::repeat(1.0)),
        "bone" => procedural::uv_sphere(24, 21, Vector::new(0.25, 1.0, 0.25)),
        "column" => procedural::uv_sphere(50, 31, Vector::new(0.5, 1.5, 0.5)),
        _ => return None,
    };
    Some(with_two_bone_skin(mesh))
}

/// Adds a root bone and a child bone one unit up, weighted by height.
pub fn with_two_bone_skin(mut mesh: TriMesh) -> TriMesh {
    let bounds = mesh.aabb();
    let (lo, hi) = (bounds.min.y, bounds.max.y);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    mesh.skin = Some(
        mesh.positions
            .iter()
            .map(|p| {
                let w = ((p.y - lo) / span).clamp(0.0, 1.0);
                normalize_skin(&[(0, 1.0 - w), (1, w)])
            })
            .collect(),
    );
    mesh.skeleton = Some(
        Skeleton::new(vec![
            ("root".to_string(), None, Matrix4::identity()),
            ("tip".to_string(), Some(0), Matrix4::new_translation(&Vector::y())),
        ])
        .expect("two-bone skeleton is valid"),
    );
    mesh
}

/// A stroke of `segments` segments over a quarter of the mesh's bounding
/// ellipsoid, blade crossing the surface.
pub fn arc_stroke(mesh: &TriMesh, segments: usize) -> Vec<ScalpelSample> {
    let b = mesh.aabb();
    let center = b.center();
    let radii = (b.max - b.min) * 0.5;
    procedural::surface_stroke(
        center,
        radii,
        Vector::new(1.0, 0.25, 0.35),
        Vector::new(-0.2, 0.3, 1.0),
        segments,
        0.9,
        1.3,
    )
}
