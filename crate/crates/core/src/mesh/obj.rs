//! Wavefront OBJ subset plus a JSON skin sidecar.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh, Uv};
use crate::geometry::{Point, Vector};
use crate::skinning::{normalize_skin, BoneWeights, Skeleton};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarBone {
    pub name: String,
    pub parent: i64,
    /// Row-major.
    pub bind_matrix: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarWeight {
    pub v: u32,
    pub bones: Vec<(u32, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub bones: Vec<SidecarBone>,
    pub weights: Vec<SidecarWeight>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedMesh {
    pub obj: Vec<u8>,
    pub sidecar: Option<Vec<u8>>,
}

struct Corner {
    v: u32,
    vt: Option<u32>,
    vn: Option<u32>,
}

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_floats<const N: usize>(rest: &[&str], line: usize, min: usize) -> Result<[f64; N], MeshError> {
    if rest.len() < min {
        return Err(parse_err(line, format!("expected at least {min} numbers")));
    }
    let mut out = [0.0; N];
    for (i, tok) in rest.iter().take(N).enumerate() {
        out[i] = tok
            .parse::<f64>()
            .map_err(|_| parse_err(line, format!("bad number {tok:?}")))?;
        if !out[i].is_finite() {
            return Err(parse_err(line, format!("non-finite number {tok:?}")));
        }
    }
    Ok(out)
}

fn resolve(index: &str, count: usize, line: usize) -> Result<u32, MeshError> {
    let i: i64 = index
        .parse()
        .map_err(|_| parse_err(line, format!("bad index {index:?}")))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        -1
    };
    if resolved < 0 || resolved >= count as i64 {
        return Err(parse_err(line, format!("index {i} out of range")));
    }
    Ok(resolved as u32)
}

fn parse_corner(tok: &str, counts: (usize, usize, usize), line: usize) -> Result<Corner, MeshError> {
    let mut parts = tok.split('/');
    let v = resolve(parts.next().unwrap_or(""), counts.0, line)?;
    let vt = match parts.next() {
        Some(s) if !s.is_empty() => Some(resolve(s, counts.1, line)?),
        _ => None,
    };
    let vn = match parts.next() {
        Some(s) if !s.is_empty() => Some(resolve(s, counts.2, line)?),
        _ => None,
    };
    if parts.next().is_some() {
        return Err(parse_err(line, format!("bad face corner {tok:?}")));
    }
    Ok(Corner { v, vt, vn })
}

/// Parses an OBJ file and an optional skin sidecar.
///
/// Vertices are identified by position index; a vertex takes the normal and
/// uv of the first face corner that references it. Polygons are fan
/// triangulated. Normals are recomputed when any corner lacks one.
pub fn load_mesh(obj: &[u8], sidecar: Option<&[u8]>) -> Result<TriMesh, MeshError> {
    let text = std::str::from_utf8(obj).map_err(|e| parse_err(0, format!("not UTF-8: {e}")))?;
    let mut positions: Vec<Point> = Vec::new();
    let mut tex: Vec<Uv> = Vec::new();
    let mut norms: Vec<Vector> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut corner_uv: Vec<Option<u32>> = Vec::new();
    let mut corner_n: Vec<Option<u32>> = Vec::new();
    let mut all_normals = true;
    let mut warned: BTreeSet<String> = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let rest = &toks[1..];
        match toks[0] {
            "v" => {
                let [x, y, z] = parse_floats::<3>(rest, line, 3)?;
                positions.push(Point::new(x, y, z));
            }
            "vt" => {
                let [u, v] = parse_floats::<2>(rest, line, 1)?;
                tex.push(Uv::new(u, v));
            }
            "vn" => {
                let [x, y, z] = parse_floats::<3>(rest, line, 3)?;
                norms.push(Vector::new(x, y, z));
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(parse_err(line, "face needs at least 3 corners"));
                }
                let counts = (positions.len(), tex.len(), norms.len());
                let corners = rest
                    .iter()
                    .map(|t| parse_corner(t, counts, line))
                    .collect::<Result<Vec<_>, _>>()?;
                corner_uv.resize(positions.len(), None);
                corner_n.resize(positions.len(), None);
                for c in &corners {
                    let v = c.v as usize;
                    if corner_uv[v].is_none() {
                        corner_uv[v] = c.vt;
                    }
                    if corner_n[v].is_none() {
                        corner_n[v] = c.vn;
                    }
                    all_normals &= c.vn.is_some();
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0].v, corners[k].v, corners[k + 1].v]);
                }
            }
            other => {
                if warned.insert(other.to_string()) {
                    log::warn!("line {line}: ignoring unsupported directive {other:?}");
                }
            }
        }
    }

    let n = positions.len();
    corner_uv.resize(n, None);
    corner_n.resize(n, None);
    let uvs: Vec<Uv> = corner_uv
        .iter()
        .map(|t| t.map(|t| tex[t as usize]).unwrap_or_else(Uv::zeros))
        .collect();
    let normals = if all_normals && !faces.is_empty() {
        Some(
            corner_n
                .iter()
                .map(|t| {
                    t.map(|t| unit(norms[t as usize])).unwrap_or_else(Vector::z)
                })
                .collect(),
        )
    } else {
        None
    };

    let (skin, skeleton) = match sidecar {
        Some(bytes) => {
            let (s, k) = parse_sidecar(bytes, n)?;
            (Some(s), Some(k))
        }
        None => (None, None),
    };
    TriMesh::from_parts(positions, normals, uvs, skin, skeleton, faces)
}

// Leaves already-unit normals bit-identical so save/load is stable.
fn unit(n: Vector) -> Vector {
    if (n.norm() - 1.0).abs() <= 1e-12 {
        n
    } else {
        n.try_normalize(0.0).unwrap_or_else(Vector::z)
    }
}

fn parse_sidecar(bytes: &[u8], vertex_count: usize) -> Result<(Vec<BoneWeights>, Skeleton), MeshError> {
    let side: Sidecar = serde_json::from_slice(bytes).map_err(|e| MeshError::Sidecar(e.to_string()))?;
    let mut bones = Vec::with_capacity(side.bones.len());
    for (i, b) in side.bones.iter().enumerate() {
        if b.bind_matrix.len() != 16 {
            return Err(MeshError::Sidecar(format!("bone {i}: bind_matrix needs 16 numbers")));
        }
        let m = Matrix4::from_row_slice(&b.bind_matrix);
        let parent = if b.parent < 0 { None } else { Some(b.parent as usize) };
        bones.push((b.name.clone(), parent, m));
    }
    let skeleton = Skeleton::new(bones).map_err(|e| MeshError::Sidecar(e.to_string()))?;
    let mut skin: Vec<Option<BoneWeights>> = vec![None; vertex_count];
    for w in &side.weights {
        let v = w.v as usize;
        if v >= vertex_count {
            return Err(MeshError::Sidecar(format!("weights for unknown vertex {v}")));
        }
        for &(b, wt) in &w.bones {
            if b as usize >= skeleton.len() {
                return Err(MeshError::Sidecar(format!("vertex {v}: unknown bone {b}")));
            }
            if !(wt >= 0.0) || !wt.is_finite() {
                return Err(MeshError::InvalidWeights { vertex: w.v, sum: wt });
            }
        }
        let sum: f64 = w.bones.iter().map(|b| b.1).sum();
        if (sum - 1.0).abs() > 1e-1 {
            return Err(MeshError::InvalidWeights { vertex: w.v, sum });
        }
        if (sum - 1.0).abs() > 1e-3 {
            log::warn!("vertex {v}: skin weights sum to {sum}, renormalizing");
        }
        skin[v] = Some(normalize_skin(&w.bones));
    }
    let mut missing = 0usize;
    let skin = skin
        .into_iter()
        .map(|s| {
            s.unwrap_or_else(|| {
                missing += 1;
                smallvec::smallvec![(0, 1.0)]
            })
        })
        .collect();
    if missing > 0 {
        log::warn!("{missing} vertices without skin weights bound to bone 0");
    }
    Ok((skin, skeleton))
}

/// Writes live faces and the vertices they use. Numbers are written in the
/// shortest form that parses back to the same value.
pub fn save_mesh(mesh: &TriMesh) -> SavedMesh {
    let (m, _) = mesh.compacted();
    let mut s = String::with_capacity(m.vertex_count() * 96 + m.face_count() * 32);
    for p in &m.positions {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for t in &m.uvs {
        let _ = writeln!(s, "vt {} {}", t.x, t.y);
    }
    for n in &m.normals {
        let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
    }
    for f in &m.faces {
        let [a, b, c] = [f[0] + 1, f[1] + 1, f[2] + 1];
        let _ = writeln!(s, "f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}");
    }
    let sidecar = m.skin.as_ref().map(|skin| {
        let bones = m
            .skeleton
            .as_ref()
            .map(|sk| {
                sk.bones
                    .iter()
                    .map(|b| SidecarBone {
                        name: b.name.clone(),
                        parent: b.parent.map(|p| p as i64).unwrap_or(-1),
                        bind_matrix: (0..4)
                            .flat_map(|r| (0..4).map(move |c| (r, c)))
                            .map(|(r, c)| b.bind[(r, c)])
                            .collect(),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let weights = skin
            .iter()
            .enumerate()
            .map(|(v, w)| SidecarWeight {
                v: v as u32,
                bones: w.to_vec(),
            })
            .collect();
        serde_json::to_vec_pretty(&Sidecar { bones, weights }).expect("sidecar serializes")
    });
    SavedMesh {
        obj: s.into_bytes(),
        sidecar,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRI: &str = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";

    #[test]
    fn one_triangle() {
        let m = load_mesh(TRI.as_bytes(), None).unwrap();
        assert_eq!((m.vertex_count(), m.face_count()), (3, 1));
        assert!((m.normals[0] - Vector::z()).norm() < 1e-15);
        assert_eq!(m.uvs[1], Uv::zeros());
    }

    #[test]
    fn quad_is_fanned() {
        let m = load_mesh(b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n", None).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn corner_forms_and_negative_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0.5 0.5\nvn 0 0 2\no thing\nf -3/1/1 2//1 3/1\n";
        let m = load_mesh(src.as_bytes(), None).unwrap();
        assert_eq!(m.uvs[0], Uv::new(0.5, 0.5));
        // vertex 3 has no normal reference: normals recomputed
        assert!((m.normals[2] - Vector::z()).norm() < 1e-15);
    }

    #[test]
    fn malformed_line_reports_number() {
        let err = load_mesh(b"v 0 0 0\nv 1 nope 0\n", None).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }));
        let err = load_mesh(b"v 0 0 0\nf 1 2 3\n", None).unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 2, .. }));
    }

    #[test]
    fn sidecar_weights() {
        let side = br#"{"bones":[{"name":"a","parent":-1,"bind_matrix":[1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1]},
            {"name":"b","parent":0,"bind_matrix":[1,0,0,0,0,1,0,1,0,0,1,0,0,0,0,1]}],
            "weights":[{"v":0,"bones":[[0,0.6],[1,0.4]]},{"v":1,"bones":[[1,0.5005],[0,0.5]]}]}"#;
        let m = load_mesh(TRI.as_bytes(), Some(side)).unwrap();
        let skin = m.skin.as_ref().unwrap();
        let sum = |v: usize| skin[v].iter().map(|w| w.1).sum::<f64>();
        assert!((sum(0) - 1.0).abs() < 1e-12);
        assert!((sum(1) - 1.0).abs() < 1e-12);
        assert_eq!(skin[2].as_slice(), &[(0, 1.0)]);
        assert_eq!(m.skeleton.as_ref().unwrap().bones[1].bind[(1, 3)], 1.0);

        let bad = br#"{"bones":[{"name":"a","parent":-1,"bind_matrix":[1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1]}],
            "weights":[{"v":0,"bones":[[0,0.5]]}]}"#;
        assert!(matches!(
            load_mesh(TRI.as_bytes(), Some(bad)),
            Err(MeshError::InvalidWeights { vertex: 0, .. })
        ));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = crate::mesh::procedural::icosphere(2, 1.3);
        let saved = save_mesh(&m);
        let back = load_mesh(&saved.obj, None).unwrap();
        assert_eq!(back.positions, m.positions);
        assert_eq!(back.uvs, m.uvs);
        assert_eq!(back.faces, m.faces);
        assert!(save_mesh(&back).obj == saved.obj);
    }

    #[test]
    fn skinned_round_trip() {
        let side = br#"{"bones":[{"name":"a","parent":-1,"bind_matrix":[1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1]}],
            "weights":[{"v":0,"bones":[[0,1]]},{"v":1,"bones":[[0,1]]},{"v":2,"bones":[[0,1]]}]}"#;
        let m = load_mesh(TRI.as_bytes(), Some(side)).unwrap();
        let saved = save_mesh(&m);
        let back = load_mesh(&saved.obj, saved.sidecar.as_deref()).unwrap();
        assert_eq!(back.skin, m.skin);
        assert_eq!(back.skeleton, m.skeleton);
    }
}
