//! Message schema. Every message is a JSON object whose `type` field names
//! the variant; see `docs/protocol.md`.

use lacerate::geometry::{Point, Vector};
use lacerate::mesh::MeshDelta;
use serde::{Deserialize, Serialize};

use super::session::SessionParams;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ClientMessage {
    /// Loads `builtin:NAME` or an OBJ path from `source`, or inline OBJ text
    /// from `obj` with an optional inline skin sidecar.
    LoadMesh {
        #[serde(default)]
        source: Option<String>,
        #[serde(default)]
        obj: Option<String>,
        #[serde(default)]
        sidecar: Option<String>,
    },
    /// Replaces the session parameters. Stroke parameters apply from the
    /// next stroke, particle parameters from the next `LoadMesh`.
    SetParams(SessionParams),
    /// One raw scalpel pose of the current stroke.
    ScalpelSample { t_ms: f64, tip: Point, end: Point },
    EndStroke,
    /// Cuts by `a x + b y + c z + d = 0`, or by the plane through `points`
    /// (entry, tip, end) when `plane` is absent.
    CutPlane {
        #[serde(default)]
        plane: Option<[f64; 4]>,
        #[serde(default)]
        points: Option<[Point; 3]>,
    },
    /// Advances the simulation `steps` times by `dt` seconds.
    StepSim {
        #[serde(default)]
        dt: Option<f64>,
        #[serde(default)]
        steps: Option<u32>,
    },
    /// Adds a force on a particle for the next `StepSim`.
    ApplyForce { particle: u32, force: Vector },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ServerMessage {
    /// Full mesh state; sent after `LoadMesh` and after a cut.
    MeshLoaded {
        version: u32,
        epoch: u64,
        vertices: usize,
        faces: usize,
        particles: usize,
        positions: Vec<Point>,
        triangles: Vec<[u32; 3]>,
    },
    /// One accepted tear segment.
    MeshDelta(MeshDelta),
    /// Deformed positions of the vertices that moved since the previous
    /// frame, and every particle center.
    ParticleFrame {
        step: u64,
        moved: Vec<(u32, Point)>,
        centers: Vec<Point>,
    },
    Error { message: String, fatal: bool },
}

impl ServerMessage {
    pub fn error(message: impl Into<String>, fatal: bool) -> Self {
        ServerMessage::Error {
            message: message.into(),
            fatal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_json() {
        let m: ClientMessage = serde_json::from_str(r#"{"type":"ScalpelSample","t_ms":1,"tip":[0,0,0],"end":[0,0,1]}"#).unwrap();
        assert!(matches!(m, ClientMessage::ScalpelSample { .. }));
        let m: ClientMessage = serde_json::from_str(r#"{"type":"EndStroke"}"#).unwrap();
        assert_eq!(m, ClientMessage::EndStroke);
        let m: ClientMessage = serde_json::from_str(r#"{"type":"StepSim"}"#).unwrap();
        assert_eq!(m, ClientMessage::StepSim { dt: None, steps: None });
        let e = serde_json::to_value(ServerMessage::error("x", true)).unwrap();
        assert_eq!(e, serde_json::json!({"type": "Error", "message": "x", "fatal": true}));
        let p: ClientMessage = serde_json::from_str(r#"{"type":"SetParams","width":0.1}"#).unwrap();
        assert!(matches!(p, ClientMessage::SetParams(SessionParams { width, .. }) if width == 0.1));
    }
}
