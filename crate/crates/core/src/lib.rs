//! Progressive tearing, plane cutting and spring-anchored particle
//! deformation for triangle meshes.

pub mod cut;
pub mod geometry;
pub mod mesh;
pub mod particles;
pub mod skinning;
pub mod tear;
