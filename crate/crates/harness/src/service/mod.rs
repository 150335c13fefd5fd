//! Interactive session service: one worker per connection owning a mesh
//! and its particles, driven by length-prefixed JSON messages.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, ServerMessage, PROTOCOL_VERSION};
pub use server::{handle_connection, read_frame, serve, write_frame, MAX_FRAME_BYTES};
pub use session::{Session, SessionParams};
