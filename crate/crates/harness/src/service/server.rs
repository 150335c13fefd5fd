//! TCP transport: each frame is a big-endian `u32` byte length followed by
//! one JSON message.

use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use super::protocol::{ClientMessage, ServerMessage};
use super::session::{Session, SessionParams};

/// Frames longer than this close the connection.
pub const MAX_FRAME_BYTES: usize = 64 << 20;

/// Reads one frame; `Ok(None)` on a clean end of stream.
pub fn read_frame(r: &mut impl Read) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let n = u32::from_be_bytes(len) as usize;
    if n > MAX_FRAME_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("frame of {n} bytes exceeds the limit")));
    }
    let mut body = vec![0u8; n];
    r.read_exact(&mut body)?;
    Ok(Some(body))
}

pub fn write_frame(w: &mut impl Write, body: &[u8]) -> io::Result<()> {
    let n = u32::try_from(body.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too long"))?;
    w.write_all(&n.to_be_bytes())?;
    w.write_all(body)?;
    w.flush()
}

fn send(w: &mut impl Write, msg: &ServerMessage) -> io::Result<()> {
    write_frame(w, &serde_json::to_vec(msg).expect("server message serializes"))
}

/// Runs one session until the peer disconnects or breaks the protocol.
/// A framing or parse error is answered with a fatal `Error` frame.
pub fn handle_connection<S: Read + Write>(stream: &mut S, params: SessionParams) -> io::Result<()> {
    let mut session = Session::new(params);
    loop {
        let body = match read_frame(stream) {
            Ok(Some(b)) => b,
            Ok(None) => return Ok(()),
            Err(e) if e.kind() == io::ErrorKind::InvalidData || e.kind() == io::ErrorKind::UnexpectedEof => {
                return send(stream, &ServerMessage::error(format!("bad frame: {e}"), true));
            }
            Err(e) => return Err(e),
        };
        let msg: ClientMessage = match serde_json::from_slice(&body) {
            Ok(m) => m,
            Err(e) => return send(stream, &ServerMessage::error(format!("bad message: {e}"), true)),
        };
        for reply in session.handle(msg) {
            send(stream, &reply)?;
        }
    }
}

/// Accepts connections forever, one thread per session.
pub fn serve(listener: TcpListener, params: SessionParams) -> io::Result<()> {
    for stream in listener.incoming() {
        let mut stream: TcpStream = stream?;
        let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
        stream.set_nodelay(true)?;
        thread::spawn(move || {
            log::info!("session {peer} opened");
            if let Err(e) = handle_connection(&mut stream, params) {
                log::warn!("session {peer}: {e}");
            }
            log::info!("session {peer} closed");
        });
    }
    Ok(())
}
