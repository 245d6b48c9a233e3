use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{info, warn};
use tungstenite::handshake::server::{ErrorResponse, Request, Response};
use tungstenite::http::StatusCode;
use tungstenite::{Message as Frame, WebSocket};

use crate::link::{Incoming, Link};
use crate::PlatformError;

pub const WS_PATH: &str = "/ws";

const POLL: Duration = Duration::from_millis(5);

/// Websocket endpoint at `/ws` that relays each text frame to the TCP server as one line and
/// each line from the server back as one text frame.
pub struct Gateway;

pub struct GatewayHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl Gateway {
    pub fn start(listen: &str, upstream: SocketAddr) -> Result<GatewayHandle, PlatformError> {
        let listener = TcpListener::bind(listen)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let accept = thread::Builder::new().name("ws accept".into()).spawn(move || {
            for conn in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                match conn {
                    Ok(stream) => {
                        let _ = thread::Builder::new().name("ws relay".into()).spawn(move || {
                            if let Err(e) = relay(stream, upstream) {
                                info!("websocket session ended: {e}");
                            }
                        });
                    }
                    Err(e) => warn!("websocket accept failed: {e}"),
                }
            }
        })?;
        info!("websocket gateway on ws://{addr}{WS_PATH} -> {upstream}");
        Ok(GatewayHandle {
            addr,
            stop,
            accept: Some(accept),
        })
    }
}

impl GatewayHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for GatewayHandle {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop_now();
        }
    }
}

fn ws_err(e: impl std::fmt::Display) -> PlatformError {
    PlatformError::WebSocket(e.to_string())
}

fn check_path(req: &Request, resp: Response) -> Result<Response, ErrorResponse> {
    if req.uri().path() == WS_PATH {
        return Ok(resp);
    }
    let mut err = ErrorResponse::new(Some(format!("websocket endpoint is {WS_PATH}")));
    *err.status_mut() = StatusCode::NOT_FOUND;
    Err(err)
}

fn relay(stream: TcpStream, upstream: SocketAddr) -> Result<(), PlatformError> {
    stream.set_nodelay(true)?;
    let mut ws = tungstenite::accept_hdr(stream, check_path).map_err(ws_err)?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    let mut up = Link::connect(upstream)?;
    loop {
        match ws.read() {
            Ok(Frame::Text(text)) => {
                for line in text.lines().filter(|l| !l.trim().is_empty()) {
                    up.send_line(line)?;
                }
            }
            Ok(Frame::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
            Err(e) => return Err(ws_err(e)),
        }
        if !forward_upstream(&mut ws, &mut up)? {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
    }
}

/// Sends every pending server line as a frame; false once the server closed.
fn forward_upstream(ws: &mut WebSocket<TcpStream>, up: &mut Link) -> Result<bool, PlatformError> {
    loop {
        match up.recv(Some(Duration::ZERO)) {
            Incoming::Line(line) => ws.send(Frame::text(line)).map_err(ws_err)?,
            Incoming::Timeout => return Ok(true),
            Incoming::Closed => return Ok(false),
        }
    }
}
