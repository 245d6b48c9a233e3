use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use holdem_core::protocol::Message;

use crate::PlatformError;

/// Longest accepted line; longer input closes the connection.
pub const MAX_LINE: usize = 1 << 20;

#[derive(Debug, PartialEq)]
pub enum Incoming {
    Line(String),
    Timeout,
    Closed,
}

/// One newline-delimited JSON connection. A background thread reads lines so receives can
/// time out without losing partial input.
pub struct Link {
    stream: TcpStream,
    rx: Receiver<String>,
    closed: bool,
    peer: String,
}

impl Link {
    pub fn new(stream: TcpStream) -> Result<Link, PlatformError> {
        stream.set_nodelay(true)?;
        let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_else(|_| "?".into());
        let reader = stream.try_clone()?;
        let (tx, rx) = mpsc::channel();
        thread::Builder::new().name(format!("read {peer}")).spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let mut buf = Vec::new();
                match (&mut reader).take(MAX_LINE as u64 + 1).read_until(b'\n', &mut buf) {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {}
                }
                if buf.last() != Some(&b'\n') && buf.len() > MAX_LINE {
                    break;
                }
                while matches!(buf.last(), Some(b'\n' | b'\r')) {
                    buf.pop();
                }
                if buf.is_empty() {
                    continue;
                }
                if tx.send(String::from_utf8_lossy(&buf).into_owned()).is_err() {
                    break;
                }
            }
        })?;
        Ok(Link {
            stream,
            rx,
            closed: false,
            peer,
        })
    }

    pub fn connect(addr: impl ToSocketAddrs) -> Result<Link, PlatformError> {
        Link::new(TcpStream::connect(addr)?)
    }

    pub fn peer(&self) -> &str {
        &self.peer
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn send(&mut self, msg: &Message) -> Result<(), PlatformError> {
        self.send_line(&msg.to_line())
    }

    /// Writes raw text followed by a newline.
    pub fn send_line(&mut self, line: &str) -> Result<(), PlatformError> {
        if self.closed {
            return Err(PlatformError::Disconnected(self.peer.clone()));
        }
        let mut buf = Vec::with_capacity(line.len() + 1);
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
        if let Err(e) = self.stream.write_all(&buf).and_then(|_| self.stream.flush()) {
            self.close();
            return Err(e.into());
        }
        Ok(())
    }

    /// Next line, waiting at most `timeout` (forever when `None`).
    pub fn recv(&mut self, timeout: Option<Duration>) -> Incoming {
        if self.closed {
            return Incoming::Closed;
        }
        let got = match timeout {
            Some(t) => self.rx.recv_timeout(t),
            None => self.rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
        };
        match got {
            Ok(line) => Incoming::Line(line),
            Err(RecvTimeoutError::Timeout) => Incoming::Timeout,
            Err(RecvTimeoutError::Disconnected) => {
                self.close();
                Incoming::Closed
            }
        }
    }

    /// Like `recv` with an absolute deadline.
    pub fn recv_until(&mut self, deadline: Option<Instant>) -> Incoming {
        self.recv(deadline.map(|d| d.saturating_duration_since(Instant::now())))
    }

    pub fn close(&mut self) {
        if !self.closed {
            self.closed = true;
            let _ = self.stream.shutdown(Shutdown::Both);
        }
    }
}

impl Drop for Link {
    fn drop(&mut self) {
        self.close();
    }
}
