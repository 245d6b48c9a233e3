//! Match server, client SDK and websocket gateway for the newline-delimited JSON protocol.

pub mod client;
pub mod config;
pub mod gateway;
pub mod history;
pub mod link;
pub mod roster;
pub mod server;

use holdem_core::agents::AgentError;
use holdem_core::engine::EngineError;
use holdem_core::evaluation::EvalError;
use holdem_core::protocol::ProtocolError;

pub use client::{hello, Client, ClientSummary};
pub use config::{IllegalActionPolicy, ServerConfig};
pub use gateway::{Gateway, GatewayHandle};
pub use history::{read_history, validate_history};
pub use link::{Incoming, Link};
pub use roster::{builtin_agent, load_blueprint, TreeSidecar};
pub use server::{MatchSummary, Server, ServerHandle};

#[derive(Debug, thiserror::Error)]
pub enum PlatformError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("server error {code}: {message}")]
    Server { code: String, message: String },
    #[error("illegal action: {0}")]
    IllegalAction(String),
    #[error("connection to {0} closed")]
    Disconnected(String),
    #[error("{path}:{line}: {message}")]
    History { path: String, line: usize, message: String },
    #[error("websocket: {0}")]
    WebSocket(String),
}
