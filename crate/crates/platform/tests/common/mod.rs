#![allow(dead_code)]

use std::path::Path;
use std::time::Duration;

use holdem_core::engine::{Action, GameSpec};
use holdem_core::evaluation::HandHistoryRecord;
use holdem_core::protocol::{ActionMessage, HelloMessage, Message, StateMessage, PROTOCOL_VERSION};
use holdem_platform::config::ServerConfig;
use holdem_platform::{Incoming, Link, Server, ServerHandle};

pub const WAIT: Duration = Duration::from_secs(60);

pub fn config(dir: &Path) -> ServerConfig {
    ServerConfig {
        listen: "127.0.0.1:0".into(),
        data_dir: dir.to_path_buf(),
        resume_grace_ms: 5_000,
        ..ServerConfig::default()
    }
}

pub fn start(config: ServerConfig) -> ServerHandle {
    Server::start(config).expect("server starts")
}

pub fn hello(agent: &str, opponent: Option<&str>, game: &str, hands: u64) -> HelloMessage {
    HelloMessage {
        agent: agent.into(),
        protocol_version: PROTOCOL_VERSION,
        opponent: opponent.map(Into::into),
        hands: Some(hands),
        duplicate: None,
        game: Some(game.into()),
        resume: None,
        human: None,
    }
}

/// Next message; panics on timeout or a closed connection.
pub fn recv(link: &mut Link) -> Message {
    match link.recv(Some(WAIT)) {
        Incoming::Line(l) => Message::parse(&l).unwrap_or_else(|e| panic!("server sent {l:?}: {e}")),
        other => panic!("expected a message, got {other:?}"),
    }
}

pub fn send_action(link: &mut Link, a: Action) {
    link.send(&Message::Action(ActionMessage::from_action(a))).unwrap();
}

pub fn passive(s: &StateMessage) -> Action {
    if s.legal_actions.iter().any(|a| a == "check") {
        Action::Check
    } else {
        Action::Call
    }
}

pub fn read_records(path: &Path) -> Vec<HandHistoryRecord> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| HandHistoryRecord::from_line(l).unwrap())
        .collect()
}

pub fn hunl() -> GameSpec {
    GameSpec::hunl()
}
