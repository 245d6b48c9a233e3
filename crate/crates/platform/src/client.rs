use std::net::ToSocketAddrs;

use holdem_core::agents::Agent;
use holdem_core::engine::{GameSpec, PlayerView, Variant};
use holdem_core::protocol::{
    ActionMessage, ErrorMessage, HelloMessage, MatchEndMessage, Message, ResultMessage, WelcomeMessage,
    PROTOCOL_VERSION,
};

use crate::link::{Incoming, Link};
use crate::PlatformError;

/// Retries after `illegal_action` errors before falling back to the passive action.
const MAX_RETRIES: u32 = 3;

/// What a client saw over one match.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClientSummary {
    pub match_id: String,
    pub decisions: u64,
    pub results: Vec<ResultMessage>,
    pub errors: Vec<ErrorMessage>,
    pub end: Option<MatchEndMessage>,
}

/// One connection to a match server, driving an agent through the act loop.
pub struct Client {
    link: Link,
    welcome: WelcomeMessage,
    spec: GameSpec,
}

pub fn hello(agent: &str) -> HelloMessage {
    HelloMessage {
        agent: agent.to_string(),
        protocol_version: PROTOCOL_VERSION,
        opponent: None,
        hands: None,
        duplicate: None,
        game: None,
        resume: None,
        human: None,
    }
}

impl Client {
    pub fn connect(addr: impl ToSocketAddrs, hello: HelloMessage) -> Result<Client, PlatformError> {
        let mut link = Link::connect(addr)?;
        link.send(&Message::Hello(hello))?;
        let welcome = loop {
            match link.recv(None) {
                Incoming::Line(line) => match Message::parse(&line)? {
                    Message::Welcome(w) => break w,
                    Message::Error(e) => {
                        return Err(PlatformError::Server {
                            code: e.code,
                            message: e.message,
                        })
                    }
                    other => {
                        return Err(PlatformError::Handshake(format!(
                            "expected welcome, got {}",
                            other.to_line()
                        )))
                    }
                },
                _ => return Err(PlatformError::Disconnected(link.peer().to_string())),
            }
        };
        let variant: Variant = welcome.game.parse()?;
        Ok(Client {
            link,
            welcome,
            spec: GameSpec::for_variant(variant),
        })
    }

    /// Rejoins a match after a lost connection.
    pub fn resume(addr: impl ToSocketAddrs, agent: &str, match_id: &str) -> Result<Client, PlatformError> {
        Client::connect(
            addr,
            HelloMessage {
                resume: Some(match_id.to_string()),
                ..hello(agent)
            },
        )
    }

    pub fn welcome(&self) -> &WelcomeMessage {
        &self.welcome
    }

    pub fn spec(&self) -> &GameSpec {
        &self.spec
    }

    /// Raw access for tools that speak the protocol themselves.
    pub fn link_mut(&mut self) -> &mut Link {
        &mut self.link
    }

    pub fn play(&mut self, agent: &mut dyn Agent) -> Result<ClientSummary, PlatformError> {
        let mut summary = ClientSummary {
            match_id: self.welcome.match_id.clone(),
            ..ClientSummary::default()
        };
        self.play_into(agent, &mut summary)?;
        Ok(summary)
    }

    /// Runs the act loop until the match ends, appending to `summary` so a resumed connection
    /// can continue the same record. Actions are checked against the state's legal actions
    /// before they are sent.
    pub fn play_into(&mut self, agent: &mut dyn Agent, summary: &mut ClientSummary) -> Result<(), PlatformError> {
        let mut current: Option<(u64, PlayerView)> = None;
        let mut last_hand = None;
        let mut retries = 0;
        loop {
            let line = match self.link.recv(None) {
                Incoming::Line(l) => l,
                _ => return Err(PlatformError::Disconnected(self.link.peer().to_string())),
            };
            match Message::parse(&line)? {
                Message::State(s) => {
                    let view = s.to_view(&self.spec)?;
                    if last_hand != Some(s.hand_id) {
                        agent.reset(s.hand_id, s.position);
                        last_hand = Some(s.hand_id);
                    }
                    retries = 0;
                    self.decide(agent, &view, false)?;
                    summary.decisions += 1;
                    current = Some((s.hand_id, view));
                }
                Message::Error(e) => {
                    let retry = e.code == "illegal_action";
                    summary.errors.push(e);
                    if let (true, Some((_, view))) = (retry, &current) {
                        retries += 1;
                        let view = view.clone();
                        self.decide(agent, &view, retries > MAX_RETRIES)?;
                    }
                }
                Message::Result(r) => {
                    current = None;
                    summary.results.push(r);
                }
                Message::Welcome(w) => self.welcome = w,
                Message::MatchEnd(m) => {
                    summary.end = Some(m);
                    return Ok(());
                }
                Message::Hello(_) | Message::Action(_) => {}
            }
        }
    }

    fn decide(&mut self, agent: &mut dyn Agent, view: &PlayerView, passive: bool) -> Result<(), PlatformError> {
        let legal = view.legal()?;
        let action = if passive { legal.passive() } else { agent.act(view)? };
        if !legal.contains(action) {
            return Err(PlatformError::IllegalAction(format!(
                "{} chose {action}, which is not legal in hand {}",
                agent.name(),
                view.hand_id
            )));
        }
        self.link.send(&Message::Action(ActionMessage::from_action(action)))
    }
}
