//! Wire messages of the match protocol: one JSON object per line, tagged by `type`.
//!
//! Raise amounts are always raise-to: the seat's total commitment for the current betting
//! round after the raise, the same convention the engine uses.

use serde::{Deserialize, Serialize};

use crate::engine::{Action, ActionRecord, Card, Chips, EngineError, GameSpec, LegalActions, PlayerView, Round, Seat};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid message: {0}")]
    Invalid(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello(HelloMessage),
    Welcome(WelcomeMessage),
    State(StateMessage),
    Action(ActionMessage),
    Result(ResultMessage),
    Error(ErrorMessage),
    MatchEnd(MatchEndMessage),
}

impl Message {
    pub fn parse(line: &str) -> Result<Message, ProtocolError> {
        Ok(serde_json::from_str(line.trim_end_matches(['\r', '\n']))?)
    }

    /// Serialized form without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }
}

/// First message of a session, sent by the client.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HelloMessage {
    pub agent: String,
    pub protocol_version: u32,
    /// Built-in opponent by roster name, or `blueprint:<path>`. Absent means "queue for a peer".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub opponent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hands: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplicate: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub game: Option<String>,
    /// Reattach to a match interrupted by a lost connection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resume: Option<String>,
    /// Human clients get no decision timeout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelcomeMessage {
    pub match_id: String,
    pub protocol_version: u32,
    pub opponent: String,
    pub hands: u64,
    pub duplicate: bool,
    pub game: String,
    /// Next hand to be played; nonzero after a resume.
    pub next_hand: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub position: Seat,
    pub action: String,
    /// Raise-to for raises, 0 otherwise.
    pub amount: Chips,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateMessage {
    pub match_id: String,
    pub hand_id: u64,
    pub position: Seat,
    pub private_cards: Vec<Card>,
    pub public_cards: Vec<Card>,
    pub round: Round,
    /// Everything in the middle, including both seats' commitments this round.
    pub pot: Chips,
    pub stacks: [Chips; 2],
    pub committed: [Chips; 2],
    pub action_history: Vec<HistoryEntry>,
    pub legal_actions: Vec<String>,
    /// 0 when raising is not legal.
    pub min_raise_to: Chips,
    pub max_raise_to: Chips,
    pub to_act: Seat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMessage {
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amount: Option<Chips>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultMessage {
    pub hand_id: u64,
    pub payoffs: [Chips; 2],
    /// Both seats' private cards, present only when the hand reached showdown.
    #[serde(default)]
    pub showdown: Option<[Vec<Card>; 2]>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorMessage {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legal_actions: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_raise_to: Option<Chips>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_raise_to: Option<Chips>,
}

impl ErrorMessage {
    pub fn new(code: &str, message: impl Into<String>) -> ErrorMessage {
        ErrorMessage {
            code: code.into(),
            message: message.into(),
            legal_actions: None,
            min_raise_to: None,
            max_raise_to: None,
        }
    }

    /// A rejection that tells the client what it may do instead.
    pub fn illegal(message: impl Into<String>, legal: &LegalActions) -> ErrorMessage {
        let (lo, hi) = raise_bounds(legal);
        ErrorMessage {
            code: "illegal_action".into(),
            message: message.into(),
            legal_actions: Some(legal_names(legal)),
            min_raise_to: Some(lo),
            max_raise_to: Some(hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchEndMessage {
    pub match_id: String,
    pub hands: u64,
    /// Chips won by the client over the match.
    pub chips: Chips,
    pub mbb_per_hand: f64,
}

pub fn action_name(a: Action) -> &'static str {
    match a {
        Action::Fold => "fold",
        Action::Check => "check",
        Action::Call => "call",
        Action::RaiseTo(_) => "raise",
    }
}

pub fn legal_names(legal: &LegalActions) -> Vec<String> {
    let mut out = Vec::new();
    if legal.fold {
        out.push("fold".to_string());
    }
    if legal.check {
        out.push("check".to_string());
    }
    if legal.call {
        out.push("call".to_string());
    }
    if legal.raise.is_some() {
        out.push("raise".to_string());
    }
    out
}

fn raise_bounds(legal: &LegalActions) -> (Chips, Chips) {
    legal.raise.map_or((0, 0), |r| (r.min_to, r.max_to))
}

impl ActionMessage {
    pub fn from_action(a: Action) -> ActionMessage {
        ActionMessage {
            action: action_name(a).into(),
            amount: match a {
                Action::RaiseTo(x) => Some(x),
                _ => None,
            },
        }
    }

    pub fn to_action(&self) -> Result<Action, ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::Invalid(m.to_string()));
        match (self.action.as_str(), self.amount) {
            ("fold", None) => Ok(Action::Fold),
            ("check", None) => Ok(Action::Check),
            ("call", None) => Ok(Action::Call),
            ("raise", Some(x)) => Ok(Action::RaiseTo(x)),
            ("raise", None) => bad("raise needs an amount (raise-to)"),
            ("fold" | "check" | "call", Some(_)) => bad("only raise carries an amount"),
            (other, _) => Err(ProtocolError::Invalid(format!("unknown action {other:?}"))),
        }
    }
}

impl HistoryEntry {
    pub fn from_record(r: &ActionRecord) -> HistoryEntry {
        HistoryEntry {
            position: r.seat,
            action: action_name(r.action).into(),
            amount: match r.action {
                Action::RaiseTo(x) => x,
                _ => 0,
            },
        }
    }

    pub fn to_action(&self) -> Result<Action, ProtocolError> {
        ActionMessage {
            action: self.action.clone(),
            amount: (self.action == "raise").then_some(self.amount),
        }
        .to_action()
    }
}

impl StateMessage {
    /// Encodes a decision view. The view must be at its seat's turn.
    pub fn from_view(match_id: &str, view: &PlayerView) -> Result<StateMessage, ProtocolError> {
        let legal = view.legal()?;
        if view.to_act != Some(view.seat) {
            return Err(ProtocolError::Invalid(
                "state messages are only sent to the seat to act".into(),
            ));
        }
        let (min_raise_to, max_raise_to) = raise_bounds(legal);
        Ok(StateMessage {
            match_id: match_id.to_string(),
            hand_id: view.hand_id,
            position: view.seat,
            private_cards: view.private.clone(),
            public_cards: view.board.clone(),
            round: view.round,
            pot: view.total_pot(),
            stacks: view.stacks,
            committed: view.committed,
            action_history: view.history.iter().map(HistoryEntry::from_record).collect(),
            legal_actions: legal_names(legal),
            min_raise_to,
            max_raise_to,
            to_act: view.seat,
        })
    }

    /// Rebuilds the engine view by replaying the betting, and checks that every public field
    /// agrees with the replayed state.
    pub fn to_view(&self, spec: &GameSpec) -> Result<PlayerView, ProtocolError> {
        let mut state = crate::engine::HandState::new(*spec, self.hand_id, crate::engine::placeholder_deal(spec))?;
        let mut history = Vec::with_capacity(self.action_history.len());
        for (i, entry) in self.action_history.iter().enumerate() {
            if state.to_act() != Some(entry.position) {
                return Err(ProtocolError::Invalid(format!("history entry {i} is out of turn")));
            }
            let action = entry.to_action()?;
            history.push(ActionRecord {
                seat: entry.position,
                street: state.street(),
                action,
            });
            state.apply_in_place(action)?;
        }
        let view = PlayerView {
            spec: *spec,
            hand_id: self.hand_id,
            seat: self.position,
            round: state.round(),
            street: state.street(),
            private: self.private_cards.clone(),
            board: self.public_cards.clone(),
            pot: state.pot(),
            committed: state.committed(),
            stacks: state.stacks(),
            history,
            to_act: state.to_act(),
            legal: state.legal_actions().ok(),
        };
        let legal = view
            .legal
            .ok_or_else(|| ProtocolError::Invalid("history ends the hand".into()))?;
        let (lo, hi) = raise_bounds(&legal);
        let mismatch = |field: &str| {
            Err(ProtocolError::Invalid(format!(
                "{field} disagrees with the action history"
            )))
        };
        if view.round != self.round {
            return mismatch("round");
        }
        if view.total_pot() != self.pot {
            return mismatch("pot");
        }
        if view.committed != self.committed || view.stacks != self.stacks {
            return mismatch("committed/stacks");
        }
        if view.to_act != Some(self.position) || self.to_act != self.position {
            return mismatch("to_act");
        }
        if legal_names(&legal) != self.legal_actions || (lo, hi) != (self.min_raise_to, self.max_raise_to) {
            return mismatch("legal_actions");
        }
        if self.private_cards.len() != spec.hole_cards() || self.public_cards.len() != spec.board_len(view.street) {
            return Err(ProtocolError::Invalid("card counts do not match the round".into()));
        }
        Ok(view)
    }
}

impl ResultMessage {
    pub fn from_state(state: &crate::engine::HandState) -> Result<ResultMessage, ProtocolError> {
        let pay = state.settle()?;
        let showdown = state.round() == Round::Showdown;
        Ok(ResultMessage {
            hand_id: state.hand_id(),
            payoffs: pay.chips_won,
            showdown: showdown.then(|| [state.private_cards(0).to_vec(), state.private_cards(1).to_vec()]),
            reason: if showdown { "showdown" } else { "fold" }.into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{parse_cards, Deal, HandState};

    fn state() -> HandState {
        let deal = Deal {
            hole: [parse_cards("AsAc").unwrap(), parse_cards("7d2h").unwrap()],
            board: parse_cards("KsQsJs3c4d").unwrap(),
        };
        let mut s = HandState::new(GameSpec::hunl(), 3, deal).unwrap();
        for a in [Action::RaiseTo(300), Action::Call, Action::Check] {
            s.apply_in_place(a).unwrap();
        }
        s
    }

    #[test]
    fn state_message_wire_fields() {
        let s = state();
        let msg = StateMessage::from_view("m1", &s.view(1)).unwrap();
        let line = Message::State(msg.clone()).to_line();
        assert!(line.starts_with(r#"{"type":"state","match_id":"m1","hand_id":3,"position":1,"private_cards":["7d","2h"],"public_cards":["Ks","Qs","Js"],"round":"flop","pot":600"#), "{line}");
        assert!(line.contains(r#""action_history":[{"position":1,"action":"raise","amount":300},{"position":0,"action":"call","amount":0},{"position":0,"action":"check","amount":0}]"#));
        assert!(
            line.ends_with(r#""legal_actions":["check","raise"],"min_raise_to":100,"max_raise_to":19700,"to_act":1}"#),
            "{line}"
        );
        assert_eq!(Message::parse(&line).unwrap(), Message::State(msg.clone()));
        assert_eq!(msg.to_view(&GameSpec::hunl()).unwrap(), s.view(1));
    }

    #[test]
    fn action_messages_require_amount_iff_raise() {
        let ok = Message::parse(r#"{"type":"action","action":"raise","amount":400}"#).unwrap();
        let Message::Action(a) = ok else { panic!() };
        assert_eq!(a.to_action().unwrap(), Action::RaiseTo(400));
        for bad in [
            r#"{"type":"action","action":"raise"}"#,
            r#"{"type":"action","action":"call","amount":5}"#,
            r#"{"type":"action","action":"shove"}"#,
        ] {
            let Message::Action(a) = Message::parse(bad).unwrap() else {
                panic!()
            };
            assert!(a.to_action().is_err(), "{bad}");
        }
        assert!(Message::parse("{not json").is_err());
        assert_eq!(
            Message::Action(ActionMessage::from_action(Action::Check)).to_line(),
            r#"{"type":"action","action":"check"}"#
        );
    }

    #[test]
    fn tampered_state_is_rejected() {
        let mut msg = StateMessage::from_view("m", &state().view(1)).unwrap();
        msg.pot += 1;
        assert!(msg.to_view(&GameSpec::hunl()).is_err());
    }

    #[test]
    fn result_reveals_cards_only_at_showdown() {
        let folded = state()
            .apply(Action::RaiseTo(600))
            .unwrap()
            .apply(Action::Fold)
            .unwrap();
        let r = ResultMessage::from_state(&folded).unwrap();
        assert_eq!((r.reason.as_str(), r.showdown.is_none()), ("fold", true));
        assert_eq!(r.payoffs, [-300, 300]);
    }
}
