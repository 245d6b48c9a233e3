use std::thread;
use std::time::Duration;

use holdem_core::agents::{make_rule_agent, RuleConfig};
use holdem_core::engine::{Action, GameSpec, HandState, Round};
use holdem_core::evaluation::{aivat_estimate, AivatConfig, EquityBaseline, MatchMode};
use holdem_core::gametree::{build_tree, TreeConfig};
use holdem_core::protocol::{HelloMessage, Message, StateMessage};
use holdem_core::solver::{solve, SolverConfig};
use holdem_platform::config::IllegalActionPolicy;
use holdem_platform::server::BlackBox;
use holdem_platform::{builtin_agent, read_history, Client, Incoming, Link, ServerConfig};

mod common;
use common::*;

fn rule(name: &str, seed: u64) -> Box<dyn holdem_core::agents::Agent> {
    make_rule_agent(
        name,
        &RuleConfig {
            seed,
            ..RuleConfig::default()
        },
    )
    .unwrap()
}

/// Rebuilds the state a StateMessage was sent from, using the persisted deal.
fn rebuild(records: &[holdem_core::evaluation::HandHistoryRecord], s: &StateMessage) -> StateMessage {
    let rec = records.iter().find(|r| r.hand_id == s.hand_id).unwrap();
    let mut state = HandState::new(rec.game, rec.hand_id, rec.deal.clone()).unwrap();
    for a in &rec.actions[..s.action_history.len()] {
        state.apply_in_place(a.action).unwrap();
    }
    StateMessage::from_view(&s.match_id, &state.view(s.position)).unwrap()
}

#[test]
fn always_call_client_plays_100_replayable_hands() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let mut link = Link::connect(server.local_addr()).unwrap();
    link.send(&Message::Hello(hello("caller", Some("CallAgent"), "hunl", 100)))
        .unwrap();
    let Message::Welcome(w) = recv(&mut link) else {
        panic!("no welcome")
    };
    assert_eq!(
        (w.hands, w.opponent.as_str(), w.game.as_str()),
        (100, "CallAgent", "hunl")
    );

    let (mut states, mut results) = (Vec::new(), Vec::new());
    let end = loop {
        match recv(&mut link) {
            Message::State(s) => {
                send_action(&mut link, passive(&s));
                states.push(s);
            }
            Message::Result(r) => results.push(r),
            Message::MatchEnd(m) => break m,
            other => panic!("unexpected {}", other.to_line()),
        }
    };
    assert_eq!(results.len(), 100);
    assert!(results.iter().all(|r| r.payoffs[0] + r.payoffs[1] == 0));
    assert!(results.iter().all(|r| (r.reason == "showdown") == r.showdown.is_some()));

    let summary = &server.wait_for_matches(1, WAIT)[0];
    assert!(summary.completed, "{:?}", summary.error);
    let records = read_history(&summary.history).unwrap();
    assert_eq!(records.len(), 100);
    assert_eq!(end.hands, 100);
    assert_eq!(end.chips, records.iter().map(|r| r.first_agent_chips()).sum::<i64>());
    assert_eq!(end.chips, summary.chips[0]);
    for s in &states {
        assert_eq!(
            &rebuild(&records, s),
            s,
            "state for hand {} differs from the engine",
            s.hand_id
        );
    }
}

#[test]
fn every_state_matches_the_engine_for_random_clients() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let mut link = Link::connect(server.local_addr()).unwrap();
    link.send(&Message::Hello(hello(
        "fuzz",
        Some("LooseAggressiveAgent"),
        "hunl",
        150,
    )))
    .unwrap();
    let mut rng = 0x2545_f491_4f6c_dd1du64;
    let mut next = move || {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        rng
    };
    let mut states = Vec::new();
    loop {
        match recv(&mut link) {
            Message::State(s) => {
                let spec = GameSpec::hunl();
                let view = s.to_view(&spec).unwrap();
                let legal = view.legal().unwrap();
                let mut options = legal.representatives();
                if let Some(r) = legal.raise {
                    options.push(Action::RaiseTo(
                        r.min_to + (next() % (r.max_to - r.min_to + 1) as u64) as i64,
                    ));
                }
                send_action(&mut link, options[(next() % options.len() as u64) as usize]);
                states.push(s);
            }
            Message::Result(r) => {
                if r.reason != "showdown" {
                    assert!(r.showdown.is_none());
                }
            }
            Message::MatchEnd(_) => break,
            Message::Error(e) => panic!("legal client got {}", e.message),
            _ => {}
        }
    }
    let records = read_history(&server.wait_for_matches(1, WAIT)[0].history).unwrap();
    assert_eq!(records.len(), 150);
    assert!(states.iter().any(|s| s.round == Round::River));
    for s in &states {
        assert_eq!(&rebuild(&records, s), s);
        assert_eq!(s.private_cards.len(), 2);
    }
}

#[test]
fn short_raise_is_rejected_with_the_legal_interval() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let mut link = Link::connect(server.local_addr()).unwrap();
    link.send(&Message::Hello(hello("x", Some("CallAgent"), "hunl", 1)))
        .unwrap();
    recv(&mut link);
    let Message::State(s) = recv(&mut link) else { panic!() };
    send_action(&mut link, Action::RaiseTo(s.min_raise_to - 1));
    let Message::Error(e) = recv(&mut link) else { panic!() };
    assert_eq!(e.code, "illegal_action");
    assert_eq!(e.min_raise_to, Some(s.min_raise_to));
    assert_eq!(e.max_raise_to, Some(s.max_raise_to));
    assert_eq!(e.legal_actions.as_ref(), Some(&s.legal_actions));
    link.send_line(r#"{"type":"action","action":"raise"}"#).unwrap();
    let Message::Error(e) = recv(&mut link) else { panic!() };
    assert_eq!(e.code, "illegal_action");
    send_action(&mut link, Action::RaiseTo(s.min_raise_to));
    loop {
        match recv(&mut link) {
            Message::State(s) => send_action(&mut link, passive(&s)),
            Message::Result(_) | Message::Error(_) => {}
            Message::MatchEnd(_) => break,
            _ => {}
        }
    }
    let summary = &server.wait_for_matches(1, WAIT)[0];
    let records = read_history(&summary.history).unwrap();
    assert_eq!(summary.forfeits, 0);
    assert!(records[0]
        .actions
        .iter()
        .any(|a| a.action == Action::RaiseTo(s.min_raise_to)));
}

#[test]
fn forfeit_policy_ends_the_hand_on_an_illegal_action() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(ServerConfig {
        illegal_action: IllegalActionPolicy::Forfeit,
        ..config(dir.path())
    });
    let mut link = Link::connect(server.local_addr()).unwrap();
    link.send(&Message::Hello(hello("x", Some("CallAgent"), "hunl", 2)))
        .unwrap();
    recv(&mut link);
    let Message::State(s) = recv(&mut link) else { panic!() };
    send_action(&mut link, Action::RaiseTo(s.max_raise_to + 1));
    let Message::Error(e) = recv(&mut link) else { panic!() };
    assert_eq!(e.code, "illegal_action");
    let Message::Result(r) = recv(&mut link) else { panic!() };
    assert_eq!(r.hand_id, 0);
    assert!(r.payoffs[s.position] < 0);
    loop {
        match recv(&mut link) {
            Message::State(s) => send_action(&mut link, passive(&s)),
            Message::MatchEnd(_) => break,
            _ => {}
        }
    }
    let summary = &server.wait_for_matches(1, WAIT)[0];
    let records = read_history(&summary.history).unwrap();
    assert_eq!(records[0].forfeit, Some(s.position));
    assert_eq!(records[1].forfeit, None);
}

#[test]
fn malformed_json_strikes_out_and_the_seat_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let mut link = Link::connect(server.local_addr()).unwrap();
    link.send(&Message::Hello(hello("striker", Some("CallAgent"), "hunl", 3)))
        .unwrap();
    let Message::Welcome(w) = recv(&mut link) else { panic!() };
    let Message::State(_) = recv(&mut link) else { panic!() };
    for i in 1..=3 {
        link.send_line("{\"type\":\"action\",").unwrap();
        let Message::Error(e) = recv(&mut link) else { panic!() };
        assert_eq!(e.code, "malformed_json");
        assert!(e.message.contains(&format!("strike {i} of 3")), "{}", e.message);
    }
    let Message::Error(e) = recv(&mut link) else { panic!() };
    assert_eq!(e.code, "too_many_strikes");
    assert_eq!(link.recv(Some(WAIT)), Incoming::Closed);

    let mut again = Client::resume(server.local_addr(), "striker", &w.match_id).unwrap();
    assert_eq!(again.welcome().next_hand, 1);
    let summary = again.play(&mut *rule("CallAgent", 0)).unwrap();
    assert_eq!(summary.results.len(), 2);
    assert_eq!(summary.end.unwrap().hands, 3);
    let done = &server.wait_for_matches(1, WAIT)[0];
    assert!(done.completed);
    assert_eq!(done.forfeits, 1);
}

#[test]
fn malformed_hello_strikes_out() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let mut link = Link::connect(server.local_addr()).unwrap();
    for _ in 0..3 {
        link.send_line("hello?").unwrap();
        let Message::Error(e) = recv(&mut link) else { panic!() };
        assert_eq!(e.code, "malformed_json");
    }
    let Message::Error(e) = recv(&mut link) else { panic!() };
    assert_eq!(e.code, "too_many_strikes");
    assert_eq!(link.recv(Some(WAIT)), Incoming::Closed);
}

#[test]
fn decision_timeout_forfeits_the_hand() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(ServerConfig {
        decision_timeout_ms: 200,
        ..config(dir.path())
    });
    let mut link = Link::connect(server.local_addr()).unwrap();
    link.send(&Message::Hello(hello("slow", Some("CallAgent"), "hunl", 2)))
        .unwrap();
    recv(&mut link);
    let Message::State(first) = recv(&mut link) else {
        panic!()
    };
    let Message::Error(e) = recv(&mut link) else { panic!() };
    assert_eq!(e.code, "timeout");
    let Message::Result(r) = recv(&mut link) else { panic!() };
    assert!(r.payoffs[first.position] < 0);
    loop {
        match recv(&mut link) {
            Message::State(s) => send_action(&mut link, passive(&s)),
            Message::MatchEnd(m) => {
                assert_eq!(m.hands, 2);
                break;
            }
            _ => {}
        }
    }
    let done = &server.wait_for_matches(1, WAIT)[0];
    assert_eq!(done.forfeits, 1);
    assert!(done.completed);
}

#[test]
fn human_sessions_have_no_decision_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(ServerConfig {
        decision_timeout_ms: 100,
        ..config(dir.path())
    });
    let mut link = Link::connect(server.local_addr()).unwrap();
    let h = HelloMessage {
        human: Some(true),
        ..hello("person", Some("CallAgent"), "hunl", 1)
    };
    link.send(&Message::Hello(h)).unwrap();
    recv(&mut link);
    let Message::State(s) = recv(&mut link) else { panic!() };
    assert!(matches!(link.recv(Some(Duration::from_millis(400))), Incoming::Timeout));
    send_action(&mut link, passive(&s));
    loop {
        match recv(&mut link) {
            Message::State(s) => send_action(&mut link, passive(&s)),
            Message::MatchEnd(_) => break,
            Message::Error(e) => panic!("{}", e.message),
            _ => {}
        }
    }
    assert_eq!(server.wait_for_matches(1, WAIT)[0].forfeits, 0);
}

#[test]
fn duplicate_matches_repeat_deals_with_seats_swapped() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let h = HelloMessage {
        duplicate: Some(true),
        ..hello("dup", Some("TightAggressiveAgent"), "hunl", 10)
    };
    let mut client = Client::connect(server.local_addr(), h).unwrap();
    assert!(client.welcome().duplicate);
    assert_eq!(client.welcome().hands, 20);
    client.play(&mut *rule("CallAgent", 1)).unwrap();
    let summary = &server.wait_for_matches(1, WAIT)[0];
    assert_eq!(summary.mode, MatchMode::Duplicate);
    let records = read_history(&summary.history).unwrap();
    for m in 0..10 {
        let (x, y) = (&records[m], &records[m + 10]);
        assert_eq!(x.deal, y.deal);
        assert_eq!(x.first_seat, 1 - y.first_seat);
        assert_eq!(x.pair, Some(y.hand_id));
    }
}

#[test]
fn sdk_random_agent_plays_1000_hands_without_protocol_errors() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let mut client = Client::connect(
        server.local_addr(),
        hello("sdk-random", Some("CallAgent"), "hunl", 1000),
    )
    .unwrap();
    let summary = client.play(&mut *rule("RandomAgent", 9)).unwrap();
    assert!(summary.errors.is_empty(), "{:?}", summary.errors);
    assert_eq!(summary.results.len(), 1000);
    assert_eq!(summary.end.unwrap().hands, 1000);
    let done = &server.wait_for_matches(1, WAIT)[0];
    assert_eq!(done.forfeits, 0);
    assert_eq!(read_history(&done.history).unwrap().len(), 1000);
}

#[test]
fn server_aivat_equals_the_offline_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GameSpec::leduc();
    let game = build_tree(&spec, &TreeConfig::default()).unwrap();
    let profile = solve(
        &game,
        SolverConfig {
            iterations: 200,
            exploitability_every: 0,
            ..SolverConfig::default()
        },
    )
    .unwrap()
    .profile;
    let path = dir.path().join("leduc.profile");
    profile.save("leduc", &path).unwrap();
    let opponent = format!("blueprint:{}", path.display());

    let server = start(config(&dir.path().join("data")));
    let mut client = Client::connect(server.local_addr(), hello("remote", Some(&opponent), "leduc", 400)).unwrap();
    client.play(&mut *rule("RandomAgent", 4)).unwrap();
    let summary = &server.wait_for_matches(1, WAIT)[0];
    let served = summary.aivat.clone().expect("server wrote an AIVAT report");

    let records = read_history(&summary.history).unwrap();
    let mut builtin = builtin_agent(&opponent, &spec, summary.builtin_seed.unwrap()).unwrap();
    let mut remote = BlackBox("remote".into());
    let cfg = AivatConfig {
        known: [false, true],
        seed: summary.seed,
        ..AivatConfig::default()
    };
    let offline = aivat_estimate(
        &records,
        &mut remote,
        &mut *builtin,
        &mut EquityBaseline::default(),
        &cfg,
    )
    .unwrap();
    assert_eq!(offline.report, served);
    assert_eq!(offline.report.hands, 400);

    let text = std::fs::read_to_string(
        dir.path()
            .join("data")
            .join(format!("{}.summary.json", summary.match_id)),
    )
    .unwrap();
    let from_disk: holdem_platform::MatchSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(&from_disk, summary);
}

#[test]
fn queued_peers_are_paired() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let addr = server.local_addr();
    let peer = |name: &'static str, agent: &'static str| {
        thread::spawn(move || {
            let mut c = Client::connect(addr, hello(name, None, "leduc", 200)).unwrap();
            let opponent = c.welcome().opponent.clone();
            (opponent, c.play(&mut *rule(agent, 3)).unwrap())
        })
    };
    let a = peer("alice", "CallAgent");
    thread::sleep(Duration::from_millis(100));
    let b = peer("bob", "RandomAgent");
    let (oa, sa) = a.join().unwrap();
    let (ob, sb) = b.join().unwrap();
    assert_eq!((oa.as_str(), ob.as_str()), ("bob", "alice"));
    let (ea, eb) = (sa.end.unwrap(), sb.end.unwrap());
    assert_eq!(ea.hands, 200);
    assert_eq!(ea.chips + eb.chips, 0);
    assert!(sa.errors.is_empty() && sb.errors.is_empty());
}

#[test]
fn dropped_connection_resumes_at_the_same_hand() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let mut link = Link::connect(server.local_addr()).unwrap();
    link.send(&Message::Hello(hello("flaky", Some("CallAgent"), "hunl", 6)))
        .unwrap();
    let Message::Welcome(w) = recv(&mut link) else { panic!() };
    let dropped_at = loop {
        match recv(&mut link) {
            Message::State(s) if s.hand_id == 2 => break s,
            Message::State(s) => send_action(&mut link, passive(&s)),
            _ => {}
        }
    };
    drop(link);

    let mut link = Link::connect(server.local_addr()).unwrap();
    let resume = HelloMessage {
        resume: Some(w.match_id.clone()),
        ..hello("flaky", None, "hunl", 6)
    };
    link.send(&Message::Hello(resume)).unwrap();
    let Message::Welcome(again) = recv(&mut link) else {
        panic!()
    };
    assert_eq!(again.match_id, w.match_id);
    assert_eq!(again.next_hand, 2);
    let Message::State(s) = recv(&mut link) else { panic!() };
    assert_eq!(s, dropped_at);
    send_action(&mut link, passive(&s));
    loop {
        match recv(&mut link) {
            Message::State(s) => send_action(&mut link, passive(&s)),
            Message::MatchEnd(m) => {
                assert_eq!(m.hands, 6);
                break;
            }
            _ => {}
        }
    }
    let done = &server.wait_for_matches(1, WAIT)[0];
    assert!(done.completed);
    assert_eq!(done.forfeits, 0);
}

#[test]
fn a_seat_that_never_returns_abandons_the_match() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(ServerConfig {
        resume_grace_ms: 200,
        ..config(dir.path())
    });
    let mut link = Link::connect(server.local_addr()).unwrap();
    link.send(&Message::Hello(hello("gone", Some("CallAgent"), "hunl", 50)))
        .unwrap();
    recv(&mut link);
    recv(&mut link);
    drop(link);
    let done = &server.wait_for_matches(1, WAIT)[0];
    assert!(!done.completed);
    assert!(done.error.as_deref().unwrap().contains("abandoned"), "{:?}", done.error);
    assert_eq!(done.hands_played, 1);
    assert_eq!(read_history(&done.history).unwrap().len(), 1);
}

#[test]
fn bad_handshakes_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(config(dir.path()));
    let cases = [
        (
            HelloMessage {
                protocol_version: 99,
                ..hello("v", Some("CallAgent"), "hunl", 1)
            },
            "version_mismatch",
        ),
        (hello("u", Some("NoSuchAgent"), "hunl", 1), "unknown_opponent"),
        (hello("g", Some("CallAgent"), "chess", 1), "bad_request"),
        (hello("h", Some("CallAgent"), "hunl", 0), "bad_request"),
        (
            HelloMessage {
                resume: Some("m99999-0".into()),
                ..hello("r", None, "hunl", 1)
            },
            "unknown_match",
        ),
    ];
    for (h, code) in cases {
        let err = Client::connect(server.local_addr(), h).err().unwrap();
        assert!(
            matches!(&err, holdem_platform::PlatformError::Server { code: c, .. } if c == code),
            "expected {code}, got {err}"
        );
    }
}

#[test]
fn every_message_type_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(ServerConfig {
        illegal_action: IllegalActionPolicy::RejectAndRetry,
        ..config(dir.path())
    });
    let mut link = Link::connect(server.local_addr()).unwrap();
    let h = Message::Hello(hello("rt", Some("CallAgent"), "leduc", 3));
    assert_eq!(Message::parse(&h.to_line()).unwrap().to_line(), h.to_line());
    link.send(&h).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    let mut erred = false;
    loop {
        let Incoming::Line(line) = link.recv(Some(WAIT)) else {
            panic!()
        };
        let msg = Message::parse(&line).unwrap();
        assert_eq!(msg.to_line(), line);
        seen.insert(line.split('"').nth(3).unwrap().to_string());
        match msg {
            Message::State(s) if !erred => {
                erred = true;
                send_action(&mut link, Action::RaiseTo(-5));
                let _ = s;
            }
            Message::State(s) => {
                let a = Message::Action(holdem_core::protocol::ActionMessage::from_action(passive(&s)));
                assert_eq!(Message::parse(&a.to_line()).unwrap().to_line(), a.to_line());
                link.send(&a).unwrap();
            }
            Message::MatchEnd(_) => break,
            _ => {}
        }
    }
    let kinds: Vec<&str> = seen.iter().map(String::as_str).collect();
    assert_eq!(kinds, ["error", "match_end", "result", "state", "welcome"]);
}
