use holdem_core::engine::Action;
use holdem_core::evaluation::report_from_histories as report_from_records;
use holdem_core::protocol::{ActionMessage, Message};
use holdem_platform::{read_history, ServerConfig};
use tungstenite::Message as Frame;

mod common;
use common::*;

fn passive_line(line: &str) -> Option<String> {
    let Message::State(s) = Message::parse(line).ok()? else {
        return None;
    };
    let a: Action = passive(&s);
    Some(Message::Action(ActionMessage::from_action(a)).to_line())
}

#[test]
fn websocket_session_plays_20_hands_with_identical_messages() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(ServerConfig {
        ws_listen: Some("127.0.0.1:0".into()),
        ..config(dir.path())
    });
    let ws_addr = server.ws_addr().unwrap();
    let (mut ws, _) = tungstenite::connect(format!("ws://{ws_addr}/ws")).unwrap();
    let hello = Message::Hello(hello("browser", Some("CallAgent"), "hunl", 20)).to_line();
    ws.send(Frame::text(hello)).unwrap();
    let mut results = 0;
    let mut running = 0i64;
    loop {
        let Frame::Text(text) = ws.read().unwrap() else {
            continue;
        };
        let text = text.to_string();
        let msg = Message::parse(&text).unwrap();
        assert_eq!(msg.to_line(), text, "frames carry the exact protocol lines");
        match msg {
            Message::State(_) => ws.send(Frame::text(passive_line(&text).unwrap())).unwrap(),
            Message::Result(r) => {
                results += 1;
                running += r.payoffs[0];
            }
            Message::MatchEnd(m) => {
                assert_eq!(m.hands, 20);
                break;
            }
            Message::Error(e) => panic!("{}", e.message),
            _ => {}
        }
    }
    assert_eq!(results, 20);
    let summary = &server.wait_for_matches(1, WAIT)[0];
    let records = read_history(&summary.history).unwrap();
    let by_seat: i64 = records.iter().map(|r| r.payoffs[0]).sum();
    assert_eq!(by_seat, running);
    let report = report_from_records(&records).unwrap();
    assert_eq!(report.mean_mbb[0], summary.report.as_ref().unwrap().mean_mbb[0]);
}

#[test]
fn other_paths_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let server = start(ServerConfig {
        ws_listen: Some("127.0.0.1:0".into()),
        ..config(dir.path())
    });
    let err = tungstenite::connect(format!("ws://{}/socket", server.ws_addr().unwrap()))
        .err()
        .unwrap();
    match err {
        tungstenite::Error::Http(resp) => assert_eq!(resp.status(), 404),
        other => panic!("expected 404, got {other}"),
    }
}
