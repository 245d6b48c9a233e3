use std::collections::{HashMap, VecDeque};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use holdem_core::agents::{Agent, AgentError, Policy};
use holdem_core::engine::{Action, Chips, GameSpec, PlayerView, Variant};
use holdem_core::evaluation::{
    aivat_estimate, deal_seed, report_from_histories, run_match_with, AivatConfig, EquityBaseline, EvalError,
    EvalReport, HandHistoryRecord, MatchMode, MatchPlan,
};
use holdem_core::protocol::{
    ErrorMessage, HelloMessage, MatchEndMessage, Message, ResultMessage, StateMessage, WelcomeMessage, PROTOCOL_VERSION,
};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{IllegalActionPolicy, ServerConfig};
use crate::gateway::{Gateway, GatewayHandle};
use crate::link::{Incoming, Link};
use crate::roster::builtin_agent;
use crate::PlatformError;

/// What the server knows about a match once it is over; also written to
/// `<data_dir>/<match_id>.summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchSummary {
    pub match_id: String,
    pub game: GameSpec,
    pub agents: [String; 2],
    pub mode: MatchMode,
    pub seed: u64,
    /// Seed the built-in agent was created with, so its policy can be rebuilt offline.
    pub builtin_seed: Option<u64>,
    pub hands_played: u64,
    pub planned_hands: u64,
    /// Chips won by each of `agents`.
    pub chips: [Chips; 2],
    pub forfeits: u64,
    pub history: PathBuf,
    pub completed: bool,
    pub error: Option<String>,
    pub report: Option<EvalReport>,
    pub aivat: Option<EvalReport>,
}

struct Waiting {
    hello: HelloMessage,
    link: Link,
}

struct Scheduler {
    capacity: usize,
    state: Mutex<(u64, u64, usize)>,
    cv: Condvar,
}

struct Slot<'a>(&'a Scheduler);

impl Scheduler {
    /// Waits for a free slot; requests are served in arrival order.
    fn acquire(&self) -> Slot<'_> {
        let mut st = self.state.lock().unwrap();
        let ticket = st.0;
        st.0 += 1;
        while st.1 != ticket || st.2 >= self.capacity {
            st = self.cv.wait(st).unwrap();
        }
        st.1 += 1;
        st.2 += 1;
        self.cv.notify_all();
        Slot(self)
    }
}

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        self.0.state.lock().unwrap().2 -= 1;
        self.0.cv.notify_all();
    }
}

struct Shared {
    config: ServerConfig,
    scheduler: Scheduler,
    peers: Mutex<VecDeque<Waiting>>,
    resumes: Mutex<HashMap<(String, String), Sender<Link>>>,
    next_match: AtomicU64,
    stop: AtomicBool,
    finished: Mutex<Vec<MatchSummary>>,
    finished_cv: Condvar,
}

pub struct Server;

pub struct ServerHandle {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
    gateway: Option<GatewayHandle>,
}

impl Server {
    /// Binds the listener (and the websocket gateway when configured) and starts accepting.
    pub fn start(config: ServerConfig) -> Result<ServerHandle, PlatformError> {
        config.validate()?;
        fs::create_dir_all(&config.data_dir)?;
        let listener = TcpListener::bind(&config.listen)?;
        let addr = listener.local_addr()?;
        let gateway = match &config.ws_listen {
            Some(ws) => Some(Gateway::start(ws, addr)?),
            None => None,
        };
        let shared = Arc::new(Shared {
            scheduler: Scheduler {
                capacity: config.capacity,
                state: Mutex::new((0, 0, 0)),
                cv: Condvar::new(),
            },
            config,
            peers: Mutex::new(VecDeque::new()),
            resumes: Mutex::new(HashMap::new()),
            next_match: AtomicU64::new(0),
            stop: AtomicBool::new(false),
            finished: Mutex::new(Vec::new()),
            finished_cv: Condvar::new(),
        });
        let sh = shared.clone();
        let accept = thread::Builder::new().name("accept".into()).spawn(move || {
            for conn in listener.incoming() {
                if sh.stop.load(Ordering::SeqCst) {
                    break;
                }
                match conn {
                    Ok(stream) => {
                        let sh = sh.clone();
                        let _ = thread::Builder::new()
                            .name("session".into())
                            .spawn(move || handle_connection(sh, stream));
                    }
                    Err(e) => warn!("accept failed: {e}"),
                }
            }
        })?;
        info!("listening on {addr}");
        Ok(ServerHandle {
            addr,
            shared,
            accept: Some(accept),
            gateway,
        })
    }
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn ws_addr(&self) -> Option<SocketAddr> {
        self.gateway.as_ref().map(|g| g.local_addr())
    }

    pub fn config(&self) -> &ServerConfig {
        &self.shared.config
    }

    /// Summaries of every match finished so far, in completion order.
    pub fn finished(&self) -> Vec<MatchSummary> {
        self.shared.finished.lock().unwrap().clone()
    }

    /// Blocks until at least `n` matches have finished or `timeout` passes.
    pub fn wait_for_matches(&self, n: usize, timeout: Duration) -> Vec<MatchSummary> {
        let deadline = Instant::now() + timeout;
        let mut done = self.shared.finished.lock().unwrap();
        while done.len() < n {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                break;
            }
            done = self.shared.finished_cv.wait_timeout(done, left).unwrap().0;
        }
        done.clone()
    }

    /// Blocks the calling thread for as long as the server runs.
    pub fn join(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
        if let Some(g) = self.gateway.take() {
            g.shutdown();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop();
        }
    }
}

fn send_error(link: &mut Link, code: &str, message: impl Into<String>) {
    let _ = link.send(&Message::Error(ErrorMessage::new(code, message)));
}

/// Reads the hello, counting malformed lines as strikes.
fn handshake(config: &ServerConfig, link: &mut Link) -> Option<HelloMessage> {
    let deadline = Instant::now() + config.handshake_timeout();
    let mut strikes = 0;
    loop {
        match link.recv_until(Some(deadline)) {
            Incoming::Closed => return None,
            Incoming::Timeout => {
                send_error(link, "timeout", "no hello received");
                return None;
            }
            Incoming::Line(line) => match Message::parse(&line) {
                Ok(Message::Hello(h)) if h.protocol_version == PROTOCOL_VERSION => return Some(h),
                Ok(Message::Hello(h)) => {
                    send_error(
                        link,
                        "version_mismatch",
                        format!(
                            "server speaks protocol {PROTOCOL_VERSION}, client sent {}",
                            h.protocol_version
                        ),
                    );
                    return None;
                }
                Ok(_) => send_error(link, "unexpected_message", "expected hello"),
                Err(e) => {
                    strikes += 1;
                    send_error(
                        link,
                        "malformed_json",
                        format!("{e} (strike {strikes} of {})", config.max_strikes),
                    );
                    if strikes >= config.max_strikes {
                        send_error(link, "too_many_strikes", "closing connection");
                        return None;
                    }
                }
            },
        }
    }
}

fn handle_connection(shared: Arc<Shared>, stream: TcpStream) {
    if shared.stop.load(Ordering::SeqCst) {
        return;
    }
    let mut link = match Link::new(stream) {
        Ok(l) => l,
        Err(e) => {
            warn!("connection setup failed: {e}");
            return;
        }
    };
    let Some(hello) = handshake(&shared.config, &mut link) else {
        return;
    };
    if let Some(match_id) = &hello.resume {
        let key = (match_id.clone(), hello.agent.clone());
        let sender = shared.resumes.lock().unwrap().get(&key).cloned();
        match sender {
            Some(tx) => {
                if let Err(mpsc::SendError(mut link)) = tx.send(link) {
                    send_error(&mut link, "unknown_match", format!("match {match_id} is over"));
                }
            }
            None => send_error(
                &mut link,
                "unknown_match",
                format!("no seat for {} in match {match_id}", hello.agent),
            ),
        }
        return;
    }
    if let Some(opponent) = hello.opponent.clone() {
        run_match(&shared, Waiting { hello, link }, Opponent::Builtin(opponent));
        return;
    }
    let waiting = shared.peers.lock().unwrap().pop_front();
    match waiting {
        Some(first) => run_match(&shared, first, Opponent::Peer(Waiting { hello, link })),
        None => shared.peers.lock().unwrap().push_back(Waiting { hello, link }),
    }
}

enum Opponent {
    Builtin(String),
    Peer(Waiting),
}

/// The link side of a remote seat; shared between its agent and the result sink.
struct RemoteSeat {
    agent: String,
    link: Option<Link>,
    strikes: u32,
    human: bool,
    resumes: Receiver<Link>,
    welcome: WelcomeMessage,
    abandoned: bool,
}

impl RemoteSeat {
    fn remote_error(&self, message: impl Into<String>) -> AgentError {
        AgentError::Remote {
            agent: self.agent.clone(),
            message: message.into(),
        }
    }

    fn send(&mut self, msg: &Message) {
        if let Some(link) = self.link.as_mut() {
            if link.send(msg).is_err() {
                self.link = None;
            }
        }
    }

    /// Waits for a resume; gives up the match after the grace period.
    fn await_resume(&mut self, config: &ServerConfig, hand_id: u64) -> Result<(), AgentError> {
        if self.abandoned {
            return Err(self.remote_error("abandoned the match"));
        }
        match self.resumes.recv_timeout(config.resume_grace()) {
            Ok(link) => {
                info!("{} resumed {} at hand {hand_id}", self.agent, self.welcome.match_id);
                self.link = Some(link);
                self.strikes = 0;
                self.welcome.next_hand = hand_id;
                let welcome = Message::Welcome(self.welcome.clone());
                self.send(&welcome);
                Ok(())
            }
            Err(_) => {
                self.abandoned = true;
                Err(self.remote_error("disconnected and did not resume"))
            }
        }
    }

    /// Counts a malformed message; true when the strike limit closed the connection.
    fn strike(&mut self, what: &str, config: &ServerConfig) -> bool {
        self.strikes += 1;
        let msg = format!("{what} (strike {} of {})", self.strikes, config.max_strikes);
        self.send(&Message::Error(ErrorMessage::new("malformed_json", msg)));
        if self.strikes >= config.max_strikes {
            self.send(&Message::Error(ErrorMessage::new(
                "too_many_strikes",
                "closing connection",
            )));
            if let Some(mut l) = self.link.take() {
                l.close();
            }
            return true;
        }
        false
    }

    fn decide(&mut self, view: &PlayerView, config: &ServerConfig) -> Result<Action, AgentError> {
        let legal = view.legal()?;
        let state = StateMessage::from_view(&self.welcome.match_id, view)
            .map_err(|e| self.remote_error(format!("cannot encode state: {e}")))?;
        let state = Message::State(state);
        let deadline = (!self.human).then(|| Instant::now() + config.decision_timeout());
        let mut need_state = true;
        loop {
            if self.link.is_none() {
                self.await_resume(config, view.hand_id)?;
                need_state = true;
                continue;
            }
            if need_state {
                let link = self.link.as_mut().expect("connected");
                while let Incoming::Line(stale) = link.recv(Some(Duration::ZERO)) {
                    warn!("{} sent {stale:?} out of turn; dropped", self.agent);
                }
                self.send(&state);
                need_state = false;
                continue;
            }
            let incoming = self.link.as_mut().expect("connected").recv_until(deadline);
            match incoming {
                Incoming::Timeout => {
                    let msg = format!(
                        "no action within {} ms; hand {} forfeited",
                        config.decision_timeout_ms, view.hand_id
                    );
                    self.send(&Message::Error(ErrorMessage::new("timeout", msg)));
                    return Err(self.remote_error("decision timed out"));
                }
                Incoming::Closed => self.link = None,
                Incoming::Line(line) => match Message::parse(&line) {
                    Err(e) => {
                        if self.strike(&e.to_string(), config) {
                            return Err(self.remote_error("too many malformed messages"));
                        }
                    }
                    Ok(Message::Action(msg)) => {
                        let (action, problem) = match msg.to_action() {
                            Ok(a) if legal.contains(a) => return Ok(a),
                            Ok(a) => (Some(a), format!("{a} is not legal here")),
                            Err(e) => (None, e.to_string()),
                        };
                        self.send(&Message::Error(ErrorMessage::illegal(problem.clone(), &legal)));
                        if config.illegal_action == IllegalActionPolicy::Forfeit {
                            return match action {
                                Some(a) => Ok(a),
                                None => Err(self.remote_error(problem)),
                            };
                        }
                    }
                    Ok(other) => {
                        let msg = format!("expected an action, got {}", other.to_line());
                        self.send(&Message::Error(ErrorMessage::new("unexpected_message", msg)));
                    }
                },
            }
        }
    }
}

/// A client connection playing one seat.
struct RemoteAgent {
    name: String,
    seat: Arc<Mutex<RemoteSeat>>,
    config: ServerConfig,
}

impl Agent for RemoteAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn act(&mut self, view: &PlayerView) -> Result<Action, AgentError> {
        self.seat.lock().unwrap().decide(view, &self.config)
    }
}

/// Stands in for a remote seat when recomputing estimates: it has no policy to query.
pub struct BlackBox(pub String);

impl Agent for BlackBox {
    fn name(&self) -> &str {
        &self.0
    }

    fn act(&mut self, _: &PlayerView) -> Result<Action, AgentError> {
        Err(AgentError::Unsupported {
            agent: self.0.clone(),
            capability: "playing (it only stands in for a recorded remote seat)",
        })
    }

    fn policy(&self, _: &PlayerView) -> Result<Policy, AgentError> {
        Err(AgentError::Unsupported {
            agent: self.0.clone(),
            capability: "policy queries",
        })
    }
}

/// AIVAT over a finished match with one built-in seat. Only the built-in agent's decisions
/// are corrected and the baseline is the equity heuristic, which needs no policy of the
/// remote seat. `builtin` must be a fresh instance built like the one that played.
pub fn builtin_aivat(
    records: &[HandHistoryRecord],
    agents: &[String; 2],
    builtin_index: usize,
    builtin: &mut dyn Agent,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let mut remote = BlackBox(agents[1 - builtin_index].clone());
    let mut known = [false; 2];
    known[builtin_index] = true;
    let cfg = AivatConfig {
        known,
        seed,
        ..AivatConfig::default()
    };
    let mut baseline = EquityBaseline::default();
    let result = if builtin_index == 0 {
        aivat_estimate(records, builtin, &mut remote, &mut baseline, &cfg)?
    } else {
        aivat_estimate(records, &mut remote, builtin, &mut baseline, &cfg)?
    };
    Ok(result.report)
}

fn welcome_for(shared: &Shared, first: &Waiting) -> Result<(GameSpec, MatchMode, u64), String> {
    let config = &shared.config;
    let variant: Variant = match &first.hello.game {
        Some(g) => g.parse().map_err(|e: holdem_core::engine::EngineError| e.to_string())?,
        None => Variant::Hunl,
    };
    let hands = first.hello.hands.unwrap_or(config.default_hands);
    if hands == 0 || hands > config.max_hands {
        return Err(format!("hands must lie in 1..={}", config.max_hands));
    }
    let mode = if first.hello.duplicate.unwrap_or(false) {
        MatchMode::Duplicate
    } else {
        MatchMode::Plain
    };
    Ok((GameSpec::for_variant(variant), mode, hands))
}

fn run_match(shared: &Arc<Shared>, mut first: Waiting, opponent: Opponent) {
    let config = &shared.config;
    let (spec, mode, hands) = match welcome_for(shared, &first) {
        Ok(x) => x,
        Err(e) => {
            send_error(&mut first.link, "bad_request", e);
            if let Opponent::Peer(mut p) = opponent {
                send_error(
                    &mut p.link,
                    "bad_request",
                    "the paired client asked for an invalid match",
                );
            }
            return;
        }
    };
    let n = shared.next_match.fetch_add(1, Ordering::SeqCst);
    let seed = deal_seed(config.seed, n);
    let mut plan = MatchPlan::new(spec, hands, mode, seed);
    plan.match_id = format!("m{n:05}-{:08x}", seed >> 32);
    let builtin_seed = deal_seed(seed, u64::MAX);

    let mut names = [first.hello.agent.clone(), String::new()];
    let mut builtin: Option<Box<dyn Agent>> = None;
    let mut builtin_request = None;
    let mut second: Option<Waiting> = None;
    match opponent {
        Opponent::Builtin(name) => match builtin_agent(&name, &spec, builtin_seed) {
            Ok(agent) => {
                names[1] = agent.name().to_string();
                builtin = Some(agent);
                builtin_request = Some(name);
            }
            Err(e) => {
                send_error(&mut first.link, "unknown_opponent", e.to_string());
                return;
            }
        },
        Opponent::Peer(p) => {
            names[1] = p.hello.agent.clone();
            second = Some(p);
        }
    }
    if names[0] == names[1] {
        names[1].push_str("#2");
    }

    let welcome = |i: usize| WelcomeMessage {
        match_id: plan.match_id.clone(),
        protocol_version: PROTOCOL_VERSION,
        opponent: names[1 - i].clone(),
        hands: plan.total_hands(),
        duplicate: mode == MatchMode::Duplicate,
        game: format!("{:?}", spec.variant).to_lowercase(),
        next_hand: 0,
    };
    let mut seats: Vec<(usize, Arc<Mutex<RemoteSeat>>)> = Vec::new();
    for (i, w) in [Some(first), second].into_iter().enumerate() {
        let Some(w) = w else { continue };
        let (tx, rx) = mpsc::channel();
        shared
            .resumes
            .lock()
            .unwrap()
            .insert((plan.match_id.clone(), names[i].clone()), tx);
        seats.push((
            i,
            Arc::new(Mutex::new(RemoteSeat {
                agent: names[i].clone(),
                link: Some(w.link),
                strikes: 0,
                human: w.hello.human.unwrap_or(false),
                resumes: rx,
                welcome: welcome(i),
                abandoned: false,
            })),
        ));
    }

    let _slot = shared.scheduler.acquire();
    for (_, seat) in &seats {
        let mut s = seat.lock().unwrap();
        let w = Message::Welcome(s.welcome.clone());
        s.send(&w);
    }
    info!("{} started: {} vs {}", plan.match_id, names[0], names[1]);

    let mut agents: Vec<Box<dyn Agent>> = seats
        .iter()
        .map(|(i, seat)| {
            Box::new(RemoteAgent {
                name: names[*i].clone(),
                seat: seat.clone(),
                config: config.clone(),
            }) as Box<dyn Agent>
        })
        .collect();
    if let Some(b) = builtin.take() {
        agents.push(b);
    }
    let history = config.data_dir.join(format!("{}.jsonl", plan.match_id));
    let mut records: Vec<HandHistoryRecord> = Vec::new();
    let outcome = (|| -> Result<(), PlatformError> {
        let mut writer = BufWriter::new(File::create(&history)?);
        let (a, b) = agents.split_at_mut(1);
        run_match_with(&plan, &mut *a[0], &mut *b[0], |record| {
            writeln!(writer, "{}", record.to_line())
                .and_then(|_| writer.flush())
                .map_err(|e| EvalError::Invalid(format!("cannot write history: {e}")))?;
            let state = record.replay()?;
            let result = Message::Result(ResultMessage::from_state(&state)?);
            records.push(record.clone());
            for (_, seat) in &seats {
                let mut s = seat.lock().unwrap();
                if s.abandoned {
                    return Err(EvalError::Invalid(format!("{} abandoned the match", s.agent)));
                }
                s.send(&result);
            }
            Ok(())
        })?;
        Ok(())
    })();

    let mut chips = [0; 2];
    for r in &records {
        let first_chips = r.first_agent_chips();
        chips[0] += first_chips;
        chips[1] -= first_chips;
    }
    let played = records.len() as u64;
    for (i, seat) in &seats {
        let mut s = seat.lock().unwrap();
        let end = MatchEndMessage {
            match_id: plan.match_id.clone(),
            hands: played,
            chips: chips[*i],
            mbb_per_hand: if played == 0 {
                0.0
            } else {
                spec.to_mbb(chips[*i] as f64) / played as f64
            },
        };
        if let Err(e) = &outcome {
            s.send(&Message::Error(ErrorMessage::new("match_aborted", e.to_string())));
        }
        s.send(&Message::MatchEnd(end));
        if let Some(mut l) = s.link.take() {
            l.close();
        }
        shared
            .resumes
            .lock()
            .unwrap()
            .remove(&(plan.match_id.clone(), s.agent.clone()));
    }
    drop(_slot);

    let report = report_from_histories(&records).ok();
    let mut aivat = None;
    let builtin_index = builtin_request.as_ref().map(|_| 1);
    if let (Some(idx), Some(request), true, false) =
        (builtin_index, &builtin_request, config.aivat_report, records.is_empty())
    {
        match builtin_agent(request, &spec, builtin_seed) {
            Ok(mut fresh) if fresh.is_white_box() => match builtin_aivat(&records, &names, idx, &mut *fresh, seed) {
                Ok(r) => aivat = Some(r),
                Err(e) => warn!("{}: AIVAT failed: {e}", plan.match_id),
            },
            Ok(_) => {}
            Err(e) => warn!("{}: cannot rebuild {request}: {e}", plan.match_id),
        }
    }
    let summary = MatchSummary {
        match_id: plan.match_id.clone(),
        game: spec,
        agents: names.clone(),
        mode,
        seed,
        builtin_seed: builtin_index.map(|_| builtin_seed),
        hands_played: played,
        planned_hands: plan.total_hands(),
        chips,
        forfeits: records.iter().filter(|r| r.forfeit.is_some()).count() as u64,
        history,
        completed: outcome.is_ok() && played == plan.total_hands(),
        error: outcome.err().map(|e| e.to_string()),
        report,
        aivat,
    };
    let path = config.data_dir.join(format!("{}.summary.json", plan.match_id));
    if let Err(e) = serde_json::to_string_pretty(&summary)
        .map_err(std::io::Error::other)
        .and_then(|s| fs::write(&path, s))
    {
        warn!("cannot write {}: {e}", path.display());
    }
    info!("{} finished after {played} hands", plan.match_id);
    shared.finished.lock().unwrap().push(summary);
    shared.finished_cv.notify_all();
}
