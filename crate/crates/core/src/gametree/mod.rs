//! Extensive-form game trees built from the engine, with exact expected values and best
//! responses over fully materialized trees.

mod build;
mod profile;
mod translate;

use std::collections::HashMap;

use crate::engine::{EngineError, GameSpec, Seat};

pub use build::{build_tree, CardAbstraction, TreeConfig};
pub use profile::{InfoSetStrategy, StrategyProfile};
pub use translate::{abstract_decision, realize, AbstractDecision};

pub type NodeId = usize;

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("tree exceeds the node budget of {budget} while expanding the {round} round")]
    Budget { budget: usize, round: &'static str },
    #[error("profile is missing {} information sets: {}", .0.len(), .0.iter().take(8).cloned().collect::<Vec<_>>().join(", "))]
    MissingInfoSets(Vec<String>),
    #[error("information set {key}: {message}")]
    InfoSet { key: String, message: String },
    #[error("{0}")]
    Config(String),
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Chance {
        outcomes: Vec<(f64, NodeId)>,
    },
    Player {
        seat: Seat,
        infoset: usize,
        children: Vec<NodeId>,
    },
    Terminal {
        utility: [f64; 2],
    },
}

#[derive(Clone, Debug)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub street: usize,
    pub kind: NodeKind,
}

#[derive(Clone, Debug)]
pub struct InfoSet {
    pub key: String,
    pub seat: Seat,
    pub actions: Vec<String>,
    pub members: Vec<NodeId>,
}

/// A fully enumerated game. Node ids are assigned parents-first, so a forward scan over ids
/// visits every parent before its children.
#[derive(Clone, Debug)]
pub struct Game {
    pub spec: GameSpec,
    pub nodes: Vec<Node>,
    pub infosets: Vec<InfoSet>,
    index: HashMap<String, usize>,
}

/// Dense behavior strategy indexed by information-set id.
pub type Dense = Vec<Vec<f64>>;

#[derive(Clone, Debug)]
pub struct BestResponse {
    pub value: f64,
    /// The input profile with the responder's information sets replaced by pure choices.
    pub strategy: Dense,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeStats {
    pub nodes: usize,
    pub terminals: usize,
    pub chance_nodes: usize,
    pub player_nodes: usize,
    pub infosets: [usize; 2],
    pub player_nodes_per_street: Vec<usize>,
}

impl Game {
    pub const ROOT: NodeId = 0;

    pub fn infoset_id(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn stats(&self) -> TreeStats {
        let mut s = TreeStats {
            nodes: self.nodes.len(),
            player_nodes_per_street: vec![0; self.spec.num_rounds()],
            ..TreeStats::default()
        };
        for n in &self.nodes {
            match n.kind {
                NodeKind::Chance { .. } => s.chance_nodes += 1,
                NodeKind::Terminal { .. } => s.terminals += 1,
                NodeKind::Player { .. } => {
                    s.player_nodes += 1;
                    s.player_nodes_per_street[n.street] += 1;
                }
            }
        }
        for i in &self.infosets {
            s.infosets[i.seat] += 1;
        }
        s
    }

    /// Plain-text tree statistics, one line per item.
    pub fn stats_report(&self) -> String {
        let s = self.stats();
        let mut out = format!(
            "nodes {}\nterminals {}\nchance {}\nplayer {}\ninfosets P1 {} P2 {}\n",
            s.nodes, s.terminals, s.chance_nodes, s.player_nodes, s.infosets[0], s.infosets[1]
        );
        for (street, n) in s.player_nodes_per_street.iter().enumerate() {
            out.push_str(&format!("round {street} player nodes {n}\n"));
        }
        out
    }

    pub fn uniform(&self) -> Dense {
        self.infosets
            .iter()
            .map(|i| vec![1.0 / i.actions.len() as f64; i.actions.len()])
            .collect()
    }

    pub fn dense(&self, profile: &StrategyProfile) -> Result<Dense, GameError> {
        let mut missing = Vec::new();
        let mut out = Vec::with_capacity(self.infosets.len());
        for info in &self.infosets {
            match profile.get(&info.key) {
                Some(s) if s.actions == info.actions => out.push(s.probs.clone()),
                Some(s) => {
                    return Err(GameError::InfoSet {
                        key: info.key.clone(),
                        message: format!(
                            "profile actions {:?} do not match tree actions {:?}",
                            s.actions, info.actions
                        ),
                    })
                }
                None => {
                    missing.push(info.key.clone());
                    out.push(Vec::new());
                }
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(GameError::MissingInfoSets(missing))
        }
    }

    pub fn profile(&self, dense: &Dense) -> StrategyProfile {
        let mut p = StrategyProfile::default();
        for (info, probs) in self.infosets.iter().zip(dense) {
            p.insert(info.key.clone(), info.actions.clone(), probs.clone());
        }
        p
    }

    /// Exact expected utility per seat, in chips.
    pub fn expected_value(&self, strategy: &Dense) -> [f64; 2] {
        self.value_at(Self::ROOT, strategy)
    }

    pub fn value_at(&self, node: NodeId, strategy: &Dense) -> [f64; 2] {
        match &self.nodes[node].kind {
            NodeKind::Terminal { utility } => *utility,
            NodeKind::Chance { outcomes } => {
                let mut v = [0.0; 2];
                for &(p, c) in outcomes {
                    let cv = self.value_at(c, strategy);
                    v[0] += p * cv[0];
                    v[1] += p * cv[1];
                }
                v
            }
            NodeKind::Player { infoset, children, .. } => {
                let mut v = [0.0; 2];
                for (&p, &c) in strategy[*infoset].iter().zip(children) {
                    if p == 0.0 {
                        continue;
                    }
                    let cv = self.value_at(c, strategy);
                    v[0] += p * cv[0];
                    v[1] += p * cv[1];
                }
                v
            }
        }
    }

    /// Reach probabilities per node: `[π_P1, π_P2, π_chance]`.
    pub fn reach(&self, strategy: &Dense) -> Vec<[f64; 3]> {
        let mut reach = vec![[0.0; 3]; self.nodes.len()];
        reach[Self::ROOT] = [1.0; 3];
        for id in 0..self.nodes.len() {
            let r = reach[id];
            match &self.nodes[id].kind {
                NodeKind::Terminal { .. } => {}
                NodeKind::Chance { outcomes } => {
                    for &(p, c) in outcomes {
                        reach[c] = [r[0], r[1], r[2] * p];
                    }
                }
                NodeKind::Player {
                    seat,
                    infoset,
                    children,
                } => {
                    for (&p, &c) in strategy[*infoset].iter().zip(children) {
                        let mut rc = r;
                        rc[*seat] *= p;
                        reach[c] = rc;
                    }
                }
            }
        }
        reach
    }

    /// Number of `seat`'s own decisions on the path to each of its information sets.
    fn own_depths(&self, seat: Seat) -> Vec<usize> {
        let mut node_depth = vec![0usize; self.nodes.len()];
        let mut info_depth = vec![0usize; self.infosets.len()];
        for id in 0..self.nodes.len() {
            let d = node_depth[id];
            match &self.nodes[id].kind {
                NodeKind::Terminal { .. } => {}
                NodeKind::Chance { outcomes } => {
                    for &(_, c) in outcomes {
                        node_depth[c] = d;
                    }
                }
                NodeKind::Player {
                    seat: s,
                    infoset,
                    children,
                } => {
                    let step = usize::from(*s == seat);
                    if *s == seat {
                        info_depth[*infoset] = d;
                    }
                    for &c in children {
                        node_depth[c] = d + step;
                    }
                }
            }
        }
        info_depth
    }

    /// Exact best response of `seat` against the other seat's part of `strategy`.
    pub fn best_response(&self, strategy: &Dense, seat: Seat) -> BestResponse {
        let reach = self.reach(strategy);
        let opp_reach = |id: NodeId| reach[id][1 - seat] * reach[id][2];

        let depths = self.own_depths(seat);
        let mut order: Vec<usize> = (0..self.infosets.len())
            .filter(|&i| self.infosets[i].seat == seat)
            .collect();
        order.sort_by(|&a, &b| depths[b].cmp(&depths[a]).then(a.cmp(&b)));

        let mut br = strategy.clone();
        let mut memo = vec![f64::NAN; self.nodes.len()];
        for &info in &order {
            let n_actions = self.infosets[info].actions.len();
            let mut totals = vec![0.0; n_actions];
            for &h in &self.infosets[info].members {
                let w = opp_reach(h);
                if w == 0.0 {
                    continue;
                }
                let NodeKind::Player { children, .. } = &self.nodes[h].kind else {
                    unreachable!("infoset members are player nodes")
                };
                for (a, &c) in children.iter().enumerate() {
                    totals[a] += w * self.br_value(c, seat, strategy, &br, &mut memo);
                }
            }
            let mut best = 0;
            for a in 1..n_actions {
                if totals[a] > totals[best] {
                    best = a;
                }
            }
            let mut pure = vec![0.0; n_actions];
            pure[best] = 1.0;
            br[info] = pure;
        }
        let value = self.br_value(Self::ROOT, seat, strategy, &br, &mut memo);
        BestResponse { value, strategy: br }
    }

    fn br_value(&self, node: NodeId, seat: Seat, strategy: &Dense, br: &Dense, memo: &mut [f64]) -> f64 {
        if !memo[node].is_nan() {
            return memo[node];
        }
        let v = match &self.nodes[node].kind {
            NodeKind::Terminal { utility } => utility[seat],
            NodeKind::Chance { outcomes } => outcomes
                .iter()
                .map(|&(p, c)| p * self.br_value(c, seat, strategy, br, memo))
                .sum(),
            NodeKind::Player {
                seat: s,
                infoset,
                children,
            } => {
                let probs = if *s == seat { &br[*infoset] } else { &strategy[*infoset] };
                let mut v = 0.0;
                for (&p, &c) in probs.iter().zip(children) {
                    if p > 0.0 {
                        v += p * self.br_value(c, seat, strategy, br, memo);
                    }
                }
                v
            }
        };
        memo[node] = v;
        v
    }

    /// Best-response values of each seat against the other's strategy.
    pub fn best_response_values(&self, strategy: &Dense) -> [f64; 2] {
        [
            self.best_response(strategy, 0).value,
            self.best_response(strategy, 1).value,
        ]
    }

    /// Mean gain of the two best responders, in chips. Zero exactly at a Nash equilibrium of a
    /// zero-sum game (the game value cancels).
    pub fn exploitability(&self, strategy: &Dense) -> f64 {
        let [a, b] = self.best_response_values(strategy);
        (a + b) / 2.0
    }
}
