use std::collections::HashMap;
use std::sync::Arc;

use crate::abstraction::menu::{BetContext, BetMenu};
use crate::engine::{format_cards, Action, Card, Deal, GameSpec, HandState, Round, Variant};

use super::{Game, GameError, InfoSet, Node, NodeId, NodeKind};

/// Maps what a seat can see at a round to a bucket id.
pub trait CardAbstraction: Send + Sync {
    fn bucket(&self, street: usize, private: &[Card], board: &[Card]) -> u32;
}

#[derive(Clone)]
pub struct TreeConfig {
    /// Action abstraction; required for no-limit games.
    pub menu: Option<BetMenu>,
    /// Card abstraction; raw cards are used in keys when absent.
    pub cards: Option<Arc<dyn CardAbstraction>>,
    /// Deals to use (uniformly weighted) instead of enumerating every deal exactly.
    pub deals: Option<Vec<Deal>>,
    /// Maximum raises per round in an abstract tree.
    pub raise_cap: Option<u32>,
    pub node_budget: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            menu: None,
            cards: None,
            deals: None,
            raise_cap: None,
            node_budget: 20_000_000,
        }
    }
}

impl std::fmt::Debug for TreeConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TreeConfig")
            .field("menu", &self.menu)
            .field("cards", &self.cards.is_some())
            .field("deals", &self.deals.as_ref().map(Vec::len))
            .field("raise_cap", &self.raise_cap)
            .field("node_budget", &self.node_budget)
            .finish()
    }
}

struct Builder<'a> {
    spec: GameSpec,
    cfg: &'a TreeConfig,
    nodes: Vec<Node>,
    infosets: Vec<InfoSet>,
    index: HashMap<String, usize>,
}

/// Per-deal key prefixes: for each seat, the card part of the key at each round.
struct DealKeys {
    by_street: [Vec<String>; 2],
}

pub fn build_tree(spec: &GameSpec, cfg: &TreeConfig) -> Result<Game, GameError> {
    spec.validate()?;
    if spec.variant == Variant::Hunl && cfg.menu.is_none() {
        return Err(GameError::Config(
            "no-limit trees need an action abstraction (bet menu)".into(),
        ));
    }
    let mut b = Builder {
        spec: *spec,
        cfg,
        nodes: Vec::new(),
        infosets: Vec::new(),
        index: HashMap::new(),
    };
    let root = b.alloc(None, 0)?;
    let deals = match &cfg.deals {
        Some(d) if d.is_empty() => return Err(GameError::Config("empty deal list".into())),
        Some(d) => d.clone(),
        None => enumerate_private_deals(spec),
    };
    let p = 1.0 / deals.len() as f64;
    let mut outcomes = Vec::with_capacity(deals.len());
    for (n, deal) in deals.into_iter().enumerate() {
        let state = HandState::new(*spec, n as u64, deal)?;
        let keys = b.deal_keys(&state);
        let child = b.expand(Some(root), &state, &keys, String::new())?;
        outcomes.push((p, child));
    }
    b.nodes[root].kind = NodeKind::Chance { outcomes };
    Ok(Game {
        spec: *spec,
        nodes: b.nodes,
        infosets: b.infosets,
        index: b.index,
    })
}

/// All ordered private-card assignments; the board is filled with placeholder cards that
/// in-tree chance nodes replace.
fn enumerate_private_deals(spec: &GameSpec) -> Vec<Deal> {
    let deck = spec.deck();
    let h = spec.hole_cards();
    let mut out = Vec::new();
    for a in combinations(&deck, h) {
        let rest: Vec<Card> = deck.iter().filter(|c| !a.contains(c)).copied().collect();
        for b in combinations(&rest, h) {
            let board: Vec<Card> = rest
                .iter()
                .filter(|c| !b.contains(c))
                .take(spec.total_board_cards())
                .copied()
                .collect();
            out.push(Deal {
                hole: [a.clone(), b],
                board,
            });
        }
    }
    out
}

pub(crate) fn combinations(items: &[Card], k: usize) -> Vec<Vec<Card>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[Card], k: usize, start: usize, cur: &mut Vec<Card>, out: &mut Vec<Vec<Card>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

/// Card part of an information-set key: raw cards, or the bucket sequence up to `street`.
pub(crate) fn card_key(spec: &GameSpec, cfg: &TreeConfig, street: usize, private: &[Card], board: &[Card]) -> String {
    match &cfg.cards {
        Some(abs) => {
            let buckets: Vec<String> = (0..=street)
                .map(|s| abs.bucket(s, private, &board[..spec.board_len(s)]).to_string())
                .collect();
            format!("b{}", buckets.join("."))
        }
        None => format!("{}|{}", format_cards(private), format_cards(board)),
    }
}

/// Labelled actions available at a decision of the abstract game.
pub(crate) fn node_actions(state: &HandState, cfg: &TreeConfig) -> Result<Vec<(String, Action)>, GameError> {
    let legal = state.legal_actions()?;
    let capped = cfg.raise_cap.is_some_and(|cap| state.raises_this_round() >= cap);
    let mut out = match &cfg.menu {
        Some(menu) => {
            let ctx = BetContext::from_state(state).expect("player node has a context");
            menu.resolve(&ctx)
        }
        None => legal
            .representatives()
            .into_iter()
            .map(|a| (action_token(a), a))
            .collect(),
    };
    if capped {
        out.retain(|(_, a)| !matches!(a, Action::RaiseTo(_)));
    }
    Ok(out)
}

pub(crate) fn action_token(a: Action) -> String {
    match a {
        Action::Fold => "f".into(),
        Action::Check => "k".into(),
        Action::Call => "c".into(),
        Action::RaiseTo(x) => format!("r{x}"),
    }
}

impl Builder<'_> {
    fn alloc(&mut self, parent: Option<NodeId>, street: usize) -> Result<NodeId, GameError> {
        if self.nodes.len() >= self.cfg.node_budget {
            return Err(GameError::Budget {
                budget: self.cfg.node_budget,
                round: Round::betting(street).as_str(),
            });
        }
        self.nodes.push(Node {
            parent,
            street,
            kind: NodeKind::Terminal { utility: [0.0; 2] },
        });
        Ok(self.nodes.len() - 1)
    }

    fn deal_keys(&self, state: &HandState) -> DealKeys {
        let spec = &self.spec;
        let full = &state.deal().board;
        let per_seat = |seat: usize| -> Vec<String> {
            let private = state.private_cards(seat);
            match &self.cfg.cards {
                Some(abs) => {
                    let mut prefix = String::new();
                    (0..spec.num_rounds())
                        .map(|s| {
                            let b = abs.bucket(s, private, &full[..spec.board_len(s)]);
                            if s > 0 {
                                prefix.push('.');
                            }
                            prefix.push_str(&b.to_string());
                            format!("b{prefix}")
                        })
                        .collect()
                }
                None => Vec::new(),
            }
        };
        DealKeys {
            by_street: [per_seat(0), per_seat(1)],
        }
    }

    fn key(&self, state: &HandState, keys: &DealKeys, hist: &str) -> String {
        let seat = state.to_act().expect("player node");
        let cards = if self.cfg.cards.is_some() {
            keys.by_street[seat][state.street()].clone()
        } else {
            card_key(
                &self.spec,
                self.cfg,
                state.street(),
                state.private_cards(seat),
                state.board(),
            )
        };
        format!("{seat}|{cards}|{hist}")
    }

    fn actions(&self, state: &HandState) -> Result<Vec<(String, Action)>, GameError> {
        node_actions(state, self.cfg)
    }

    fn register(&mut self, key: String, seat: usize, labels: &[String], node: NodeId) -> Result<usize, GameError> {
        if let Some(&id) = self.index.get(&key) {
            let info = &mut self.infosets[id];
            if info.seat != seat || info.actions != labels {
                return Err(GameError::InfoSet {
                    key,
                    message: format!(
                        "members disagree on actor or actions ({:?} vs {:?})",
                        info.actions, labels
                    ),
                });
            }
            info.members.push(node);
            return Ok(id);
        }
        let id = self.infosets.len();
        self.infosets.push(InfoSet {
            key: key.clone(),
            seat,
            actions: labels.to_vec(),
            members: vec![node],
        });
        self.index.insert(key, id);
        Ok(id)
    }

    fn expand(
        &mut self,
        parent: Option<NodeId>,
        state: &HandState,
        keys: &DealKeys,
        hist: String,
    ) -> Result<NodeId, GameError> {
        let id = self.alloc(parent, state.street())?;
        if state.is_terminal() {
            let pay = state.settle()?;
            self.nodes[id].kind = NodeKind::Terminal {
                utility: [pay.chips_won[0] as f64, pay.chips_won[1] as f64],
            };
            return Ok(id);
        }
        let seat = state.to_act().expect("non-terminal state has an actor");
        let actions = self.actions(state)?;
        let labels: Vec<String> = actions.iter().map(|(l, _)| l.clone()).collect();
        let key = self.key(state, keys, &hist);
        let infoset = self.register(key, seat, &labels, id)?;

        let mut children = Vec::with_capacity(actions.len());
        for (label, action) in actions {
            let next = state.apply(action)?;
            let mut child_hist = format!("{hist}{label}");
            if !next.is_terminal() && next.street() > state.street() {
                child_hist.push('/');
            }
            let revealed = next.board().len() > state.board().len();
            let child = if revealed && self.cfg.deals.is_none() {
                self.expand_chance(id, state, action, &next, keys, child_hist)?
            } else {
                self.expand(Some(id), &next, keys, child_hist)?
            };
            children.push(child);
        }
        self.nodes[id].kind = NodeKind::Player {
            seat,
            infoset,
            children,
        };
        Ok(id)
    }

    /// Chance node over the board cards revealed when `action` closes a round.
    fn expand_chance(
        &mut self,
        parent: NodeId,
        state: &HandState,
        action: Action,
        next: &HandState,
        keys: &DealKeys,
        hist: String,
    ) -> Result<NodeId, GameError> {
        let id = self.alloc(Some(parent), next.street())?;
        let new_cards = next.board().len() - state.board().len();
        let hidden = state.unrevealed_board_len();
        let pool = state.undealt();
        let combos = combinations(&pool, new_cards);
        let p = 1.0 / combos.len() as f64;
        let mut outcomes = Vec::with_capacity(combos.len());
        for combo in combos {
            let mut board = combo.clone();
            board.extend(
                pool.iter()
                    .filter(|c| !combo.contains(c))
                    .take(hidden - new_cards)
                    .copied(),
            );
            let dealt = state.with_unrevealed_board(&board)?.apply(action)?;
            let child = self.expand(Some(id), &dealt, keys, hist.clone())?;
            outcomes.push((p, child));
        }
        self.nodes[id].kind = NodeKind::Chance { outcomes };
        Ok(id)
    }
}
