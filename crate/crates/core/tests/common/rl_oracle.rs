//! Independent readers and simulators for the learning primitives.

use std::collections::BTreeMap;

use holdem_core::engine::{Action, Card, Deal, GameSpec, HandState, PlayerView};
use holdem_core::evaluation::Outcome;
use holdem_core::rlcore::{kbest_schedule, ActionMenu, EncodedState, SelfPlayPool, SlotFeature, StateFeatures};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Reads the tensors back into structured features, bit by bit.
pub fn decode(e: &EncodedState) -> StateFeatures {
    let cards_in = |ch: usize| {
        let mut out = Vec::new();
        for suit in 0..4 {
            for rank in 0..13 {
                if e.cards.get(ch, suit, rank) == 1 {
                    out.push(Card::new(rank as u8, suit as u8));
                }
            }
        }
        out.sort_unstable();
        out
    };
    let mut board = cards_in(1);
    board.extend(cards_in(2));
    board.extend(cards_in(3));
    let n_b = e.actions.cols;
    let mut rounds = vec![Vec::new(); 4];
    for (r, slots) in rounds.iter_mut().enumerate() {
        for j in 0..6 {
            let ch = r * 6 + j;
            if e.actions.channel(ch).iter().all(|&x| x == 0) {
                break;
            }
            let mut actor = None;
            let mut column = None;
            for seat in 0..2 {
                if let Some(k) = e.actions.row(ch, seat).iter().position(|&x| x == 1) {
                    actor = Some(seat);
                    column = Some(k);
                }
            }
            slots.push(SlotFeature {
                actor,
                column,
                legal: e.actions.row(ch, 3).iter().map(|&x| x == 1).collect(),
            });
        }
    }
    StateFeatures {
        n_b,
        private: cards_in(0),
        board,
        rounds,
        overflow: e.overflow,
    }
}

/// Random legal action that favors long betting sequences.
pub fn random_action(state: &HandState, rng: &mut ChaCha8Rng) -> Action {
    let legal = state.legal_actions().expect("decision");
    let u: f64 = rng.gen();
    if legal.fold && u < 0.08 {
        return Action::Fold;
    }
    if let Some(r) = legal.raise {
        if u < 0.55 {
            let v: f64 = rng.gen();
            let to = if v < 0.35 {
                r.min_to
            } else if v < 0.45 {
                r.max_to
            } else {
                rng.gen_range(r.min_to..=r.max_to.min(3 * r.min_to))
            };
            return Action::RaiseTo(to);
        }
    }
    legal.passive()
}

/// Every state of one random hand, from the deal to the end.
pub fn random_hand(spec: &GameSpec, hand_id: u64, rng: &mut ChaCha8Rng) -> Vec<HandState> {
    let mut s = HandState::new(*spec, hand_id, Deal::random(spec, rng)).expect("valid deal");
    let mut out = vec![s.clone()];
    while s.to_act().is_some() {
        let a = random_action(&s, rng);
        s.apply_in_place(a).expect("legal");
        out.push(s.clone());
    }
    out
}

/// Shape, sparsity and legality invariants of one encoding of `state` seen by `view.seat`.
pub fn check_invariants(
    state: &HandState,
    view: &PlayerView,
    e: &EncodedState,
    menu: &ActionMenu,
) -> Result<(), String> {
    let n_b = menu.n_b();
    if (e.cards.channels, e.cards.rows, e.cards.cols) != (6, 4, 13) {
        return Err("card tensor shape".into());
    }
    if (e.actions.channels, e.actions.rows, e.actions.cols) != (24, 4, n_b) {
        return Err("action tensor shape".into());
    }
    if e.cards.data.iter().chain(&e.actions.data).any(|&x| x > 1) {
        return Err("non-binary entry".into());
    }
    let spec = state.spec();
    let nb = view.board.len() as u32;
    let hole = spec.hole_cards() as u32;
    let expect = [hole, nb.min(3), u32::from(nb >= 4), u32::from(nb >= 5), nb, nb + hole];
    for (ch, want) in expect.iter().enumerate() {
        if e.cards.channel_sum(ch) != *want {
            return Err(format!(
                "card channel {ch} sums to {}, expected {want}",
                e.cards.channel_sum(ch)
            ));
        }
    }
    for i in 0..52 {
        let (p, b, all) = (e.cards.channel(0)[i], e.cards.channel(4)[i], e.cards.channel(5)[i]);
        if all != (p | b) || p & b == 1 {
            return Err(format!("channel 5 is not the union at {i}"));
        }
    }
    let opp = &state.deal().hole[1 - view.seat];
    for c in opp {
        if !view.board.contains(c) && e.cards.get(5, c.suit() as usize, c.rank() as usize) == 1 {
            return Err("opponent private card leaked".into());
        }
    }

    let states = holdem_core::engine::betting_states(spec, &view.history).map_err(|x| x.to_string())?;
    let decisions: Vec<(usize, usize, Option<usize>)> = {
        let mut v: Vec<(usize, usize, Option<usize>)> = view
            .history
            .iter()
            .enumerate()
            .map(|(i, r)| (r.street, i, Some(r.seat)))
            .collect();
        if view.to_act.is_some() {
            v.push((view.street, view.history.len(), None));
        }
        v
    };
    let mut overflow = false;
    for r in 0..4 {
        let in_round: Vec<_> = decisions.iter().filter(|d| d.0 == r).collect();
        overflow |= in_round.len() > 6;
        for j in 0..6 {
            let ch = r * 6 + j;
            let present = j < in_round.len().min(6);
            let empty = e.actions.channel(ch).iter().all(|&x| x == 0);
            if present == empty {
                return Err(format!("slot {r}/{j} presence mismatch"));
            }
            if !present {
                continue;
            }
            let d = if j == 5 && in_round.len() > 6 {
                let last_action = in_round.iter().rev().find(|d| d.2.is_some()).unwrap();
                (last_action.1, last_action.2, in_round.last().unwrap().1)
            } else {
                (in_round[j].1, in_round[j].2, in_round[j].1)
            };
            let (action_index, actor, legal_index) = d;
            let legal = states[legal_index].legal_actions().map_err(|x| x.to_string())?;
            let lrow = e.actions.row(ch, 3);
            if (lrow[0] == 1) != legal.fold || lrow[1] != 1 || (lrow[n_b - 1] == 1) != legal.raise.is_some() {
                return Err(format!("legal row {r}/{j} disagrees with the engine"));
            }
            if legal.raise.is_none() && lrow[2..].iter().any(|&x| x == 1) {
                return Err(format!("raise column legal without a raise at {r}/{j}"));
            }
            let ones0 = e.actions.row(ch, 0).iter().filter(|&&x| x == 1).count();
            let ones1 = e.actions.row(ch, 1).iter().filter(|&&x| x == 1).count();
            for k in 0..n_b {
                if e.actions.get(ch, 2, k) != e.actions.get(ch, 0, k) + e.actions.get(ch, 1, k) {
                    return Err(format!("sum row {r}/{j} is not the sum"));
                }
            }
            match actor {
                Some(seat) => {
                    let ones = [ones0, ones1];
                    if ones[seat] != 1 || ones[1 - seat] != 0 {
                        return Err(format!("slot {r}/{j} is not one-hot for seat {seat}"));
                    }
                    let k = e.actions.row(ch, seat).iter().position(|&x| x == 1).unwrap();
                    let taken = states[action_index].legal_actions().map_err(|x| x.to_string())?;
                    let l = holdem_core::abstraction::BetContext::from_state(&states[action_index]).unwrap();
                    if !menu.legal_row(&l)[k] || !taken.contains(view.history[action_index].action) {
                        return Err(format!("slot {r}/{j} takes an illegal column"));
                    }
                    let expected_kind = match view.history[action_index].action {
                        Action::Fold => Some(0),
                        Action::Check | Action::Call => Some(1),
                        Action::RaiseTo(_) => None,
                    };
                    if expected_kind.is_some_and(|x| x != k) || (expected_kind.is_none() && k < 2) {
                        return Err(format!("slot {r}/{j} column {k} does not match the action"));
                    }
                }
                None => {
                    if ones0 + ones1 != 0 {
                        return Err(format!("pending slot {r}/{j} has an action"));
                    }
                }
            }
        }
    }
    if overflow != e.overflow {
        return Err("overflow flag mismatch".into());
    }
    Ok(())
}

/// Logistic ELO written out independently of the library.
pub fn oracle_elo(ratings: &mut BTreeMap<String, f64>, outcomes: &[Outcome], k: f64) {
    for o in outcomes {
        let ra = ratings[&o.a];
        let rb = ratings[&o.b];
        let e = 1.0 / (1.0 + 10f64.powf((rb - ra) / 400.0));
        let d = k * (o.wins + 0.5 * o.draws - (o.wins + o.losses + o.draws) * e);
        *ratings.get_mut(&o.a).unwrap() += d;
        *ratings.get_mut(&o.b).unwrap() -= d;
    }
}

fn top_k(members: &mut Vec<String>, ratings: &BTreeMap<String, f64>, k: usize) {
    members.sort_by(|a, b| ratings[b].partial_cmp(&ratings[a]).unwrap().then(a.cmp(b)));
    members.truncate(k);
}

/// Runs `rounds` pool updates with random results and compares the survivors after every
/// round with a sort over independently tracked ratings. `best` names a version that wins
/// every game it plays and, once added, plays at least once per round. Returns the number of
/// rounds checked.
pub fn simulate_pool(k: usize, rounds: u64, seed: u64, best: Option<&str>) -> Result<u64, String> {
    let mut rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
    let mut pool = SelfPlayPool::new(k, "main", seed).map_err(|e| e.to_string())?;
    let mut ratings: BTreeMap<String, f64> = BTreeMap::from([("main".to_string(), 1500.0)]);
    let mut members: Vec<String> = Vec::new();
    for t in 0..rounds {
        if t % 3 == 1 {
            let name = format!("v{t}");
            pool.add_snapshot(&name).map_err(|e| e.to_string())?;
            ratings.insert(name.clone(), ratings["main"]);
            members.push(name);
            top_k(&mut members, &ratings, k);
        }
        if members.is_empty() {
            let name = format!("main@{}", pool.round());
            ratings.insert(name.clone(), ratings["main"]);
            members.push(name);
        }
        let mut results = Vec::new();
        let everyone: Vec<String> = std::iter::once("main".to_string())
            .chain(members.iter().cloned())
            .collect();
        let mut pairs: Vec<(String, String)> = (0..rng.gen_range(1..6))
            .map(|_| {
                (
                    everyone[rng.gen_range(0..everyone.len())].clone(),
                    everyone[rng.gen_range(0..everyone.len())].clone(),
                )
            })
            .collect();
        if let Some(v) = best.filter(|v| members.iter().any(|m| m == v)) {
            pairs.push((v.to_string(), everyone[rng.gen_range(0..everyone.len())].clone()));
        }
        for (a, b) in &pairs {
            if a == b {
                continue;
            }
            let games = rng.gen_range(1..20) as f64;
            let (wins, losses) = match best {
                Some(v) if a == v => (games, 0.0),
                Some(v) if b == v => (0.0, games),
                _ => {
                    let w = (rng.gen::<f64>() * games).floor();
                    let l = (rng.gen::<f64>() * (games - w)).floor();
                    (w, l)
                }
            };
            results.push(Outcome {
                a: a.clone(),
                b: b.clone(),
                wins,
                losses,
                draws: games - wins - losses,
            });
        }
        let schedule = kbest_schedule(&mut pool, &results, 6).map_err(|e| e.to_string())?;
        oracle_elo(&mut ratings, &results, pool.elo().k);
        top_k(&mut members, &ratings, k);

        let mut got = pool.historical().to_vec();
        got.sort();
        let mut want = members.clone();
        want.sort();
        if got != want {
            return Err(format!("round {t}: survivors {got:?}, sort oracle {want:?}"));
        }
        if pool.size() > k + 1 {
            return Err(format!("round {t}: pool has {} members", pool.size()));
        }
        for m in &members {
            if (pool.rating(m) - ratings[m]).abs() > 1e-9 {
                return Err(format!("round {t}: rating of {m} drifted"));
            }
        }
        if schedule.opponents.iter().any(|o| !members.contains(o)) {
            return Err(format!("round {t}: opponent outside the survivors"));
        }
        if k == 1 && schedule.opponents.iter().any(|o| *o != members[0]) {
            return Err(format!("round {t}: K=1 must always play the best version"));
        }
        if let Some(v) = best {
            if ratings.contains_key(v) && !members.iter().any(|m| m == v) {
                return Err(format!("round {t}: dominant version {v} was evicted"));
            }
        }
    }
    if let Some(v) = best {
        let top = ratings
            .iter()
            .filter(|(n, _)| *n == "main" || members.contains(n))
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(n, _)| n.clone());
        if top.as_deref() != Some(v) {
            return Err(format!("dominant version {v} does not finish with the highest rating"));
        }
    }
    Ok(rounds)
}
