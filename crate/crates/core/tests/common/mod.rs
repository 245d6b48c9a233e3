#![allow(dead_code)]

pub mod eval_oracle;
pub mod rl_oracle;

use holdem_core::gametree::{Dense, Game, StrategyProfile};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Kuhn poker written from scratch, independent of the engine, keyed the same way.
pub mod kuhn_oracle {
    use holdem_core::gametree::StrategyProfile;

    pub const CARDS: [&str; 3] = ["Js", "Qs", "Ks"];

    /// Terminal payoff for P1, or None if `hist` is not terminal.
    fn payoff(hist: &[&str], c0: usize, c1: usize) -> Option<f64> {
        let showdown = |amount: f64| if c0 > c1 { amount } else { -amount };
        match hist {
            ["k", "k"] => Some(showdown(1.0)),
            ["r1", "f"] => Some(1.0),
            ["r1", "c"] => Some(showdown(2.0)),
            ["k", "r1", "f"] => Some(-1.0),
            ["k", "r1", "c"] => Some(showdown(2.0)),
            _ => None,
        }
    }

    fn actions(hist: &[&str]) -> Vec<&'static str> {
        match hist.last() {
            Some(&"r1") => vec!["f", "c"],
            _ => vec!["k", "r1"],
        }
    }

    pub fn key(seat: usize, card: usize, hist: &[&str]) -> String {
        format!("{seat}|{}||{}", CARDS[card], hist.concat())
    }

    /// All (seat, card, history) decision points.
    pub fn decision_points() -> Vec<(usize, usize, Vec<&'static str>)> {
        let hists: [&[&str]; 4] = [&[], &["k"], &["r1"], &["k", "r1"]];
        let mut out = Vec::new();
        for h in hists {
            let seat = h.len() % 2;
            for card in 0..3 {
                out.push((seat, card, h.to_vec()));
            }
        }
        out
    }

    fn value(p: &StrategyProfile, hist: &mut Vec<&'static str>, c: [usize; 2]) -> f64 {
        if let Some(v) = payoff(hist, c[0], c[1]) {
            return v;
        }
        let seat = hist.len() % 2;
        let row = p.get(&key(seat, c[seat], hist)).expect("profile covers kuhn");
        let mut v = 0.0;
        for (a, prob) in actions(hist).into_iter().zip(&row.probs) {
            hist.push(a);
            v += prob * value(p, hist, c);
            hist.pop();
        }
        v
    }

    /// Expected value for P1 by enumerating all six deals.
    pub fn expected_value(p: &StrategyProfile) -> f64 {
        let mut total = 0.0;
        for c0 in 0..3 {
            for c1 in 0..3 {
                if c0 != c1 {
                    total += value(p, &mut Vec::new(), [c0, c1]) / 6.0;
                }
            }
        }
        total
    }

    /// Counterfactual regrets v(a|I) - v(I) for every decision point, by direct enumeration
    /// of deals and histories.
    pub fn counterfactual_regrets(p: &StrategyProfile) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        for (seat, card, hist) in decision_points() {
            let acts = actions(&hist);
            let mut va = vec![0.0; acts.len()];
            for opp_card in (0..3).filter(|&c| c != card) {
                let c = if seat == 0 { [card, opp_card] } else { [opp_card, card] };
                // Opponent reach along `hist`: product of the opponent's probabilities.
                let mut reach = 1.0 / 6.0;
                for (i, a) in hist.iter().enumerate() {
                    let s = i % 2;
                    if s != seat {
                        let row = p.get(&key(s, c[s], &hist[..i])).unwrap();
                        let idx = actions(&hist[..i]).iter().position(|x| x == a).unwrap();
                        reach *= row.probs[idx];
                    }
                }
                for (k, a) in acts.iter().enumerate() {
                    let mut h = hist.clone();
                    h.push(a);
                    let v = value(p, &mut h, c);
                    va[k] += reach * if seat == 0 { v } else { -v };
                }
            }
            let row = p.get(&key(seat, card, &hist)).unwrap();
            let vi: f64 = va.iter().zip(&row.probs).map(|(v, q)| v * q).sum();
            out.push((key(seat, card, &hist), va.iter().map(|v| v - vi).collect()));
        }
        out
    }

    /// Best-response value for `seat` by trying every pure strategy (2^6 of them).
    pub fn best_response_value(p: &StrategyProfile, seat: usize) -> f64 {
        let mine: Vec<_> = decision_points().into_iter().filter(|(s, _, _)| *s == seat).collect();
        let mut best = f64::NEG_INFINITY;
        for mask in 0..(1u32 << mine.len()) {
            let mut q = p.clone();
            for (bit, (s, card, hist)) in mine.iter().enumerate() {
                let choice = (mask >> bit) & 1;
                let probs = if choice == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
                let labels = actions(hist).iter().map(|s| s.to_string()).collect();
                q.insert(key(*s, *card, hist), labels, probs);
            }
            let v = expected_value(&q);
            let v = if seat == 0 { v } else { -v };
            best = best.max(v);
        }
        best
    }
}

pub fn random_dense(game: &Game, rng: &mut ChaCha8Rng) -> Dense {
    game.infosets
        .iter()
        .map(|i| {
            let raw: Vec<f64> = (0..i.actions.len()).map(|_| rng.gen::<f64>() + 1e-3).collect();
            let t: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / t).collect()
        })
        .collect()
}

/// Kuhn equilibrium family member with α = 0 (P1 never bets with J or Q first).
pub fn kuhn_nash(game: &Game) -> StrategyProfile {
    let mut p = game.profile(&game.uniform());
    let third = 1.0 / 3.0;
    let rows: [(&str, [f64; 2]); 12] = [
        ("0|Js||", [1.0, 0.0]),
        ("0|Qs||", [1.0, 0.0]),
        ("0|Ks||", [1.0, 0.0]),
        ("0|Js||kr1", [1.0, 0.0]),
        ("0|Qs||kr1", [2.0 / 3.0, third]),
        ("0|Ks||kr1", [0.0, 1.0]),
        ("1|Js||k", [2.0 / 3.0, third]),
        ("1|Qs||k", [1.0, 0.0]),
        ("1|Ks||k", [0.0, 1.0]),
        ("1|Js||r1", [1.0, 0.0]),
        ("1|Qs||r1", [2.0 / 3.0, third]),
        ("1|Ks||r1", [0.0, 1.0]),
    ];
    for (key, probs) in rows {
        let actions = p.get(key).unwrap().actions.clone();
        p.insert(key.into(), actions, probs.to_vec());
    }
    p
}
