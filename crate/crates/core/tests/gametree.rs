use holdem_core::engine::GameSpec;
use holdem_core::gametree::{build_tree, Game, NodeKind, StrategyProfile, TreeConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;

use common::{kuhn_nash, kuhn_oracle, random_dense};

fn kuhn() -> Game {
    build_tree(&GameSpec::kuhn(), &TreeConfig::default()).unwrap()
}

fn leduc() -> Game {
    build_tree(&GameSpec::leduc(), &TreeConfig::default()).unwrap()
}

#[test]
fn kuhn_has_twelve_infosets_and_thirty_terminals() {
    let s = kuhn().stats();
    assert_eq!(s.infosets, [6, 6]);
    assert_eq!(s.terminals, 30);
    let keys: Vec<String> = kuhn_oracle::decision_points()
        .into_iter()
        .map(|(s, c, h)| kuhn_oracle::key(s, c, &h))
        .collect();
    let game = kuhn();
    for k in keys {
        assert!(game.infoset_id(&k).is_some(), "missing {k}");
    }
}

#[test]
fn leduc_tree_statistics_are_stable() {
    let game = leduc();
    let s = game.stats();
    // Golden values recorded from the enumerator.
    assert_eq!(s.infosets, [LEDUC_INFOSETS_PER_SEAT; 2], "{s:?}");
    assert_eq!(s.terminals, LEDUC_TERMINALS, "{s:?}");
    assert_eq!(s.nodes, LEDUC_NODES);
}

const LEDUC_INFOSETS_PER_SEAT: usize = 468;
const LEDUC_TERMINALS: usize = 5520;
const LEDUC_NODES: usize = 9451;

#[test]
fn uniform_value_matches_enumeration() {
    let game = kuhn();
    let profile = game.profile(&game.uniform());
    let v = game.expected_value(&game.uniform());
    let oracle = kuhn_oracle::expected_value(&profile);
    assert!((v[0] - oracle).abs() < 1e-12, "{} vs {oracle}", v[0]);
    assert!((v[0] + v[1]).abs() < 1e-12);
}

#[test]
fn best_response_matches_pure_strategy_enumeration() {
    let game = kuhn();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut profiles = vec![game.uniform(), game.dense(&kuhn_nash(&game)).unwrap()];
    for _ in 0..5 {
        profiles.push(random_dense(&game, &mut rng));
    }
    for dense in profiles {
        let keyed = game.profile(&dense);
        for seat in 0..2 {
            let br = game.best_response(&dense, seat);
            let oracle = kuhn_oracle::best_response_value(&keyed, seat);
            assert!(
                (br.value - oracle).abs() < 1e-12,
                "seat {seat}: {} vs {oracle}",
                br.value
            );
            let check = game.expected_value(&br.strategy)[seat];
            assert!((check - br.value).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_kuhn_exploitability_golden() {
    let game = kuhn();
    let dense = game.uniform();
    let keyed = game.profile(&dense);
    let oracle = (kuhn_oracle::best_response_value(&keyed, 0) + kuhn_oracle::best_response_value(&keyed, 1)) / 2.0;
    let e = game.exploitability(&dense);
    assert!((e - oracle).abs() < 1e-12);
    assert!((e - UNIFORM_KUHN_EXPLOITABILITY).abs() < 1e-12, "{e}");
}

// 11/24 antes, produced by the pure-strategy enumeration oracle above.
const UNIFORM_KUHN_EXPLOITABILITY: f64 = 11.0 / 24.0;

#[test]
fn kuhn_nash_has_zero_exploitability_and_value_minus_one_eighteenth() {
    let game = kuhn();
    let dense = game.dense(&kuhn_nash(&game)).unwrap();
    assert!(game.exploitability(&dense).abs() < 1e-9);
    let v = game.expected_value(&dense);
    assert!((v[0] + 1.0 / 18.0).abs() < 1e-12);
    let br = game.best_response(&dense, 0);
    assert!(br.value >= v[0] - 1e-9 && (br.value - v[0]).abs() < 1e-9);
}

#[test]
fn best_response_dominates_random_deviations() {
    let game = leduc();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = random_dense(&game, &mut rng);
    for seat in 0..2 {
        let br = game.best_response(&base, seat).value;
        for _ in 0..100 {
            let dev = random_dense(&game, &mut rng);
            let mut mixed = base.clone();
            for (i, info) in game.infosets.iter().enumerate() {
                if info.seat == seat {
                    mixed[i] = dev[i].clone();
                }
            }
            assert!(game.expected_value(&mixed)[seat] <= br + 1e-9);
        }
    }
}

#[test]
fn exploitability_is_nonnegative() {
    let game = leduc();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        assert!(game.exploitability(&random_dense(&game, &mut rng)) >= -1e-12);
    }
}

#[test]
fn reach_factorizes_and_sums_to_one_over_terminals() {
    let game = leduc();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let dense = random_dense(&game, &mut rng);
    let reach = game.reach(&dense);
    let mut total = 0.0;
    for (id, node) in game.nodes.iter().enumerate() {
        // Independent recomputation by walking to the root.
        let mut r = [1.0; 3];
        let mut cur = id;
        while let Some(parent) = game.nodes[cur].parent {
            match &game.nodes[parent].kind {
                NodeKind::Chance { outcomes } => {
                    r[2] *= outcomes.iter().find(|(_, c)| *c == cur).unwrap().0;
                }
                NodeKind::Player {
                    seat,
                    infoset,
                    children,
                } => {
                    let a = children.iter().position(|&c| c == cur).unwrap();
                    r[*seat] *= dense[*infoset][a];
                }
                NodeKind::Terminal { .. } => unreachable!(),
            }
            cur = parent;
        }
        for k in 0..3 {
            assert!((r[k] - reach[id][k]).abs() < 1e-12);
        }
        if matches!(node.kind, NodeKind::Terminal { .. }) {
            total += reach[id][0] * reach[id][1] * reach[id][2];
        }
    }
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn perfect_recall_keys_refine_along_paths() {
    let game = leduc();
    for (id, node) in game.nodes.iter().enumerate() {
        let NodeKind::Player { seat, infoset, .. } = node.kind else {
            continue;
        };
        let key = &game.infosets[infoset].key;
        let hist = key.rsplit('|').next().unwrap();
        let mut cur = id;
        while let Some(parent) = game.nodes[cur].parent {
            if let NodeKind::Player {
                seat: s, infoset: i, ..
            } = game.nodes[parent].kind
            {
                if s == seat {
                    let earlier = &game.infosets[i].key;
                    let eh = earlier.rsplit('|').next().unwrap();
                    assert!(hist.starts_with(eh) && hist.len() > eh.len(), "{earlier} -> {key}");
                    let private = |k: &str| k.split('|').nth(1).unwrap().to_string();
                    assert_eq!(private(earlier), private(key));
                }
            }
            cur = parent;
        }
    }
}

#[test]
fn missing_infosets_are_listed() {
    let game = kuhn();
    let mut partial = StrategyProfile::default();
    let info = &game.infosets[0];
    partial.insert(info.key.clone(), info.actions.clone(), vec![0.5, 0.5]);
    let err = game.dense(&partial).unwrap_err().to_string();
    assert!(err.contains("missing 11"), "{err}");
}

#[test]
fn chance_probabilities_sum_to_one() {
    for game in [kuhn(), leduc()] {
        for node in &game.nodes {
            if let NodeKind::Chance { outcomes } = &node.kind {
                let t: f64 = outcomes.iter().map(|(p, _)| p).sum();
                assert!((t - 1.0).abs() < 1e-12);
            }
        }
    }
}
