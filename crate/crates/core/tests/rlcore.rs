use holdem_core::engine::{parse_cards, Action, Deal, GameSpec, HandState};
use holdem_core::rlcore::{
    encode_state, ppo_clip_term, ppo_reference_losses, trinal_clip_policy_grad, trinal_clip_policy_loss,
    trinal_clip_term, trinal_clip_value_grad, trinal_clip_value_loss, value_clip_bounds, ActionMenu, ClipConfig,
    EncodedState, LossInputs, StateFeatures,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::rl_oracle::{check_invariants, decode, random_hand, simulate_pool};

fn encode_all(
    spec: &GameSpec,
    hands: u64,
    seed: u64,
    menu: &ActionMenu,
    mut f: impl FnMut(&HandState, usize, &EncodedState),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..hands {
        for state in random_hand(spec, t, &mut rng) {
            for seat in 0..2 {
                let e = encode_state(&state.view(seat), menu).unwrap();
                f(&state, seat, &e);
            }
        }
    }
}

#[test]
fn encode_decode_encode_is_the_identity() {
    let menu = ActionMenu::default();
    let mut checked = 0u64;
    let mut overflowed = 0u64;
    for (spec, hands) in [
        (GameSpec::hunl(), 12_000),
        (GameSpec::leduc(), 2_000),
        (GameSpec::kuhn(), 1_000),
    ] {
        encode_all(&spec, hands, 5, &menu, |state, seat, e| {
            let view = state.view(seat);
            let decoded = decode(e);
            assert_eq!(decoded, StateFeatures::from_view(&view, &menu).unwrap());
            assert_eq!(&decoded.encode(), e);
            checked += 1;
            overflowed += e.overflow as u64;
        });
    }
    assert!(checked >= 100_000, "only {checked} states");
    assert!(overflowed > 0, "the generator never produced an overfull round");
}

#[test]
fn tensor_invariants_hold_on_fuzzed_states() {
    let menu = ActionMenu::default();
    let narrow = ActionMenu {
        pot_fractions: vec![0.5, 1.0],
    };
    for m in [&menu, &narrow] {
        for spec in [GameSpec::hunl(), GameSpec::leduc()] {
            encode_all(&spec, 2_000, 9, m, |state, seat, e| {
                if let Err(msg) = check_invariants(state, &state.view(seat), e, m) {
                    panic!("{msg} at {:?}", state.history());
                }
            });
        }
    }
}

#[test]
fn encoding_ignores_the_opponent_cards() {
    let spec = GameSpec::hunl();
    let board = parse_cards("2c7d9hJsKc").unwrap();
    let mk = |opp: &str| {
        let mut s = HandState::new(
            spec,
            0,
            Deal {
                hole: [parse_cards("AsAc").unwrap(), parse_cards(opp).unwrap()],
                board: board.clone(),
            },
        )
        .unwrap();
        s.apply_in_place(Action::Call).unwrap();
        encode_state(&s.view(0), &ActionMenu::default()).unwrap()
    };
    assert_eq!(mk("QdQh"), mk("3s4s"));
}

#[test]
fn dumps_read_back_identically() {
    let menu = ActionMenu::default();
    let mut buf = Vec::new();
    let mut all = Vec::new();
    encode_all(&GameSpec::hunl(), 20, 3, &menu, |_, _, e| {
        e.write_to(&mut buf).unwrap();
        all.push(e.clone());
    });
    let mut r = buf.as_slice();
    for e in &all {
        let mut back = EncodedState::read_from(&mut r).unwrap();
        back.overflow = e.overflow;
        assert_eq!(&back, e);
    }
    assert!(r.is_empty());
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-6 * analytic.abs().max(numeric.abs()).max(1.0)
}

#[test]
fn value_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.gen_range(1..8);
        let inputs = LossInputs {
            returns: (0..n).map(|_| rng.gen_range(-30_000.0..30_000.0)).collect(),
            values: (0..n).map(|_| rng.gen_range(-20_000.0..20_000.0)).collect(),
            delta2: (0..n).map(|_| rng.gen_range(0.0..20_000.0)).collect(),
            delta3: (0..n).map(|_| rng.gen_range(0.0..20_000.0)).collect(),
            ..LossInputs::default()
        };
        let grad = trinal_clip_value_grad(&inputs).unwrap();
        for i in 0..n {
            let f = |v: f64| {
                let mut x = inputs.clone();
                x.values[i] = v;
                trinal_clip_value_loss(&x).unwrap()
            };
            let fd = central_difference(f, inputs.values[i], 1e-2);
            assert!(close(grad[i], fd), "sample {i}: analytic {} numeric {fd}", grad[i]);
        }
    }
}

#[test]
fn policy_gradient_matches_finite_differences() {
    let cfg = ClipConfig::default();
    let kinks = [1.0 - cfg.epsilon, 1.0 + cfg.epsilon, cfg.delta1];
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut compared = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..8);
        let inputs = LossInputs {
            ratio: (0..n).map(|_| rng.gen_range(0.0..5.0)).collect(),
            advantage: (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect(),
            ..LossInputs::default()
        };
        let grad = trinal_clip_policy_grad(&inputs, &cfg).unwrap();
        for i in 0..n {
            let r = inputs.ratio[i];
            if r < 2.0 * h || kinks.iter().any(|k| (r - k).abs() < 2.0 * h) {
                continue;
            }
            let f = |x: f64| {
                let mut b = inputs.clone();
                b.ratio[i] = x;
                trinal_clip_policy_loss(&b, &cfg).unwrap()
            };
            let fd = central_difference(f, r, h);
            assert!(
                close(grad[i], fd),
                "r {r} A {}: analytic {} numeric {fd}",
                inputs.advantage[i],
                grad[i]
            );
            compared += 1;
        }
    }
    assert!(compared > 3000);
}

#[test]
fn trinal_and_ppo_disagree_only_for_negative_advantage_beyond_delta1() {
    let cfg = ClipConfig::default();
    for i in 0..=600 {
        let r = i as f64 * 0.01;
        for j in -60..=60 {
            let a = j as f64 * 0.05;
            let t = trinal_clip_term(r, a, cfg.epsilon, cfg.delta1);
            let p = ppo_clip_term(r, a, cfg.epsilon);
            let outside = a < 0.0 && r > cfg.delta1;
            assert_eq!(t != p, outside, "r {r} A {a}: trinal {t} ppo {p}");
        }
    }
}

#[test]
fn trinal_term_shape() {
    let cfg = ClipConfig::default();
    let h = 1e-3;
    for j in -40..=40 {
        let a = j as f64 * 0.1;
        let mut prev = trinal_clip_term(0.0, a, cfg.epsilon, cfg.delta1);
        for i in 1..=8000 {
            let r = i as f64 * h;
            let cur = trinal_clip_term(r, a, cfg.epsilon, cfg.delta1);
            assert!((cur - prev).abs() <= a.abs() * h + 1e-12, "jump at r {r} A {a}");
            if a < 0.0 && r - h >= 1.0 + cfg.epsilon {
                assert!(cur <= prev + 1e-12, "increasing at r {r} A {a}");
            }
            if r > cfg.delta1 && a < 0.0 {
                assert_eq!(cur, cfg.delta1 * a);
            }
            prev = cur;
        }
    }
}

#[test]
fn reference_losses_agree_where_clips_are_inactive() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 256;
    let advantage: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let delta2: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..500.0)).collect();
    let delta3: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..500.0)).collect();
    let inputs = LossInputs {
        ratio: vec![1.0; n],
        advantage: advantage.clone(),
        returns: (0..n).map(|i| rng.gen_range(-delta2[i]..=delta3[i])).collect(),
        values: (0..n).map(|_| rng.gen_range(-500.0..500.0)).collect(),
        delta2,
        delta3,
    };
    let (lp, lv) = ppo_reference_losses(&inputs, 0.2).unwrap();
    let mean_a = advantage.iter().sum::<f64>() / n as f64;
    assert!((lp - mean_a).abs() < 1e-12);
    assert_eq!(trinal_clip_policy_loss(&inputs, &ClipConfig::default()).unwrap(), lp);
    assert_eq!(trinal_clip_value_loss(&inputs).unwrap(), lv);

    let mut perfect = inputs.clone();
    perfect.values = perfect.returns.clone();
    assert_eq!(trinal_clip_value_loss(&perfect).unwrap(), 0.0);

    let mut low = inputs.clone();
    low.returns = low.delta2.iter().map(|d| -d - 100.0).collect();
    low.values = low.delta2.iter().map(|d| -d).collect();
    assert_eq!(trinal_clip_value_loss(&low).unwrap(), 0.0);
}

#[test]
fn engine_bounds_contain_every_hand_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for spec in [GameSpec::hunl(), GameSpec::leduc(), GameSpec::kuhn()] {
        for t in 0..3000 {
            let end = random_hand(&spec, t, &mut rng).pop().unwrap();
            let won = end.settle().unwrap().chips_won;
            for seat in 0..2 {
                let (d2, d3) = value_clip_bounds(&end, seat);
                assert!(d2 >= 0.0 && d3 >= 0.0);
                let w = won[seat] as f64;
                assert!(-d2 <= w && w <= d3, "{w} outside [{}, {d3}]", -d2);
            }
        }
    }
}

#[test]
fn kbest_survivors_match_a_sort_oracle() {
    for k in [1, 2, 3, 5] {
        simulate_pool(k, 1000, 40 + k as u64, None).unwrap();
    }
}

#[test]
fn a_dominant_version_is_always_retained() {
    simulate_pool(3, 600, 77, Some("v1")).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kbest_matches_oracle_for_any_seed(k in 1usize..6, seed in any::<u64>()) {
        prop_assert!(simulate_pool(k, 60, seed, None).is_ok());
    }

    #[test]
    fn trinal_term_is_bounded_by_its_clips(r in 0.0f64..20.0, a in -10.0f64..10.0) {
        let t = trinal_clip_term(r, a, 0.2, 3.0);
        if a < 0.0 {
            prop_assert!(t >= 3.0 * a && t <= 0.8 * a);
        } else {
            prop_assert!(t <= 1.2 * a && t >= 0.0);
        }
    }
}
