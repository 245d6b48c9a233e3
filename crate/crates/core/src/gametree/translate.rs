use crate::abstraction::menu::{BetContext, BetMenu};
use crate::engine::{betting_states, placeholder_deal, Action, Chips, HandState, PlayerView};

use super::build::{action_token, card_key, node_actions};
use super::{GameError, TreeConfig};

/// The abstract-game decision matching a real decision point.
#[derive(Clone, Debug, PartialEq)]
pub struct AbstractDecision {
    pub key: String,
    /// Labelled actions of the abstract node, resolved in the abstract betting state.
    pub actions: Vec<(String, Action)>,
    /// Whether any observed action had to be mapped to a different abstract action.
    pub translated: bool,
}

/// Replays the observed betting through the action abstraction and returns the information
/// set the seat to act is in. Off-tree raises go to the nearest menu sizing by pot fraction.
pub fn abstract_decision(cfg: &TreeConfig, view: &PlayerView) -> Result<AbstractDecision, GameError> {
    let spec = view.spec;
    view.legal()?;
    let real = betting_states(&spec, &view.history)?;
    let mut shadow = HandState::new(spec, 0, placeholder_deal(&spec))?;
    let mut hist = String::new();
    let mut translated = false;
    for (i, rec) in view.history.iter().enumerate() {
        if shadow.is_terminal() {
            return Err(GameError::Config(format!(
                "abstract game ended before observed action {i} ({})",
                rec.action
            )));
        }
        let options = node_actions(&shadow, cfg)?;
        let label = match &cfg.menu {
            None => action_token(rec.action),
            Some(menu) => translate(menu, &real[i], &shadow, rec.action),
        };
        let chosen = options
            .iter()
            .find(|(l, _)| *l == label)
            .or_else(|| passive_option(&options))
            .cloned()
            .ok_or_else(|| GameError::Config(format!("no abstract action for {}", rec.action)))?;
        if chosen.1 != rec.action {
            translated = true;
        }
        let before = shadow.street();
        shadow.apply_in_place(chosen.1)?;
        hist.push_str(&chosen.0);
        if !shadow.is_terminal() && shadow.street() > before {
            hist.push('/');
        }
    }
    if shadow.to_act() != Some(view.seat) {
        return Err(GameError::Config(
            "abstract game is not at this seat's decision after translation".into(),
        ));
    }
    let cards = card_key(&spec, cfg, view.street, &view.private, &view.board);
    Ok(AbstractDecision {
        key: format!("{}|{cards}|{hist}", view.seat),
        actions: node_actions(&shadow, cfg)?,
        translated,
    })
}

fn passive_option(options: &[(String, Action)]) -> Option<&(String, Action)> {
    options.iter().find(|(_, a)| matches!(a, Action::Check | Action::Call))
}

fn translate(menu: &BetMenu, real: &HandState, shadow: &HandState, action: Action) -> String {
    let Some(sctx) = BetContext::from_state(shadow) else {
        return "k".into();
    };
    let Action::RaiseTo(x) = action else {
        return menu.map_off_tree(action, &sctx);
    };
    let Some(rctx) = BetContext::from_state(real) else {
        return "c".into();
    };
    let Some(srange) = sctx.legal.raise else {
        return menu.map_off_tree(Action::Call, &sctx);
    };
    if rctx.legal.raise.is_some_and(|r| x == r.max_to) {
        return menu.map_off_tree(Action::RaiseTo(srange.max_to), &sctx);
    }
    let frac = rctx.fraction_of(x);
    let to = sctx.bet + (frac * sctx.pot_after_call() as f64).round() as Chips;
    menu.map_off_tree(Action::RaiseTo(to.clamp(srange.min_to, srange.max_to)), &sctx)
}

/// Concrete action in the real game for an abstract label chosen at `decision`.
pub fn realize(
    menu: Option<&BetMenu>,
    decision: &AbstractDecision,
    label: &str,
    view: &PlayerView,
) -> Result<Action, GameError> {
    let legal = *view.legal()?;
    let (_, abstract_action) = decision
        .actions
        .iter()
        .find(|(l, _)| l == label)
        .ok_or_else(|| GameError::InfoSet {
            key: decision.key.clone(),
            message: format!("no action labelled {label:?}"),
        })?;
    let Some(menu) = menu else {
        return Ok(if legal.contains(*abstract_action) {
            *abstract_action
        } else {
            legal.passive()
        });
    };
    let ctx = BetContext::from_view(view).ok_or_else(|| GameError::Config("no betting context".into()))?;
    if let Some((_, a)) = menu.resolve(&ctx).into_iter().find(|(l, _)| l == label) {
        return Ok(a);
    }
    Ok(match abstract_action {
        Action::Fold if legal.fold => Action::Fold,
        Action::RaiseTo(_) => match label {
            "a" => legal.raise.map_or(legal.passive(), |r| Action::RaiseTo(r.max_to)),
            _ => {
                let frac = menu
                    .items
                    .iter()
                    .find_map(|item| match item {
                        crate::abstraction::MenuItem::PotFraction(f) if item.label(ctx.to_call > 0) == label => {
                            Some(*f)
                        }
                        _ => None,
                    })
                    .unwrap_or(1.0);
                let to = ctx.bet + (frac * ctx.pot_after_call() as f64).round() as Chips;
                legal.clamp_raise(to).unwrap_or(legal.passive())
            }
        },
        _ => legal.passive(),
    })
}
