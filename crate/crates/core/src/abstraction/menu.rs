use crate::engine::{Action, Chips, HandState, LegalActions, PlayerView};

/// One entry of a betting menu.
#[derive(Clone, Debug, PartialEq)]
pub enum MenuItem {
    Fold,
    CheckCall,
    /// Raise by a fraction of the pot after calling.
    PotFraction(f64),
    AllIn,
}

/// Ordered action templates resolved against the current betting state.
#[derive(Clone, Debug, PartialEq)]
pub struct BetMenu {
    pub items: Vec<MenuItem>,
}

/// Betting quantities that menu resolution needs; built from a state or a view.
#[derive(Clone, Copy, Debug)]
pub struct BetContext {
    pub legal: LegalActions,
    pub total_pot: Chips,
    pub bet: Chips,
    pub to_call: Chips,
}

impl BetContext {
    pub fn from_state(state: &HandState) -> Option<BetContext> {
        let legal = state.legal_actions().ok()?;
        let c = state.committed();
        let me = state.to_act()?;
        let bet = c[0].max(c[1]);
        Some(BetContext {
            legal,
            total_pot: state.total_pot(),
            bet,
            to_call: bet - c[me],
        })
    }

    pub fn from_view(view: &PlayerView) -> Option<BetContext> {
        let legal = *view.legal().ok()?;
        Some(BetContext {
            legal,
            total_pot: view.total_pot(),
            bet: view.committed[0].max(view.committed[1]),
            to_call: view.to_call(),
        })
    }

    /// Pot size once the pending bet is called; the base for pot-fraction sizing.
    pub fn pot_after_call(&self) -> Chips {
        self.total_pot + self.to_call
    }

    /// Size of a raise as a fraction of the pot after calling.
    pub fn fraction_of(&self, raise_to: Chips) -> f64 {
        (raise_to - self.bet) as f64 / self.pot_after_call().max(1) as f64
    }
}

impl Default for BetMenu {
    fn default() -> Self {
        BetMenu {
            items: vec![
                MenuItem::Fold,
                MenuItem::CheckCall,
                MenuItem::PotFraction(0.5),
                MenuItem::PotFraction(1.0),
                MenuItem::AllIn,
            ],
        }
    }
}

impl MenuItem {
    /// Short label used in information-set keys and profile files.
    pub fn label(&self, facing_bet: bool) -> String {
        match self {
            MenuItem::Fold => "f".into(),
            MenuItem::CheckCall if facing_bet => "c".into(),
            MenuItem::CheckCall => "k".into(),
            MenuItem::PotFraction(x) if *x == 0.5 => "h".into(),
            MenuItem::PotFraction(x) if *x == 1.0 => "p".into(),
            MenuItem::PotFraction(x) => format!("b{}", (x * 100.0).round() as i64),
            MenuItem::AllIn => "a".into(),
        }
    }
}

impl BetMenu {
    pub fn new(items: Vec<MenuItem>) -> BetMenu {
        BetMenu { items }
    }

    /// Menu with fold, check/call, the given pot fractions and all-in.
    pub fn with_fractions(fractions: &[f64]) -> BetMenu {
        let mut items = vec![MenuItem::Fold, MenuItem::CheckCall];
        items.extend(fractions.iter().map(|&f| MenuItem::PotFraction(f)));
        items.push(MenuItem::AllIn);
        BetMenu { items }
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.items
            .iter()
            .filter_map(|i| match i {
                MenuItem::PotFraction(x) => Some(*x),
                _ => None,
            })
            .collect()
    }

    /// Concrete legal actions for each menu item, labelled; items that resolve to an action
    /// already produced by an earlier item are dropped.
    pub fn resolve(&self, ctx: &BetContext) -> Vec<(String, Action)> {
        let facing = ctx.to_call > 0;
        let mut out: Vec<(String, Action)> = Vec::with_capacity(self.items.len());
        for item in &self.items {
            let action = match item {
                MenuItem::Fold if ctx.legal.fold => Some(Action::Fold),
                MenuItem::Fold => None,
                MenuItem::CheckCall => Some(ctx.legal.passive()),
                MenuItem::PotFraction(x) => {
                    let size = (x * ctx.pot_after_call() as f64).round() as Chips;
                    ctx.legal.clamp_raise(ctx.bet + size)
                }
                MenuItem::AllIn => ctx.legal.raise.map(|r| Action::RaiseTo(r.max_to)),
            };
            if let Some(a) = action {
                if !out.iter().any(|(_, b)| *b == a) {
                    out.push((item.label(facing), a));
                }
            }
        }
        out
    }

    /// Abstract label for an observed real action: fold/check/call map to themselves and a
    /// raise maps to the sizing whose pot fraction is nearest (ties go to the smaller size).
    pub fn map_off_tree(&self, action: Action, ctx: &BetContext) -> String {
        let facing = ctx.to_call > 0;
        let raise_to = match action {
            Action::Fold => return "f".into(),
            Action::Check => return "k".into(),
            Action::Call => return if facing { "c".into() } else { "k".into() },
            Action::RaiseTo(x) => x,
        };
        let resolved = self.resolve(ctx);
        let observed = ctx.fraction_of(raise_to);
        let mut best: Option<(f64, f64, &str)> = None;
        for (label, a) in &resolved {
            let Action::RaiseTo(to) = a else { continue };
            let frac = ctx.fraction_of(*to);
            let dist = (frac - observed).abs();
            let better = match best {
                None => true,
                Some((d, f, _)) => dist < d - 1e-12 || ((dist - d).abs() <= 1e-12 && frac < f),
            };
            if better {
                best = Some((dist, frac, label));
            }
        }
        match best {
            Some((_, _, label)) => label.to_string(),
            // The menu cannot raise here (should not happen for a legal raise); treat as a call.
            None => "c".into(),
        }
    }
}
