use std::collections::HashMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{Estimator, EvalError, EvalReport};
use crate::agents::Agent;
use crate::engine::{ActionRecord, Chips, Deal, EngineError, GameSpec, HandState, Seat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    Plain,
    /// Every deal is played twice with the agents' seats swapped.
    Duplicate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchPlan {
    pub spec: GameSpec,
    /// Hands in plain mode; deals (pairs) in duplicate mode, which plays twice as many hands.
    pub hands: u64,
    pub mode: MatchMode,
    pub seed: u64,
    pub match_id: String,
}

impl MatchPlan {
    pub fn new(spec: GameSpec, hands: u64, mode: MatchMode, seed: u64) -> MatchPlan {
        MatchPlan {
            spec,
            hands,
            mode,
            seed,
            match_id: format!("match-{seed:016x}"),
        }
    }

    pub fn total_hands(&self) -> u64 {
        match self.mode {
            MatchMode::Plain => self.hands,
            MatchMode::Duplicate => 2 * self.hands,
        }
    }

    /// Deal index, seat of the first agent and duplicate partner of hand `t`. Blinds alternate
    /// every hand; the second half of a duplicate match mirrors the first.
    pub fn schedule(&self, t: u64) -> (u64, Seat, Option<u64>) {
        match self.mode {
            MatchMode::Plain => (t, (t % 2) as Seat, None),
            MatchMode::Duplicate => {
                let m = t % self.hands;
                if t < self.hands {
                    (m, (m % 2) as Seat, Some(t + self.hands))
                } else {
                    (m, 1 - (m % 2) as Seat, Some(m))
                }
            }
        }
    }
}

/// Per-deal seed; a pure function of the match seed and the deal index.
pub fn deal_seed(match_seed: u64, deal_index: u64) -> u64 {
    let mut z = match_seed ^ deal_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One persisted hand: enough to replay it through the engine and recover the payoffs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandHistoryRecord {
    pub match_id: String,
    pub hand_id: u64,
    pub seed: u64,
    pub game: GameSpec,
    /// Agent names by seat.
    pub agents: [String; 2],
    /// Seat of the match's first agent, whose results reports are expressed for.
    pub first_seat: Seat,
    /// Hand id of the seat-swapped duplicate partner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<u64>,
    pub deal: Deal,
    pub actions: Vec<ActionRecord>,
    /// Seat that forfeited the hand after a protocol violation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forfeit: Option<Seat>,
    pub payoffs: [Chips; 2],
    pub started_ms: u64,
    pub finished_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

pub(crate) fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl HandHistoryRecord {
    /// Replays the record and checks that the engine reproduces the stored payoffs.
    pub fn replay(&self) -> Result<HandState, EngineError> {
        let mut state = HandState::new(self.game, self.hand_id, self.deal.clone())?;
        for (i, rec) in self.actions.iter().enumerate() {
            if state.to_act() != Some(rec.seat) || state.street() != rec.street {
                return Err(EngineError::IllegalAction(format!(
                    "action {i} is recorded for seat {} in round {} but the engine disagrees",
                    rec.seat, rec.street
                )));
            }
            state
                .apply_in_place(rec.action)
                .map_err(|e| EngineError::IllegalAction(format!("action {i}: {e}")))?;
        }
        if let Some(seat) = self.forfeit {
            state = state.forfeit(seat)?;
        }
        let pay = state.settle()?;
        if pay.chips_won != self.payoffs {
            return Err(EngineError::State(format!(
                "replayed payoffs {:?} differ from recorded {:?}",
                pay.chips_won, self.payoffs
            )));
        }
        Ok(state)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    pub fn from_line(line: &str) -> Result<HandHistoryRecord, serde_json::Error> {
        serde_json::from_str(line)
    }

    /// Chips won by the match's first agent.
    pub fn first_agent_chips(&self) -> Chips {
        self.payoffs[self.first_seat]
    }
}

pub struct MatchResult {
    pub records: Vec<HandHistoryRecord>,
    pub report: EvalReport,
    /// Per-hand mbb of the first agent, in hand order.
    pub per_hand_mbb: Vec<f64>,
}

/// Plays one hand with agents given by seat. An agent error or an illegal action forfeits the
/// hand for that seat; the reason is returned with the final state.
pub fn play_hand(
    spec: GameSpec,
    hand_id: u64,
    deal: Deal,
    seats: [&mut dyn Agent; 2],
) -> Result<(HandState, Option<(Seat, String)>), EvalError> {
    let [s0, s1] = seats;
    let mut seats = [s0, s1];
    let mut state = HandState::new(spec, hand_id, deal)?;
    for (seat, agent) in seats.iter_mut().enumerate() {
        agent.reset(hand_id, seat);
    }
    while let Some(seat) = state.to_act() {
        let view = state.view(seat);
        let fault = match seats[seat].act(&view) {
            Ok(action) => match state.apply_in_place(action) {
                Ok(()) => continue,
                Err(e) => format!("{} sent {action}: {e}", seats[seat].name()),
            },
            Err(e) => format!("{} failed: {e}", seats[seat].name()),
        };
        return Ok((state.forfeit(seat)?, Some((seat, fault))));
    }
    Ok((state, None))
}

pub fn run_match(plan: &MatchPlan, a: &mut dyn Agent, b: &mut dyn Agent) -> Result<MatchResult, EvalError> {
    let mut records = Vec::with_capacity(plan.total_hands() as usize);
    run_match_with(plan, a, b, |r| {
        records.push(r.clone());
        Ok(())
    })?;
    let report = report_from_histories(&records)?;
    let per_hand_mbb = records
        .iter()
        .map(|r| r.game.to_mbb(r.first_agent_chips() as f64))
        .collect();
    Ok(MatchResult {
        records,
        report,
        per_hand_mbb,
    })
}

/// Plays the plan, handing each finished record to `sink` as soon as it completes.
pub fn run_match_with(
    plan: &MatchPlan,
    a: &mut dyn Agent,
    b: &mut dyn Agent,
    mut sink: impl FnMut(&HandHistoryRecord) -> Result<(), EvalError>,
) -> Result<(), EvalError> {
    if plan.hands == 0 {
        return Err(EvalError::Invalid("a match needs at least one hand".into()));
    }
    let spec = plan
        .spec
        .with_free_fold(plan.spec.allow_free_fold || a.emits_free_fold() || b.emits_free_fold());
    spec.validate()?;
    for t in 0..plan.total_hands() {
        let record = play_scheduled(plan, &spec, t, a, b)?;
        sink(&record)?;
    }
    Ok(())
}

pub(crate) fn play_scheduled(
    plan: &MatchPlan,
    spec: &GameSpec,
    t: u64,
    a: &mut dyn Agent,
    b: &mut dyn Agent,
) -> Result<HandHistoryRecord, EvalError> {
    let (m, first_seat, pair) = plan.schedule(t);
    let seed = deal_seed(plan.seed, m);
    let deal = Deal::from_seed(spec, seed);
    let names = if first_seat == 0 {
        [a.name().to_string(), b.name().to_string()]
    } else {
        [b.name().to_string(), a.name().to_string()]
    };
    let started_ms = now_ms();
    let seats: [&mut dyn Agent; 2] = if first_seat == 0 { [a, b] } else { [b, a] };
    let (state, fault) = play_hand(*spec, t, deal.clone(), seats)?;
    let pay = state.settle()?;
    Ok(HandHistoryRecord {
        match_id: plan.match_id.clone(),
        hand_id: t,
        seed,
        game: *spec,
        agents: names,
        first_seat,
        pair,
        deal,
        actions: state.history().to_vec(),
        forfeit: fault.as_ref().map(|f| f.0),
        payoffs: pay.chips_won,
        started_ms,
        finished_ms: now_ms(),
        note: fault.map(|f| f.1),
    })
}

/// Recomputes the report from persisted hands. Duplicate pairs are averaged into one sample
/// when every record's partner is present.
pub fn report_from_histories(records: &[HandHistoryRecord]) -> Result<EvalReport, EvalError> {
    let Some(first) = records.first() else {
        return Err(EvalError::Invalid("no hands to report on".into()));
    };
    let agents = [
        first.agents[first.first_seat].clone(),
        first.agents[1 - first.first_seat].clone(),
    ];
    for (i, r) in records.iter().enumerate() {
        if r.agents[r.first_seat] != agents[0] || r.agents[1 - r.first_seat] != agents[1] {
            return Err(EvalError::History {
                index: i,
                message: "records come from different pairings".into(),
            });
        }
    }
    let per_record: Vec<f64> = records
        .iter()
        .map(|r| r.game.to_mbb(r.first_agent_chips() as f64))
        .collect();
    let (estimator, samples) = match pair_samples(records, &per_record)? {
        Some(pairs) => (Estimator::Duplicate, pairs),
        None => (Estimator::SampleMean, per_record),
    };
    let mut report = EvalReport::from_samples(agents, estimator, records.len() as u64, &samples);
    let forfeits = records.iter().filter(|r| r.forfeit.is_some()).count();
    if forfeits > 0 {
        report
            .flags
            .push(format!("{forfeits} hands forfeited after protocol violations"));
    }
    Ok(report)
}

/// Averages each duplicate pair into one sample, in order of the pair's first hand. `None`
/// when some record has no partner in `records`.
pub(crate) fn pair_samples(records: &[HandHistoryRecord], values: &[f64]) -> Result<Option<Vec<f64>>, EvalError> {
    let by_id: HashMap<u64, usize> = records.iter().enumerate().map(|(i, r)| (r.hand_id, i)).collect();
    if !records.iter().all(|r| r.pair.is_some_and(|p| by_id.contains_key(&p))) {
        return Ok(None);
    }
    let mut samples = Vec::with_capacity(records.len() / 2);
    for (i, r) in records.iter().enumerate() {
        let j = by_id[&r.pair.expect("checked")];
        let partner = &records[j];
        if partner.pair != Some(r.hand_id) || partner.deal != r.deal || partner.first_seat == r.first_seat {
            return Err(EvalError::History {
                index: i,
                message: "duplicate partner is not the same deal with swapped seats".into(),
            });
        }
        if r.hand_id < partner.hand_id {
            samples.push((values[i] + values[j]) / 2.0);
        }
    }
    Ok(Some(samples))
}
