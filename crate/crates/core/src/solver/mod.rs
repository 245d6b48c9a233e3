//! Tabular CFR and CFR+ over materialized game trees.

use serde::{Deserialize, Serialize};

use crate::gametree::{Dense, Game, NodeId, NodeKind, StrategyProfile};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("regret matching needs at least one action")]
    EmptyActionSet,
    #[error("non-finite value {value} at information set {key} on iteration {iteration}")]
    NonFinite { key: String, iteration: u64, value: f64 },
    #[error("invalid solver config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    VanillaCfr,
    CfrPlus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    Uniform,
    /// Iteration t contributes with weight t.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Update {
    /// Both players update from the same σ^t in one pass.
    Simultaneous,
    /// P1 updates, then P2 updates against P1's new strategy.
    Alternating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub iterations: u64,
    pub mode: Mode,
    pub averaging: Averaging,
    pub update: Update,
    /// Record exploitability every this many iterations (0 disables the curve).
    pub exploitability_every: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            iterations: 1000,
            mode: Mode::CfrPlus,
            averaging: Averaging::Uniform,
            update: Update::Simultaneous,
            exploitability_every: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.iterations == 0 {
            return Err(SolverError::Config("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Regret matching: positive regrets normalized, uniform when none is positive.
pub fn regret_match(regrets: &[f64]) -> Result<Vec<f64>, SolverError> {
    if regrets.is_empty() {
        return Err(SolverError::EmptyActionSet);
    }
    let mut out = vec![0.0; regrets.len()];
    regret_match_into(regrets, &mut out);
    Ok(out)
}

fn regret_match_into(regrets: &[f64], out: &mut [f64]) {
    let total: f64 = regrets.iter().map(|r| r.max(0.0)).sum();
    if total > 0.0 {
        for (o, r) in out.iter_mut().zip(regrets) {
            *o = r.max(0.0) / total;
        }
    } else {
        out.fill(1.0 / regrets.len() as f64);
    }
}

/// Normalizes cumulative strategy rows; rows with no mass become uniform.
fn normalize_rows(rows: impl Iterator<Item = Vec<f64>>) -> Dense {
    rows.map(|mut row| {
        let total: f64 = row.iter().sum();
        if total > 0.0 {
            row.iter_mut().for_each(|x| *x /= total);
        } else {
            let n = row.len() as f64;
            row.iter_mut().for_each(|x| *x = 1.0 / n);
        }
        row
    })
    .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: u64,
    /// Exploitability of the average profile, in chips.
    pub exploitability: f64,
    /// Expected value of the average profile per seat, in chips.
    pub values: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub average: Dense,
    pub profile: StrategyProfile,
    pub curve: Vec<CurvePoint>,
}

/// Regret and cumulative-strategy tables for one game, stored flat per (infoset, action).
pub struct Solver<'g> {
    game: &'g Game,
    config: SolverConfig,
    offsets: Vec<usize>,
    regret: Vec<f64>,
    cumulative: Vec<f64>,
    sigma: Vec<f64>,
    instant: Vec<f64>,
    iteration: u64,
}

impl<'g> Solver<'g> {
    pub fn new(game: &'g Game, config: SolverConfig) -> Result<Solver<'g>, SolverError> {
        config.validate()?;
        let mut offsets = Vec::with_capacity(game.infosets.len() + 1);
        let mut n = 0;
        for info in &game.infosets {
            if info.actions.is_empty() {
                return Err(SolverError::EmptyActionSet);
            }
            offsets.push(n);
            n += info.actions.len();
        }
        offsets.push(n);
        let mut sigma = vec![0.0; n];
        for i in 0..game.infosets.len() {
            let row = &mut sigma[offsets[i]..offsets[i + 1]];
            let k = row.len() as f64;
            row.fill(1.0 / k);
        }
        Ok(Solver {
            game,
            config,
            offsets,
            regret: vec![0.0; n],
            cumulative: vec![0.0; n],
            sigma,
            instant: vec![0.0; n],
            iteration: 0,
        })
    }

    /// Starts from the given σ^1 instead of the uniform profile.
    pub fn with_initial(game: &'g Game, config: SolverConfig, initial: &Dense) -> Result<Solver<'g>, SolverError> {
        let mut solver = Solver::new(game, config)?;
        for (i, row) in initial.iter().enumerate() {
            let (lo, hi) = (solver.offsets[i], solver.offsets[i + 1]);
            if row.len() != hi - lo {
                return Err(SolverError::Config(format!(
                    "initial strategy row {} has {} entries, expected {}",
                    game.infosets[i].key,
                    row.len(),
                    hi - lo
                )));
            }
            solver.sigma[lo..hi].copy_from_slice(row);
        }
        Ok(solver)
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    fn rows(&self, flat: &[f64]) -> Dense {
        (0..self.game.infosets.len())
            .map(|i| flat[self.offsets[i]..self.offsets[i + 1]].to_vec())
            .collect()
    }

    pub fn regrets(&self) -> Dense {
        self.rows(&self.regret)
    }

    pub fn cumulative(&self) -> Dense {
        self.rows(&self.cumulative)
    }

    /// The current strategy σ^{t+1}.
    pub fn current(&self) -> Dense {
        self.rows(&self.sigma)
    }

    /// The average strategy σ̄^t.
    pub fn average(&self) -> Dense {
        normalize_rows(self.rows(&self.cumulative).into_iter())
    }

    /// One CFR iteration for both players: counterfactual values, regret update, regret
    /// matching and strategy accumulation.
    pub fn iterate(&mut self) -> Result<(), SolverError> {
        self.iteration += 1;
        match self.config.update {
            Update::Simultaneous => {
                self.instant.fill(0.0);
                self.traverse(Game::ROOT, [1.0; 3], None);
                self.apply_regrets(None)?;
            }
            Update::Alternating => {
                for seat in 0..2 {
                    self.instant.fill(0.0);
                    self.traverse(Game::ROOT, [1.0; 3], Some(seat));
                    self.apply_regrets(Some(seat))?;
                }
            }
        }
        Ok(())
    }

    fn weight(&self) -> f64 {
        match self.config.averaging {
            Averaging::Uniform => 1.0,
            Averaging::Linear => self.iteration as f64,
        }
    }

    fn apply_regrets(&mut self, seat: Option<usize>) -> Result<(), SolverError> {
        for (i, info) in self.game.infosets.iter().enumerate() {
            if seat.is_some_and(|s| s != info.seat) {
                continue;
            }
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            for k in lo..hi {
                let r = self.instant[k];
                if !r.is_finite() {
                    return Err(SolverError::NonFinite {
                        key: info.key.clone(),
                        iteration: self.iteration,
                        value: r,
                    });
                }
                self.regret[k] += r;
                if self.config.mode == Mode::CfrPlus {
                    self.regret[k] = self.regret[k].max(0.0);
                }
            }
            regret_match_into(&self.regret[lo..hi], &mut self.sigma[lo..hi]);
        }
        Ok(())
    }

    /// Returns the expected utility of `node` under σ^t for both seats, accumulating
    /// counterfactual regrets (weighted by π_{-i}) and the reach-weighted strategy sum (π_i).
    fn traverse(&mut self, node: NodeId, reach: [f64; 3], only: Option<usize>) -> [f64; 2] {
        let game = self.game;
        match &game.nodes[node].kind {
            NodeKind::Terminal { utility } => *utility,
            NodeKind::Chance { outcomes } => {
                let mut v = [0.0; 2];
                for &(p, c) in outcomes {
                    let cv = self.traverse(c, [reach[0], reach[1], reach[2] * p], only);
                    v[0] += p * cv[0];
                    v[1] += p * cv[1];
                }
                v
            }
            NodeKind::Player {
                seat,
                infoset,
                children,
            } => {
                let seat = *seat;
                let lo = self.offsets[*infoset];
                let n = children.len();
                let mut child_values = [[0.0f64; 2]; 8];
                let mut heap;
                let cv: &mut [[f64; 2]] = if n <= 8 {
                    &mut child_values[..n]
                } else {
                    heap = vec![[0.0; 2]; n];
                    &mut heap
                };
                let mut v = [0.0; 2];
                for a in 0..n {
                    let p = self.sigma[lo + a];
                    let mut r = reach;
                    r[seat] *= p;
                    let skip = r[2] == 0.0 || (r[0] == 0.0 && r[1] == 0.0);
                    cv[a] = if skip {
                        [0.0; 2]
                    } else {
                        self.traverse(children[a], r, only)
                    };
                    v[0] += p * cv[a][0];
                    v[1] += p * cv[a][1];
                }
                if only.is_none_or(|s| s == seat) {
                    let opp = reach[1 - seat] * reach[2];
                    let own = reach[seat];
                    let w = self.weight();
                    for a in 0..n {
                        self.instant[lo + a] += opp * (cv[a][seat] - v[seat]);
                        self.cumulative[lo + a] += w * own * self.sigma[lo + a];
                    }
                }
                v
            }
        }
    }
}

/// Runs `config.iterations` iterations and returns the normalized average strategy with the
/// exploitability curve.
pub fn solve(game: &Game, config: SolverConfig) -> Result<SolveResult, SolverError> {
    solve_with_progress(game, config, |_| {})
}

pub fn solve_with_progress(
    game: &Game,
    config: SolverConfig,
    mut progress: impl FnMut(&CurvePoint),
) -> Result<SolveResult, SolverError> {
    let mut solver = Solver::new(game, config)?;
    let mut curve = Vec::new();
    for t in 1..=config.iterations {
        solver.iterate()?;
        let every = config.exploitability_every;
        if every > 0 && (t % every == 0 || t == config.iterations) {
            let avg = solver.average();
            let point = CurvePoint {
                iteration: t,
                exploitability: game.exploitability(&avg),
                values: game.expected_value(&avg),
            };
            progress(&point);
            curve.push(point);
        }
    }
    let average = solver.average();
    Ok(SolveResult {
        profile: game.profile(&average),
        average,
        curve,
    })
}
