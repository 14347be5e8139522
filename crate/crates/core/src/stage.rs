//! Bayesian stage games and fictitious play.
//!
//! A stage game is the one-shot game at a single state: joint actions and
//! joint types map to immediate terminal payoffs plus continuation values of
//! the successor states. Each (player, type) pair acts as a separate agent
//! that best-responds to the other players' average strategies, weighting
//! opponent type vectors by the belief conditioned on its own type.

use crate::error::{Error, Result};
use crate::game::{GameSpec, JointIndex, JointTypeBelief, Outcome, StageStrategy, ValueTable};

/// The one-shot game played at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct StageGame {
    pub state: usize,
    actions: JointIndex,
    types: JointIndex,
    /// Laid out `[joint type][player][joint action]`.
    payoffs: Vec<f64>,
    belief: JointTypeBelief,
}

impl StageGame {
    /// Builds a stage game from an explicit payoff table laid out
    /// `[joint type][joint action][player]`.
    pub fn from_payoffs(
        action_counts: &[usize],
        belief: JointTypeBelief,
        payoffs: &[f64],
    ) -> Result<Self> {
        let actions = JointIndex::new(action_counts);
        let types = belief.index();
        let n = action_counts.len();
        if let Some(p) = action_counts.iter().position(|&m| m == 0) {
            return Err(Error::EmptyActionSet { state: 0, player: p });
        }
        if payoffs.len() != types.size() * actions.size() * n {
            return Err(Error::Format("stage payoff table has the wrong size".into()));
        }
        let mut out = vec![0.0; payoffs.len()];
        for jt in 0..types.size() {
            for ja in 0..actions.size() {
                for i in 0..n {
                    out[(jt * n + i) * actions.size() + ja] =
                        payoffs[(jt * actions.size() + ja) * n + i];
                }
            }
        }
        Ok(Self {
            state: 0,
            actions,
            types,
            payoffs: out,
            belief,
        })
    }

    pub fn num_players(&self) -> usize {
        self.actions.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        self.actions.radices()
    }

    pub fn type_counts(&self) -> &[usize] {
        self.types.radices()
    }

    pub fn belief(&self) -> &JointTypeBelief {
        &self.belief
    }

    pub fn payoff(&self, joint_action: usize, joint_type: usize, player: usize) -> f64 {
        self.payoffs[(joint_type * self.num_players() + player) * self.actions.size() + joint_action]
    }

    fn tensor(&self, joint_type: usize, player: usize) -> &[f64] {
        let size = self.actions.size();
        let start = (joint_type * self.num_players() + player) * size;
        &self.payoffs[start..start + size]
    }

    /// Weights over joint types an agent `(player, own_type)` uses. Falls back
    /// to the belief over the other players' types when `own_type` has no mass.
    fn agent_weights(&self, player: usize, own_type: usize) -> Vec<(usize, f64)> {
        let w = self.belief.conditional(player, own_type).unwrap_or_else(|| {
            let mut w = vec![0.0; self.types.size()];
            for (t, &m) in self.belief.mass().iter().enumerate() {
                w[self.types.with_digit(t, player, own_type)] += m;
            }
            w
        });
        w.into_iter()
            .enumerate()
            .filter(|(_, x)| *x > 0.0)
            .collect()
    }

    /// Expected payoff of each of `player`'s actions for its type `own_type`
    /// against `strategy`.
    pub fn action_values(&self, strategy: &StageStrategy, player: usize, own_type: usize) -> Vec<f64> {
        let mut scratch = Scratch::default();
        let weights = self.agent_weights(player, own_type);
        self.action_values_with(strategy, player, &weights, &mut scratch)
    }

    fn action_values_with(
        &self,
        strategy: &StageStrategy,
        player: usize,
        weights: &[(usize, f64)],
        scratch: &mut Scratch,
    ) -> Vec<f64> {
        let m = self.actions.radices()[player];
        let mut out = vec![0.0; m];
        let mut dists: Vec<&[f64]> = Vec::with_capacity(self.num_players());
        for &(jt, w) in weights {
            dists.clear();
            for p in 0..self.num_players() {
                dists.push(strategy.get(p, self.types.digit(jt, p)));
            }
            let v = contract(self.tensor(jt, player), self.actions.radices(), player, &dists, scratch);
            for (o, x) in out.iter_mut().zip(v) {
                *o += w * x;
            }
        }
        out
    }
}

#[derive(Default)]
struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Contracts every axis of `tensor` except `keep` against `dists`.
fn contract<'s>(
    tensor: &[f64],
    radices: &[usize],
    keep: usize,
    dists: &[&[f64]],
    scratch: &'s mut Scratch,
) -> &'s [f64] {
    let Scratch { a, b } = scratch;
    a.clear();
    a.extend_from_slice(tensor);
    let mut len = tensor.len();
    for p in (keep + 1..radices.len()).rev() {
        let m = radices[p];
        let d = dists[p];
        let next = len / m;
        b.clear();
        b.resize(next, 0.0);
        for (k, out) in b.iter_mut().enumerate() {
            let row = &a[k * m..(k + 1) * m];
            *out = row.iter().zip(d).map(|(x, y)| x * y).sum();
        }
        std::mem::swap(a, b);
        len = next;
    }
    for p in 0..keep {
        let m = radices[p];
        let d = dists[p];
        let rest = len / m;
        b.clear();
        b.resize(rest, 0.0);
        for (act, &w) in d.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let block = &a[act * rest..(act + 1) * rest];
            for (o, x) in b.iter_mut().zip(block) {
                *o += w * x;
            }
        }
        std::mem::swap(a, b);
        len = rest;
    }
    &a[..len]
}

/// Builds the stage game at `state`, using `values` for transitions into
/// nonterminal states. Type-dependent tables are read at the joint type
/// being evaluated.
pub fn build_stage(
    spec: &GameSpec,
    state: usize,
    values: &ValueTable,
    belief: &JointTypeBelief,
) -> Result<StageGame> {
    let n = spec.num_players();
    if let Some(p) = spec.states[state].action_counts.iter().position(|&m| m == 0) {
        return Err(Error::EmptyActionSet { state, player: p });
    }
    if belief.type_counts() != spec.type_counts.as_slice() {
        return Err(Error::MissingBelief { state });
    }
    if values.num_players() != n {
        return Err(Error::MissingValue { state });
    }
    let actions = spec.joint_actions(state);
    let types = spec.joint_types();
    let mut payoffs = vec![0.0; types.size() * n * actions.size()];
    let mut acts = vec![0; n];
    let mut tys = vec![0; n];
    let mut buf: Vec<Outcome> = Vec::new();
    for jt in 0..types.size() {
        types.decode_into(jt, &mut tys);
        for ja in 0..actions.size() {
            actions.decode_into(ja, &mut acts);
            buf.clear();
            spec.transition_into(state, &acts, &tys, &mut buf);
            for o in &buf {
                if let crate::game::Successor::State(s) = o.to {
                    if s >= values.num_states() {
                        return Err(Error::MissingValue { state: s });
                    }
                }
                for i in 0..n {
                    payoffs[(jt * n + i) * actions.size() + ja] +=
                        o.prob * values.continuation(spec, i, o.to, jt);
                }
            }
        }
    }
    Ok(StageGame {
        state,
        actions,
        types,
        payoffs,
        belief: belief.clone(),
    })
}

fn argmax_lowest(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = k;
        }
    }
    best
}

/// Runs fictitious play for `iterations` rounds starting from uniform
/// averages. All agents update simultaneously; ties go to the lowest action.
pub fn fictitious_play(stage: &StageGame, iterations: usize) -> Result<StageStrategy> {
    fictitious_play_observed(stage, iterations, |_, _| {})
}

/// [`fictitious_play`] calling `observe(n, average)` after every round.
pub fn fictitious_play_observed<F: FnMut(usize, &StageStrategy)>(
    stage: &StageGame,
    iterations: usize,
    mut observe: F,
) -> Result<StageStrategy> {
    if iterations == 0 {
        return Err(Error::InvalidConfig("fictitious play needs at least one iteration".into()));
    }
    if let Some(p) = stage.action_counts().iter().position(|&m| m == 0) {
        return Err(Error::EmptyActionSet {
            state: stage.state,
            player: p,
        });
    }
    let n = stage.num_players();
    let mut avg = StageStrategy::uniform(stage.action_counts(), stage.type_counts());
    let agents: Vec<(usize, usize, Vec<(usize, f64)>)> = (0..n)
        .flat_map(|i| (0..stage.type_counts()[i]).map(move |t| (i, t)))
        .map(|(i, t)| (i, t, stage.agent_weights(i, t)))
        .collect();
    let mut scratch = Scratch::default();
    let mut best = vec![0usize; agents.len()];
    for round in 1..=iterations {
        for (slot, (i, _, w)) in agents.iter().enumerate() {
            let v = stage.action_values_with(&avg, *i, w, &mut scratch);
            best[slot] = argmax_lowest(&v);
        }
        let keep = (round - 1) as f64;
        let scale = round as f64;
        for (slot, (i, t, _)) in agents.iter().enumerate() {
            for (a, x) in avg.dists[*i][*t].iter_mut().enumerate() {
                let hit = if a == best[slot] { 1.0 } else { 0.0 };
                *x = (keep * *x + hit) / scale;
            }
        }
        observe(round, &avg);
    }
    for d in avg.dists.iter_mut().flatten() {
        let s: f64 = d.iter().sum();
        d.iter_mut().for_each(|x| *x /= s);
    }
    Ok(avg)
}

/// Largest gain any (player, type) agent gets from deviating in the stage game.
pub fn stage_epsilon(stage: &StageGame, strategy: &StageStrategy) -> f64 {
    let mut scratch = Scratch::default();
    let mut eps: f64 = 0.0;
    for i in 0..stage.num_players() {
        for t in 0..stage.type_counts()[i] {
            let w = stage.agent_weights(i, t);
            let v = stage.action_values_with(strategy, i, &w, &mut scratch);
            let current: f64 = v.iter().zip(strategy.get(i, t)).map(|(x, p)| x * p).sum();
            let best = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            eps = eps.max(best - current);
        }
    }
    eps
}
