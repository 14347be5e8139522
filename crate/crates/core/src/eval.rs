//! How far a profile is from equilibrium.
//!
//! With persistent types a deviating player faces a belief-state problem:
//! it knows its own type, keeps a posterior over opponent types, and updates
//! it from the states it observes. [`epsilon_persistent`] solves that
//! problem by finite-horizon recursion with growing horizons.
//! [`ex_post_check`] handles the one-type case with an induced MDP.
//! [`brute_force_best_response`] enumerates deviator policies for tiny games.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{for_each_joint_action, GameSpec, JointIndex, Outcome, StrategyProfile, Successor};
use crate::value::{evaluate_strategies_tdv, solve_linear_system};

/// How the deviator's posterior over opponent types is carried.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefMode {
    /// Full joint posterior over opponent type vectors.
    #[default]
    Joint,
    /// Product of per-opponent marginals, re-factored after every update.
    Factored,
}

/// What happens to the probability of pruned transitions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrunedMass {
    /// Left out of the normalizer; the kept branches are scaled up.
    #[default]
    Renormalize,
    /// Kept in the normalizer with zero payoff.
    Penalize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalConfig {
    /// Largest horizon tried; defaults to the number of nonterminal states.
    pub horizon_cap: Option<usize>,
    /// Stop once no player's value moves by this much between horizons.
    pub tolerance: f64,
    /// Transitions with smaller probability are not expanded.
    pub prune_threshold: f64,
    pub pruned_mass: PrunedMass,
    pub belief_mode: BeliefMode,
    /// Grid used to key the memo on beliefs; 0 keys on exact bits.
    pub memo_quantum: f64,
    /// Most memo entries kept per deviator; later states are recomputed.
    pub memo_capacity: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            horizon_cap: None,
            tolerance: 1e-3,
            prune_threshold: 0.01,
            pruned_mass: PrunedMass::Renormalize,
            belief_mode: BeliefMode::Joint,
            memo_quantum: 1e-9,
            memo_capacity: 4_000_000,
        }
    }
}

impl EvalConfig {
    /// No pruning and no early stop: runs to the full depth of the game.
    pub fn exact() -> Self {
        Self {
            tolerance: 0.0,
            prune_threshold: 0.0,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.tolerance >= 0.0 && self.prune_threshold >= 0.0 && self.memo_quantum >= 0.0) {
            return Err(Error::InvalidConfig("tolerance, prune threshold and memo grid must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Opponent type vectors for a fixed (player, own type), and how they map to
/// full joint type indices.
#[derive(Clone, Debug)]
struct OpponentTypes {
    index: JointIndex,
    /// Full joint type for each opponent index.
    full: Vec<usize>,
}

impl OpponentTypes {
    fn new(spec: &GameSpec, player: usize, own_type: usize) -> Self {
        let radices: Vec<usize> = spec
            .type_counts
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != player)
            .map(|(_, &t)| t)
            .collect();
        let index = JointIndex::new(&radices);
        let types = spec.joint_types();
        let full = (0..index.size())
            .map(|o| {
                let mut digits = index.decode(o);
                digits.insert(player, own_type);
                types.encode(&digits)
            })
            .collect();
        Self { index, full }
    }

    /// Prior over opponent types given the own type, or `None` when the own
    /// type has no prior mass.
    fn conditional_prior(&self, spec: &GameSpec) -> Option<Vec<f64>> {
        let w: Vec<f64> = self.full.iter().map(|&jt| spec.prior.mass()[jt]).collect();
        let s: f64 = w.iter().sum();
        (s > 0.0).then(|| w.into_iter().map(|x| x / s).collect())
    }

    fn product(&self, marginals: &[Vec<f64>]) -> Vec<f64> {
        (0..self.index.size())
            .map(|o| (0..marginals.len()).map(|k| marginals[k][self.index.digit(o, k)]).product())
            .collect()
    }

    fn marginals(&self, joint: &[f64]) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.index.radices().iter().map(|&m| vec![0.0; m]).collect();
        for (o, &w) in joint.iter().enumerate() {
            for (k, m) in out.iter_mut().enumerate() {
                m[self.index.digit(o, k)] += w;
            }
        }
        out
    }
}

/// What follows one own action at one state, per opponent type vector.
#[derive(Clone, Debug, Default)]
struct ActionRow {
    /// Reachable nonterminal successors.
    succs: Vec<usize>,
    /// Per opponent type vector: expected terminal payoff and terminal mass.
    term_pay: Vec<f64>,
    term_mass: Vec<f64>,
    /// `[opponent type][succ slot]`.
    trans: Vec<f64>,
}

/// Successor tables for a deviator with a fixed own type, marginalizing the
/// opponents' actions under the profile.
#[derive(Clone, Debug)]
struct DeviationTables {
    opp: OpponentTypes,
    /// `[state][own action]`.
    rows: Vec<Vec<ActionRow>>,
}

impl DeviationTables {
    fn build(spec: &GameSpec, profile: &StrategyProfile, player: usize, own_type: usize) -> Self {
        let opp = OpponentTypes::new(spec, player, own_type);
        let types = spec.joint_types();
        let n = spec.num_players();
        let k = spec.num_states();
        let mut dense = vec![0.0; spec.num_successors()];
        let mut tys = vec![0; n];
        let mut buf: Vec<Outcome> = Vec::new();
        let rows = (0..k)
            .map(|h| {
                let m = spec.action_count(h, player);
                (0..m)
                    .map(|a| {
                        let mut one_hot = vec![0.0; m];
                        one_hot[a] = 1.0;
                        let mut per_type: Vec<Vec<f64>> = Vec::with_capacity(opp.full.len());
                        for &jt in &opp.full {
                            types.decode_into(jt, &mut tys);
                            let dists: Vec<&[f64]> = (0..n)
                                .map(|p| if p == player { &one_hot[..] } else { profile.get(h, p, tys[p]) })
                                .collect();
                            dense.iter_mut().for_each(|x| *x = 0.0);
                            for_each_joint_action(&dists, |acts, q| {
                                buf.clear();
                                spec.transition_into(h, acts, &tys, &mut buf);
                                for o in &buf {
                                    dense[spec.flat_successor(o.to)] += q * o.prob;
                                }
                            });
                            per_type.push(dense.clone());
                        }
                        let succs: Vec<usize> =
                            (0..k).filter(|&s| per_type.iter().any(|d| d[s] > 0.0)).collect();
                        let mut row = ActionRow {
                            succs,
                            ..ActionRow::default()
                        };
                        for (o, d) in per_type.iter().enumerate() {
                            let jt = opp.full[o];
                            let mut pay = 0.0;
                            let mut mass = 0.0;
                            for t in 0..spec.num_terminals() {
                                let p = d[k + t];
                                if p > 0.0 {
                                    pay += p * spec.terminal_payoff(t, player, jt);
                                    mass += p;
                                }
                            }
                            row.term_pay.push(pay);
                            row.term_mass.push(mass);
                            row.trans.extend(row.succs.iter().map(|&s| d[s]));
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        Self { opp, rows }
    }
}

/// Memo key: state, clamped horizon and a 128-bit digest of the quantized
/// belief.
type MemoKey = (u32, u32, u128);
type Memo = HashMap<MemoKey, (f64, f64)>;

/// Recursive deviation values with memoization.
struct Recursion<'a> {
    tables: &'a DeviationTables,
    config: &'a EvalConfig,
    depth: &'a [usize],
    memo: Memo,
    player: usize,
    expanded: u64,
}

impl<'a> Recursion<'a> {
    fn key(&self, state: usize, horizon: usize, belief: &[f64]) -> MemoKey {
        let q = self.config.memo_quantum;
        let mut digest = [0u64; 2];
        for (salt, d) in digest.iter_mut().enumerate() {
            let mut h = DefaultHasher::new();
            salt.hash(&mut h);
            for &x in belief {
                let cell = if q > 0.0 { (x / q).round() as i64 } else { x.to_bits() as i64 };
                cell.hash(&mut h);
            }
            *d = h.finish();
        }
        let digest = (u128::from(digest[0]) << 64) | u128::from(digest[1]);
        (state as u32, horizon.min(self.depth[state]) as u32, digest)
    }

    /// Best normalized value at `state` and a bound on how much pruning can
    /// have moved it, in units of the payoff range.
    fn value(&mut self, state: usize, belief: &[f64], horizon: usize) -> Result<(f64, f64)> {
        let key = self.key(state, horizon, belief);
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        self.expanded += 1;
        let horizon = key.1 as usize;
        let tables = self.tables;
        let mut best: Option<f64> = None;
        let mut bound: f64 = 0.0;
        let mut next = vec![0.0; belief.len()];
        for row in &tables.rows[state] {
            let mut pay = 0.0;
            let mut sum = 0.0;
            for (o, &b) in belief.iter().enumerate() {
                if b > 0.0 {
                    pay += b * row.term_pay[o];
                    sum += b * row.term_mass[o];
                }
            }
            let mut child_bound = 0.0;
            let mut penalized = 0.0;
            let mut kept = Vec::new();
            if horizon > 0 {
                let width = row.succs.len();
                for (slot, &to) in row.succs.iter().enumerate() {
                    let mut p = 0.0;
                    for (o, &b) in belief.iter().enumerate() {
                        next[o] = b * row.trans[o * width + slot];
                        p += next[o];
                    }
                    if p <= 0.0 {
                        continue;
                    }
                    if p < self.config.prune_threshold {
                        if self.config.pruned_mass == PrunedMass::Penalize {
                            sum += p;
                            penalized += p;
                        }
                        continue;
                    }
                    next.iter_mut().for_each(|x| *x /= p);
                    if self.config.belief_mode == BeliefMode::Factored {
                        let m = tables.opp.marginals(&next);
                        next = tables.opp.product(&m);
                    }
                    let (v, mb) = self.value(to, &next, horizon - 1)?;
                    pay += p * v;
                    sum += p;
                    kept.push((p, mb));
                }
            }
            if sum <= 0.0 {
                // Pruning removed everything this action could lead to.
                if horizon > 0 && !row.succs.is_empty() {
                    bound = bound.max(1.0);
                }
                continue;
            }
            for (p, mb) in kept {
                child_bound += p / sum * mb;
            }
            // Mass dropped by pruning, relative to the full row.
            let total: f64 = belief
                .iter()
                .enumerate()
                .map(|(o, &b)| {
                    b * (row.term_mass[o] + if horizon > 0 { row.trans[o * row.succs.len()..(o + 1) * row.succs.len()].iter().sum::<f64>() } else { 0.0 })
                })
                .sum();
            let expanded = sum - penalized;
            let dropped = if total > 0.0 { ((total - expanded) / total).max(0.0) } else { 0.0 };
            bound = bound.max(dropped + child_bound);
            let v = pay / sum;
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        let v = best.ok_or(Error::NoAttainableOutcome {
            state,
            player: self.player,
        })?;
        if self.memo.len() < self.config.memo_capacity {
            self.memo.insert(key, (v, bound));
        }
        Ok((v, bound))
    }
}

/// Where a deviator starts: its identity, type, state, opponent type
/// distributions and remaining horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefStateKey {
    pub player: usize,
    pub own_type: usize,
    /// One distribution per opponent, in player order without `player`.
    pub opponents: Vec<Vec<f64>>,
    pub state: usize,
    pub horizon: usize,
}

/// Best value a deviator can secure from `key` within its horizon, with
/// opponents' types drawn independently from the given distributions.
pub fn compute_value(
    spec: &GameSpec,
    profile: &StrategyProfile,
    key: &BeliefStateKey,
    config: &EvalConfig,
) -> Result<f64> {
    config.check()?;
    profile.check_shape(spec)?;
    if key.player >= spec.num_players() {
        return Err(Error::UnknownPlayer(key.player));
    }
    let tables = DeviationTables::build(spec, profile, key.player, key.own_type);
    if key.opponents.len() != tables.opp.index.len()
        || key.opponents.iter().zip(tables.opp.index.radices()).any(|(d, &m)| {
            d.len() != m || d.iter().any(|&x| x < 0.0) || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9
        })
    {
        return Err(Error::InvalidConfig("opponent type distributions do not match the game".into()));
    }
    let belief = tables.opp.product(&key.opponents);
    let depth = spec.remaining_depths();
    let mut rec = Recursion {
        tables: &tables,
        config,
        depth: &depth,
        memo: HashMap::new(),
        player: key.player,
        expanded: 0,
    };
    Ok(rec.value(key.state, &belief, key.horizon)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PlayerEpsilon {
    /// Expected payoff under the profile.
    pub profile_value: f64,
    /// Best deviation value, averaged over own types by the prior. Never
    /// below `profile_value`, since following the profile is a deviation.
    pub deviation_value: f64,
    /// The recursion's own estimate before that floor. Differs from
    /// `deviation_value` only when pruning pushed it below the profile.
    pub recursion_value: f64,
    /// Best deviation value for each own type; `None` for types without
    /// prior mass.
    pub type_values: Vec<Option<f64>>,
    pub epsilon: f64,
    /// Bound on the error pruning introduced into `deviation_value`.
    pub pruning_error_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EpsilonReport {
    pub players: Vec<PlayerEpsilon>,
    pub epsilon: f64,
    /// Last horizon evaluated.
    pub horizon: usize,
    pub converged: bool,
    /// Whether the horizon covers every path of the game.
    pub full_depth: bool,
    /// Deviation value per horizon, `[horizon][player]`.
    pub series: Vec<Vec<f64>>,
    /// Belief states evaluated, memo hits excluded.
    pub states_expanded: u64,
}

/// Expected payoff of every player under the profile.
pub fn profile_value(spec: &GameSpec, profile: &StrategyProfile) -> Result<Vec<f64>> {
    let tdv = evaluate_strategies_tdv(spec, profile)?;
    Ok((0..spec.num_players())
        .map(|i| {
            spec.prior
                .mass()
                .iter()
                .enumerate()
                .map(|(jt, &w)| w * tdv.get(i, spec.root, jt))
                .sum()
        })
        .collect())
}

/// A deviator's starting point: one own type with positive prior mass.
struct Root {
    player: usize,
    own_type: usize,
    weight: f64,
    tables: DeviationTables,
    belief: Vec<f64>,
    memo: Memo,
    expanded: u64,
}

/// Measures how much any player gains by deviating, trying horizons
/// `0, 1, 2, ...` until values settle, the cap is hit, or the horizon covers
/// the whole game.
pub fn epsilon_persistent(spec: &GameSpec, profile: &StrategyProfile, config: &EvalConfig) -> Result<EpsilonReport> {
    config.check()?;
    spec.check()?;
    profile.check_shape(spec)?;
    let depth = spec.remaining_depths();
    let cap = config.horizon_cap.unwrap_or(spec.num_states());
    let star = profile_value(spec, profile)?;
    let n = spec.num_players();
    let mut roots: Vec<Root> = Vec::new();
    for i in 0..n {
        let marg = spec.prior.marginal(i)?;
        for (t, &w) in marg.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let tables = DeviationTables::build(spec, profile, i, t);
            let belief = tables.opp.conditional_prior(spec).expect("own type has prior mass");
            roots.push(Root {
                player: i,
                own_type: t,
                weight: w,
                tables,
                belief,
                memo: HashMap::new(),
                expanded: 0,
            });
        }
    }
    let mut series: Vec<Vec<f64>> = Vec::new();
    let mut per_root: Vec<(f64, f64)>;
    let mut horizon = 0;
    let mut converged = false;
    loop {
        per_root = roots
            .par_iter_mut()
            .map(|r| {
                let mut rec = Recursion {
                    tables: &r.tables,
                    config,
                    depth: &depth,
                    memo: std::mem::take(&mut r.memo),
                    player: r.player,
                    expanded: 0,
                };
                let out = rec.value(spec.root, &r.belief, horizon);
                r.memo = rec.memo;
                r.expanded += rec.expanded;
                out
            })
            .collect::<Result<_>>()?;
        let mut v = vec![0.0; n];
        for (r, (x, _)) in roots.iter().zip(&per_root) {
            v[r.player] += r.weight * x;
        }
        let settled = series
            .last()
            .is_some_and(|prev: &Vec<f64>| prev.iter().zip(&v).all(|(a, b)| (a - b).abs() < config.tolerance));
        series.push(v);
        if settled || horizon >= depth[spec.root] {
            converged = true;
            break;
        }
        if horizon >= cap {
            break;
        }
        horizon += 1;
    }
    let last = series.last().expect("at least one horizon").clone();
    let players: Vec<PlayerEpsilon> = (0..n)
        .map(|i| {
            let mut type_values = vec![None; spec.type_counts[i]];
            let mut bound: f64 = 0.0;
            for (r, &(x, b)) in roots.iter().zip(&per_root) {
                if r.player == i {
                    type_values[r.own_type] = Some(x);
                    bound += r.weight * b;
                }
            }
            let (lo, hi) = spec.payoff_range(i);
            // Penalized mass sits at zero, which may lie outside [lo, hi].
            let scale = match config.pruned_mass {
                PrunedMass::Renormalize => hi - lo,
                PrunedMass::Penalize => (hi - lo).max(hi.max(0.0) - lo.min(0.0)),
            };
            PlayerEpsilon {
                profile_value: star[i],
                deviation_value: last[i].max(star[i]),
                recursion_value: last[i],
                type_values,
                epsilon: last[i].max(star[i]) - star[i],
                pruning_error_bound: bound * scale,
            }
        })
        .collect();
    let epsilon = players.iter().map(|p| p.epsilon).fold(f64::NEG_INFINITY, f64::max);
    Ok(EpsilonReport {
        players,
        epsilon,
        horizon,
        converged,
        full_depth: horizon >= depth[spec.root],
        series,
        states_expanded: roots.iter().map(|r| r.expanded).sum(),
    })
}

/// A finite MDP whose transitions leave the state space with the missing
/// probability (absorbing zero-value exit).
#[derive(Clone, Debug, PartialEq)]
pub struct Mdp {
    /// `[state][action]`.
    pub actions: Vec<Vec<MdpAction>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MdpAction {
    pub reward: f64,
    pub transitions: Vec<(usize, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MdpSolution {
    pub policy: Vec<usize>,
    pub values: Vec<f64>,
    pub iterations: usize,
}

fn evaluate_policy(mdp: &Mdp, policy: &[usize]) -> Result<Vec<f64>> {
    let k = mdp.actions.len();
    let mut a = vec![vec![0.0; k]; k];
    let mut b = vec![0.0; k];
    for s in 0..k {
        let act = &mdp.actions[s][policy[s]];
        a[s][s] += 1.0;
        for &(to, p) in &act.transitions {
            a[s][to] -= p;
        }
        b[s] = act.reward;
    }
    solve_linear_system(&a, &b)
}

fn q_value(act: &MdpAction, v: &[f64]) -> f64 {
    act.reward + act.transitions.iter().map(|&(to, p)| p * v[to]).sum::<f64>()
}

/// Howard policy iteration. Improvement keeps the current action whenever it
/// is among the best, up to rounding.
pub fn mdp_policy_iteration(mdp: &Mdp, initial: &[usize]) -> Result<MdpSolution> {
    let k = mdp.actions.len();
    if initial.len() != k || (0..k).any(|s| initial[s] >= mdp.actions[s].len()) {
        return Err(Error::InvalidConfig("initial policy does not fit the MDP".into()));
    }
    let mut policy = initial.to_vec();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let v = evaluate_policy(mdp, &policy)?;
        let mut changed = false;
        for s in 0..k {
            let q: Vec<f64> = mdp.actions[s].iter().map(|a| q_value(a, &v)).collect();
            let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let slack = 1e-12 * (1.0 + best.abs());
            if q[policy[s]] >= best - slack {
                continue;
            }
            policy[s] = q.iter().position(|&x| x >= best - slack).expect("a best action");
            changed = true;
        }
        if !changed {
            return Ok(MdpSolution {
                policy,
                values: v,
                iterations,
            });
        }
    }
}

/// The MDP `player` faces when everyone else follows the profile.
/// Perfect-information games only.
pub fn deviation_mdp(spec: &GameSpec, profile: &StrategyProfile, player: usize) -> Result<Mdp> {
    if !spec.is_perfect_information() {
        return Err(Error::Unsupported(
            "the induced MDP needs one type per player; use epsilon_persistent for games with types".into(),
        ));
    }
    if player >= spec.num_players() {
        return Err(Error::UnknownPlayer(player));
    }
    let tables = DeviationTables::build(spec, profile, player, 0);
    Ok(Mdp {
        actions: tables
            .rows
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|r| MdpAction {
                        reward: r.term_pay[0],
                        transitions: r.succs.iter().copied().zip(r.trans.iter().copied()).collect(),
                    })
                    .collect()
            })
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExPostReport {
    pub profile_values: Vec<f64>,
    pub best_values: Vec<f64>,
    pub improvements: Vec<f64>,
    pub epsilon: f64,
}

/// Per-player gain from the best pure deviation, for perfect-information
/// games. Policy iteration starts from each state's most likely action.
pub fn ex_post_check(spec: &GameSpec, profile: &StrategyProfile) -> Result<ExPostReport> {
    spec.check()?;
    profile.check_shape(spec)?;
    if !spec.is_perfect_information() {
        return Err(Error::Unsupported(
            "ex post check needs one type per player; use epsilon_persistent for games with types".into(),
        ));
    }
    let star = profile_value(spec, profile)?;
    let mut best_values = Vec::new();
    for i in 0..spec.num_players() {
        let mdp = deviation_mdp(spec, profile, i)?;
        let init: Vec<usize> = (0..spec.num_states())
            .map(|s| {
                let d = profile.get(s, i, 0);
                let top = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                d.iter().position(|&x| x == top).unwrap_or(0)
            })
            .collect();
        best_values.push(mdp_policy_iteration(&mdp, &init)?.values[spec.root]);
    }
    let improvements: Vec<f64> = best_values.iter().zip(&star).map(|(b, s)| b - s).collect();
    Ok(ExPostReport {
        epsilon: improvements.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        profile_values: star,
        best_values,
        improvements,
    })
}

/// History tree node: a state reached by a particular sequence of states
/// and own actions.
struct HistoryNode {
    state: usize,
    at_horizon: bool,
    /// `children[action]` lists `(successor state, child node)`; empty at
    /// the horizon.
    children: Vec<Vec<(usize, usize)>>,
}

/// Exhaustively enumerates deterministic history-dependent deviations of
/// `player` up to `horizon` transitions and returns the best value averaged
/// over own types, together with the per-type values.
///
/// Each policy is scored by walking every joint type vector and path
/// forward. At the horizon the value is the expected terminal payoff given
/// that the game ends there, matching [`epsilon_persistent`]'s truncation.
pub fn brute_force_best_response(
    spec: &GameSpec,
    profile: &StrategyProfile,
    player: usize,
    horizon: usize,
    budget: usize,
) -> Result<(f64, Vec<Option<f64>>)> {
    spec.check()?;
    profile.check_shape(spec)?;
    if player >= spec.num_players() {
        return Err(Error::UnknownPlayer(player));
    }
    let marg = spec.prior.marginal(player)?;
    let mut per_type = vec![None; marg.len()];
    let mut total = 0.0;
    for (t, &w) in marg.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let v = brute_force_type(spec, profile, player, t, horizon, budget)?;
        per_type[t] = Some(v);
        total += w * v;
    }
    Ok((total, per_type))
}

fn brute_force_type(
    spec: &GameSpec,
    profile: &StrategyProfile,
    player: usize,
    own_type: usize,
    horizon: usize,
    budget: usize,
) -> Result<f64> {
    let n = spec.num_players();
    let types = spec.joint_types();
    let opp = OpponentTypes::new(spec, player, own_type);
    let prior = opp.conditional_prior(spec).expect("own type has prior mass");
    let support: Vec<usize> = (0..prior.len()).filter(|&o| prior[o] > 0.0).collect();

    // Structural successors of (state, own action) over the prior support.
    let successors = |h: usize, a: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let m = spec.action_count(h, player);
        let mut one_hot = vec![0.0; m];
        one_hot[a] = 1.0;
        for &o in &support {
            let tys = types.decode(opp.full[o]);
            let dists: Vec<&[f64]> = (0..n)
                .map(|p| if p == player { &one_hot[..] } else { profile.get(h, p, tys[p]) })
                .collect();
            for_each_joint_action(&dists, |acts, _| {
                for x in spec.transition(h, acts, &tys) {
                    if let Successor::State(s) = x.to {
                        if x.prob > 0.0 && !out.contains(&s) {
                            out.push(s);
                        }
                    }
                }
            });
        }
        out.sort_unstable();
        out
    };

    let mut nodes: Vec<HistoryNode> = Vec::new();
    fn grow(
        nodes: &mut Vec<HistoryNode>,
        state: usize,
        left: usize,
        m: &dyn Fn(usize) -> usize,
        succ: &dyn Fn(usize, usize) -> Vec<usize>,
    ) -> usize {
        let id = nodes.len();
        nodes.push(HistoryNode {
            state,
            at_horizon: left == 0,
            children: Vec::new(),
        });
        let mut children = vec![Vec::new(); m(state)];
        if left > 0 {
            for (a, slot) in children.iter_mut().enumerate() {
                for s in succ(state, a) {
                    let c = grow(nodes, s, left - 1, m, succ);
                    slot.push((s, c));
                }
            }
        }
        nodes[id].children = children;
        id
    }
    let m = |h: usize| spec.action_count(h, player);
    grow(&mut nodes, spec.root, horizon, &m, &successors);

    // Policy count: sum over actions of the product of child counts.
    fn count(nodes: &[HistoryNode], id: usize) -> f64 {
        nodes[id]
            .children
            .iter()
            .map(|c| c.iter().map(|&(_, k)| count(nodes, k)).product::<f64>())
            .sum()
    }
    let policies = count(&nodes, 0);
    if policies > budget as f64 {
        return Err(Error::EnumerationBudget { policies, budget });
    }

    // Enumerate policies as action assignments to active nodes.
    fn enumerate(nodes: &[HistoryNode], id: usize) -> Vec<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        for (a, kids) in nodes[id].children.iter().enumerate() {
            let mut combos: Vec<Vec<(usize, usize)>> = vec![vec![(id, a)]];
            for &(_, k) in kids {
                let sub = enumerate(nodes, k);
                let mut grown = Vec::with_capacity(combos.len() * sub.len());
                for c in &combos {
                    for s in &sub {
                        let mut x = c.clone();
                        x.extend_from_slice(s);
                        grown.push(x);
                    }
                }
                combos = grown;
            }
            out.extend(combos);
        }
        out
    }
    let all = enumerate(&nodes, 0);

    let mut best: Option<f64> = None;
    let mut choice = vec![usize::MAX; nodes.len()];
    let mut leaf_acc: Vec<(f64, f64, f64)> = vec![(0.0, 0.0, 0.0); nodes.len()];
    'policy: for pol in &all {
        choice.iter_mut().for_each(|c| *c = usize::MAX);
        for &(id, a) in pol {
            choice[id] = a;
        }
        leaf_acc.iter_mut().for_each(|x| *x = (0.0, 0.0, 0.0));
        let mut value = 0.0;
        for &o in &support {
            let jt = opp.full[o];
            let tys = types.decode(jt);
            // Depth-first walk of (node, reach probability).
            let mut stack = vec![(0usize, prior[o])];
            while let Some((id, reach)) = stack.pop() {
                let node = &nodes[id];
                let h = node.state;
                let a = choice[id];
                let at_leaf = node.at_horizon;
                let mm = spec.action_count(h, player);
                let mut one_hot = vec![0.0; mm];
                one_hot[a] = 1.0;
                let dists: Vec<&[f64]> = (0..n)
                    .map(|p| if p == player { &one_hot[..] } else { profile.get(h, p, tys[p]) })
                    .collect();
                let mut pay = 0.0;
                let mut mass = 0.0;
                let mut moves: Vec<(usize, f64)> = Vec::new();
                for_each_joint_action(&dists, |acts, q| {
                    for x in spec.transition(h, acts, &tys) {
                        match x.to {
                            Successor::Terminal(k) => {
                                pay += q * x.prob * spec.terminal_payoff(k, player, jt);
                                mass += q * x.prob;
                            }
                            Successor::State(s) => moves.push((s, q * x.prob)),
                        }
                    }
                });
                if at_leaf {
                    let acc = &mut leaf_acc[id];
                    acc.0 += reach * pay;
                    acc.1 += reach * mass;
                    acc.2 += reach;
                } else {
                    value += reach * pay;
                    for (s, p) in moves {
                        if p > 0.0 {
                            let child = node.children[a]
                                .iter()
                                .find(|&&(x, _)| x == s)
                                .expect("successor in history tree")
                                .1;
                            stack.push((child, reach * p));
                        }
                    }
                }
            }
        }
        for &(pay, mass, reach) in &leaf_acc {
            if reach > 0.0 {
                if mass <= 0.0 {
                    continue 'policy;
                }
                value += reach * pay / mass;
            }
        }
        best = Some(best.map_or(value, |b: f64| b.max(value)));
    }
    best.ok_or(Error::NoAttainableOutcome {
        state: spec.root,
        player,
    })
}
