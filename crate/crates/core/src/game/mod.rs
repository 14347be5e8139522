//! DAG-structured stochastic games with persistent private types.
//!
//! A [`GameSpec`] holds the nonterminal states, the terminal states with their
//! payoffs, a prior over joint type vectors and a transition kernel mapping
//! `(state, joint action, joint type vector)` to a distribution over
//! successors. Joint actions and joint type vectors are flattened in
//! lexicographic order with player 0 as the most significant digit; every
//! table in the crate indexes by that order.

mod belief;
mod flow;
mod profile;
mod trace;
mod values;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use belief::JointTypeBelief;
pub use flow::{for_each_joint_action, ProfileFlow, StateFlow};
pub use profile::{StageStrategy, StrategyProfile};
pub use trace::{ConvergenceTrace, TraceRow};
pub use values::{ValueMode, ValueTable};

use crate::error::{Error, Result};
use crate::hostility::HostilityKernel;

/// Tolerance for transition rows on input.
pub const ROW_TOLERANCE: f64 = 1e-9;
/// Tolerance for the prior and other beliefs.
pub const BELIEF_TOLERANCE: f64 = 1e-12;

/// Mixed-radix index over a product of finite sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointIndex {
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl JointIndex {
    pub fn new(radices: &[usize]) -> Self {
        let mut strides = vec![1; radices.len()];
        let mut size = 1usize;
        for k in (0..radices.len()).rev() {
            strides[k] = size;
            size *= radices[k];
        }
        Self {
            radices: radices.to_vec(),
            strides,
            size,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.radices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radices.is_empty()
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| d * s)
            .sum()
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.radices.len()];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, index: usize, out: &mut [usize]) {
        for k in 0..self.radices.len() {
            out[k] = (index / self.strides[k]) % self.radices[k];
        }
    }

    pub fn digit(&self, index: usize, k: usize) -> usize {
        (index / self.strides[k]) % self.radices[k]
    }

    /// Replaces digit `k` of `index` with `value`.
    pub fn with_digit(&self, index: usize, k: usize, value: usize) -> usize {
        index - self.digit(index, k) * self.strides[k] + value * self.strides[k]
    }
}

/// Where a transition lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Successor {
    State(usize),
    Terminal(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub to: Successor,
    pub prob: f64,
}

/// Payoffs collected on reaching a terminal state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TerminalPayoff {
    /// One payoff per player regardless of types.
    Fixed(Vec<f64>),
    /// Indexed `[joint type][player]`.
    ByType(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub name: String,
    pub payoff: TerminalPayoff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateDef {
    pub name: String,
    /// Number of actions per player.
    pub action_counts: Vec<usize>,
}

/// Explicit transition table indexed `[state][joint action][joint type]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableKernel {
    pub rows: Vec<Vec<Vec<Vec<Outcome>>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    Table(TableKernel),
    Hostility(HostilityKernel),
}

/// A finite DAG-structured stochastic game with persistent types.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GameSpec {
    pub players: Vec<String>,
    pub type_counts: Vec<usize>,
    pub prior: JointTypeBelief,
    pub states: Vec<StateDef>,
    pub terminals: Vec<Terminal>,
    /// Initial nonterminal state.
    pub root: usize,
    pub topological_order: Vec<usize>,
    pub kernel: Kernel,
}

/// A reason a [`GameSpec`] is malformed.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Shape(String),
    EmptyActions {
        state: usize,
        player: usize,
    },
    PriorNegative {
        joint_type: Vec<usize>,
        mass: f64,
    },
    PriorSum {
        sum: f64,
    },
    NotAPermutation,
    RootOutOfRange(usize),
    UnknownSuccessor {
        state: usize,
        to: Successor,
    },
    NegativeProbability {
        state: usize,
        joint_action: Vec<usize>,
        joint_type: Vec<usize>,
        prob: f64,
    },
    RowSum {
        state: usize,
        joint_action: Vec<usize>,
        joint_type: Vec<usize>,
        sum: f64,
    },
    /// A positive-probability transition that does not move strictly later in
    /// the topological order.
    OrderViolation {
        from: usize,
        to: usize,
        joint_action: Vec<usize>,
        joint_type: Vec<usize>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape(msg) => write!(f, "shape: {msg}"),
            Violation::EmptyActions { state, player } => {
                write!(f, "state {state}: player {player} has no actions")
            }
            Violation::PriorNegative { joint_type, mass } => {
                write!(f, "prior: negative mass {mass} on types {joint_type:?}")
            }
            Violation::PriorSum { sum } => write!(f, "prior: mass sums to {sum}"),
            Violation::NotAPermutation => {
                write!(f, "topological order is not a permutation of the states")
            }
            Violation::RootOutOfRange(r) => write!(f, "root {r} is not a state"),
            Violation::UnknownSuccessor { state, to } => {
                write!(f, "state {state}: successor {to:?} does not exist")
            }
            Violation::NegativeProbability {
                state,
                joint_action,
                joint_type,
                prob,
            } => write!(
                f,
                "state {state}, actions {joint_action:?}, types {joint_type:?}: negative probability {prob}"
            ),
            Violation::RowSum {
                state,
                joint_action,
                joint_type,
                sum,
            } => write!(
                f,
                "state {state}, actions {joint_action:?}, types {joint_type:?}: row sums to {sum}"
            ),
            Violation::OrderViolation {
                from,
                to,
                joint_action,
                joint_type,
            } => write!(
                f,
                "transition {from} -> {to} under actions {joint_action:?}, types {joint_type:?} \
                 does not follow the topological order"
            ),
        }
    }
}

impl GameSpec {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_terminals(&self) -> usize {
        self.terminals.len()
    }

    /// Number of slots in a dense successor array (nonterminals then terminals).
    pub fn num_successors(&self) -> usize {
        self.states.len() + self.terminals.len()
    }

    pub fn flat_successor(&self, to: Successor) -> usize {
        match to {
            Successor::State(s) => s,
            Successor::Terminal(k) => self.states.len() + k,
        }
    }

    pub fn successor_from_flat(&self, flat: usize) -> Successor {
        if flat < self.states.len() {
            Successor::State(flat)
        } else {
            Successor::Terminal(flat - self.states.len())
        }
    }

    pub fn joint_types(&self) -> JointIndex {
        JointIndex::new(&self.type_counts)
    }

    pub fn joint_actions(&self, state: usize) -> JointIndex {
        JointIndex::new(&self.states[state].action_counts)
    }

    pub fn action_count(&self, state: usize, player: usize) -> usize {
        self.states[state].action_counts[player]
    }

    pub fn is_perfect_information(&self) -> bool {
        self.type_counts.iter().all(|&t| t == 1)
    }

    pub fn terminal_payoff(&self, terminal: usize, player: usize, joint_type: usize) -> f64 {
        match &self.terminals[terminal].payoff {
            TerminalPayoff::Fixed(v) => v[player],
            TerminalPayoff::ByType(m) => m[joint_type][player],
        }
    }

    /// Smallest and largest terminal payoff for `player`.
    pub fn payoff_range(&self, player: usize) -> (f64, f64) {
        let jt = self.joint_types().size();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..self.terminals.len() {
            for t in 0..jt {
                let u = self.terminal_payoff(k, player, t);
                lo = lo.min(u);
                hi = hi.max(u);
            }
        }
        (lo, hi)
    }

    /// Appends the successor distribution for one joint action and joint type
    /// vector to `out`. Zero-probability outcomes may be omitted.
    pub fn transition_into(
        &self,
        state: usize,
        actions: &[usize],
        types: &[usize],
        out: &mut Vec<Outcome>,
    ) {
        match &self.kernel {
            Kernel::Table(t) => {
                let ja = self.joint_actions(state).encode(actions);
                let jt = self.joint_types().encode(types);
                out.extend_from_slice(&t.rows[state][ja][jt]);
            }
            Kernel::Hostility(h) => h.transition_into(state, actions, types, out),
        }
    }

    pub fn transition(&self, state: usize, actions: &[usize], types: &[usize]) -> Vec<Outcome> {
        let mut out = Vec::new();
        self.transition_into(state, actions, types, &mut out);
        out
    }

    /// Position of every state in the topological order, or `None` if the
    /// order is not a permutation.
    pub fn order_positions(&self) -> Option<Vec<usize>> {
        let n = self.states.len();
        if self.topological_order.len() != n {
            return None;
        }
        let mut pos = vec![usize::MAX; n];
        for (i, &s) in self.topological_order.iter().enumerate() {
            if s >= n || pos[s] != usize::MAX {
                return None;
            }
            pos[s] = i;
        }
        Some(pos)
    }

    /// Checks every structural invariant and returns the violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.num_players();
        if self.type_counts.len() != n {
            out.push(Violation::Shape(format!(
                "{} type spaces for {n} players",
                self.type_counts.len()
            )));
            return out;
        }
        if self.type_counts.contains(&0) {
            out.push(Violation::Shape("empty type space".into()));
            return out;
        }
        let types = self.joint_types();
        if self.prior.type_counts() != self.type_counts.as_slice()
            || self.prior.mass().len() != types.size()
        {
            out.push(Violation::Shape("prior does not match type spaces".into()));
        } else {
            let mut sum = 0.0;
            for (t, &m) in self.prior.mass().iter().enumerate() {
                if m < 0.0 || !m.is_finite() {
                    out.push(Violation::PriorNegative {
                        joint_type: types.decode(t),
                        mass: m,
                    });
                }
                sum += m;
            }
            if (sum - 1.0).abs() > BELIEF_TOLERANCE {
                out.push(Violation::PriorSum { sum });
            }
        }
        for (k, term) in self.terminals.iter().enumerate() {
            let ok = match &term.payoff {
                TerminalPayoff::Fixed(v) => v.len() == n,
                TerminalPayoff::ByType(m) => {
                    m.len() == types.size() && m.iter().all(|r| r.len() == n)
                }
            };
            if !ok {
                out.push(Violation::Shape(format!("terminal {k} payoff shape")));
            }
        }
        let mut shapes_ok = true;
        for (s, def) in self.states.iter().enumerate() {
            if def.action_counts.len() != n {
                out.push(Violation::Shape(format!(
                    "state {s} lists {} action sets for {n} players",
                    def.action_counts.len()
                )));
                shapes_ok = false;
                continue;
            }
            for (p, &c) in def.action_counts.iter().enumerate() {
                if c == 0 {
                    out.push(Violation::EmptyActions {
                        state: s,
                        player: p,
                    });
                    shapes_ok = false;
                }
            }
        }
        if self.root >= self.states.len() {
            out.push(Violation::RootOutOfRange(self.root));
        }
        let pos = self.order_positions();
        if pos.is_none() {
            out.push(Violation::NotAPermutation);
        }
        if let Kernel::Table(t) = &self.kernel {
            if t.rows.len() != self.states.len()
                || t.rows.iter().enumerate().any(|(s, r)| {
                    r.len() != self.joint_actions(s).size()
                        || r.iter().any(|c| c.len() != types.size())
                })
            {
                out.push(Violation::Shape("transition table shape".into()));
                shapes_ok = false;
            }
        }
        if !shapes_ok {
            return out;
        }

        let mut buf = Vec::new();
        let mut acts = vec![0; n];
        let mut tys = vec![0; n];
        for s in 0..self.states.len() {
            let ja_index = self.joint_actions(s);
            for ja in 0..ja_index.size() {
                ja_index.decode_into(ja, &mut acts);
                for jt in 0..types.size() {
                    types.decode_into(jt, &mut tys);
                    buf.clear();
                    self.transition_into(s, &acts, &tys, &mut buf);
                    let mut sum = 0.0;
                    for o in &buf {
                        let known = match o.to {
                            Successor::State(x) => x < self.states.len(),
                            Successor::Terminal(x) => x < self.terminals.len(),
                        };
                        if !known {
                            out.push(Violation::UnknownSuccessor { state: s, to: o.to });
                            continue;
                        }
                        if o.prob < 0.0 || !o.prob.is_finite() {
                            out.push(Violation::NegativeProbability {
                                state: s,
                                joint_action: acts.clone(),
                                joint_type: tys.clone(),
                                prob: o.prob,
                            });
                        }
                        sum += o.prob;
                        if let (Successor::State(to), Some(pos)) = (o.to, pos.as_ref()) {
                            if o.prob > 0.0 && pos[to] <= pos[s] {
                                out.push(Violation::OrderViolation {
                                    from: s,
                                    to,
                                    joint_action: acts.clone(),
                                    joint_type: tys.clone(),
                                });
                            }
                        }
                    }
                    if (sum - 1.0).abs() > ROW_TOLERANCE {
                        out.push(Violation::RowSum {
                            state: s,
                            joint_action: acts.clone(),
                            joint_type: tys.clone(),
                            sum,
                        });
                    }
                }
            }
        }
        out
    }

    /// Returns `Ok(())` when [`GameSpec::validate`] finds nothing.
    pub fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    /// Rescales table rows and the prior so they sum to exactly one. Rows
    /// further than [`ROW_TOLERANCE`] from one are left for `validate` to
    /// report.
    pub fn renormalize(&mut self) {
        self.prior.renormalize_within(ROW_TOLERANCE);
        if let Kernel::Table(t) = &mut self.kernel {
            for row in t.rows.iter_mut().flatten().flatten() {
                let sum: f64 = row.iter().map(|o| o.prob).sum();
                if sum > 0.0 && (sum - 1.0).abs() <= ROW_TOLERANCE && sum != 1.0 {
                    for o in row.iter_mut() {
                        o.prob /= sum;
                    }
                }
            }
        }
    }

    /// Longest number of nonterminal-to-nonterminal transitions that can
    /// still happen from each state.
    pub fn remaining_depths(&self) -> Vec<usize> {
        let n = self.num_players();
        let types = self.joint_types();
        let mut depth = vec![0usize; self.states.len()];
        let mut acts = vec![0; n];
        let mut tys = vec![0; n];
        let mut buf = Vec::new();
        for &s in self.topological_order.iter().rev() {
            let ja_index = self.joint_actions(s);
            let mut best = 0;
            for ja in 0..ja_index.size() {
                ja_index.decode_into(ja, &mut acts);
                for jt in 0..types.size() {
                    types.decode_into(jt, &mut tys);
                    buf.clear();
                    self.transition_into(s, &acts, &tys, &mut buf);
                    for o in &buf {
                        if let Successor::State(to) = o.to {
                            if o.prob > 0.0 {
                                best = best.max(depth[to] + 1);
                            }
                        }
                    }
                }
            }
            depth[s] = best;
        }
        depth
    }
}
