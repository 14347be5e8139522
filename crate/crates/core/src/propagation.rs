//! Bayes-rule propagation of joint type beliefs through the state DAG.
//!
//! Reach mass `w_j(t)` is the probability that the types are `t` and state
//! `j` is reached. The root carries the prior; every other state collects
//! `w_p(t) * P(p -> j | t)` from its predecessors. Beliefs are the normalized
//! reach mass. A state nobody reaches gets the prior and is flagged.

use crate::game::{GameSpec, JointTypeBelief, ProfileFlow, StateFlow, StrategyProfile};

/// Incremental forward propagation in topological order.
///
/// A state's belief only depends on the states already pushed, so solvers
/// can interleave stage solves with pushes.
#[derive(Clone, Debug)]
pub struct Propagator<'a> {
    spec: &'a GameSpec,
    reach: Vec<Vec<f64>>,
    terminal_mass: Vec<f64>,
    pushed: Vec<bool>,
}

impl<'a> Propagator<'a> {
    pub fn new(spec: &'a GameSpec) -> Self {
        let jt = spec.joint_types().size();
        let mut reach = vec![vec![0.0; jt]; spec.num_states()];
        reach[spec.root] = spec.prior.mass().to_vec();
        Self {
            spec,
            reach,
            terminal_mass: vec![0.0; spec.num_terminals()],
            pushed: vec![false; spec.num_states()],
        }
    }

    /// Unnormalized reach mass collected so far at `state`.
    pub fn reach(&self, state: usize) -> &[f64] {
        &self.reach[state]
    }

    /// Belief at `state` and whether the state has zero reach.
    pub fn belief(&self, state: usize) -> (JointTypeBelief, bool) {
        match JointTypeBelief::normalized(&self.spec.type_counts, &self.reach[state]) {
            Some(b) => (b, false),
            None => (self.spec.prior.clone(), true),
        }
    }

    /// Sends the reach mass of `state` to its successors.
    pub fn push(&mut self, state: usize, flow: &StateFlow) {
        debug_assert!(!self.pushed[state], "state {state} pushed twice");
        self.pushed[state] = true;
        let k = self.spec.num_states();
        let here = self.reach[state].clone();
        for (jt, &w) in here.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for &(to, p) in flow.outcomes(jt) {
                if to < k {
                    self.reach[to][jt] += w * p;
                } else {
                    self.terminal_mass[to - k] += w * p;
                }
            }
        }
    }

    pub fn terminal_mass(&self) -> &[f64] {
        &self.terminal_mass
    }

    /// Terminal mass plus the mass sitting at states not yet pushed.
    pub fn frontier_mass(&self) -> f64 {
        let open: f64 = self
            .reach
            .iter()
            .zip(&self.pushed)
            .filter(|(_, &p)| !p)
            .map(|(r, _)| r.iter().sum::<f64>())
            .sum();
        open + self.terminal_mass.iter().sum::<f64>()
    }
}

/// Output of a full propagation pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagation {
    /// `[state][joint type]`.
    pub reach: Vec<Vec<f64>>,
    pub beliefs: Vec<JointTypeBelief>,
    pub zero_reach: Vec<bool>,
    pub terminal_mass: Vec<f64>,
}

impl Propagation {
    pub fn total_reach(&self, state: usize) -> f64 {
        self.reach[state].iter().sum()
    }
}

/// Propagates beliefs through every state under `profile`.
pub fn propagate(spec: &GameSpec, profile: &StrategyProfile) -> Propagation {
    let flow = ProfileFlow::build(spec, profile);
    propagate_flow(spec, &flow)
}

pub fn propagate_flow(spec: &GameSpec, flow: &ProfileFlow) -> Propagation {
    let mut prop = Propagator::new(spec);
    let mut beliefs = vec![spec.prior.clone(); spec.num_states()];
    let mut zero_reach = vec![false; spec.num_states()];
    for &s in &spec.topological_order {
        let (b, z) = prop.belief(s);
        beliefs[s] = b;
        zero_reach[s] = z;
        prop.push(s, &flow.states[s]);
    }
    Propagation {
        reach: prop.reach,
        beliefs,
        zero_reach,
        terminal_mass: prop.terminal_mass,
    }
}

/// Beliefs consistent with an earlier profile, for solvers that solve every
/// stage at once.
pub fn stale_beliefs(spec: &GameSpec, previous: &StrategyProfile) -> Vec<JointTypeBelief> {
    propagate(spec, previous).beliefs
}
