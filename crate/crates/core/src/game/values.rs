use serde::{Deserialize, Serialize};

use super::{GameSpec, Successor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueMode {
    StateValues,
    TypeDependent,
}

/// Continuation values for nonterminal states. Terminal values are always
/// read from the game's payoffs.
///
/// Layout is `[player][state][joint type]`, with a single joint-type slot in
/// state-value mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValueTable {
    mode: ValueMode,
    num_players: usize,
    num_states: usize,
    num_joint_types: usize,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn zeros(spec: &GameSpec, mode: ValueMode) -> Self {
        let num_joint_types = match mode {
            ValueMode::StateValues => 1,
            ValueMode::TypeDependent => spec.joint_types().size(),
        };
        Self {
            mode,
            num_players: spec.num_players(),
            num_states: spec.num_states(),
            num_joint_types,
            values: vec![0.0; spec.num_players() * spec.num_states() * num_joint_types],
        }
    }

    pub fn mode(&self) -> ValueMode {
        self.mode
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_joint_types(&self) -> usize {
        self.num_joint_types
    }

    /// Number of stored nonterminal entries.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    fn slot(&self, player: usize, state: usize, joint_type: usize) -> usize {
        let jt = match self.mode {
            ValueMode::StateValues => 0,
            ValueMode::TypeDependent => joint_type,
        };
        (player * self.num_states + state) * self.num_joint_types + jt
    }

    /// Value of a nonterminal state; `joint_type` is ignored in state-value mode.
    pub fn get(&self, player: usize, state: usize, joint_type: usize) -> f64 {
        self.values[self.slot(player, state, joint_type)]
    }

    pub fn set(&mut self, player: usize, state: usize, joint_type: usize, v: f64) {
        let k = self.slot(player, state, joint_type);
        self.values[k] = v;
    }

    /// Value of landing on `to`: the terminal payoff or the stored value.
    pub fn continuation(&self, spec: &GameSpec, player: usize, to: Successor, joint_type: usize) -> f64 {
        match to {
            Successor::Terminal(k) => spec.terminal_payoff(k, player, joint_type),
            Successor::State(s) => self.get(player, s, joint_type),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.mode != other.mode || self.values.len() != other.values.len() {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_shape(&self, spec: &GameSpec) -> Result<()> {
        let jt = match self.mode {
            ValueMode::StateValues => 1,
            ValueMode::TypeDependent => spec.joint_types().size(),
        };
        if self.num_players != spec.num_players()
            || self.num_states != spec.num_states()
            || self.num_joint_types != jt
            || self.values.len() != self.num_players * self.num_states * jt
        {
            return Err(Error::Format("value table does not match the game".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("value table has non-finite entries".into()));
        }
        Ok(())
    }
}
