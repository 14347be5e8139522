use serde::{Deserialize, Serialize};

use super::{GameSpec, BELIEF_TOLERANCE};
use crate::error::{Error, Result};

/// Mixed strategies at one state, indexed `[player][type][action]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStrategy {
    pub dists: Vec<Vec<Vec<f64>>>,
}

impl StageStrategy {
    pub fn uniform(action_counts: &[usize], type_counts: &[usize]) -> Self {
        let dists = action_counts
            .iter()
            .zip(type_counts)
            .map(|(&m, &t)| vec![vec![1.0 / m as f64; m]; t])
            .collect();
        Self { dists }
    }

    pub fn get(&self, player: usize, ty: usize) -> &[f64] {
        &self.dists[player][ty]
    }

    pub fn is_valid(&self) -> bool {
        self.dists.iter().flatten().all(|d| {
            let s: f64 = d.iter().sum();
            d.iter().all(|&p| p >= 0.0 && p.is_finite()) && (s - 1.0).abs() <= BELIEF_TOLERANCE
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.dists
            .iter()
            .flatten()
            .zip(other.dists.iter().flatten())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Whether every player's mixture is the same for all of its types.
    pub fn is_type_independent(&self) -> bool {
        self.dists
            .iter()
            .all(|by_type| by_type.windows(2).all(|w| w[0] == w[1]))
    }
}

/// A behavior strategy for every (state, player, type).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub stages: Vec<StageStrategy>,
}

impl StrategyProfile {
    pub fn uniform(spec: &GameSpec) -> Self {
        Self {
            stages: spec
                .states
                .iter()
                .map(|s| StageStrategy::uniform(&s.action_counts, &spec.type_counts))
                .collect(),
        }
    }

    pub fn get(&self, state: usize, player: usize, ty: usize) -> &[f64] {
        &self.stages[state].dists[player][ty]
    }

    pub fn is_valid(&self) -> bool {
        self.stages.iter().all(StageStrategy::is_valid)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.stages
            .iter()
            .zip(&other.stages)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Checks that the profile has the shape `spec` expects.
    pub fn check_shape(&self, spec: &GameSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if self.stages.len() != spec.num_states() {
            return bad(format!(
                "profile covers {} states, game has {}",
                self.stages.len(),
                spec.num_states()
            ));
        }
        for (s, stage) in self.stages.iter().enumerate() {
            if stage.dists.len() != spec.num_players() {
                return bad(format!("state {s}: wrong number of players"));
            }
            for (p, by_type) in stage.dists.iter().enumerate() {
                if by_type.len() != spec.type_counts[p] {
                    return bad(format!("state {s}, player {p}: wrong number of types"));
                }
                if by_type
                    .iter()
                    .any(|d| d.len() != spec.action_count(s, p))
                {
                    return bad(format!("state {s}, player {p}: wrong number of actions"));
                }
            }
        }
        Ok(())
    }
}
