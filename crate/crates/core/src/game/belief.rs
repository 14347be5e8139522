use serde::{Deserialize, Serialize};

use super::{JointIndex, BELIEF_TOLERANCE};
use crate::error::{Error, Result};

/// Probability mass over joint type vectors, stored densely in lexicographic
/// order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JointTypeBelief {
    type_counts: Vec<usize>,
    mass: Vec<f64>,
}

impl JointTypeBelief {
    pub fn from_mass(type_counts: &[usize], mass: Vec<f64>) -> Result<Self> {
        let size: usize = type_counts.iter().product();
        if mass.len() != size {
            return Err(Error::Format(format!(
                "belief has {} entries, expected {size}",
                mass.len()
            )));
        }
        Ok(Self {
            type_counts: type_counts.to_vec(),
            mass,
        })
    }

    pub fn uniform(type_counts: &[usize]) -> Self {
        let size: usize = type_counts.iter().product();
        Self {
            type_counts: type_counts.to_vec(),
            mass: vec![1.0 / size as f64; size],
        }
    }

    pub fn point(type_counts: &[usize], types: &[usize]) -> Self {
        let index = JointIndex::new(type_counts);
        let mut mass = vec![0.0; index.size()];
        mass[index.encode(types)] = 1.0;
        Self {
            type_counts: type_counts.to_vec(),
            mass,
        }
    }

    /// Joint mass equal to the product of per-player marginals.
    pub fn product(marginals: &[Vec<f64>]) -> Self {
        let type_counts: Vec<usize> = marginals.iter().map(Vec::len).collect();
        let index = JointIndex::new(&type_counts);
        let mut digits = vec![0; type_counts.len()];
        let mass = (0..index.size())
            .map(|t| {
                index.decode_into(t, &mut digits);
                digits
                    .iter()
                    .zip(marginals)
                    .map(|(&d, m)| m[d])
                    .product()
            })
            .collect();
        Self { type_counts, mass }
    }

    /// Normalizes nonnegative weights; `None` when they sum to zero.
    pub fn normalized(type_counts: &[usize], weights: &[f64]) -> Option<Self> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return None;
        }
        Some(Self {
            type_counts: type_counts.to_vec(),
            mass: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn type_counts(&self) -> &[usize] {
        &self.type_counts
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn index(&self) -> JointIndex {
        JointIndex::new(&self.type_counts)
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Marginal distribution over `player`'s types.
    pub fn marginal(&self, player: usize) -> Result<Vec<f64>> {
        if player >= self.type_counts.len() {
            return Err(Error::UnknownPlayer(player));
        }
        let index = self.index();
        let mut out = vec![0.0; self.type_counts[player]];
        for (t, &m) in self.mass.iter().enumerate() {
            out[index.digit(t, player)] += m;
        }
        Ok(out)
    }

    /// Dense weights over joint type vectors conditioned on `player` having
    /// `own_type`; `None` when that type has zero mass.
    pub fn conditional(&self, player: usize, own_type: usize) -> Option<Vec<f64>> {
        let index = self.index();
        let mut out: Vec<f64> = self
            .mass
            .iter()
            .enumerate()
            .map(|(t, &m)| if index.digit(t, player) == own_type { m } else { 0.0 })
            .collect();
        let total: f64 = out.iter().sum();
        if total <= 0.0 {
            return None;
        }
        out.iter_mut().for_each(|x| *x /= total);
        Some(out)
    }

    pub fn is_valid(&self) -> bool {
        let sum: f64 = self.mass.iter().sum();
        self.mass.iter().all(|&m| m >= 0.0 && m.is_finite())
            && (sum - 1.0).abs() <= BELIEF_TOLERANCE
    }

    pub(crate) fn renormalize_within(&mut self, tol: f64) {
        let sum: f64 = self.mass.iter().sum();
        if sum > 0.0 && (sum - 1.0).abs() <= tol && sum != 1.0 {
            self.mass.iter_mut().for_each(|m| *m /= sum);
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
