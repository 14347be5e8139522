use super::{GameSpec, Outcome, StageStrategy, StrategyProfile};

/// Calls `f(actions, prob)` for every joint action with positive probability
/// under independent mixtures `dists[player]`.
pub fn for_each_joint_action<F: FnMut(&[usize], f64)>(dists: &[&[f64]], mut f: F) {
    let n = dists.len();
    if n == 0 {
        f(&[], 1.0);
        return;
    }
    let mut digits = vec![0usize; n];
    let mut probs = vec![1.0f64; n + 1];
    // Iterative depth-first walk that skips zero-probability actions.
    let mut level = 0usize;
    digits[0] = usize::MAX;
    loop {
        let next = digits[level].wrapping_add(1);
        let d = dists[level];
        let mut a = next;
        while a < d.len() && d[a] <= 0.0 {
            a += 1;
        }
        if a >= d.len() {
            if level == 0 {
                return;
            }
            level -= 1;
            continue;
        }
        digits[level] = a;
        probs[level + 1] = probs[level] * d[a];
        if level + 1 == n {
            f(&digits, probs[n]);
        } else {
            level += 1;
            digits[level] = usize::MAX;
        }
    }
}

/// Successor distribution of one state for every joint type vector, with the
/// joint action marginalized out under a stage strategy.
#[derive(Clone, Debug, PartialEq)]
pub struct StateFlow {
    /// Indexed by joint type; each entry lists `(flat successor, prob)` sorted
    /// by successor.
    pub by_type: Vec<Vec<(usize, f64)>>,
}

impl StateFlow {
    pub fn build(spec: &GameSpec, state: usize, stage: &StageStrategy) -> Self {
        let types = spec.joint_types();
        let n = spec.num_players();
        let mut dense = vec![0.0; spec.num_successors()];
        let mut tys = vec![0; n];
        let mut buf: Vec<Outcome> = Vec::new();
        let by_type = (0..types.size())
            .map(|jt| {
                types.decode_into(jt, &mut tys);
                let dists: Vec<&[f64]> = (0..n).map(|p| stage.get(p, tys[p])).collect();
                dense.iter_mut().for_each(|x| *x = 0.0);
                for_each_joint_action(&dists, |acts, q| {
                    buf.clear();
                    spec.transition_into(state, acts, &tys, &mut buf);
                    for o in &buf {
                        dense[spec.flat_successor(o.to)] += q * o.prob;
                    }
                });
                dense
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(k, &p)| (k, p))
                    .collect()
            })
            .collect();
        Self { by_type }
    }

    pub fn outcomes(&self, joint_type: usize) -> &[(usize, f64)] {
        &self.by_type[joint_type]
    }
}

/// [`StateFlow`] for every nonterminal state of a profile.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileFlow {
    pub states: Vec<StateFlow>,
}

impl ProfileFlow {
    pub fn build(spec: &GameSpec, profile: &StrategyProfile) -> Self {
        Self {
            states: (0..spec.num_states())
                .map(|s| StateFlow::build(spec, s, &profile.stages[s]))
                .collect(),
        }
    }

    pub fn outcomes(&self, state: usize, joint_type: usize) -> &[(usize, f64)] {
        self.states[state].outcomes(joint_type)
    }
}
