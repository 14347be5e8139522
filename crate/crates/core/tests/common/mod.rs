//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use dagfp::game::{GameSpec, JointTypeBelief, StrategyProfile, Successor, TerminalPayoff};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sample mean and standard error per player.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(players: usize) -> Self {
        Self {
            n: 0.0,
            mean: vec![0.0; players],
            m2: vec![0.0; players],
        }
    }

    fn add(&mut self, x: &[f64]) {
        self.n += 1.0;
        for i in 0..x.len() {
            let d = x[i] - self.mean[i];
            self.mean[i] += d / self.n;
            self.m2[i] += d * (x[i] - self.mean[i]);
        }
    }

    fn finish(self) -> Estimate {
        let n = self.n;
        Estimate {
            stderr: self.m2.iter().map(|m| (m / (n - 1.0) / n).sqrt()).collect(),
            mean: self.mean,
        }
    }
}

fn payoff_row(spec: &GameSpec, terminal: usize, jt: usize) -> Vec<f64> {
    match &spec.terminals[terminal].payoff {
        TerminalPayoff::Fixed(v) => v.clone(),
        TerminalPayoff::ByType(rows) => rows[jt].clone(),
    }
}

/// Per (state, player, type) samplers for the profile.
struct Sampler {
    actions: Vec<Vec<Vec<WeightedIndex<f64>>>>,
}

impl Sampler {
    fn new(profile: &StrategyProfile) -> Self {
        Self {
            actions: profile
                .stages
                .iter()
                .map(|st| {
                    st.dists
                        .iter()
                        .map(|by_type| by_type.iter().map(|d| WeightedIndex::new(d).unwrap()).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

/// Draws one step from `state`: returns where play lands.
fn step(
    spec: &GameSpec,
    sampler: &Sampler,
    state: usize,
    types: &[usize],
    acts: &mut [usize],
    rng: &mut ChaCha8Rng,
) -> Successor {
    for (i, a) in acts.iter_mut().enumerate() {
        *a = sampler.actions[state][i][types[i]].sample(rng);
    }
    let outs = spec.transition(state, acts, types);
    let mut u: f64 = rng.gen::<f64>() * outs.iter().map(|o| o.prob).sum::<f64>();
    for o in &outs {
        if u < o.prob {
            return o.to;
        }
        u -= o.prob;
    }
    outs.last().expect("some outcome").to
}

/// Rollouts for state-value mode: every state redraws the joint type from
/// the belief stored for it.
pub fn rollout_state_values(
    spec: &GameSpec,
    profile: &StrategyProfile,
    beliefs: &[JointTypeBelief],
    rollouts: usize,
    seed: u64,
) -> Estimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = Sampler::new(profile);
    let types = spec.joint_types();
    let draws: Vec<WeightedIndex<f64>> = beliefs.iter().map(|b| WeightedIndex::new(b.mass()).unwrap()).collect();
    let mut acc = Welford::new(spec.num_players());
    let mut acts = vec![0; spec.num_players()];
    for _ in 0..rollouts {
        let mut s = spec.root;
        loop {
            let jt = draws[s].sample(&mut rng);
            let tys = types.decode(jt);
            match step(spec, &sampler, s, &tys, &mut acts, &mut rng) {
                Successor::State(next) => s = next,
                Successor::Terminal(k) => {
                    acc.add(&payoff_row(spec, k, jt));
                    break;
                }
            }
        }
    }
    acc.finish()
}

/// Rollouts for type-dependent values: the joint type is drawn once from
/// the prior and kept. Returns the overall estimate and one per joint type.
pub fn rollout_type_values(
    spec: &GameSpec,
    profile: &StrategyProfile,
    rollouts: usize,
    seed: u64,
) -> (Estimate, Vec<Estimate>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = Sampler::new(profile);
    let types = spec.joint_types();
    let prior = WeightedIndex::new(spec.prior.mass()).unwrap();
    let n = spec.num_players();
    let mut all = Welford::new(n);
    let mut per: Vec<Welford> = (0..types.size()).map(|_| Welford::new(n)).collect();
    let mut acts = vec![0; n];
    for _ in 0..rollouts {
        let jt = prior.sample(&mut rng);
        let tys = types.decode(jt);
        let mut s = spec.root;
        loop {
            match step(spec, &sampler, s, &tys, &mut acts, &mut rng) {
                Successor::State(next) => s = next,
                Successor::Terminal(k) => {
                    let row = payoff_row(spec, k, jt);
                    all.add(&row);
                    per[jt].add(&row);
                    break;
                }
            }
        }
    }
    (all.finish(), per.into_iter().map(Welford::finish).collect())
}

/// Reach mass `[state][joint type]` summed over every individual path and
/// joint action sequence.
pub fn path_reach(spec: &GameSpec, profile: &StrategyProfile) -> Vec<Vec<f64>> {
    let types = spec.joint_types();
    let mut reach = vec![vec![0.0; types.size()]; spec.num_states()];
    fn walk(
        spec: &GameSpec,
        profile: &StrategyProfile,
        state: usize,
        tys: &[usize],
        jt: usize,
        p: f64,
        reach: &mut [Vec<f64>],
    ) {
        reach[state][jt] += p;
        let ja = spec.joint_actions(state);
        for a in 0..ja.size() {
            let acts = ja.decode(a);
            let q: f64 = acts
                .iter()
                .enumerate()
                .map(|(i, &x)| profile.get(state, i, tys[i])[x])
                .product();
            if q == 0.0 {
                continue;
            }
            for o in spec.transition(state, &acts, tys) {
                if let Successor::State(next) = o.to {
                    if o.prob > 0.0 {
                        walk(spec, profile, next, tys, jt, p * q * o.prob, reach);
                    }
                }
            }
        }
    }
    for jt in 0..types.size() {
        let w = spec.prior.mass()[jt];
        if w > 0.0 {
            walk(spec, profile, spec.root, &types.decode(jt), jt, w, &mut reach);
        }
    }
    reach
}

/// Copies each player's type-0 mixture to all of its types.
pub fn type_independent(profile: &StrategyProfile) -> StrategyProfile {
    let mut p = profile.clone();
    for st in &mut p.stages {
        for by_type in &mut st.dists {
            let first = by_type[0].clone();
            by_type.iter_mut().for_each(|d| *d = first.clone());
        }
    }
    p
}

/// Smallest nonzero terminal payoff magnitude.
pub fn min_payoff_magnitude(spec: &GameSpec) -> f64 {
    let jt = spec.joint_types().size();
    (0..spec.num_terminals())
        .flat_map(|k| (0..jt).flat_map(move |t| payoff_row(spec, k, t)))
        .map(f64::abs)
        .filter(|&x| x > 0.0)
        .fold(f64::INFINITY, f64::min)
}
