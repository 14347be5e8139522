//! Small random games and profiles for tests, oracles and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::game::{
    GameSpec, JointTypeBelief, Kernel, Outcome, StageStrategy, StateDef, StrategyProfile,
    Successor, TableKernel, Terminal, TerminalPayoff,
};

/// Shape of a random table game.
#[derive(Clone, Debug)]
pub struct ToyConfig {
    pub type_counts: Vec<usize>,
    pub num_states: usize,
    pub max_actions: usize,
    /// Nonterminal successors each state may reach.
    pub max_successors: usize,
    pub num_terminals: usize,
    /// Whether transitions depend on the joint type vector.
    pub type_dependent: bool,
    /// Whether terminal payoffs depend on the joint type vector.
    pub typed_payoffs: bool,
    pub uniform_prior: bool,
}

impl ToyConfig {
    pub fn new(type_counts: &[usize], num_states: usize) -> Self {
        Self {
            type_counts: type_counts.to_vec(),
            num_states,
            max_actions: 3,
            max_successors: 2,
            num_terminals: 3,
            type_dependent: true,
            typed_payoffs: false,
            uniform_prior: true,
        }
    }

    pub fn type_independent(mut self) -> Self {
        self.type_dependent = false;
        self
    }

    pub fn max_actions(mut self, m: usize) -> Self {
        self.max_actions = m;
        self
    }

    pub fn max_successors(mut self, m: usize) -> Self {
        self.max_successors = m;
        self
    }

    pub fn typed_payoffs(mut self) -> Self {
        self.typed_payoffs = true;
        self
    }

    pub fn random_prior(mut self) -> Self {
        self.uniform_prior = false;
        self
    }
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize, sparsity: f64) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen_bool(sparsity) {
                    0.0
                } else {
                    rng.gen_range(0.05..1.0)
                }
            })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            return w.into_iter().map(|x| x / s).collect();
        }
    }
}

/// A random DAG game with an explicit transition table. States are in
/// topological order `0..num_states` and state 0 is the root.
pub fn random_table_game(seed: u64, cfg: &ToyConfig) -> GameSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = cfg.type_counts.len();
    let jt_size: usize = cfg.type_counts.iter().product();
    let prior = if cfg.uniform_prior {
        JointTypeBelief::uniform(&cfg.type_counts)
    } else {
        let m = random_simplex(&mut rng, jt_size, 0.0);
        JointTypeBelief::from_mass(&cfg.type_counts, m).expect("sized")
    };
    let states: Vec<StateDef> = (0..cfg.num_states)
        .map(|s| StateDef {
            name: format!("S{s}"),
            action_counts: (0..n).map(|_| rng.gen_range(1..=cfg.max_actions.max(1))).collect(),
        })
        .collect();
    let terminals = (0..cfg.num_terminals.max(1))
        .map(|k| {
            let payoff_row = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                (0..n).map(|_| rng.gen_range(-10i32..=10) as f64).collect()
            };
            let payoff = if cfg.typed_payoffs {
                TerminalPayoff::ByType((0..jt_size).map(|_| payoff_row(&mut rng)).collect())
            } else {
                TerminalPayoff::Fixed(payoff_row(&mut rng))
            };
            Terminal {
                name: format!("T{k}"),
                payoff,
            }
        })
        .collect::<Vec<_>>();
    let num_terms = terminals.len();
    let rows = (0..cfg.num_states)
        .map(|s| {
            let mut later: Vec<usize> = (s + 1..cfg.num_states).collect();
            later.shuffle(&mut rng);
            later.truncate(cfg.max_successors);
            let targets: Vec<Successor> = later
                .into_iter()
                .map(Successor::State)
                .chain((0..num_terms).map(Successor::Terminal))
                .collect();
            let ja_size: usize = states[s].action_counts.iter().product();
            let row = |rng: &mut ChaCha8Rng| -> Vec<Outcome> {
                loop {
                    let p = random_simplex(rng, targets.len(), 0.35);
                    let out: Vec<Outcome> = targets
                        .iter()
                        .zip(&p)
                        .filter(|(_, &q)| q > 0.0)
                        .map(|(&to, &prob)| Outcome { to, prob })
                        .collect();
                    if out.iter().any(|o| matches!(o.to, Successor::Terminal(_))) {
                        return out;
                    }
                }
            };
            (0..ja_size)
                .map(|_| {
                    if cfg.type_dependent {
                        (0..jt_size).map(|_| row(&mut rng)).collect()
                    } else {
                        vec![row(&mut rng); jt_size]
                    }
                })
                .collect()
        })
        .collect();
    GameSpec {
        players: (0..n).map(|i| format!("P{}", i + 1)).collect(),
        type_counts: cfg.type_counts.clone(),
        prior,
        states,
        terminals,
        root: 0,
        topological_order: (0..cfg.num_states).collect(),
        kernel: Kernel::Table(TableKernel { rows }),
    }
}

/// A random mixed profile with occasional zero entries.
pub fn random_profile(spec: &GameSpec, seed: u64) -> StrategyProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StrategyProfile {
        stages: spec
            .states
            .iter()
            .map(|st| StageStrategy {
                dists: st
                    .action_counts
                    .iter()
                    .zip(&spec.type_counts)
                    .map(|(&m, &t)| (0..t).map(|_| random_simplex(&mut rng, m, 0.25)).collect())
                    .collect(),
            })
            .collect(),
    }
}

/// A random pure profile.
pub fn random_pure_profile(spec: &GameSpec, seed: u64) -> StrategyProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prof = StrategyProfile::uniform(spec);
    for d in prof.stages.iter_mut().flat_map(|s| s.dists.iter_mut()).flatten() {
        let a = rng.gen_range(0..d.len());
        d.iter_mut().enumerate().for_each(|(k, x)| *x = if k == a { 1.0 } else { 0.0 });
    }
    prof
}

/// A uniformly chosen linear extension of the game's transition DAG.
pub fn random_topological_order(spec: &GameSpec, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.num_states();
    let mut edges = vec![Vec::new(); k];
    let mut indegree = vec![0usize; k];
    let types = spec.joint_types();
    let mut buf = Vec::new();
    for s in 0..k {
        let ja = spec.joint_actions(s);
        let mut seen = vec![false; k];
        for a in 0..ja.size() {
            let acts = ja.decode(a);
            for t in 0..types.size() {
                buf.clear();
                spec.transition_into(s, &acts, &types.decode(t), &mut buf);
                for o in &buf {
                    if let Successor::State(to) = o.to {
                        if o.prob > 0.0 && !seen[to] {
                            seen[to] = true;
                            edges[s].push(to);
                            indegree[to] += 1;
                        }
                    }
                }
            }
        }
    }
    let mut ready: Vec<usize> = (0..k).filter(|&s| indegree[s] == 0).collect();
    let mut order = Vec::with_capacity(k);
    while !ready.is_empty() {
        let pick = ready.swap_remove(rng.gen_range(0..ready.len()));
        order.push(pick);
        for &to in &edges[pick] {
            indegree[to] -= 1;
            if indegree[to] == 0 {
                ready.push(to);
            }
        }
    }
    order
}
