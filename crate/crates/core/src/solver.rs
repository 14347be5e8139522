//! Outer loops that alternate stage solving with value updates.
//!
//! * `st-pifp`: states are solved one at a time in topological order, each
//!   with the belief propagated from the strategies just computed upstream.
//! * `st-pifp-tdv`: the same sweep with values kept per joint type vector.
//! * `parallel-pifp-ii`: every stage is solved at once with beliefs taken
//!   from the previous iteration's profile.
//! * `parallel-pifp`: every stage is solved at once; perfect information only.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    ConvergenceTrace, GameSpec, JointTypeBelief, StageStrategy, StateFlow, StrategyProfile, TraceRow,
    ValueMode, ValueTable,
};
use crate::propagation::{propagate, Propagator};
use crate::stage::{build_stage, fictitious_play};
use crate::value::{evaluate_strategies, evaluate_strategies_tdv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    StPifp,
    StPifpTdv,
    ParallelPifpIi,
    ParallelPifp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::StPifp,
        Algorithm::StPifpTdv,
        Algorithm::ParallelPifpIi,
        Algorithm::ParallelPifp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::StPifp => "st-pifp",
            Algorithm::StPifpTdv => "st-pifp-tdv",
            Algorithm::ParallelPifpIi => "parallel-pifp-ii",
            Algorithm::ParallelPifp => "parallel-pifp",
        }
    }

    pub fn value_mode(self) -> ValueMode {
        match self {
            Algorithm::StPifpTdv => ValueMode::TypeDependent,
            _ => ValueMode::StateValues,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown algorithm {s:?}; expected one of st-pifp, st-pifp-tdv, parallel-pifp-ii, parallel-pifp"
                ))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Fictitious play rounds per stage solve.
    pub fp_iterations: usize,
    pub outer_iterations: usize,
    /// Threads for the parallel modes.
    pub workers: usize,
    /// Starting values; zeros when absent.
    pub initial_values: Option<ValueTable>,
    /// Stop once the largest strategy change falls below this.
    pub early_stop: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::StPifp,
            fp_iterations: 10_000,
            outer_iterations: 25,
            workers: 1,
            initial_values: None,
            early_stop: None,
        }
    }
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn check(&self, spec: &GameSpec) -> Result<()> {
        if self.fp_iterations == 0 || self.outer_iterations == 0 {
            return Err(Error::InvalidConfig("iteration counts must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("worker count must be at least 1".into()));
        }
        if self.algorithm == Algorithm::ParallelPifp && !spec.is_perfect_information() {
            return Err(Error::Unsupported(
                "parallel-pifp needs one type per player; use st-pifp, st-pifp-tdv or parallel-pifp-ii".into(),
            ));
        }
        if let Some(v) = &self.initial_values {
            v.check_shape(spec)?;
            if v.mode() != self.algorithm.value_mode() {
                return Err(Error::InvalidConfig(format!(
                    "{} expects {:?} initial values",
                    self.algorithm,
                    self.algorithm.value_mode()
                )));
            }
        }
        Ok(())
    }
}

/// Solver state after a completed outer iteration; doubles as a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Solution {
    pub algorithm: Algorithm,
    /// Outer iterations completed.
    pub iteration: usize,
    pub profile: StrategyProfile,
    pub values: ValueTable,
    /// Beliefs the last iteration's stage solves used.
    pub beliefs: Vec<JointTypeBelief>,
    pub trace: ConvergenceTrace,
}

impl Solution {
    fn start(spec: &GameSpec, config: &SolverConfig) -> Self {
        Self {
            algorithm: config.algorithm,
            iteration: 0,
            profile: StrategyProfile::uniform(spec),
            values: config
                .initial_values
                .clone()
                .unwrap_or_else(|| ValueTable::zeros(spec, config.algorithm.value_mode())),
            beliefs: vec![spec.prior.clone(); spec.num_states()],
            trace: ConvergenceTrace::default(),
        }
    }
}

pub fn solve(spec: &GameSpec, config: &SolverConfig) -> Result<Solution> {
    solve_with(spec, config, None, |_| Ok(()))
}

pub fn solve_st_pifp(spec: &GameSpec, config: &SolverConfig) -> Result<Solution> {
    solve(spec, &with_algorithm(config, Algorithm::StPifp))
}

pub fn solve_st_pifp_tdv(spec: &GameSpec, config: &SolverConfig) -> Result<Solution> {
    solve(spec, &with_algorithm(config, Algorithm::StPifpTdv))
}

pub fn solve_parallel_stale(spec: &GameSpec, config: &SolverConfig) -> Result<Solution> {
    solve(spec, &with_algorithm(config, Algorithm::ParallelPifpIi))
}

pub fn solve_perfect_info(spec: &GameSpec, config: &SolverConfig) -> Result<Solution> {
    solve(spec, &with_algorithm(config, Algorithm::ParallelPifp))
}

fn with_algorithm(config: &SolverConfig, algorithm: Algorithm) -> SolverConfig {
    SolverConfig {
        algorithm,
        ..config.clone()
    }
}

/// Runs the configured algorithm, optionally continuing from `resume`.
///
/// `after_iteration` sees the state after each outer iteration. It may fill
/// in the epsilon column of the newest trace row, and is the place to write
/// checkpoints.
pub fn solve_with<F>(
    spec: &GameSpec,
    config: &SolverConfig,
    resume: Option<Solution>,
    mut after_iteration: F,
) -> Result<Solution>
where
    F: FnMut(&mut Solution) -> Result<()>,
{
    spec.check()?;
    config.check(spec)?;
    let mut sol = match resume {
        Some(s) => {
            if s.algorithm != config.algorithm {
                return Err(Error::InvalidConfig(format!(
                    "checkpoint was written by {}, not {}",
                    s.algorithm, config.algorithm
                )));
            }
            s.profile.check_shape(spec)?;
            s.values.check_shape(spec)?;
            if s.beliefs.len() != spec.num_states() {
                return Err(Error::Format("checkpoint beliefs do not match the game".into()));
            }
            s
        }
        None => Solution::start(spec, config),
    };
    let pool = match config.algorithm {
        Algorithm::ParallelPifp | Algorithm::ParallelPifpIi => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        ),
        _ => None,
    };
    while sol.iteration < config.outer_iterations {
        let clock = Instant::now();
        let (profile, values, beliefs) = match config.algorithm {
            Algorithm::StPifp | Algorithm::StPifpTdv => sequential_iteration(spec, config, &sol.values)?,
            Algorithm::ParallelPifpIi | Algorithm::ParallelPifp => {
                let beliefs = if sol.iteration == 0 {
                    vec![spec.prior.clone(); spec.num_states()]
                } else {
                    propagate(spec, &sol.profile).beliefs
                };
                let pool = pool.as_ref().expect("pool built for parallel modes");
                parallel_iteration(spec, config, &sol.values, beliefs, pool)?
            }
        };
        let row = TraceRow {
            outer_iteration: sol.iteration + 1,
            max_strategy_delta: profile.max_abs_diff(&sol.profile),
            max_value_delta: values.max_abs_diff(&sol.values),
            epsilon: None,
            wall_seconds: clock.elapsed().as_secs_f64(),
        };
        sol.iteration += 1;
        sol.profile = profile;
        sol.values = values;
        sol.beliefs = beliefs;
        sol.trace.push(row);
        after_iteration(&mut sol)?;
        if let Some(th) = config.early_stop {
            if sol.trace.last().is_some_and(|r| r.max_strategy_delta < th) {
                break;
            }
        }
    }
    Ok(sol)
}

type Iteration = (StrategyProfile, ValueTable, Vec<JointTypeBelief>);

fn sequential_iteration(spec: &GameSpec, config: &SolverConfig, values: &ValueTable) -> Result<Iteration> {
    let mut prop = Propagator::new(spec);
    let mut stages: Vec<Option<StageStrategy>> = vec![None; spec.num_states()];
    let mut beliefs = vec![spec.prior.clone(); spec.num_states()];
    for &s in &spec.topological_order {
        let (belief, _) = prop.belief(s);
        let stage = build_stage(spec, s, values, &belief)?;
        let strat = fictitious_play(&stage, config.fp_iterations)?;
        prop.push(s, &StateFlow::build(spec, s, &strat));
        stages[s] = Some(strat);
        beliefs[s] = belief;
    }
    let profile = StrategyProfile {
        stages: stages.into_iter().map(|s| s.expect("every state solved")).collect(),
    };
    let values = match config.algorithm {
        Algorithm::StPifpTdv => evaluate_strategies_tdv(spec, &profile)?,
        _ => evaluate_strategies(spec, &profile, &beliefs)?,
    };
    Ok((profile, values, beliefs))
}

fn parallel_iteration(
    spec: &GameSpec,
    config: &SolverConfig,
    values: &ValueTable,
    beliefs: Vec<JointTypeBelief>,
    pool: &rayon::ThreadPool,
) -> Result<Iteration> {
    let stages: Vec<StageStrategy> = pool.install(|| {
        (0..spec.num_states())
            .into_par_iter()
            .map(|s| {
                let stage = build_stage(spec, s, values, &beliefs[s])?;
                fictitious_play(&stage, config.fp_iterations)
            })
            .collect::<Result<_>>()
    })?;
    let profile = StrategyProfile { stages };
    let fresh = propagate(spec, &profile).beliefs;
    let values = evaluate_strategies(spec, &profile, &fresh)?;
    Ok((profile, values, beliefs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hostility::{build_game, generate_synthetic, SizeProfile};
    use crate::toy::{random_table_game, ToyConfig};

    fn quick(algorithm: Algorithm) -> SolverConfig {
        SolverConfig {
            algorithm,
            fp_iterations: 200,
            outer_iterations: 3,
            ..SolverConfig::default()
        }
    }

    fn toy_iihg() -> GameSpec {
        build_game(&generate_synthetic(
            3,
            &SizeProfile {
                num_reds: 2,
                min_actions: 2,
                max_actions: 3,
                threshold: 8,
                ..SizeProfile::default()
            },
        ))
        .unwrap()
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("pifp".parse::<Algorithm>().is_err());
    }

    #[test]
    fn defaults() {
        let c = SolverConfig::default();
        assert_eq!((c.fp_iterations, c.outer_iterations, c.workers), (10_000, 25, 1));
        assert!(c.early_stop.is_none());
    }

    #[test]
    fn single_state_single_iteration_is_one_fp_solve() {
        let g = random_table_game(2, &ToyConfig::new(&[2, 2], 1));
        let mut c = quick(Algorithm::StPifp);
        c.outer_iterations = 1;
        let sol = solve(&g, &c).unwrap();
        let v = ValueTable::zeros(&g, ValueMode::StateValues);
        let direct = fictitious_play(&build_stage(&g, 0, &v, &g.prior).unwrap(), 200).unwrap();
        assert_eq!(sol.profile.stages[0], direct);
    }

    #[test]
    fn perfect_information_modes_coincide() {
        let g = random_table_game(4, &ToyConfig::new(&[1, 1], 6));
        let st = solve(&g, &quick(Algorithm::StPifp)).unwrap();
        let pi = solve(&g, &quick(Algorithm::ParallelPifp)).unwrap();
        let tdv = solve(&g, &quick(Algorithm::StPifpTdv)).unwrap();
        let stale = solve(&g, &quick(Algorithm::ParallelPifpIi)).unwrap();
        assert_eq!(st.profile, pi.profile);
        assert_eq!(st.values.raw(), pi.values.raw());
        assert_eq!(st.profile, tdv.profile);
        assert_eq!(st.values.raw(), tdv.values.raw());
        assert_eq!(st.profile, stale.profile);
    }

    #[test]
    fn parallel_pifp_rejects_types() {
        let g = toy_iihg();
        assert!(matches!(solve(&g, &quick(Algorithm::ParallelPifp)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn tdv_table_is_typed() {
        let g = toy_iihg();
        let sol = solve(&g, &quick(Algorithm::StPifpTdv)).unwrap();
        assert_eq!(sol.values.len(), 3 * 8 * 8);
    }

    #[test]
    fn stale_first_iteration_uses_prior() {
        let g = toy_iihg();
        let mut c = quick(Algorithm::ParallelPifpIi);
        c.outer_iterations = 2;
        let mut seen = Vec::new();
        solve_with(&g, &c, None, |s| {
            seen.push(s.beliefs.clone());
            Ok(())
        })
        .unwrap();
        assert!(seen[0].iter().all(|b| *b == g.prior));
    }

    #[test]
    fn iterations_keep_profile_valid_and_values_bounded() {
        let g = toy_iihg();
        for a in [Algorithm::StPifp, Algorithm::StPifpTdv, Algorithm::ParallelPifpIi] {
            solve_with(&g, &quick(a), None, |s| {
                assert!(s.profile.is_valid());
                for i in 0..g.num_players() {
                    let (lo, hi) = g.payoff_range(i);
                    for st in 0..g.num_states() {
                        for jt in 0..s.values.num_joint_types() {
                            let v = s.values.get(i, st, jt);
                            assert!(lo - 1e-9 <= v && v <= hi + 1e-9);
                        }
                    }
                }
                Ok(())
            })
            .unwrap();
        }
    }

    /// The belief a state is solved with may only depend on strategies at
    /// earlier states of the same iteration.
    #[test]
    fn sequential_beliefs_read_only_upstream() {
        let g = random_table_game(8, &ToyConfig::new(&[2, 2], 6));
        let pos = g.order_positions().unwrap();
        solve_with(&g, &quick(Algorithm::StPifp), None, |s| {
            for j in 0..g.num_states() {
                let mut hybrid = s.profile.clone();
                for (k, st) in hybrid.stages.iter_mut().enumerate() {
                    if pos[k] >= pos[j] {
                        *st = StageStrategy::uniform(&g.states[k].action_counts, &g.type_counts);
                    }
                }
                assert_eq!(propagate(&g, &hybrid).beliefs[j], s.beliefs[j]);
            }
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let g = toy_iihg();
        let mut c = quick(Algorithm::ParallelPifpIi);
        let one = solve(&g, &c).unwrap();
        c.workers = 8;
        let eight = solve(&g, &c).unwrap();
        assert_eq!(one.profile, eight.profile);
        assert_eq!(one.values, eight.values);
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let g = toy_iihg();
        let c = quick(Algorithm::StPifpTdv);
        let full = solve(&g, &c).unwrap();
        let mut first = c.clone();
        first.outer_iterations = 1;
        let part = solve(&g, &first).unwrap();
        let resumed = solve_with(&g, &c, Some(part), |_| Ok(())).unwrap();
        assert_eq!(full.profile, resumed.profile);
        assert_eq!(full.values, resumed.values);
        assert_eq!(resumed.trace.len(), 3);
    }

    #[test]
    fn early_stop_and_validation() {
        let g = toy_iihg();
        let mut c = quick(Algorithm::StPifp);
        c.early_stop = Some(f64::INFINITY);
        assert_eq!(solve(&g, &c).unwrap().iteration, 1);
        c.fp_iterations = 0;
        assert!(solve(&g, &c).is_err());
        let mut c = quick(Algorithm::StPifpTdv);
        c.initial_values = Some(ValueTable::zeros(&g, ValueMode::StateValues));
        assert!(solve(&g, &c).is_err());
    }

    #[test]
    fn strategy_deltas_shrink_on_toy_iihg() {
        let g = toy_iihg();
        let mut c = quick(Algorithm::StPifp);
        c.outer_iterations = 10;
        c.fp_iterations = 1000;
        let sol = solve(&g, &c).unwrap();
        let d: Vec<f64> = sol.trace.rows.iter().map(|r| r.max_strategy_delta).collect();
        assert!(d[9] < d[0], "{d:?}");
    }
}
