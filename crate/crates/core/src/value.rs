//! Value updates for a fixed strategy profile.
//!
//! Transitions only move forward along the topological order, so the value
//! equations are triangular and are solved by one backward sweep.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{GameSpec, JointTypeBelief, ProfileFlow, StrategyProfile, ValueMode, ValueTable};

fn flow_value(spec: &GameSpec, values: &ValueTable, out: &[(usize, f64)], player: usize, jt: usize) -> f64 {
    out.iter()
        .map(|&(to, p)| p * values.continuation(spec, player, spec.successor_from_flat(to), jt))
        .sum()
}

/// State values: each state's value averages the joint type vectors by that
/// state's belief.
pub fn evaluate_strategies(
    spec: &GameSpec,
    profile: &StrategyProfile,
    beliefs: &[JointTypeBelief],
) -> Result<ValueTable> {
    profile.check_shape(spec)?;
    if beliefs.len() < spec.num_states() {
        return Err(Error::MissingBelief { state: beliefs.len() });
    }
    let flow = ProfileFlow::build(spec, profile);
    evaluate_flow(spec, &flow, beliefs)
}

pub fn evaluate_flow(spec: &GameSpec, flow: &ProfileFlow, beliefs: &[JointTypeBelief]) -> Result<ValueTable> {
    let mut values = ValueTable::zeros(spec, ValueMode::StateValues);
    for &s in spec.topological_order.iter().rev() {
        let b = beliefs.get(s).ok_or(Error::MissingBelief { state: s })?;
        if b.type_counts() != spec.type_counts.as_slice() {
            return Err(Error::MissingBelief { state: s });
        }
        for i in 0..spec.num_players() {
            let v: f64 = b
                .mass()
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(jt, &w)| w * flow_value(spec, &values, flow.outcomes(s, jt), i, jt))
                .sum();
            values.set(i, s, 0, v);
        }
    }
    Ok(values)
}

/// Type-dependent values: one backward pass per joint type vector, with
/// behavior and transitions fixed to that vector.
pub fn evaluate_strategies_tdv(spec: &GameSpec, profile: &StrategyProfile) -> Result<ValueTable> {
    profile.check_shape(spec)?;
    let flow = ProfileFlow::build(spec, profile);
    Ok(evaluate_flow_tdv(spec, &flow))
}

pub fn evaluate_flow_tdv(spec: &GameSpec, flow: &ProfileFlow) -> ValueTable {
    let n = spec.num_players();
    let jt_size = spec.joint_types().size();
    let columns: Vec<Vec<f64>> = (0..jt_size)
        .into_par_iter()
        .map(|jt| {
            // Single-type scratch table reused for the sweep.
            let mut col = ValueTable::zeros(spec, ValueMode::StateValues);
            for &s in spec.topological_order.iter().rev() {
                for i in 0..n {
                    let v: f64 = flow
                        .outcomes(s, jt)
                        .iter()
                        .map(|&(to, p)| {
                            p * match spec.successor_from_flat(to) {
                                crate::game::Successor::Terminal(k) => spec.terminal_payoff(k, i, jt),
                                crate::game::Successor::State(x) => col.get(i, x, 0),
                            }
                        })
                        .sum();
                    col.set(i, s, 0, v);
                }
            }
            col.raw().to_vec()
        })
        .collect();
    let mut values = ValueTable::zeros(spec, ValueMode::TypeDependent);
    for (jt, col) in columns.iter().enumerate() {
        for i in 0..n {
            for s in 0..spec.num_states() {
                values.set(i, s, jt, col[i * spec.num_states() + s]);
            }
        }
    }
    values
}

/// Solves `a x = b` by LU with partial pivoting. Fails when the matrix is
/// singular or the residual is too large to trust.
pub fn solve_linear_system(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidConfig("linear system must be square".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let m = DMatrix::from_fn(n, n, |r, c| a[r][c]);
    let rhs = DVector::from_column_slice(b);
    let x = m.clone().lu().solve(&rhs).ok_or(Error::Singular)?;
    let residual = (&m * &x - &rhs).amax();
    if !residual.is_finite() || residual > 1e-8 * (1.0 + rhs.amax()) {
        return Err(Error::Singular);
    }
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::StageStrategy;
    use crate::hostility::{build_game, generate_synthetic, HostilityGameParams, SizeProfile};
    use crate::propagation::propagate;
    use crate::toy::{random_profile, random_table_game, ToyConfig};

    fn params(k: usize) -> HostilityGameParams {
        generate_synthetic(
            4,
            &SizeProfile {
                threshold: k,
                min_actions: 2,
                max_actions: 2,
                ..SizeProfile::default()
            },
        )
    }

    #[test]
    fn certain_blue_win() {
        let mut p = params(4);
        for row in p.blue_defended.iter_mut().chain(p.blue_undefended.iter_mut()) {
            row.iter_mut().for_each(|x| *x = 1.0);
        }
        for row in p.red_defended.iter_mut().chain(p.red_undefended.iter_mut()) {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        let g = build_game(&p).unwrap();
        let prof = random_profile(&g, 2);
        let v = evaluate_strategies(&g, &prof, &propagate(&g, &prof).beliefs).unwrap();
        for s in 0..g.num_states() {
            assert_eq!(v.get(0, s, 0), 100.0);
            for r in 1..4 {
                assert_eq!(v.get(r, s, 0), -100.0);
            }
        }
    }

    #[test]
    fn certain_kinetic() {
        let mut p = params(1);
        for row in p
            .blue_defended
            .iter_mut()
            .chain(p.blue_undefended.iter_mut())
            .chain(p.red_defended.iter_mut())
            .chain(p.red_undefended.iter_mut())
        {
            row.iter_mut().for_each(|x| *x = 0.0);
        }
        let g = build_game(&p).unwrap();
        let prof = StrategyProfile::uniform(&g);
        let v = evaluate_strategies(&g, &prof, &[g.prior.clone()]).unwrap();
        let tdv = evaluate_strategies_tdv(&g, &prof).unwrap();
        for i in 0..4 {
            assert_eq!(v.get(i, 0, 0), -200.0);
            for jt in 0..16 {
                assert_eq!(tdv.get(i, 0, jt), -200.0);
            }
        }
    }

    #[test]
    fn tdv_table_size() {
        let g = build_game(&params(12)).unwrap();
        let tdv = evaluate_strategies_tdv(&g, &StrategyProfile::uniform(&g)).unwrap();
        assert_eq!(tdv.len(), 64 * 12);
    }

    #[test]
    fn single_type_modes_agree() {
        for seed in 0..5 {
            let g = random_table_game(seed, &ToyConfig::new(&[1, 1, 1], 6));
            let prof = random_profile(&g, seed);
            let a = evaluate_strategies(&g, &prof, &propagate(&g, &prof).beliefs).unwrap();
            let b = evaluate_strategies_tdv(&g, &prof).unwrap();
            assert_eq!(a.raw(), b.raw());
        }
    }

    /// A chain where every state has exactly one predecessor, so each
    /// state's belief is the exact posterior given reach.
    #[test]
    fn state_values_average_tdv_on_trees() {
        let mut tested = 0;
        for seed in 0..60 {
            let g = random_table_game(seed, &ToyConfig::new(&[2, 2], 5).max_successors(1).typed_payoffs());
            let mut preds = vec![0; g.num_states()];
            for s in 0..g.num_states() {
                for row in match &g.kernel {
                    crate::game::Kernel::Table(t) => &t.rows[s],
                    _ => unreachable!(),
                } {
                    let mut seen: Vec<usize> = row
                        .iter()
                        .flatten()
                        .filter_map(|o| match o.to {
                            crate::game::Successor::State(x) => Some(x),
                            _ => None,
                        })
                        .collect();
                    seen.sort();
                    seen.dedup();
                    for x in seen {
                        preds[x] |= 1 << s;
                    }
                }
            }
            if preds.iter().any(|p: &usize| p.count_ones() > 1) {
                continue;
            }
            tested += 1;
            let prof = random_profile(&g, seed + 3);
            let prop = propagate(&g, &prof);
            let v = evaluate_strategies(&g, &prof, &prop.beliefs).unwrap();
            let tdv = evaluate_strategies_tdv(&g, &prof).unwrap();
            for s in (0..g.num_states()).filter(|&s| !prop.zero_reach[s]) {
                for i in 0..2 {
                    let avg: f64 = prop.beliefs[s].mass().iter().enumerate().map(|(t, w)| w * tdv.get(i, s, t)).sum();
                    assert!((avg - v.get(i, s, 0)).abs() <= 1e-9);
                }
            }
        }
        assert!(tested >= 3, "only {tested} single-predecessor instances");
    }

    #[test]
    fn values_within_payoff_range() {
        for seed in 0..8 {
            let g = random_table_game(seed, &ToyConfig::new(&[2, 3], 7));
            let prof = random_profile(&g, seed);
            let v = evaluate_strategies(&g, &prof, &propagate(&g, &prof).beliefs).unwrap();
            let tdv = evaluate_strategies_tdv(&g, &prof).unwrap();
            for i in 0..2 {
                let (lo, hi) = g.payoff_range(i);
                for s in 0..g.num_states() {
                    assert!(lo - 1e-9 <= v.get(i, s, 0) && v.get(i, s, 0) <= hi + 1e-9);
                    for t in 0..6 {
                        assert!(lo - 1e-9 <= tdv.get(i, s, t) && tdv.get(i, s, t) <= hi + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn missing_belief_is_an_error() {
        let g = random_table_game(1, &ToyConfig::new(&[2], 3));
        let prof = StrategyProfile::uniform(&g);
        assert!(matches!(
            evaluate_strategies(&g, &prof, &[g.prior.clone()]),
            Err(Error::MissingBelief { .. })
        ));
    }

    #[test]
    fn pure_profile_hand_value() {
        // One player, one type: action 0 goes to state 1, which pays 3.
        let g = random_table_game(9, &ToyConfig::new(&[1], 2));
        let mut prof = StrategyProfile::uniform(&g);
        prof.stages[0] = StageStrategy {
            dists: vec![vec![{
                let mut d = vec![0.0; g.action_count(0, 0)];
                d[0] = 1.0;
                d
            }]],
        };
        let v = evaluate_strategies_tdv(&g, &prof).unwrap();
        let row = g.transition(0, &[0], &[0]);
        let expect: f64 = row.iter().map(|o| o.prob * v.continuation(&g, 0, o.to, 0)).sum();
        assert!((v.get(0, 0, 0) - expect).abs() < 1e-12);
    }

    #[test]
    fn linear_solver_examples() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(solve_linear_system(&id, &[3.0, -4.0]).unwrap(), vec![3.0, -4.0]);
        // v1 = 1 + 0.5 v2, v2 = 2
        let a = vec![vec![1.0, -0.5], vec![0.0, 1.0]];
        let x = solve_linear_system(&a, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        let sing = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(solve_linear_system(&sing, &[1.0, 1.0]), Err(Error::Singular)));
    }

    #[test]
    fn linear_solver_matches_backward_sweep() {
        let g = random_table_game(17, &ToyConfig::new(&[1, 1], 6));
        let prof = random_profile(&g, 5);
        let v = evaluate_strategies_tdv(&g, &prof).unwrap();
        let flow = ProfileFlow::build(&g, &prof);
        let k = g.num_states();
        for i in 0..2 {
            let mut a = vec![vec![0.0; k]; k];
            let mut b = vec![0.0; k];
            for s in 0..k {
                a[s][s] = 1.0;
                for &(to, p) in flow.outcomes(s, 0) {
                    match g.successor_from_flat(to) {
                        crate::game::Successor::State(x) => a[s][x] -= p,
                        crate::game::Successor::Terminal(t) => b[s] += p * g.terminal_payoff(t, i, 0),
                    }
                }
            }
            let x = solve_linear_system(&a, &b).unwrap();
            for s in 0..k {
                assert!((x[s] - v.get(i, s, 0)).abs() < 1e-9);
            }
        }
    }
}
