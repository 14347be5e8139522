//! Solves one synthetic hostility game with each persistent-type algorithm
//! and prints epsilon after 10 outer iterations and after the last one.
//!
//! cargo run --release -p dagfp --example trend -- [seed] [K] [min actions] [max actions] [outer] [fp] [prune] [max hostility]
//!
//! Defaults match the acceptance trend run except for `outer` (25).

use std::time::Instant;

use dagfp::eval::{epsilon_persistent, EvalConfig};
use dagfp::hostility::{build_game, generate_synthetic, SizeProfile};
use dagfp::solver::{solve_with, Algorithm, SolverConfig};

fn main() -> dagfp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let num = |k: usize, d: f64| args.get(k).and_then(|s| s.parse::<f64>().ok()).unwrap_or(d);
    let seed = num(0, 1.0) as u64;
    let profile = SizeProfile {
        threshold: num(1, 50.0) as usize,
        min_actions: num(2, 3.0) as usize,
        max_actions: num(3, 3.0) as usize,
        max_hostility: num(7, 3.0) as u32,
        ..SizeProfile::default()
    };
    let outer = num(4, 25.0) as usize;
    let g = build_game(&generate_synthetic(seed, &profile))?;
    let eval = EvalConfig {
        prune_threshold: num(6, 0.01),
        ..EvalConfig::default()
    };
    let mut marks = vec![10.min(outer), outer];
    marks.dedup();
    for alg in [Algorithm::StPifpTdv, Algorithm::StPifp, Algorithm::ParallelPifpIi] {
        let cfg = SolverConfig {
            fp_iterations: num(5, 1000.0) as usize,
            outer_iterations: outer,
            ..SolverConfig::new(alg)
        };
        let t = Instant::now();
        let mut kept = Vec::new();
        solve_with(&g, &cfg, None, |s| {
            if marks.contains(&s.iteration) {
                kept.push((s.iteration, s.profile.clone()));
            }
            Ok(())
        })?;
        let solved = t.elapsed().as_secs_f64();
        for (iteration, prof) in kept {
            let t = Instant::now();
            let rep = epsilon_persistent(&g, &prof, &eval)?;
            let eps: Vec<String> = rep.players.iter().map(|p| format!("{:.3e}", p.epsilon)).collect();
            println!(
                "{alg:<17} iter {iteration:>3} eps {:>8.4} ({}) horizon {} converged {} expanded {} solve {solved:.1}s eval {:.1}s",
                rep.epsilon,
                eps.join(", "),
                rep.horizon,
                rep.converged,
                rep.states_expanded,
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
