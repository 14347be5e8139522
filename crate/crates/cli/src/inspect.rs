use std::fmt::Write;
use std::path::Path;

use dagfp::eval::EpsilonReport;
use dagfp::game::{GameSpec, JointTypeBelief, StrategyProfile, ValueTable};
use dagfp::hostility::build_game;
use dagfp::io::{read_artifact, read_game, Artifact};
use dagfp::Result;

pub fn run(file: &Path, game: Option<&Path>) -> Result<()> {
    let artifact = read_artifact(file)?;
    let game = game.map(read_game).transpose()?;
    let text = match &artifact {
        Artifact::HostilityParams(p) => {
            let mut s = format!("hostility parameters, K = {}\n", p.threshold);
            s += &describe_game(&build_game(p)?);
            s
        }
        Artifact::Game(g) => describe_game(g),
        Artifact::Profile(p) => describe_profile(p),
        Artifact::Values(v) => describe_values(v, game.as_ref()),
        Artifact::Checkpoint(c) => {
            let mut s = format!("checkpoint: {} after {} outer iterations\n", c.algorithm, c.iteration);
            if let Some(r) = c.trace.last() {
                let _ = writeln!(
                    s,
                    "last step: strategy delta {:.3e}, value delta {:.3e}",
                    r.max_strategy_delta, r.max_value_delta
                );
            }
            s += &describe_beliefs(&c.beliefs);
            s += &describe_profile(&c.profile);
            s += &describe_values(&c.values, game.as_ref());
            s
        }
        Artifact::EpsilonReport(r) => {
            let names: Vec<String> = (1..=r.players.len()).map(|i| format!("P{i}")).collect();
            epsilon_table(&names, r)
        }
        Artifact::ExPostReport(r) => {
            let mut s = String::from("ex post check\n");
            for i in 0..r.improvements.len() {
                let _ = writeln!(
                    s,
                    "P{}: profile {:.3}, best {:.3}, gain {:.3}",
                    i + 1,
                    r.profile_values[i],
                    r.best_values[i],
                    r.improvements[i]
                );
            }
            let _ = writeln!(s, "epsilon {:.3}", r.epsilon);
            s
        }
    };
    print!("{text}");
    Ok(())
}

fn describe_game(g: &GameSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "players: {} ({})", g.num_players(), g.players.join(", "));
    let _ = writeln!(s, "types per player: {:?}", g.type_counts);
    let _ = writeln!(s, "nonterminal states: {}, terminals: {}, total: {}", g.num_states(), g.num_terminals(), g.num_successors());
    for i in 0..g.num_players() {
        let counts: Vec<usize> = (0..g.num_states()).map(|h| g.action_count(h, i)).collect();
        let lo = counts.iter().min().copied().unwrap_or(0);
        let hi = counts.iter().max().copied().unwrap_or(0);
        let (plo, phi) = g.payoff_range(i);
        let _ = writeln!(s, "  {}: {lo}..{hi} actions, payoffs in [{plo}, {phi}]", g.players[i]);
    }
    s
}

fn describe_profile(p: &StrategyProfile) -> String {
    let mut s = String::from("support sizes per state ([player][type]) and largest action mass:\n");
    for (h, st) in p.stages.iter().enumerate() {
        let supports: Vec<String> = st
            .dists
            .iter()
            .map(|by_type| {
                by_type
                    .iter()
                    .map(|d| d.iter().filter(|&&x| x > 1e-9).count().to_string())
                    .collect::<Vec<_>>()
                    .join("/")
            })
            .collect();
        let top = st.dists.iter().flatten().flatten().copied().fold(0.0, f64::max);
        let _ = writeln!(s, "  G{h}: [{}] top {top:.3}", supports.join(", "));
    }
    s
}

fn describe_values(v: &ValueTable, game: Option<&GameSpec>) -> String {
    let mut s = format!(
        "values ({:?}): {} entries, {} players x {} states x {} type vectors\n",
        v.mode(),
        v.len(),
        v.num_players(),
        v.num_states(),
        v.num_joint_types()
    );
    for i in 0..v.num_players() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for h in 0..v.num_states() {
            for t in 0..v.num_joint_types() {
                lo = lo.min(v.get(i, h, t));
                hi = hi.max(v.get(i, h, t));
            }
        }
        let _ = write!(s, "  P{}: min {lo:.3}, max {hi:.3}", i + 1);
        if let Some(g) = game.filter(|g| g.num_players() == v.num_players()) {
            let (plo, phi) = g.payoff_range(i);
            let ok = plo - 1e-9 <= lo && hi <= phi + 1e-9;
            let _ = write!(s, " within [{plo}, {phi}]: {}", if ok { "yes" } else { "NO" });
        }
        s.push('\n');
    }
    s
}

fn describe_beliefs(beliefs: &[JointTypeBelief]) -> String {
    let mut s = String::from("beliefs (per state: largest joint type mass):\n");
    for (h, b) in beliefs.iter().enumerate() {
        let top = b.mass().iter().copied().fold(0.0, f64::max);
        let _ = writeln!(s, "  G{h}: {top:.3}");
    }
    s
}

/// Per-player profile value and best deviation value with per-type values
/// in parentheses, then epsilon.
pub fn epsilon_table(players: &[String], r: &EpsilonReport) -> String {
    let mut s = String::from("player  V(profile)  V(deviation) (per type)  epsilon\n");
    for (name, p) in players.iter().zip(&r.players) {
        let types: Vec<String> = p
            .type_values
            .iter()
            .map(|v| v.map_or("-".into(), |x| format!("{x:.3}")))
            .collect();
        let _ = writeln!(
            s,
            "{name:<6}  {:>10.3}  {:>12.3} ({})  {:.3}",
            p.profile_value,
            p.deviation_value,
            types.join(", "),
            p.epsilon
        );
    }
    let _ = writeln!(
        s,
        "epsilon = max_i epsilon_i = {:.3} (horizon {}, {})",
        r.epsilon,
        r.horizon,
        if r.converged { "converged" } else { "not converged" }
    );
    s
}
