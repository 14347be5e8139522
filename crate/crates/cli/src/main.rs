use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dagfp::eval::{epsilon_persistent, ex_post_check, BeliefMode, EvalConfig, PrunedMass};
use dagfp::hostility::{generate_synthetic, SizeProfile};
use dagfp::io::{
    read_checkpoint, read_game, read_profile, series_csv, trace_csv, write_artifact, Artifact,
};
use dagfp::solver::{solve_with, Algorithm, Solution, SolverConfig};
use dagfp::Error;

mod inspect;

#[derive(Parser)]
#[command(name = "dagfp", version, about = "Fictitious-play solver for DAG stochastic games with private types")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic hostility game.
    Gen(GenArgs),
    /// Solve a game and write the profile, values, trace and checkpoints.
    Solve(SolveArgs),
    /// Measure how far a profile is from equilibrium.
    Eval(EvalArgs),
    /// Summarize any artifact file.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hostility threshold.
    #[arg(long = "K", default_value_t = 150)]
    threshold: usize,
    /// Types per player.
    #[arg(long, default_value_t = 2)]
    types: usize,
    #[arg(long, default_value_t = 3)]
    reds: usize,
    #[arg(long, default_value_t = 7)]
    min_actions: usize,
    #[arg(long, default_value_t = 10)]
    max_actions: usize,
    #[arg(long, default_value_t = 3)]
    max_hostility: u32,
    /// Output file; defaults to `game-<seed>.json` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "DAGFP_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    StPifp,
    StPifpTdv,
    ParallelPifpIi,
    ParallelPifp,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::StPifp => Algorithm::StPifp,
            AlgorithmArg::StPifpTdv => Algorithm::StPifpTdv,
            AlgorithmArg::ParallelPifpIi => Algorithm::ParallelPifpIi,
            AlgorithmArg::ParallelPifp => Algorithm::ParallelPifp,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    game: PathBuf,
    #[arg(long, value_enum, default_value = "st-pifp")]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 10_000)]
    fp_iters: usize,
    #[arg(long, default_value_t = 25)]
    outer_iters: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Stop early once the largest strategy change drops below this.
    #[arg(long)]
    early_stop: Option<f64>,
    /// Continue from the newest checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
    /// Evaluate epsilon after every outer iteration (slow).
    #[arg(long)]
    trace_epsilon: bool,
    #[arg(long, env = "DAGFP_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Persistent,
    Expost,
}

#[derive(Clone, Copy, ValueEnum)]
enum BeliefArg {
    Joint,
    Factored,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrunedArg {
    Renormalize,
    Penalize,
}

#[derive(Args)]
struct EvalArgs {
    game: PathBuf,
    /// Profile or checkpoint file.
    strategy: PathBuf,
    #[arg(long, value_enum, default_value = "persistent")]
    method: Method,
    /// Largest horizon; defaults to the number of nonterminal states.
    #[arg(long)]
    horizon_cap: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    prune_threshold: f64,
    /// Whether pruned probability is dropped from the normalizer or kept
    /// with zero payoff.
    #[arg(long, value_enum, default_value = "renormalize")]
    pruned_mass: PrunedArg,
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    #[arg(long, value_enum, default_value = "joint")]
    belief: BeliefArg,
    /// Report file; defaults to `epsilon.json` in the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "DAGFP_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InspectArgs {
    file: PathBuf,
    /// Game to check value bounds against.
    #[arg(long)]
    game: Option<PathBuf>,
}

/// Distinguishes exit statuses.
enum Failure {
    Validation(anyhow::Error),
    NotConverged,
    Io(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) => Failure::Io(e.into()),
            _ => Failure::Validation(e.into()),
        }
    }
}

fn io_err<E: Into<anyhow::Error>>(context: String) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Io(e.into().context(context))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Eval(a) => eval(a),
        Command::Inspect(a) => inspect::run(&a.file, a.game.as_deref()).map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::NotConverged) => ExitCode::from(3),
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(4)
        }
    }
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let profile = SizeProfile {
        num_reds: a.reds,
        min_actions: a.min_actions,
        max_actions: a.max_actions,
        num_types: a.types,
        threshold: a.threshold,
        max_hostility: a.max_hostility,
    };
    if a.reds == 0 || a.types == 0 || a.min_actions == 0 || a.threshold == 0 || a.max_hostility == 0 {
        return Err(Failure::Validation(anyhow::anyhow!(
            "reds, types, actions, K and hostility must all be at least 1"
        )));
    }
    let params = generate_synthetic(a.seed, &profile);
    let out = a.out.unwrap_or_else(|| a.out_dir.join(format!("game-{}.json", a.seed)));
    write_artifact(&out, &Artifact::HostilityParams(params))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn checkpoint_dir(out_dir: &Path) -> PathBuf {
    out_dir.join("checkpoints")
}

fn checkpoint_path(out_dir: &Path, iteration: usize) -> PathBuf {
    checkpoint_dir(out_dir).join(format!("iter-{iteration:04}.json"))
}

fn latest_checkpoint(out_dir: &Path) -> Result<Option<PathBuf>, Failure> {
    let dir = checkpoint_dir(out_dir);
    if !dir.exists() {
        return Ok(None);
    }
    let mut found: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(io_err(format!("reading {}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("iter-") && n.ends_with(".json"))
        })
        .collect();
    found.sort();
    Ok(found.pop())
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let spec = read_game(&a.game)?;
    let config = SolverConfig {
        algorithm: a.algorithm.into(),
        fp_iterations: a.fp_iters,
        outer_iterations: a.outer_iters,
        workers: a.workers,
        initial_values: None,
        early_stop: a.early_stop,
    };
    let resume: Option<Solution> = if a.resume {
        match latest_checkpoint(&a.out_dir)? {
            Some(p) => {
                let s = read_checkpoint(&p)?;
                eprintln!("resuming after iteration {} from {}", s.iteration, p.display());
                Some(s)
            }
            None => None,
        }
    } else {
        None
    };
    let out_dir = a.out_dir.clone();
    let trace_epsilon = a.trace_epsilon;
    let sol = solve_with(&spec, &config, resume, |s| {
        if trace_epsilon {
            let eps = if spec.is_perfect_information() {
                ex_post_check(&spec, &s.profile)?.epsilon
            } else {
                epsilon_persistent(&spec, &s.profile, &EvalConfig::default())?.epsilon
            };
            if let Some(row) = s.trace.rows.last_mut() {
                row.epsilon = Some(eps);
            }
        }
        write_artifact(&checkpoint_path(&out_dir, s.iteration), &Artifact::Checkpoint(Box::new(s.clone())))?;
        let r = s.trace.last().expect("row just pushed");
        eprintln!(
            "iteration {:>3}: strategy delta {:.3e}, value delta {:.3e}, {:.2}s",
            r.outer_iteration, r.max_strategy_delta, r.max_value_delta, r.wall_seconds
        );
        Ok(())
    })?;
    write_artifact(&out_dir.join("profile.json"), &Artifact::Profile(sol.profile.clone()))?;
    write_artifact(&out_dir.join("values.json"), &Artifact::Values(sol.values.clone()))?;
    let trace_path = out_dir.join("trace.csv");
    fs::write(&trace_path, trace_csv(&sol.trace)?).map_err(io_err(format!("writing {}", trace_path.display())))?;
    println!("wrote profile.json, values.json and trace.csv to {}", out_dir.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), Failure> {
    let spec = read_game(&a.game)?;
    let profile = read_profile(&a.strategy)?;
    profile.check_shape(&spec)?;
    let out = a.out.unwrap_or_else(|| a.out_dir.join("epsilon.json"));
    match a.method {
        Method::Expost => {
            let rep = ex_post_check(&spec, &profile)?;
            write_artifact(&out, &Artifact::ExPostReport(rep.clone()))?;
            for (i, name) in spec.players.iter().enumerate() {
                println!(
                    "{name}: profile {:.3}, best {:.3}, gain {:.3}",
                    rep.profile_values[i], rep.best_values[i], rep.improvements[i]
                );
            }
            println!("epsilon = max_i epsilon_i = {:.3}", rep.epsilon);
            Ok(())
        }
        Method::Persistent => {
            let config = EvalConfig {
                horizon_cap: a.horizon_cap,
                tolerance: a.tolerance,
                prune_threshold: a.prune_threshold,
                pruned_mass: match a.pruned_mass {
                    PrunedArg::Renormalize => PrunedMass::Renormalize,
                    PrunedArg::Penalize => PrunedMass::Penalize,
                },
                belief_mode: match a.belief {
                    BeliefArg::Joint => BeliefMode::Joint,
                    BeliefArg::Factored => BeliefMode::Factored,
                },
                ..EvalConfig::default()
            };
            let rep = epsilon_persistent(&spec, &profile, &config)?;
            write_artifact(&out, &Artifact::EpsilonReport(rep.clone()))?;
            let csv_path = out.with_extension("csv");
            fs::write(&csv_path, series_csv(&spec.players, &rep.series)?)
                .map_err(io_err(format!("writing {}", csv_path.display())))?;
            print!("{}", inspect::epsilon_table(&spec.players, &rep));
            if rep.converged {
                Ok(())
            } else {
                eprintln!("horizon cap {} reached before values settled", rep.horizon);
                Err(Failure::NotConverged)
            }
        }
    }
}
