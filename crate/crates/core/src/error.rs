use thiserror::Error;

use crate::game::Violation;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown player {0}")]
    UnknownPlayer(usize),
    #[error("type value must be positive, got {0}")]
    NonPositiveType(f64),
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error(
        "encounter infeasible for blue move {blue_move} against red moves {red_moves:?}: \
         continue probability {continue_prob}"
    )]
    InfeasibleEncounter {
        blue_move: usize,
        red_moves: Vec<usize>,
        continue_prob: f64,
    },
    #[error("hostility of move {mv} for player {player} is {value}; only positive integers index the state grid")]
    NonIntegerHostility { player: usize, mv: usize, value: f64 },
    #[error("invalid hostility parameters: {0}")]
    InvalidParams(String),
    #[error("no continuation value for successor state {state}")]
    MissingValue { state: usize },
    #[error("no belief supplied for state {state}")]
    MissingBelief { state: usize },
    #[error("player {player} has no actions at state {state}")]
    EmptyActionSet { state: usize, player: usize },
    #[error("linear system is singular")]
    Singular,
    #[error("no attainable outcome for player {player} at state {state}")]
    NoAttainableOutcome { state: usize, player: usize },
    #[error("brute-force enumeration needs {policies} deviator policies, over the budget of {budget}")]
    EnumerationBudget { policies: f64, budget: usize },
    #[error("{0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("game failed validation:\n{}", format_violations(.0))]
    Validation(Vec<Violation>),
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
