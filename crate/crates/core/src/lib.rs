//! Approximate Nash equilibria for multiplayer, general-sum stochastic games
//! whose states form a DAG and whose players hold persistent private types.
//!
//! The pipeline:
//!
//! * [`game`] describes the game, strategies, beliefs and values.
//! * [`hostility`] builds the naval hostility game and synthetic instances.
//! * [`stage`] solves one state's Bayesian stage game by fictitious play.
//! * [`propagation`] pushes type beliefs through the DAG with Bayes' rule.
//! * [`value`] evaluates a profile backwards over the DAG.
//! * [`solver`] runs the outer loops (sequential topological, type-dependent
//!   values, parallel with stale beliefs, perfect information).
//! * [`eval`] measures how far a profile is from equilibrium.
//! * [`io`] reads and writes the JSON and CSV artifacts.

pub mod error;
pub mod eval;
pub mod game;
pub mod hostility;
pub mod io;
pub mod propagation;
pub mod solver;
pub mod stage;
pub mod toy;
pub mod value;

pub use error::{Error, Result};
