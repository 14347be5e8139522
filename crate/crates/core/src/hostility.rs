//! The hostility game: one blue player confronting several red players.
//!
//! Each round every player picks a move. Blue's move may counter a red move,
//! which selects the defended or undefended success tables for that pair.
//! Type values rescale a success probability `p` to `p^(opponent/own)`.
//! The round ends in a blue win, a red win, or the game continues with the
//! hostility level raised by the sum of the selected moves' hostilities.
//! Reaching the threshold `K` ends the game in kinetic mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    GameSpec, JointTypeBelief, Kernel, Outcome, StateDef, Successor, Terminal, TerminalPayoff,
};

pub const BLUE_WIN: usize = 0;
pub const RED_WIN: usize = 1;
pub const KINETIC: usize = 2;

/// How per-red success probabilities combine into one round outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Arithmetic mean of the per-red blue and red success probabilities.
    #[default]
    Mean,
    /// Each encounter resolves independently; blue wins only if it succeeds
    /// against every red, red wins if any red succeeds.
    IndependentDraws,
}

/// Parameters of a hostility game. Player 0 is blue; players `1..` are red.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HostilityGameParams {
    pub move_counts: Vec<usize>,
    /// `[red][red move]` -> blue moves that counter it.
    pub counters: Vec<Vec<Vec<usize>>>,
    /// Blue success when countered, `[blue move][red]`.
    pub blue_defended: Vec<Vec<f64>>,
    /// Blue success when not countered, `[blue move][red]`.
    pub blue_undefended: Vec<Vec<f64>>,
    /// Red success when countered, `[red][red move]`.
    pub red_defended: Vec<Vec<f64>>,
    /// Red success when not countered, `[red][red move]`.
    pub red_undefended: Vec<Vec<f64>>,
    /// `[player][move]`, positive integers.
    pub hostility: Vec<Vec<f64>>,
    pub threshold: usize,
    pub blue_win_payoff: Vec<f64>,
    pub red_win_payoff: Vec<f64>,
    pub kinetic_payoff: Vec<f64>,
    /// `[player][type]`, positive reals.
    pub type_values: Vec<Vec<f64>>,
    #[serde(default)]
    pub aggregation: Aggregation,
}

/// Round outcome probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Encounter {
    pub blue_win: f64,
    pub red_win: f64,
    pub cont: f64,
}

/// `p^(opponent/own)`: a stronger opponent shrinks the success probability.
pub fn typed_probability(p: f64, own_type: f64, opponent_type: f64) -> Result<f64> {
    if !(own_type > 0.0) {
        return Err(Error::NonPositiveType(own_type));
    }
    if !(opponent_type > 0.0) {
        return Err(Error::NonPositiveType(opponent_type));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadProbability(p));
    }
    Ok(p.powf(opponent_type / own_type))
}

impl HostilityGameParams {
    pub fn num_players(&self) -> usize {
        self.move_counts.len()
    }

    pub fn num_reds(&self) -> usize {
        self.move_counts.len().saturating_sub(1)
    }

    pub fn type_counts(&self) -> Vec<usize> {
        self.type_values.iter().map(Vec::len).collect()
    }

    fn countered(&self, red: usize, blue_move: usize, red_move: usize) -> bool {
        self.counters[red][red_move].contains(&blue_move)
    }

    /// Blue and red success probabilities for one blue/red pair.
    fn pair(
        &self,
        red: usize,
        blue_move: usize,
        red_move: usize,
        blue_type: f64,
        red_type: f64,
    ) -> Result<(f64, f64)> {
        let (b, r) = if self.countered(red, blue_move, red_move) {
            (
                self.blue_defended[blue_move][red],
                self.red_defended[red][red_move],
            )
        } else {
            (
                self.blue_undefended[blue_move][red],
                self.red_undefended[red][red_move],
            )
        };
        Ok((
            typed_probability(b, blue_type, red_type)?,
            typed_probability(r, red_type, blue_type)?,
        ))
    }

    fn combine(&self, pairs: &[(f64, f64)]) -> (f64, f64) {
        match self.aggregation {
            Aggregation::Mean => {
                let n = pairs.len() as f64;
                let b: f64 = pairs.iter().map(|p| p.0).sum();
                let r: f64 = pairs.iter().map(|p| p.1).sum();
                (b / n, r / n)
            }
            Aggregation::IndependentDraws => {
                let b: f64 = pairs.iter().map(|p| p.0).product();
                let none: f64 = pairs.iter().map(|p| 1.0 - p.1).product();
                (b, 1.0 - none)
            }
        }
    }

    /// Outcome probabilities of a round given each player's move and type index.
    pub fn resolve_encounter(
        &self,
        blue_move: usize,
        red_moves: &[usize],
        joint_types: &[usize],
    ) -> Result<Encounter> {
        let tb = self.type_values[0][joint_types[0]];
        let pairs = red_moves
            .iter()
            .enumerate()
            .map(|(j, &m)| self.pair(j, blue_move, m, tb, self.type_values[j + 1][joint_types[j + 1]]))
            .collect::<Result<Vec<_>>>()?;
        let (blue_win, red_win) = self.combine(&pairs);
        let cont = 1.0 - blue_win - red_win;
        if cont < -ROUNDING {
            return Err(Error::InfeasibleEncounter {
                blue_move,
                red_moves: red_moves.to_vec(),
                continue_prob: cont,
            });
        }
        Ok(Encounter {
            blue_win,
            red_win,
            cont: cont.max(0.0),
        })
    }

    /// Checks the parameter invariants, including feasibility of every typed
    /// blue/red pair.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        let n = self.num_players();
        let reds = self.num_reds();
        if n < 2 {
            return bad("need a blue player and at least one red player".into());
        }
        if self.move_counts.contains(&0) {
            return bad("every player needs at least one move".into());
        }
        if self.threshold == 0 {
            return bad("kinetic threshold must be positive".into());
        }
        let shape_ok = self.counters.len() == reds
            && self
                .counters
                .iter()
                .zip(&self.move_counts[1..])
                .all(|(c, &m)| c.len() == m && c.iter().flatten().all(|&b| b < self.move_counts[0]))
            && self.blue_defended.len() == self.move_counts[0]
            && self.blue_undefended.len() == self.move_counts[0]
            && self.blue_defended.iter().chain(&self.blue_undefended).all(|r| r.len() == reds)
            && self.red_defended.len() == reds
            && self.red_undefended.len() == reds
            && self
                .red_defended
                .iter()
                .zip(&self.red_undefended)
                .zip(&self.move_counts[1..])
                .all(|((d, u), &m)| d.len() == m && u.len() == m)
            && self.hostility.len() == n
            && self.hostility.iter().zip(&self.move_counts).all(|(h, &m)| h.len() == m)
            && self.blue_win_payoff.len() == n
            && self.red_win_payoff.len() == n
            && self.kinetic_payoff.len() == n
            && self.type_values.len() == n
            && self.type_values.iter().all(|t| !t.is_empty());
        if !shape_ok {
            return bad("table dimensions do not match the move counts".into());
        }
        for (p, hs) in self.hostility.iter().enumerate() {
            for (mv, &h) in hs.iter().enumerate() {
                if !(h > 0.0) {
                    return bad(format!("hostility of move {mv} for player {p} is not positive"));
                }
                if h.fract() != 0.0 {
                    return Err(Error::NonIntegerHostility {
                        player: p,
                        mv,
                        value: h,
                    });
                }
            }
        }
        for &v in self.type_values.iter().flatten() {
            if !(v > 0.0) {
                return Err(Error::NonPositiveType(v));
            }
        }
        let probs = self
            .blue_defended
            .iter()
            .chain(&self.blue_undefended)
            .chain(&self.red_defended)
            .chain(&self.red_undefended)
            .flatten();
        for &p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::BadProbability(p));
            }
        }
        for j in 0..reds {
            for bm in 0..self.move_counts[0] {
                for rm in 0..self.move_counts[j + 1] {
                    for &tb in &self.type_values[0] {
                        for &tr in &self.type_values[j + 1] {
                            let (b, r) = self.pair(j, bm, rm, tb, tr)?;
                            if b + r > 1.0 + ROUNDING {
                                let mut red_moves = vec![0; reds];
                                red_moves[j] = rm;
                                return Err(Error::InfeasibleEncounter {
                                    blue_move: bm,
                                    red_moves,
                                    continue_prob: 1.0 - b - r,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

const ROUNDING: f64 = 1e-9;

/// Transition kernel of a built hostility game. Serializes as its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HostilityGameParams", into = "HostilityGameParams")]
pub struct HostilityKernel {
    params: HostilityGameParams,
    /// Per red: typed blue success indexed `((bm * mr + rm) * tb_count + tb) * tr_count + tr`.
    beta: Vec<Vec<f64>>,
    rho: Vec<Vec<f64>>,
    steps: Vec<Vec<usize>>,
}

impl TryFrom<HostilityGameParams> for HostilityKernel {
    type Error = Error;

    fn try_from(params: HostilityGameParams) -> Result<Self> {
        HostilityKernel::new(params)
    }
}

impl From<HostilityKernel> for HostilityGameParams {
    fn from(k: HostilityKernel) -> Self {
        k.params
    }
}

impl HostilityKernel {
    pub fn new(params: HostilityGameParams) -> Result<Self> {
        params.check()?;
        let reds = params.num_reds();
        let mb = params.move_counts[0];
        let tbs = &params.type_values[0];
        let mut beta = Vec::with_capacity(reds);
        let mut rho = Vec::with_capacity(reds);
        for j in 0..reds {
            let mr = params.move_counts[j + 1];
            let trs = &params.type_values[j + 1];
            let mut b = Vec::with_capacity(mb * mr * tbs.len() * trs.len());
            let mut r = Vec::with_capacity(b.capacity());
            for bm in 0..mb {
                for rm in 0..mr {
                    for &tb in tbs {
                        for &tr in trs {
                            let (x, y) = params.pair(j, bm, rm, tb, tr)?;
                            b.push(x);
                            r.push(y);
                        }
                    }
                }
            }
            beta.push(b);
            rho.push(r);
        }
        let steps = params
            .hostility
            .iter()
            .map(|hs| hs.iter().map(|&h| h as usize).collect())
            .collect();
        Ok(Self {
            params,
            beta,
            rho,
            steps,
        })
    }

    pub fn params(&self) -> &HostilityGameParams {
        &self.params
    }

    pub(crate) fn transition_into(
        &self,
        state: usize,
        actions: &[usize],
        types: &[usize],
        out: &mut Vec<Outcome>,
    ) {
        let p = &self.params;
        let reds = p.num_reds();
        let tb_count = p.type_values[0].len();
        let bm = actions[0];
        let mut pairs = [(0.0, 0.0); 8];
        let mut spill = Vec::new();
        let pairs: &mut [(f64, f64)] = if reds <= pairs.len() {
            &mut pairs[..reds]
        } else {
            spill.resize(reds, (0.0, 0.0));
            &mut spill
        };
        for j in 0..reds {
            let mr = p.move_counts[j + 1];
            let tr_count = p.type_values[j + 1].len();
            let k = ((bm * mr + actions[j + 1]) * tb_count + types[0]) * tr_count + types[j + 1];
            pairs[j] = (self.beta[j][k], self.rho[j][k]);
        }
        let (blue_win, red_win) = p.combine(pairs);
        let cont = (1.0 - blue_win - red_win).max(0.0);
        if blue_win > 0.0 {
            out.push(Outcome {
                to: Successor::Terminal(BLUE_WIN),
                prob: blue_win,
            });
        }
        if red_win > 0.0 {
            out.push(Outcome {
                to: Successor::Terminal(RED_WIN),
                prob: red_win,
            });
        }
        if cont > 0.0 {
            let raised: usize = state
                + actions
                    .iter()
                    .zip(&self.steps)
                    .map(|(&a, s)| s[a])
                    .sum::<usize>();
            let to = if raised >= p.threshold {
                Successor::Terminal(KINETIC)
            } else {
                Successor::State(raised)
            };
            out.push(Outcome { to, prob: cont });
        }
    }
}

/// Builds the stochastic game with nonterminal states `G_0..G_{K-1}` and
/// terminals blue win, red win and kinetic `G_K`.
pub fn build_game(params: &HostilityGameParams) -> Result<GameSpec> {
    let kernel = HostilityKernel::new(params.clone())?;
    let n = params.num_players();
    let k = params.threshold;
    let players = (0..n)
        .map(|i| if i == 0 { "blue".to_string() } else { format!("red{i}") })
        .collect();
    let states = (0..k)
        .map(|h| StateDef {
            name: format!("G{h}"),
            action_counts: params.move_counts.clone(),
        })
        .collect();
    let terminals = vec![
        Terminal {
            name: "B".into(),
            payoff: TerminalPayoff::Fixed(params.blue_win_payoff.clone()),
        },
        Terminal {
            name: "R".into(),
            payoff: TerminalPayoff::Fixed(params.red_win_payoff.clone()),
        },
        Terminal {
            name: format!("G{k}"),
            payoff: TerminalPayoff::Fixed(params.kinetic_payoff.clone()),
        },
    ];
    let type_counts = params.type_counts();
    Ok(GameSpec {
        players,
        prior: JointTypeBelief::uniform(&type_counts),
        type_counts,
        states,
        terminals,
        root: 0,
        topological_order: (0..k).collect(),
        kernel: Kernel::Hostility(kernel),
    })
}

/// Size knobs for [`generate_synthetic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SizeProfile {
    pub num_reds: usize,
    pub min_actions: usize,
    pub max_actions: usize,
    pub num_types: usize,
    pub threshold: usize,
    pub max_hostility: u32,
}

impl Default for SizeProfile {
    fn default() -> Self {
        Self {
            num_reds: 3,
            min_actions: 7,
            max_actions: 10,
            num_types: 2,
            threshold: 150,
            max_hostility: 3,
        }
    }
}

/// Draws a random but feasible parameter set. Deterministic in `seed`.
pub fn generate_synthetic(seed: u64, profile: &SizeProfile) -> HostilityGameParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = profile.num_reds + 1;
    let lo = profile.min_actions.max(1);
    let hi = profile.max_actions.max(lo);
    let move_counts: Vec<usize> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    let mb = move_counts[0];
    let counters = move_counts[1..]
        .iter()
        .map(|&mr| {
            (0..mr)
                .map(|_| (0..mb).filter(|_| rng.gen_bool(0.3)).collect())
                .collect()
        })
        .collect();
    let mut table = |rows: usize, cols: usize, lo: f64, hi: f64| -> Vec<Vec<f64>> {
        (0..rows)
            .map(|_| (0..cols).map(|_| rng.gen_range(lo..hi)).collect())
            .collect()
    };
    let blue_defended = table(mb, profile.num_reds, 0.15, 0.45);
    let blue_undefended = table(mb, profile.num_reds, 0.03, 0.2);
    let mut red_defended = Vec::new();
    let mut red_undefended = Vec::new();
    for &mr in &move_counts[1..] {
        red_defended.push(table(1, mr, 0.03, 0.2).remove(0));
        red_undefended.push(table(1, mr, 0.15, 0.45).remove(0));
    }
    let hostility = move_counts
        .iter()
        .map(|&m| {
            (0..m)
                .map(|_| rng.gen_range(1..=profile.max_hostility.max(1)) as f64)
                .collect()
        })
        .collect();
    let type_values = vec![(1..=profile.num_types.max(1)).map(|t| t as f64).collect(); n];
    let mut blue_win_payoff = vec![-100.0; n];
    blue_win_payoff[0] = 100.0;
    let red_win_payoff = blue_win_payoff.iter().map(|x| -x).collect();
    let mut params = HostilityGameParams {
        move_counts,
        counters,
        blue_defended,
        blue_undefended,
        red_defended,
        red_undefended,
        hostility,
        threshold: profile.threshold.max(1),
        blue_win_payoff,
        red_win_payoff,
        kinetic_payoff: vec![-200.0; n],
        type_values,
        aggregation: Aggregation::Mean,
    };
    // Shrinking both sides of a pair keeps the typed sums under one.
    while matches!(params.check(), Err(Error::InfeasibleEncounter { .. })) {
        for x in params
            .blue_defended
            .iter_mut()
            .chain(params.blue_undefended.iter_mut())
            .chain(params.red_defended.iter_mut())
            .chain(params.red_undefended.iter_mut())
            .flatten()
        {
            *x *= 0.8;
        }
    }
    params
}
