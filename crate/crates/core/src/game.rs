//! Finite normal-form games and best-response machinery.
//!
//! Utilities are stored as one dense `f64` tensor, player-major and
//! row-major over the joint pure-action multi-index, so a game with action
//! counts `m_1 … m_n` occupies `n · Π m_i` entries. Declared structural
//! flags (zero-sum, permutation-invariant) are verified entry-by-entry at
//! construction rather than trusted.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simplex::{JointStrategy, SimplexVector};

pub type PlayerId = usize;
pub type ActionId = usize;

/// Absolute tolerance for utility comparisons (best-response membership,
/// tie detection).
pub const UTILITY_TIE_TOL: f64 = 1e-12;

/// Absolute tolerance for verifying declared structural flags.
pub const FLAG_CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("a game needs at least one player")]
    NoPlayers,
    #[error("player {player} has {count} actions; every player needs at least 2")]
    TooFewActions { player: PlayerId, count: usize },
    #[error("utility tensor for player {player} has {got} entries, expected {expected}")]
    DimensionMismatch {
        player: PlayerId,
        expected: usize,
        got: usize,
    },
    #[error("utility {value} for player {player} is not finite")]
    NonFiniteUtility { player: PlayerId, value: f64 },
    #[error("declared zero-sum, but utilities at joint action {joint:?} sum to {sum}")]
    NotZeroSum { joint: Vec<ActionId>, sum: f64 },
    #[error("declared permutation-invariant, but that requires a shared action space (player 0 has {0} actions, player {2} has {1})")]
    PermutationNeedsSharedActions(usize, usize, PlayerId),
    #[error("declared permutation-invariant, but players {i} and {j} disagree at joint action {joint:?}")]
    NotPermutationInvariant {
        i: PlayerId,
        j: PlayerId,
        joint: Vec<ActionId>,
    },
    #[error("player index {player} out of range for a {players}-player game")]
    PlayerOutOfRange { player: PlayerId, players: usize },
    #[error("action index {action} out of range for player {player} ({count} actions)")]
    ActionOutOfRange {
        player: PlayerId,
        action: ActionId,
        count: usize,
    },
    #[error("profile shape {got:?} does not match the game's action counts {expected:?}")]
    ProfileShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("opponent profile has {got} components, expected {expected}")]
    OpponentCountMismatch { expected: usize, got: usize },
    #[error("best-response slack must be non-negative and finite, got {0}")]
    NegativeSlack(f64),
    #[error("action names for player {player} have {got} entries, expected {expected}")]
    NameCountMismatch {
        player: PlayerId,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Simplex(#[from] crate::simplex::SimplexError),
}

/// Structural properties a game may declare; each declared flag is
/// brute-force verified over the whole tensor at construction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameFlags {
    pub zero_sum: bool,
    pub permutation_invariant: bool,
}

/// Deterministic or randomized resolution of best-response ties.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Always the lowest action index in the tied set (the default).
    #[default]
    LowestIndex,
    /// Uniform draw from the tied set using the caller's tie-break stream.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame {
    players: usize,
    action_counts: Vec<usize>,
    action_names: Vec<Vec<String>>,
    /// Player-major, then row-major over the joint multi-index.
    utilities: Vec<f64>,
    strides: Vec<usize>,
    joint_count: usize,
    flags: GameFlags,
}

impl NormalFormGame {
    /// Builds a game from per-player action counts and one utility slice per
    /// player (each row-major over the joint action space).
    pub fn new(
        action_counts: Vec<usize>,
        per_player_utilities: Vec<Vec<f64>>,
        flags: GameFlags,
    ) -> Result<Self, GameError> {
        if action_counts.is_empty() {
            return Err(GameError::NoPlayers);
        }
        for (player, &count) in action_counts.iter().enumerate() {
            if count < 2 {
                return Err(GameError::TooFewActions { player, count });
            }
        }
        let players = action_counts.len();
        if per_player_utilities.len() != players {
            return Err(GameError::DimensionMismatch {
                player: per_player_utilities.len().min(players),
                expected: players,
                got: per_player_utilities.len(),
            });
        }
        let joint_count: usize = action_counts.iter().product();
        let mut utilities = Vec::with_capacity(players * joint_count);
        for (player, chunk) in per_player_utilities.into_iter().enumerate() {
            if chunk.len() != joint_count {
                return Err(GameError::DimensionMismatch {
                    player,
                    expected: joint_count,
                    got: chunk.len(),
                });
            }
            for &value in &chunk {
                if !value.is_finite() {
                    return Err(GameError::NonFiniteUtility { player, value });
                }
            }
            utilities.extend(chunk);
        }
        // Row-major strides over the joint index.
        let mut strides = vec![1usize; players];
        for i in (0..players.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * action_counts[i + 1];
        }
        let action_names = action_counts
            .iter()
            .map(|&m| (0..m).map(|a| a.to_string()).collect())
            .collect();
        let game = NormalFormGame {
            players,
            action_counts,
            action_names,
            utilities,
            strides,
            joint_count,
            flags,
        };
        game.verify_flags()?;
        Ok(game)
    }

    /// Replaces the default numeric action labels.
    pub fn with_action_names(mut self, names: Vec<Vec<String>>) -> Result<Self, GameError> {
        if names.len() != self.players {
            return Err(GameError::NameCountMismatch {
                player: 0,
                expected: self.players,
                got: names.len(),
            });
        }
        for (player, list) in names.iter().enumerate() {
            if list.len() != self.action_counts[player] {
                return Err(GameError::NameCountMismatch {
                    player,
                    expected: self.action_counts[player],
                    got: list.len(),
                });
            }
        }
        self.action_names = names;
        Ok(self)
    }

    fn verify_flags(&self) -> Result<(), GameError> {
        if self.flags.zero_sum {
            for joint in 0..self.joint_count {
                let sum: f64 = (0..self.players)
                    .map(|i| self.utilities[i * self.joint_count + joint])
                    .sum();
                if sum.abs() > FLAG_CHECK_TOL {
                    return Err(GameError::NotZeroSum {
                        joint: self.unravel(joint),
                        sum,
                    });
                }
            }
        }
        if self.flags.permutation_invariant {
            let m = self.action_counts[0];
            for (player, &count) in self.action_counts.iter().enumerate() {
                if count != m {
                    return Err(GameError::PermutationNeedsSharedActions(m, count, player));
                }
            }
            // Identical utilities across players, and invariance of that
            // shared utility under swapping any two coordinates of the
            // joint action. Pairwise swaps generate all permutations.
            for joint in 0..self.joint_count {
                let y = self.unravel(joint);
                let u0 = self.utilities[joint];
                for i in 1..self.players {
                    let ui = self.utilities[i * self.joint_count + joint];
                    if (ui - u0).abs() > FLAG_CHECK_TOL {
                        return Err(GameError::NotPermutationInvariant { i: 0, j: i, joint: y });
                    }
                }
                for i in 0..self.players {
                    for j in (i + 1)..self.players {
                        let mut swapped = y.clone();
                        swapped.swap(i, j);
                        let us = self.utilities[self.ravel(&swapped)];
                        if (us - u0).abs() > FLAG_CHECK_TOL {
                            return Err(GameError::NotPermutationInvariant { i, j, joint: y });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    pub fn action_count(&self, player: PlayerId) -> usize {
        self.action_counts[player]
    }

    pub fn action_names(&self, player: PlayerId) -> &[String] {
        &self.action_names[player]
    }

    pub fn flags(&self) -> GameFlags {
        self.flags
    }

    pub fn joint_action_count(&self) -> usize {
        self.joint_count
    }

    fn ravel(&self, joint: &[ActionId]) -> usize {
        joint
            .iter()
            .zip(&self.strides)
            .map(|(&a, &s)| a * s)
            .sum()
    }

    fn unravel(&self, mut index: usize) -> Vec<ActionId> {
        let mut joint = vec![0; self.players];
        for i in 0..self.players {
            joint[i] = index / self.strides[i];
            index %= self.strides[i];
        }
        joint
    }

    /// Utility of `player` at a joint pure action.
    pub fn utility(&self, player: PlayerId, joint: &[ActionId]) -> Result<f64, GameError> {
        self.check_player(player)?;
        if joint.len() != self.players {
            return Err(GameError::ProfileShapeMismatch {
                expected: self.action_counts.clone(),
                got: joint.iter().map(|&a| a + 1).collect(),
            });
        }
        for (p, (&a, &m)) in joint.iter().zip(&self.action_counts).enumerate() {
            if a >= m {
                return Err(GameError::ActionOutOfRange {
                    player: p,
                    action: a,
                    count: m,
                });
            }
        }
        Ok(self.utilities[player * self.joint_count + self.ravel(joint)])
    }

    fn check_player(&self, player: PlayerId) -> Result<(), GameError> {
        if player >= self.players {
            return Err(GameError::PlayerOutOfRange {
                player,
                players: self.players,
            });
        }
        Ok(())
    }

    /// Expected utility of `player` when everyone mixes independently.
    pub fn mixed_utility(&self, player: PlayerId, profile: &JointStrategy) -> Result<f64, GameError> {
        self.check_player(player)?;
        if profile.shape() != self.action_counts {
            return Err(GameError::ProfileShapeMismatch {
                expected: self.action_counts.clone(),
                got: profile.shape(),
            });
        }
        let base = player * self.joint_count;
        let mut total = 0.0;
        let mut joint = vec![0usize; self.players];
        for index in 0..self.joint_count {
            let mut weight = 1.0;
            for (i, &a) in joint.iter().enumerate() {
                weight *= profile.component(i).get(a);
            }
            if weight != 0.0 {
                total += weight * self.utilities[base + index];
            }
            // Odometer increment over the joint multi-index.
            for i in (0..self.players).rev() {
                joint[i] += 1;
                if joint[i] < self.action_counts[i] {
                    break;
                }
                joint[i] = 0;
            }
        }
        Ok(total)
    }

    fn check_opponents(&self, player: PlayerId, opponents: &[&SimplexVector]) -> Result<(), GameError> {
        if opponents.len() != self.players - 1 {
            return Err(GameError::OpponentCountMismatch {
                expected: self.players - 1,
                got: opponents.len(),
            });
        }
        for (slot, strategy) in opponents.iter().enumerate() {
            let opponent = if slot < player { slot } else { slot + 1 };
            if strategy.len() != self.action_counts[opponent] {
                return Err(GameError::ProfileShapeMismatch {
                    expected: self.action_counts.clone(),
                    got: opponents.iter().map(|s| s.len()).collect(),
                });
            }
        }
        Ok(())
    }

    /// Expected utility to `player` of each of their pure actions against an
    /// opponent profile (components ordered by opponent index, skipping
    /// `player`).
    pub fn action_values(
        &self,
        player: PlayerId,
        opponents: &[&SimplexVector],
    ) -> Result<Vec<f64>, GameError> {
        self.check_player(player)?;
        self.check_opponents(player, opponents)?;
        let m = self.action_counts[player];
        let base = player * self.joint_count;
        let mut values = vec![0.0; m];
        // Odometer over the opponents' joint actions; own action injected
        // via the precomputed stride.
        let opp_players: Vec<usize> = (0..self.players).filter(|&j| j != player).collect();
        let mut opp_joint = vec![0usize; opp_players.len()];
        loop {
            let mut weight = 1.0;
            let mut partial_index = 0usize;
            for (slot, &j) in opp_players.iter().enumerate() {
                weight *= opponents[slot].get(opp_joint[slot]);
                partial_index += opp_joint[slot] * self.strides[j];
            }
            if weight != 0.0 {
                for (a, value) in values.iter_mut().enumerate() {
                    *value += weight * self.utilities[base + partial_index + a * self.strides[player]];
                }
            }
            let mut advanced = false;
            for slot in (0..opp_players.len()).rev() {
                opp_joint[slot] += 1;
                if opp_joint[slot] < self.action_counts[opp_players[slot]] {
                    advanced = true;
                    break;
                }
                opp_joint[slot] = 0;
            }
            if !advanced {
                break;
            }
        }
        Ok(values)
    }

    /// Best-response value `v_i(p_{−i})`: the maximum over pure actions,
    /// which by linearity equals the maximum over all mixed replies.
    pub fn best_response_value(
        &self,
        player: PlayerId,
        opponents: &[&SimplexVector],
    ) -> Result<f64, GameError> {
        Ok(self
            .action_values(player, opponents)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// The ε-best-response set: pure actions whose value is within `slack`
    /// of the best, compared at absolute tolerance [`UTILITY_TIE_TOL`].
    /// Never empty.
    pub fn epsilon_best_response_set(
        &self,
        player: PlayerId,
        opponents: &[&SimplexVector],
        slack: f64,
    ) -> Result<Vec<ActionId>, GameError> {
        if !slack.is_finite() || slack < 0.0 {
            return Err(GameError::NegativeSlack(slack));
        }
        let values = self.action_values(player, opponents)?;
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= best - slack - UTILITY_TIE_TOL)
            .map(|(a, _)| a)
            .collect())
    }

    /// Picks one element of the ε-best-response set under the given
    /// tie-break policy. The RNG is consulted only when the policy is
    /// [`TieBreak::Random`] and the set has more than one element.
    pub fn select_best_response<R: Rng>(
        &self,
        player: PlayerId,
        opponents: &[&SimplexVector],
        slack: f64,
        tie_break: TieBreak,
        rng: &mut R,
    ) -> Result<ActionId, GameError> {
        let set = self.epsilon_best_response_set(player, opponents, slack)?;
        debug_assert!(!set.is_empty());
        Ok(match tie_break {
            TieBreak::LowestIndex => set[0],
            TieBreak::Random => {
                if set.len() == 1 {
                    set[0]
                } else {
                    set[rng.gen_range(0..set.len())]
                }
            }
        })
    }

    /// All joint pure actions that are Nash equilibria (no unilateral
    /// improvement by more than [`UTILITY_TIE_TOL`]).
    pub fn pure_nash_profiles(&self) -> Vec<Vec<ActionId>> {
        let mut out = Vec::new();
        'joint: for index in 0..self.joint_count {
            let joint = self.unravel(index);
            for player in 0..self.players {
                let here = self.utilities[player * self.joint_count + index];
                for a in 0..self.action_counts[player] {
                    if a == joint[player] {
                        continue;
                    }
                    let deviated =
                        index - joint[player] * self.strides[player] + a * self.strides[player];
                    if self.utilities[player * self.joint_count + deviated]
                        > here + UTILITY_TIE_TOL
                    {
                        continue 'joint;
                    }
                }
            }
            out.push(joint);
        }
        out
    }

    /// True when all players receive identical utilities at every joint
    /// action (within [`FLAG_CHECK_TOL`]).
    pub fn is_identical_interest(&self) -> bool {
        (0..self.joint_count).all(|joint| {
            let u0 = self.utilities[joint];
            (1..self.players)
                .all(|i| (self.utilities[i * self.joint_count + joint] - u0).abs() <= FLAG_CHECK_TOL)
        })
    }

    /// True when every player has the same number of actions.
    pub fn has_shared_action_space(&self) -> bool {
        self.action_counts.iter().all(|&m| m == self.action_counts[0])
    }

    pub fn min_utility(&self, player: PlayerId) -> f64 {
        let base = player * self.joint_count;
        self.utilities[base..base + self.joint_count]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_utility(&self) -> f64 {
        self.utilities.iter().fold(0.0f64, |m, &u| m.max(u.abs()))
    }
}

/// Borrowed view of the opponents of one player, ordered by player index
/// with the player's own slot removed.
pub fn opponents_of<'a>(profile: &'a JointStrategy, player: PlayerId) -> Vec<&'a SimplexVector> {
    profile
        .components()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != player)
        .map(|(_, s)| s)
        .collect()
}
