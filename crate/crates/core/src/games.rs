//! Built-in demonstration games and the game-file format.
//!
//! The catalog carries a one-line provenance note per game explaining why
//! that exact matrix is shipped; the miscoordination witness in particular
//! was pinned by a brute-force search (see `crossed_coordination`).

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::game::{GameError, GameFlags, NormalFormGame};

#[derive(Debug, Error)]
pub enum GameFileError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("player count {players} does not match {got} action lists")]
    PlayerCountMismatch { players: usize, got: usize },
    #[error("utility table for player {0} listed more than once")]
    DuplicatePlayer(usize),
    #[error("missing utility table for player {0}")]
    MissingPlayer(usize),
    #[error("player index {0} out of range (1..={1}; player indices in game files are 1-based)")]
    PlayerIndexOutOfRange(usize, usize),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// On-disk game description: key/value header plus one utility table per
/// player, row-major over the joint action space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameFile {
    pub name: String,
    pub players: usize,
    /// Action names per player; the lengths define the action counts.
    pub actions: Vec<Vec<String>>,
    #[serde(default)]
    pub zero_sum: bool,
    #[serde(default)]
    pub permutation_invariant: bool,
    #[serde(rename = "utility")]
    pub utilities: Vec<UtilityTable>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UtilityTable {
    /// 1-based player index.
    pub player: usize,
    pub values: Vec<f64>,
}

impl GameFile {
    pub fn to_game(&self) -> Result<NormalFormGame, GameFileError> {
        if self.actions.len() != self.players {
            return Err(GameFileError::PlayerCountMismatch {
                players: self.players,
                got: self.actions.len(),
            });
        }
        let mut per_player: Vec<Option<Vec<f64>>> = vec![None; self.players];
        for table in &self.utilities {
            if table.player == 0 || table.player > self.players {
                return Err(GameFileError::PlayerIndexOutOfRange(table.player, self.players));
            }
            let slot = &mut per_player[table.player - 1];
            if slot.is_some() {
                return Err(GameFileError::DuplicatePlayer(table.player));
            }
            *slot = Some(table.values.clone());
        }
        let mut utilities = Vec::with_capacity(self.players);
        for (i, slot) in per_player.into_iter().enumerate() {
            utilities.push(slot.ok_or(GameFileError::MissingPlayer(i + 1))?);
        }
        let counts = self.actions.iter().map(Vec::len).collect();
        let flags = GameFlags {
            zero_sum: self.zero_sum,
            permutation_invariant: self.permutation_invariant,
        };
        Ok(NormalFormGame::new(counts, utilities, flags)?
            .with_action_names(self.actions.clone())?)
    }
}

/// Loads and validates a TOML game file.
pub fn load_game_file(path: &Path) -> Result<NormalFormGame, GameFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| GameFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: GameFile = toml::from_str(&text).map_err(|source| GameFileError::Parse {
        path: path.display().to_string(),
        source: Box::new(source),
    })?;
    file.to_game()
}

/// Catalog entry for a built-in game.
pub struct BuiltinGame {
    pub name: &'static str,
    pub summary: &'static str,
    /// Why this exact matrix is shipped.
    pub provenance: &'static str,
    pub build: fn() -> NormalFormGame,
}

pub const BUILTIN_GAMES: &[BuiltinGame] = &[
    BuiltinGame {
        name: "matching-pennies",
        summary: "2-player zero-sum, 2 actions (H/T); unique mixed NE at uniform play, value 0",
        provenance: "canonical zero-sum benchmark: empirical frequencies converge under fictitious play while period-by-period play keeps cycling",
        build: matching_pennies,
    },
    BuiltinGame {
        name: "coordination",
        summary: "2-player identical-interest 2x2 coordination: diag payoffs 1 and 2, off-diag 0; 3 NE (two pure, one mixed at ((2/3,1/3),(2/3,1/3)))",
        provenance: "asymmetric-diagonal coordination game used for equilibrium enumeration and consensus-grid demonstrations",
        build: coordination,
    },
    BuiltinGame {
        name: "crossed-coordination",
        summary: "2-player identical-interest 2x2; coordination cells sit OFF the index diagonal (payoff 1), diagonal cells pay 0",
        provenance: "symmetric coordination game with player 2's action labels listed in reverse order, pinned by brute-force search: from the index-miscoordinated start (0,0) under identical lowest-index tie-breaking, fictitious play repeats the minimum-payoff cells forever while empirical frequencies converge to the mixed NE",
        build: crossed_coordination,
    },
    BuiltinGame {
        name: "coordination-three",
        summary: "3-player identical-interest, 2 actions: payoff 1 if everyone plays A, 2 if everyone plays B, else 0; permutation-invariant",
        provenance: "smallest symmetric many-player coordination game exercising centroid-based learning and its consensus/mean-centric target sets",
        build: coordination_three,
    },
];

/// Looks up a built-in game by catalog name.
pub fn builtin(name: &str) -> Option<NormalFormGame> {
    BUILTIN_GAMES
        .iter()
        .find(|b| b.name == name)
        .map(|b| (b.build)())
}

/// Catalog names, in listing order.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN_GAMES.iter().map(|b| b.name).collect()
}

/// Matching pennies. Player 1 wins on a match: u1(H,H)=u1(T,T)=+1,
/// u1(H,T)=u1(T,H)=−1; player 2 gets the negative.
pub fn matching_pennies() -> NormalFormGame {
    let u1 = vec![1.0, -1.0, -1.0, 1.0];
    let u2: Vec<f64> = u1.iter().map(|v| -v).collect();
    NormalFormGame::new(
        vec![2, 2],
        vec![u1, u2],
        GameFlags {
            zero_sum: true,
            permutation_invariant: false,
        },
    )
    .expect("matching pennies is a valid zero-sum game")
    .with_action_names(vec![
        vec!["H".into(), "T".into()],
        vec!["H".into(), "T".into()],
    ])
    .expect("2 names per player")
}

/// Identical-interest coordination with asymmetric diagonal:
/// u(A,A)=1, u(B,B)=2, off-diagonal 0, both players alike.
pub fn coordination() -> NormalFormGame {
    let u = vec![1.0, 0.0, 0.0, 2.0];
    NormalFormGame::new(
        vec![2, 2],
        vec![u.clone(), u],
        GameFlags {
            zero_sum: false,
            permutation_invariant: true,
        },
    )
    .expect("coordination game is valid")
    .with_action_names(vec![
        vec!["A".into(), "B".into()],
        vec!["A".into(), "B".into()],
    ])
    .expect("2 names per player")
}

/// The miscoordination witness: the symmetric unit coordination game with
/// player 2's action labels listed in reverse order, so in index space the
/// payoff matrix is [[0,1],[1,0]] for both players. Pure NE are (0,1) and
/// (1,0); the index-diagonal cells pay the global minimum 0.
///
/// Pinned by a brute-force search over small rational payoffs: under the
/// histogram initialization q_i(1)=a_i(1) and identical deterministic
/// tie-breaking, any identical-interest 2x2 game with EQUAL off-diagonal
/// payoffs mirror-syncs (round 2 is forced to the swapped profile, after
/// which both players face identical decision problems and coordinate from
/// round 3 on). Reversing one player's labels turns that inevitable
/// index-synchrony into perpetual miscoordination at minimum payoff, while
/// empirical frequencies still converge to the mixed NE (uniform, uniform).
pub fn crossed_coordination() -> NormalFormGame {
    let u = vec![0.0, 1.0, 1.0, 0.0];
    NormalFormGame::new(
        vec![2, 2],
        vec![u.clone(), u],
        GameFlags {
            zero_sum: false,
            permutation_invariant: true,
        },
    )
    .expect("crossed coordination game is valid")
    .with_action_names(vec![
        vec!["A".into(), "B".into()],
        vec!["B".into(), "A".into()],
    ])
    .expect("2 names per player")
}

/// 3-player identical-interest coordination: u = 1 when everyone plays
/// action 0 ("A"), u = 2 when everyone plays action 1 ("B"), else 0.
pub fn coordination_three() -> NormalFormGame {
    let mut u = vec![0.0; 8];
    u[0] = 1.0; // (A,A,A)
    u[7] = 2.0; // (B,B,B)
    NormalFormGame::new(
        vec![2, 2, 2],
        vec![u.clone(), u.clone(), u],
        GameFlags {
            zero_sum: false,
            permutation_invariant: true,
        },
    )
    .expect("three-player coordination game is valid")
    .with_action_names(vec![
        vec!["A".into(), "B".into()],
        vec!["A".into(), "B".into()],
        vec!["A".into(), "B".into()],
    ])
    .expect("2 names per player")
}
