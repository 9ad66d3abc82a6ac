//! Reproducible per-player random streams.
//!
//! Every run derives all of its randomness from one master seed. Each
//! player gets three independent ChaCha8 streams — activation-flag draws,
//! strategy sampling, and tie-breaking — so consuming randomness for one
//! purpose never perturbs another. ChaCha's counter construction makes the
//! streams stable across platforms and releases, which is what lets a rerun
//! of the same (config, seed) reproduce traces byte for byte.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose-specific stream ids; a player's stream number is
/// `player * 3 + purpose`.
const STREAM_FLAG: u64 = 0;
const STREAM_SAMPLE: u64 = 1;
const STREAM_TIE: u64 = 2;

/// The per-player random streams of one run.
#[derive(Debug, Clone)]
pub struct RngBank {
    master_seed: u64,
    flag: Vec<ChaCha8Rng>,
    sample: Vec<ChaCha8Rng>,
    tie: Vec<ChaCha8Rng>,
}

impl RngBank {
    pub fn new(master_seed: u64, players: usize) -> Self {
        let derive = |player: usize, purpose: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
            rng.set_stream(player as u64 * 3 + purpose);
            rng
        };
        RngBank {
            master_seed,
            flag: (0..players).map(|i| derive(i, STREAM_FLAG)).collect(),
            sample: (0..players).map(|i| derive(i, STREAM_SAMPLE)).collect(),
            tie: (0..players).map(|i| derive(i, STREAM_TIE)).collect(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn players(&self) -> usize {
        self.flag.len()
    }

    /// Stream for the player's deliberate-activation coin flips.
    pub fn flag(&mut self, player: usize) -> &mut ChaCha8Rng {
        &mut self.flag[player]
    }

    /// Stream for sampling actions from mixed strategies.
    pub fn sample(&mut self, player: usize) -> &mut ChaCha8Rng {
        &mut self.sample[player]
    }

    /// Stream for randomized best-response tie-breaking.
    pub fn tie(&mut self, player: usize) -> &mut ChaCha8Rng {
        &mut self.tie[player]
    }
}
