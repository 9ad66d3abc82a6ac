//! Ready-to-run experiment presets: named, fully specified configurations
//! that reproduce the headline desk-scale phenomena — weak convergence of
//! empirical frequencies alongside cycling play, strong (realized-play)
//! convergence under randomized deliberate rounds, perpetual
//! miscoordination, consensus formation, and mean-centric convergence.
//!
//! Each preset builds an [`ExperimentConfig`] that passes validation as-is;
//! callers may override horizon, seeds, or output location before running.

use crate::config::{
    AlgorithmConfig, ExperimentConfig, MetricKind, OutputConfig, RhoSpec, VariantConfig,
    VariantKind,
};
use crate::game::TieBreak;
use crate::schedule::{DecaySchedule, RhoFamily};

/// A named experiment configuration factory.
pub struct ExperimentPreset {
    pub name: &'static str,
    pub summary: &'static str,
    pub build: fn() -> ExperimentConfig,
}

pub const EXPERIMENT_PRESETS: &[ExperimentPreset] = &[
    ExperimentPreset {
        name: "classical-fp-mp",
        summary: "classical play on matching pennies: beliefs reach the mixed \
                  equilibrium while the played actions keep cycling",
        build: classical_fp_mp,
    },
    ExperimentPreset {
        name: "strong-fp-mp",
        summary: "randomized deliberate rounds (rate t^-0.35) on matching \
                  pennies: realized mixed play itself converges",
        build: strong_fp_mp,
    },
    ExperimentPreset {
        name: "strong-fp-mp-rho-half",
        summary: "strong variant on matching pennies with the slower t^-0.5 \
                  activation rate",
        build: strong_fp_mp_rho_half,
    },
    ExperimentPreset {
        name: "gwfp-mp",
        summary: "geometrically weighted play (step 1/t, slack 1/t) on \
                  matching pennies",
        build: gwfp_mp,
    },
    ExperimentPreset {
        name: "strong-gwfp-mp",
        summary: "strong variant of geometrically weighted play (step t^-0.7, \
                  slack 1/t, rate t^-0.35) on matching pennies",
        build: strong_gwfp_mp,
    },
    ExperimentPreset {
        name: "ecfp-consensus-3p",
        summary: "centroid-prediction play on the three-player coordination \
                  game: the average belief reaches the consensus set",
        build: ecfp_consensus_3p,
    },
    ExperimentPreset {
        name: "strong-ecfp-consensus-3p",
        summary: "strong variant of centroid-prediction play on the \
                  three-player coordination game",
        build: strong_ecfp_consensus_3p,
    },
    ExperimentPreset {
        name: "ecfp-mce-3p",
        summary: "centroid-prediction play scored against the mean-centric \
                  residual on the three-player coordination game",
        build: ecfp_mce_3p,
    },
    ExperimentPreset {
        name: "miscoordination-probe",
        summary: "deterministic play on the crossed coordination game from a \
                  symmetric start: players mismatch on every single round",
        build: miscoordination_probe_preset,
    },
];

/// Builds the named preset, if it exists.
pub fn experiment_preset(name: &str) -> Option<ExperimentConfig> {
    EXPERIMENT_PRESETS
        .iter()
        .find(|p| p.name == name)
        .map(|p| (p.build)())
}

pub fn experiment_preset_names() -> Vec<&'static str> {
    EXPERIMENT_PRESETS.iter().map(|p| p.name).collect()
}

fn base_config(name: &str, game: &str, preset: &str, horizon: usize) -> ExperimentConfig {
    ExperimentConfig {
        name: Some(name.to_owned()),
        game: Some(game.to_owned()),
        game_file: None,
        horizon,
        seeds: Some(vec![0]),
        seed_count: None,
        tie_break: TieBreak::LowestIndex,
        initial_actions: None,
        metric: None,
        g_metric: None,
        algorithm: AlgorithmConfig {
            preset: preset.to_owned(),
            gamma: None,
            epsilon: None,
        },
        variant: VariantConfig::default(),
        output: OutputConfig::default(),
    }
}

fn strongify(mut config: ExperimentConfig, exponent: f64, seeds: u64) -> ExperimentConfig {
    config.seeds = None;
    config.seed_count = Some(seeds);
    config.variant = VariantConfig {
        kind: VariantKind::Strong,
        rho: Some(RhoSpec::Uniform(
            RhoFamily::power(1.0, exponent).expect("preset rate family is valid"),
        )),
        eta: None,
    };
    config
}

fn classical_fp_mp() -> ExperimentConfig {
    base_config("classical-fp-mp", "matching-pennies", "classical-fp", 100_000)
}

fn strong_fp_mp() -> ExperimentConfig {
    strongify(classical_fp_mp(), 0.35, 20).named("strong-fp-mp")
}

fn strong_fp_mp_rho_half() -> ExperimentConfig {
    strongify(classical_fp_mp(), 0.5, 20).named("strong-fp-mp-rho-half")
}

fn gwfp_mp() -> ExperimentConfig {
    base_config("gwfp-mp", "matching-pennies", "gwfp", 100_000)
}

fn strong_gwfp_mp() -> ExperimentConfig {
    let mut config = strongify(gwfp_mp(), 0.35, 20).named("strong-gwfp-mp");
    config.algorithm.gamma = Some(DecaySchedule::PowerLaw { exponent: 0.7 });
    config.algorithm.epsilon = Some(DecaySchedule::InverseT);
    config
}

fn ecfp_consensus_3p() -> ExperimentConfig {
    let mut config = base_config(
        "ecfp-consensus-3p",
        "coordination-three",
        "ecfp-consensus",
        100_000,
    );
    // An asymmetric start; a unanimous one would coordinate instantly.
    config.initial_actions = Some(vec![0, 1, 1]);
    config
}

fn strong_ecfp_consensus_3p() -> ExperimentConfig {
    let mut config = strongify(ecfp_consensus_3p(), 0.35, 20).named("strong-ecfp-consensus-3p");
    // Score realized play by how close it is to being a consensus
    // equilibrium, not merely by distance to the certified set.
    config.g_metric = Some(MetricKind::NashConsensusResidual);
    config
}

fn ecfp_mce_3p() -> ExperimentConfig {
    let mut config = base_config("ecfp-mce-3p", "coordination-three", "ecfp-mce", 100_000);
    config.initial_actions = Some(vec![0, 1, 1]);
    config
}

fn miscoordination_probe_preset() -> ExperimentConfig {
    let mut config = base_config(
        "miscoordination-probe",
        "crossed-coordination",
        "classical-fp",
        10_000,
    );
    config.initial_actions = Some(vec![0, 0]);
    config
}

trait Named {
    fn named(self, name: &str) -> Self;
}

impl Named for ExperimentConfig {
    fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_owned());
        self
    }
}
