//! Experiment configuration: the human-editable TOML schema, its
//! validation rules, and the fully resolved form the runner consumes.
//!
//! Validation is front-loaded: every structural problem — unknown preset,
//! rate schedule violating a certificate condition, metric incompatible
//! with the game — is reported before any simulation starts.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithm::{AlgorithmError, AlgorithmSpec, TargetSet};
use crate::equilibrium::MAX_ENUMERATION_ACTIONS;
use crate::game::{ActionId, NormalFormGame, TieBreak};
use crate::games::{builtin, builtin_names, load_game_file, GameFileError};
use crate::schedule::{
    validate_rho_schedule, CheckStatus, DecaySchedule, RhoFamily, RhoSchedule, ScheduleError,
};
use crate::strong::StrongConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("could not read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] Box<toml::de::Error>),
    #[error("config must name a game (`game = \"…\"`) or a game file (`game_file = \"…\"`)")]
    MissingGame,
    #[error("config sets both `game` and `game_file`; pick one")]
    TwoGameSources,
    #[error("unknown built-in game {name:?}; available: {available}")]
    UnknownGame { name: String, available: String },
    #[error("horizon must be at least 2; got {0}")]
    HorizonTooShort(usize),
    #[error("config sets both `seeds` and `seed_count`; pick one")]
    TwoSeedSources,
    #[error("seed list must be nonempty")]
    NoSeeds,
    #[error("initial_actions lists {got} actions, game has {expected} players")]
    InitialActionCount { expected: usize, got: usize },
    #[error("initial action {action} out of range for player {player} ({limit} actions)")]
    InitialActionRange {
        player: usize,
        action: ActionId,
        limit: usize,
    },
    #[error("`{field}` override does not apply to the {preset:?} preset")]
    OverrideNotApplicable {
        field: &'static str,
        preset: String,
    },
    #[error("strong variant requires an activation-rate schedule (`[variant.rho]`)")]
    RhoRequired,
    #[error("`{0}` is only meaningful for the strong variant")]
    VariantFieldNotApplicable(&'static str),
    #[error("activation-rate schedule violates the {check} condition ({status:?}): {notes}")]
    RateCondition {
        check: String,
        status: CheckStatus,
        notes: String,
    },
    #[error("metric {metric:?} unsupported here: {reason}")]
    MetricUnsupported { metric: MetricKind, reason: String },
    #[error(transparent)]
    GameFile(#[from] GameFileError),
    #[error(transparent)]
    Game(#[from] crate::game::GameError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Which equilibrium statistic the per-round metric columns report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Euclidean distance to the enumerated Nash set (2-player games).
    NashDistance,
    /// Euclidean distance to the grid-certified consensus Nash set.
    ConsensusDistance,
    /// max(Nash residual, consensus defect): how far from a consensus NE.
    NashConsensusResidual,
    /// Mean-centric residual.
    MceResidual,
}

impl MetricKind {
    /// The metric a preset's convergence target naturally reports.
    pub fn for_target(target: TargetSet) -> MetricKind {
        match target {
            TargetSet::Nash => MetricKind::NashDistance,
            TargetSet::ConsensusNash => MetricKind::ConsensusDistance,
            TargetSet::MeanCentric => MetricKind::MceResidual,
        }
    }

    /// The name used in config files.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::NashDistance => "nash-distance",
            MetricKind::ConsensusDistance => "consensus-distance",
            MetricKind::NashConsensusResidual => "nash-consensus-residual",
            MetricKind::MceResidual => "mce-residual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantKind {
    #[default]
    Base,
    Strong,
}

/// Activation rates: one family for everyone, or one per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoSpec {
    PerPlayer { per_player: Vec<RhoFamily> },
    Uniform(RhoFamily),
}

impl RhoSpec {
    fn to_schedule(&self, players: usize) -> Result<RhoSchedule, ScheduleError> {
        match self {
            RhoSpec::Uniform(family) => RhoSchedule::uniform(family.clone(), players),
            RhoSpec::PerPlayer { per_player } => {
                let schedule = RhoSchedule::per_player(per_player.clone())?;
                schedule.check_players(players)?;
                Ok(schedule)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    /// One of the algorithm presets (`fplab list` shows them).
    pub preset: String,
    /// Step-size override; applies to the gwfp preset only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<DecaySchedule>,
    /// Best-response slack ε(t) override.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<DecaySchedule>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    #[serde(default)]
    pub kind: VariantKind,
    /// Deliberate-activation rates ρ_i(t); required for strong runs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho: Option<RhoSpec>,
    /// Extra best-response slack η(t); defaults to zero.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta: Option<DecaySchedule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Where artifacts go; `None` keeps everything in memory.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dir: Option<PathBuf>,
    /// Write one CSV trace per seed (summaries are always produced).
    #[serde(default = "default_true")]
    pub write_traces: bool,
}

fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            write_traces: true,
        }
    }
}

/// The on-disk experiment description. All optional fields have
/// documented defaults; `validate` resolves them into a
/// [`ResolvedExperiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub name: Option<String>,
    /// Built-in game name.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub game: Option<String>,
    /// Or a TOML game file.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub game_file: Option<PathBuf>,
    pub horizon: usize,
    /// Explicit seed list…
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seeds: Option<Vec<u64>>,
    /// …or a count, meaning seeds 0..count. Default: one seed, 0.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed_count: Option<u64>,
    #[serde(default)]
    pub tie_break: TieBreak,
    /// Round-1 action per player; defaults to action 0 for everyone.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub initial_actions: Option<Vec<ActionId>>,
    /// Metric for the ξ(t) column; defaults to the preset target's metric.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metric: Option<MetricKind>,
    /// Metric for the g(t) column; defaults to `metric`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub g_metric: Option<MetricKind>,
    pub algorithm: AlgorithmConfig,
    #[serde(default)]
    pub variant: VariantConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A validated, fully explicit experiment ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedExperiment {
    pub name: String,
    pub game: NormalFormGame,
    pub spec: AlgorithmSpec,
    /// `None` runs the base algorithm; `Some` wraps it.
    pub strong: Option<StrongConfig>,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub tie_break: TieBreak,
    pub initial_actions: Vec<ActionId>,
    pub xi_metric: MetricKind,
    pub g_metric: MetricKind,
    pub out_dir: Option<PathBuf>,
    pub write_traces: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text).map_err(Box::new)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization is infallible")
    }

    fn resolved_game(&self) -> Result<NormalFormGame, ConfigError> {
        match (&self.game, &self.game_file) {
            (Some(_), Some(_)) => Err(ConfigError::TwoGameSources),
            (None, None) => Err(ConfigError::MissingGame),
            (Some(name), None) => builtin(name).ok_or_else(|| ConfigError::UnknownGame {
                name: name.clone(),
                available: builtin_names().join(", "),
            }),
            (None, Some(path)) => Ok(load_game_file(path)?),
        }
    }

    fn resolved_seeds(&self) -> Result<Vec<u64>, ConfigError> {
        match (&self.seeds, self.seed_count) {
            (Some(_), Some(_)) => Err(ConfigError::TwoSeedSources),
            (Some(list), None) => {
                if list.is_empty() {
                    Err(ConfigError::NoSeeds)
                } else {
                    Ok(list.clone())
                }
            }
            (None, Some(count)) => {
                if count == 0 {
                    Err(ConfigError::NoSeeds)
                } else {
                    Ok((0..count).collect())
                }
            }
            (None, None) => Ok(vec![0]),
        }
    }

    fn resolved_spec(&self) -> Result<AlgorithmSpec, ConfigError> {
        let mut spec = AlgorithmSpec::preset(&self.algorithm.preset)?;
        if let Some(gamma) = self.algorithm.gamma {
            if self.algorithm.preset != "gwfp" {
                return Err(ConfigError::OverrideNotApplicable {
                    field: "algorithm.gamma",
                    preset: self.algorithm.preset.clone(),
                });
            }
            spec = AlgorithmSpec::gwfp(gamma, spec.br_slack)?;
        }
        if let Some(epsilon) = self.algorithm.epsilon {
            spec.br_slack = epsilon;
        }
        Ok(spec)
    }

    fn resolved_variant(
        &self,
        players: usize,
    ) -> Result<Option<StrongConfig>, ConfigError> {
        match self.variant.kind {
            VariantKind::Base => {
                if self.variant.rho.is_some() {
                    return Err(ConfigError::VariantFieldNotApplicable("variant.rho"));
                }
                if self.variant.eta.is_some() {
                    return Err(ConfigError::VariantFieldNotApplicable("variant.eta"));
                }
                Ok(None)
            }
            VariantKind::Strong => {
                let rho_spec = self.variant.rho.as_ref().ok_or(ConfigError::RhoRequired)?;
                let rho = rho_spec.to_schedule(players)?;
                let certificate = validate_rho_schedule(&rho);
                if let Some((check, status)) = certificate.first_problem() {
                    if status == CheckStatus::Fail {
                        return Err(ConfigError::RateCondition {
                            check: check.to_string(),
                            status,
                            notes: certificate.notes.join("; "),
                        });
                    }
                    // NotCertifiable (custom tables) passes validation;
                    // the empirical audit covers it.
                }
                Ok(Some(StrongConfig {
                    rho,
                    eta: self.variant.eta.unwrap_or(DecaySchedule::Zero),
                }))
            }
        }
    }

    fn check_metric(
        &self,
        metric: MetricKind,
        game: &NormalFormGame,
    ) -> Result<(), ConfigError> {
        let unsupported = |reason: &str| ConfigError::MetricUnsupported {
            metric,
            reason: reason.to_string(),
        };
        match metric {
            MetricKind::NashDistance => {
                if game.players() != 2 {
                    return Err(unsupported(
                        "Nash set enumeration handles exactly 2 players",
                    ));
                }
                if game.action_counts().iter().any(|&m| m > MAX_ENUMERATION_ACTIONS) {
                    return Err(unsupported("Nash set enumeration is capped at 6 actions"));
                }
            }
            MetricKind::ConsensusDistance => {
                if !game.has_shared_action_space() {
                    return Err(unsupported("consensus search needs one shared action space"));
                }
                if !game.flags().permutation_invariant {
                    return Err(unsupported(
                        "consensus search needs a permutation-invariant game",
                    ));
                }
            }
            MetricKind::NashConsensusResidual | MetricKind::MceResidual => {
                if !game.has_shared_action_space() {
                    return Err(unsupported("centroids need one shared action space"));
                }
            }
        }
        Ok(())
    }

    /// Validates everything and produces the runnable form.
    pub fn validate(&self) -> Result<ResolvedExperiment, ConfigError> {
        if self.horizon < 2 {
            return Err(ConfigError::HorizonTooShort(self.horizon));
        }
        let game = self.resolved_game()?;
        let seeds = self.resolved_seeds()?;
        let spec = self.resolved_spec()?;
        spec.validate_for(&game)?;
        let strong = self.resolved_variant(game.players())?;

        let initial_actions = match &self.initial_actions {
            Some(actions) => {
                if actions.len() != game.players() {
                    return Err(ConfigError::InitialActionCount {
                        expected: game.players(),
                        got: actions.len(),
                    });
                }
                for (player, (&action, &limit)) in
                    actions.iter().zip(game.action_counts()).enumerate()
                {
                    if action >= limit {
                        return Err(ConfigError::InitialActionRange {
                            player,
                            action,
                            limit,
                        });
                    }
                }
                actions.clone()
            }
            None => vec![0; game.players()],
        };

        let xi_metric = self
            .metric
            .unwrap_or_else(|| MetricKind::for_target(spec.target));
        let g_metric = self.g_metric.unwrap_or(xi_metric);
        self.check_metric(xi_metric, &game)?;
        self.check_metric(g_metric, &game)?;

        Ok(ResolvedExperiment {
            name: self
                .name
                .clone()
                .unwrap_or_else(|| format!("{}-experiment", self.algorithm.preset)),
            game,
            spec,
            strong,
            horizon: self.horizon,
            seeds,
            tie_break: self.tie_break,
            initial_actions,
            xi_metric,
            g_metric,
            out_dir: self.output.dir.clone(),
            write_traces: self.output.write_traces,
        })
    }
}

impl ResolvedExperiment {
    /// Reconstructs a fully explicit config (every default filled in),
    /// suitable for echoing next to artifacts and for byte-identical
    /// replay.
    pub fn to_config(&self, original: &ExperimentConfig) -> ExperimentConfig {
        let mut echo = original.clone();
        echo.name = Some(self.name.clone());
        echo.seeds = Some(self.seeds.clone());
        echo.seed_count = None;
        echo.initial_actions = Some(self.initial_actions.clone());
        echo.metric = Some(self.xi_metric);
        echo.g_metric = Some(self.g_metric);
        echo.output = OutputConfig {
            dir: self.out_dir.clone(),
            write_traces: self.write_traces,
        };
        echo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        game = "matching-pennies"
        horizon = 100

        [algorithm]
        preset = "classical-fp"
    "#;

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let resolved = config.validate().unwrap();
        assert_eq!(resolved.seeds, vec![0]);
        assert_eq!(resolved.tie_break, TieBreak::LowestIndex);
        assert_eq!(resolved.initial_actions, vec![0, 0]);
        assert_eq!(resolved.xi_metric, MetricKind::NashDistance);
        assert_eq!(resolved.g_metric, MetricKind::NashDistance);
        assert!(resolved.strong.is_none());
        assert!(resolved.write_traces);
        assert!(resolved.out_dir.is_none());
    }

    #[test]
    fn strong_config_parses_and_resolves() {
        let text = r#"
            name = "demo"
            game = "matching-pennies"
            horizon = 1000
            seed_count = 4
            tie_break = "random"
            initial_actions = [1, 0]

            [algorithm]
            preset = "classical-fp"

            [variant]
            kind = "strong"

            [variant.rho]
            family = "power"
            scale = 1.0
            exponent = 0.35

            [variant.eta]
            family = "inverse-t"
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        let resolved = config.validate().unwrap();
        assert_eq!(resolved.seeds, vec![0, 1, 2, 3]);
        assert_eq!(resolved.tie_break, TieBreak::Random);
        let strong = resolved.strong.unwrap();
        assert_eq!(strong.rho.players(), 2);
        assert!((strong.rho.value(0, 8).unwrap() - (8f64).powf(-0.35)).abs() < 1e-15);
        assert_eq!(strong.eta, DecaySchedule::InverseT);
    }

    #[test]
    fn per_player_rho_parses() {
        let text = r#"
            game = "matching-pennies"
            horizon = 100

            [algorithm]
            preset = "classical-fp"

            [variant]
            kind = "strong"

            [variant.rho]
            per_player = [
                { family = "power", scale = 1.0, exponent = 0.5 },
                { family = "power", scale = 1.0, exponent = 0.5 },
            ]
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        let resolved = config.validate().unwrap();
        assert_eq!(resolved.strong.unwrap().rho.players(), 2);
    }

    #[test]
    fn divergence_violations_are_config_errors() {
        let text = r#"
            game = "matching-pennies"
            horizon = 100

            [algorithm]
            preset = "classical-fp"

            [variant]
            kind = "strong"

            [variant.rho]
            family = "power"
            scale = 1.0
            exponent = 1.5
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        let err = config.validate().unwrap_err();
        match err {
            ConfigError::RateCondition { check, .. } => {
                assert_eq!(check, crate::schedule::CHECK_RATE_DIVERGENCE)
            }
            other => panic!("expected a rate-condition error, got {other}"),
        }
    }

    #[test]
    fn structural_mistakes_are_rejected() {
        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.horizon = 1;
        assert!(matches!(
            config.validate(),
            Err(ConfigError::HorizonTooShort(1))
        ));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.game = Some("no-such-game".into());
        assert!(matches!(config.validate(), Err(ConfigError::UnknownGame { .. })));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.game = None;
        assert!(matches!(config.validate(), Err(ConfigError::MissingGame)));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.seeds = Some(vec![]);
        assert!(matches!(config.validate(), Err(ConfigError::NoSeeds)));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.seeds = Some(vec![1]);
        config.seed_count = Some(3);
        assert!(matches!(config.validate(), Err(ConfigError::TwoSeedSources)));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.initial_actions = Some(vec![0, 5]);
        assert!(matches!(
            config.validate(),
            Err(ConfigError::InitialActionRange { player: 1, action: 5, .. })
        ));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.algorithm.preset = "mystery".into();
        assert!(matches!(config.validate(), Err(ConfigError::Algorithm(_))));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.algorithm.gamma = Some(DecaySchedule::InverseT);
        assert!(matches!(
            config.validate(),
            Err(ConfigError::OverrideNotApplicable { field: "algorithm.gamma", .. })
        ));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.variant.kind = VariantKind::Strong;
        assert!(matches!(config.validate(), Err(ConfigError::RhoRequired)));

        let mut config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        config.variant.rho = Some(RhoSpec::Uniform(RhoFamily::constant(0.5).unwrap()));
        assert!(matches!(
            config.validate(),
            Err(ConfigError::VariantFieldNotApplicable("variant.rho"))
        ));
    }

    #[test]
    fn metric_compatibility_is_checked_against_the_game() {
        let text = r#"
            game = "coordination-three"
            horizon = 100
            metric = "nash-distance"

            [algorithm]
            preset = "ecfp-consensus"
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        assert!(matches!(
            config.validate(),
            Err(ConfigError::MetricUnsupported { .. })
        ));

        let text = r#"
            game = "matching-pennies"
            horizon = 100
            metric = "consensus-distance"

            [algorithm]
            preset = "classical-fp"
        "#;
        let config = ExperimentConfig::from_toml_str(text).unwrap();
        assert!(matches!(
            config.validate(),
            Err(ConfigError::MetricUnsupported { .. })
        ));
    }

    #[test]
    fn ecfp_targets_pick_their_own_default_metrics() {
        let text = r#"
            game = "coordination-three"
            horizon = 100
            initial_actions = [0, 1, 1]

            [algorithm]
            preset = "ecfp-mce"
        "#;
        let resolved = ExperimentConfig::from_toml_str(text)
            .unwrap()
            .validate()
            .unwrap();
        assert_eq!(resolved.xi_metric, MetricKind::MceResidual);
    }

    #[test]
    fn unknown_fields_are_parse_errors() {
        let text = r#"
            game = "matching-pennies"
            horizon = 100
            banana = true

            [algorithm]
            preset = "classical-fp"
        "#;
        assert!(matches!(
            ExperimentConfig::from_toml_str(text),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn echo_round_trips_and_revalidates() {
        let config = ExperimentConfig::from_toml_str(MINIMAL).unwrap();
        let resolved = config.validate().unwrap();
        let echo = resolved.to_config(&config);
        let text = echo.to_toml_string();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, echo);
        let re = back.validate().unwrap();
        assert_eq!(re.seeds, resolved.seeds);
        assert_eq!(re.initial_actions, resolved.initial_actions);
        assert_eq!(re.xi_metric, resolved.xi_metric);
    }
}
