//! Learning rules of the fictitious-play family.
//!
//! An algorithm here is a triple of maps: how each player compresses their
//! own action history into an empirical state (`EmpiricalUpdate`), how the
//! joint empirical state turns into the opponent profile a player best
//! responds to (`PredictionMap`), and which statistic of the empirical
//! state is the one claimed to converge (`ConvergenceMap`), together with a
//! best-response slack schedule and the target equilibrium set. The four
//! shipped presets are the classical rule, its geometric-step relaxation,
//! and the two centroid ("consensus") variants that differ only in their
//! convergence map and target.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{opponents_of, ActionId, GameError, NormalFormGame, TieBreak};
use crate::rng::RngBank;
use crate::schedule::{DecaySchedule, ScheduleError};
use crate::simplex::{JointStrategy, SimplexError, SimplexVector};

#[derive(Debug, Error, PartialEq)]
pub enum AlgorithmError {
    #[error("empirical update needs at least one prior round (initialization is q(1) = a(1))")]
    NoPriorRounds,
    #[error("step factor {0} outside (0, 1]")]
    BadStep(f64),
    #[error("centroid-based maps require a shared action space across players")]
    SharedActionSpaceRequired,
    #[error("initial action profile has {got} entries, expected {expected}")]
    InitialActionCount { expected: usize, got: usize },
    #[error("unknown algorithm preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// How one deliberate observation folds into the empirical state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EmpiricalUpdate {
    /// Running average: after `s` recorded rounds the state is the exact
    /// histogram of those rounds.
    ClassicalAverage,
    /// Geometric step toward the played action with step γ(s) at the s-th
    /// recorded round.
    GeometricStep { gamma: DecaySchedule },
}

impl EmpiricalUpdate {
    /// Step factor applied when recording the `count`-th observation
    /// (`count ≥ 2`; the first observation is the initialization itself).
    pub fn step_factor(&self, count: usize) -> Result<f64, AlgorithmError> {
        if count < 2 {
            return Err(AlgorithmError::NoPriorRounds);
        }
        let gamma = match self {
            EmpiricalUpdate::ClassicalAverage => 1.0 / count as f64,
            EmpiricalUpdate::GeometricStep { gamma } => gamma.value(count)?,
        };
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(AlgorithmError::BadStep(gamma));
        }
        Ok(gamma)
    }

    /// Records one observation into `q`. `count` is the number of
    /// observations recorded after this one.
    pub fn apply(
        &self,
        q: &mut SimplexVector,
        action: ActionId,
        count: usize,
    ) -> Result<(), AlgorithmError> {
        let gamma = self.step_factor(count)?;
        q.step_toward_vertex(action, gamma)?;
        Ok(())
    }
}

/// Classical running-average update: `q ← q + (a − q)/(t_prev + 1)`, where
/// `t_prev ≥ 1` is the number of rounds already recorded. Returns the
/// updated vector.
pub fn classical_fp_empirical_update(
    q: &SimplexVector,
    action: ActionId,
    t_prev: usize,
) -> Result<SimplexVector, AlgorithmError> {
    if t_prev == 0 {
        return Err(AlgorithmError::NoPriorRounds);
    }
    let mut next = q.clone();
    EmpiricalUpdate::ClassicalAverage.apply(&mut next, action, t_prev + 1)?;
    Ok(next)
}

/// Geometric-step update `q ← q + γ·(a − q)` with an explicit step factor
/// in (0, 1]. With γ = 1/(t_prev + 1) this reproduces
/// [`classical_fp_empirical_update`] bit for bit — both run the same
/// convex-step arithmetic.
pub fn gwfp_empirical_update(
    q: &SimplexVector,
    action: ActionId,
    gamma: f64,
) -> Result<SimplexVector, AlgorithmError> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(AlgorithmError::BadStep(gamma));
    }
    let mut next = q.clone();
    next.step_toward_vertex(action, gamma)?;
    Ok(next)
}

/// How the joint empirical state becomes the profile a player responds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictionMap {
    /// Respond to the opponents' own empirical states.
    Identity,
    /// Respond to (n−1) copies of the all-player centroid.
    Centroid,
}

/// Per-round prediction context; computes the centroid once per round so
/// every player borrows the same vector.
#[derive(Debug)]
pub struct PredictionContext<'a> {
    q: &'a JointStrategy,
    centroid: Option<SimplexVector>,
}

impl<'a> PredictionContext<'a> {
    pub fn new(map: PredictionMap, q: &'a JointStrategy) -> Result<Self, AlgorithmError> {
        let centroid = match map {
            PredictionMap::Identity => None,
            PredictionMap::Centroid => Some(
                q.centroid()
                    .map_err(|_| AlgorithmError::SharedActionSpaceRequired)?,
            ),
        };
        Ok(PredictionContext { q, centroid })
    }

    /// The opponent profile player `i` best responds to.
    pub fn opponents(&self, player: usize) -> Vec<&SimplexVector> {
        match &self.centroid {
            None => opponents_of(self.q, player),
            Some(c) => vec![c; self.q.players() - 1],
        }
    }

    /// The player's own predicted strategy under the map (their centroid
    /// under the centroid map, their own state otherwise). Used by the
    /// embedded-process diagnostics.
    pub fn own_view(&self, player: usize) -> &SimplexVector {
        match &self.centroid {
            None => self.q.component(player),
            Some(c) => c,
        }
    }
}

/// Centroid of the joint empirical state. Errors unless all players share
/// one action count.
pub fn ecfp_centroid(q: &JointStrategy) -> Result<SimplexVector, AlgorithmError> {
    q.centroid()
        .map_err(|_| AlgorithmError::SharedActionSpaceRequired)
}

/// The opponent profile under the centroid prediction map: (n−1) copies of
/// the centroid, as owned vectors.
pub fn ecfp_prediction(q: &JointStrategy, player: usize) -> Result<Vec<SimplexVector>, AlgorithmError> {
    if player >= q.players() {
        return Err(AlgorithmError::Game(GameError::PlayerOutOfRange {
            player,
            players: q.players(),
        }));
    }
    let c = ecfp_centroid(q)?;
    Ok(vec![c; q.players() - 1])
}

/// Which statistic of the empirical state is tracked for convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceMap {
    /// The joint empirical state itself.
    Identity,
    /// The all-player centroid, replicated to every player.
    Centroid,
}

impl ConvergenceMap {
    pub fn apply(&self, q: &JointStrategy) -> Result<JointStrategy, AlgorithmError> {
        Ok(match self {
            ConvergenceMap::Identity => q.clone(),
            ConvergenceMap::Centroid => {
                let c = ecfp_centroid(q)?;
                JointStrategy::replicate(c, q.players())?
            }
        })
    }
}

/// The consensus convergence map: every player replaced by the centroid.
pub fn ecfp_consensus_convergence_map(q: &JointStrategy) -> Result<JointStrategy, AlgorithmError> {
    ConvergenceMap::Centroid.apply(q)
}

/// The equilibrium notion an algorithm's convergence statistic targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetSet {
    Nash,
    ConsensusNash,
    MeanCentric,
}

/// A complete algorithm description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    pub empirical_update: EmpiricalUpdate,
    pub prediction: PredictionMap,
    pub convergence: ConvergenceMap,
    /// Best-response slack ε(t).
    pub br_slack: DecaySchedule,
    pub target: TargetSet,
}

impl AlgorithmSpec {
    /// Exact fictitious play: running averages, identity maps, no slack.
    pub fn classical_fp() -> Self {
        AlgorithmSpec {
            name: "classical-fp".into(),
            empirical_update: EmpiricalUpdate::ClassicalAverage,
            prediction: PredictionMap::Identity,
            convergence: ConvergenceMap::Identity,
            br_slack: DecaySchedule::Zero,
            target: TargetSet::Nash,
        }
    }

    /// Generalized weakened variant: geometric steps and a vanishing
    /// best-response slack.
    pub fn gwfp(gamma: DecaySchedule, slack: DecaySchedule) -> Result<Self, AlgorithmError> {
        gamma.validate_as_step()?;
        Ok(AlgorithmSpec {
            name: "gwfp".into(),
            empirical_update: EmpiricalUpdate::GeometricStep { gamma },
            prediction: PredictionMap::Identity,
            convergence: ConvergenceMap::Identity,
            br_slack: slack,
            target: TargetSet::Nash,
        })
    }

    /// Centroid prediction and centroid convergence: consensus play
    /// targeting the consensus subset of Nash equilibria.
    pub fn ecfp_consensus(slack: DecaySchedule) -> Self {
        AlgorithmSpec {
            name: "ecfp-consensus".into(),
            empirical_update: EmpiricalUpdate::ClassicalAverage,
            prediction: PredictionMap::Centroid,
            convergence: ConvergenceMap::Centroid,
            br_slack: slack,
            target: TargetSet::ConsensusNash,
        }
    }

    /// Centroid prediction with the identity convergence map: the joint
    /// empirical state itself targets the mean-centric equilibrium set.
    pub fn ecfp_mce(slack: DecaySchedule) -> Self {
        AlgorithmSpec {
            name: "ecfp-mce".into(),
            empirical_update: EmpiricalUpdate::ClassicalAverage,
            prediction: PredictionMap::Centroid,
            convergence: ConvergenceMap::Identity,
            br_slack: slack,
            target: TargetSet::MeanCentric,
        }
    }

    /// Preset registry. `gwfp` defaults to γ(t) = 1/t with slack 1/t; the
    /// centroid presets default to zero slack.
    pub fn preset(name: &str) -> Result<Self, AlgorithmError> {
        match name {
            "classical-fp" => Ok(Self::classical_fp()),
            "gwfp" => Self::gwfp(DecaySchedule::InverseT, DecaySchedule::InverseT),
            "ecfp-consensus" => Ok(Self::ecfp_consensus(DecaySchedule::Zero)),
            "ecfp-mce" => Ok(Self::ecfp_mce(DecaySchedule::Zero)),
            other => Err(AlgorithmError::UnknownPreset(other.to_string())),
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["classical-fp", "gwfp", "ecfp-consensus", "ecfp-mce"]
    }

    /// Mechanical compatibility with a game (centroid maps need a shared
    /// action space).
    pub fn validate_for(&self, game: &NormalFormGame) -> Result<(), AlgorithmError> {
        let needs_centroid = self.prediction == PredictionMap::Centroid
            || self.convergence == ConvergenceMap::Centroid;
        if needs_centroid && !game.has_shared_action_space() {
            return Err(AlgorithmError::SharedActionSpaceRequired);
        }
        if let EmpiricalUpdate::GeometricStep { gamma } = &self.empirical_update {
            gamma.validate_as_step()?;
        }
        Ok(())
    }
}

/// Synchronous state of the base (every-round-deliberate) process.
#[derive(Debug, Clone, PartialEq)]
pub struct FpState {
    /// Rounds completed (the initialization counts as round 1).
    pub round: usize,
    pub q: JointStrategy,
    pub xi: JointStrategy,
}

impl FpState {
    /// Round-1 state: q(1) is the dirac on the initial actions.
    pub fn init(
        spec: &AlgorithmSpec,
        game: &NormalFormGame,
        initial_actions: &[ActionId],
    ) -> Result<Self, AlgorithmError> {
        if initial_actions.len() != game.players() {
            return Err(AlgorithmError::InitialActionCount {
                expected: game.players(),
                got: initial_actions.len(),
            });
        }
        let q = JointStrategy::from_pure_actions(initial_actions, game.action_counts())?;
        let xi = spec.convergence.apply(&q)?;
        Ok(FpState { round: 1, q, xi })
    }
}

/// Advances the base process one round: every player best responds (with
/// slack ε(t) evaluated at the pre-step round) to their predicted opponent
/// profile, all empirical states update synchronously, and the convergence
/// statistic is recomputed. Returns the actions played.
pub fn fp_type_step(
    spec: &AlgorithmSpec,
    game: &NormalFormGame,
    state: &mut FpState,
    tie_break: TieBreak,
    rngs: &mut RngBank,
) -> Result<Vec<ActionId>, AlgorithmError> {
    let t = state.round;
    let eps = spec.br_slack.value(t)?;
    let ctx = PredictionContext::new(spec.prediction, &state.q)?;
    let mut actions = Vec::with_capacity(game.players());
    for i in 0..game.players() {
        let opponents = ctx.opponents(i);
        let a = game.select_best_response(i, &opponents, eps, tie_break, rngs.tie(i))?;
        actions.push(a);
    }
    drop(ctx);
    for (i, &a) in actions.iter().enumerate() {
        spec.empirical_update
            .apply(state.q.component_mut(i), a, t + 1)?;
    }
    state.xi = spec.convergence.apply(&state.q)?;
    state.round = t + 1;
    Ok(actions)
}

/// Raw per-player action log; the oracle form of the empirical state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HistoryBuffer {
    actions: Vec<Vec<ActionId>>,
}

impl HistoryBuffer {
    pub fn new(players: usize) -> Self {
        HistoryBuffer {
            actions: vec![Vec::new(); players],
        }
    }

    pub fn record(&mut self, profile: &[ActionId]) {
        assert_eq!(profile.len(), self.actions.len(), "one action per player");
        for (log, &a) in self.actions.iter_mut().zip(profile) {
            log.push(a);
        }
    }

    pub fn record_for(&mut self, player: usize, action: ActionId) {
        self.actions[player].push(action);
    }

    pub fn rounds(&self, player: usize) -> usize {
        self.actions[player].len()
    }

    pub fn actions(&self, player: usize) -> &[ActionId] {
        &self.actions[player]
    }

    /// Exact action histogram of one player's log.
    pub fn histogram(&self, player: usize, action_count: usize) -> Result<SimplexVector, AlgorithmError> {
        let log = &self.actions[player];
        if log.is_empty() {
            return Err(AlgorithmError::NoPriorRounds);
        }
        let mut counts = vec![0.0; action_count];
        for &a in log {
            counts[a] += 1.0;
        }
        let total = log.len() as f64;
        for c in &mut counts {
            *c /= total;
        }
        Ok(SimplexVector::new(counts)?)
    }
}
