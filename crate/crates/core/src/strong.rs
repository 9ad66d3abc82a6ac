//! Randomized wrapper that upgrades weak (time-average) learning to
//! convergence of the period-by-period strategies themselves.
//!
//! Each round, player `i` independently draws a deliberate-activation flag
//! `X_i(t) ~ Bernoulli(ρ_i(t))`. On a deliberate round the player plays a
//! best response to its prediction from the *previous* round's empirical
//! state and folds that action into its empirical state at the incremented
//! deliberate count; otherwise it samples from the previous round's
//! convergence statistic ξ_i and leaves its empirical state untouched. The
//! realized play is then distributed as the mixture
//! `g_i(t) = ρ_i(t)·δ(b_i) + (1−ρ_i(t))·ξ_i(t−1)`, and `g` inherits the
//! convergence of ξ whenever the activation rates vanish slowly enough.
//!
//! We log two variants of the mixture: `g_sampling` (with ξ(t−1), the law
//! the sampler actually draws from) and `g_updated` (with ξ(t), the literal
//! one-line recursion form); they coincide in the limit and the traces
//! carry both so the gap is observable.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algorithm::{AlgorithmError, AlgorithmSpec, PredictionContext, PredictionMap};
use crate::game::{ActionId, GameError, NormalFormGame, PlayerId, TieBreak};
use crate::rng::RngBank;
use crate::schedule::{DecaySchedule, RhoSchedule, ScheduleError};
use crate::simplex::{JointStrategy, SimplexError, SimplexVector};
use crate::trace::TraceRecord;

use rand::Rng;

#[derive(Debug, thiserror::Error)]
pub enum StrongError {
    #[error("activation probability must lie in [0, 1]; got {0}")]
    RhoOutOfRange(f64),
    #[error("rho schedule covers {expected} players, game has {got}")]
    PlayerCountMismatch { expected: usize, got: usize },
    #[error("realized mixed strategy is undefined at round 1: no best response has been computed yet")]
    RoundOne,
    #[error("player index {player} out of range for {players} players")]
    PlayerOutOfRange { player: PlayerId, players: usize },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace rounds must be 1,2,3,…; found {found} at position {position}")]
    NonContiguousTrace { position: usize, found: usize },
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Extra knobs for the wrapper on top of a base algorithm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrongConfig {
    /// Per-player deliberate-activation rates ρ_i(t).
    pub rho: RhoSchedule,
    /// Extra best-response slack η(t) added on top of the base ε(t).
    pub eta: DecaySchedule,
}

impl StrongConfig {
    pub fn uniform(
        rho: crate::schedule::RhoFamily,
        eta: DecaySchedule,
        players: usize,
    ) -> Result<Self, ScheduleError> {
        Ok(StrongConfig {
            rho: RhoSchedule::uniform(rho, players)?,
            eta,
        })
    }
}

/// Full state of a strong-variant run after some round `t`.
#[derive(Debug, Clone)]
pub struct StrongState {
    /// Round counter `t` (1-based; `init` leaves it at 1).
    pub round: usize,
    /// Empirical states q(t), updated only on deliberate rounds.
    pub q: JointStrategy,
    /// Convergence statistic ξ(t) = f^ξ(q(t)).
    pub xi: JointStrategy,
    /// Previous round's statistic ξ(t−1); the sampling distribution for
    /// round t's non-deliberate players and the `g_sampling` ingredient.
    pub xi_prev: JointStrategy,
    /// Deliberate-round counts ℓ_i(t). Initialization counts as deliberate,
    /// so ℓ_i(1) = 1.
    pub ell: Vec<usize>,
    /// This round's activation flags X_i(t).
    pub flags: Vec<bool>,
    /// Actions a_i(t) actually played this round.
    pub actions: Vec<ActionId>,
    /// Best responses b_i(t−1) the deliberate branch would play; `None`
    /// only at round 1, where no prediction exists yet.
    pub br: Vec<Option<ActionId>>,
    /// Effective activation probabilities used this round (1.0 at round 1).
    pub rho_used: Vec<f64>,
}

/// Draws one deliberate-activation flag.
pub fn draw_deliberate_flag(rho: f64, rng: &mut ChaCha8Rng) -> Result<bool, StrongError> {
    if !rho.is_finite() || !(0.0..=1.0).contains(&rho) {
        return Err(StrongError::RhoOutOfRange(rho));
    }
    Ok(rng.gen::<f64>() < rho)
}

impl StrongState {
    /// Round-1 initialization: everyone plays the given action
    /// deliberately (X_i(1) = 1 by construction), the empirical state is
    /// the point mass on it, and ℓ_i(1) = 1.
    pub fn init(
        spec: &AlgorithmSpec,
        game: &NormalFormGame,
        initial_actions: &[ActionId],
    ) -> Result<Self, StrongError> {
        let n = game.players();
        if initial_actions.len() != n {
            return Err(AlgorithmError::InitialActionCount {
                expected: n,
                got: initial_actions.len(),
            }
            .into());
        }
        let q = JointStrategy::from_pure_actions(initial_actions, game.action_counts())?;
        let xi = spec.convergence.apply(&q)?;
        Ok(StrongState {
            round: 1,
            xi_prev: xi.clone(),
            q,
            xi,
            ell: vec![1; n],
            flags: vec![true; n],
            actions: initial_actions.to_vec(),
            br: vec![None; n],
            rho_used: vec![1.0; n],
        })
    }

    /// The mixture distribution each player's round-t action is drawn
    /// from, `g_i(t) = ρ_i(t)·δ(b_i(t−1)) + (1−ρ_i(t))·ξ_i(t−1)`.
    pub fn realized_mixed_strategy(&self) -> Result<JointStrategy, StrongError> {
        self.mixture(&self.xi_prev)
    }

    /// Same mixture re-indexed with the current round's ξ(t); the literal
    /// closed form, logged alongside the sampling law.
    pub fn realized_mixed_strategy_current_xi(&self) -> Result<JointStrategy, StrongError> {
        self.mixture(&self.xi)
    }

    fn mixture(&self, xi: &JointStrategy) -> Result<JointStrategy, StrongError> {
        let mut components = Vec::with_capacity(self.ell.len());
        for (i, slot) in self.br.iter().enumerate() {
            let b = slot.ok_or(StrongError::RoundOne)?;
            components.push(mix_pure(b, xi.component(i), self.rho_used[i])?);
        }
        Ok(JointStrategy::new(components)?)
    }
}

/// `ρ·δ(b) + (1−ρ)·ξ` as a simplex vector.
pub fn mix_pure(b: ActionId, xi: &SimplexVector, rho: f64) -> Result<SimplexVector, StrongError> {
    if !rho.is_finite() || !(0.0..=1.0).contains(&rho) {
        return Err(StrongError::RhoOutOfRange(rho));
    }
    if b >= xi.len() {
        return Err(SimplexError::IndexOutOfRange {
            index: b,
            len: xi.len(),
        }
        .into());
    }
    let mut weights: Vec<f64> = xi.weights().iter().map(|w| (1.0 - rho) * w).collect();
    weights[b] += rho;
    Ok(SimplexVector::new(weights)?)
}

/// Advances a strong-variant run by one round.
///
/// Phase 1 computes every player's ε+η best response from q(t); phase 2
/// draws the flags, realizes actions, and applies the deliberate-count
/// empirical updates; recomputing ξ closes the round.
pub fn strong_step(
    spec: &AlgorithmSpec,
    config: &StrongConfig,
    game: &NormalFormGame,
    state: &mut StrongState,
    tie_break: TieBreak,
    rngs: &mut RngBank,
) -> Result<(), StrongError> {
    let n = game.players();
    if config.rho.players() != n {
        return Err(StrongError::PlayerCountMismatch {
            expected: config.rho.players(),
            got: n,
        });
    }
    let t_prev = state.round;
    let t = t_prev + 1;
    // Best-response slack: the base schedule is indexed by the round the
    // prediction was formed in, the wrapper slack by the round played.
    let slack = spec.br_slack.value(t_prev)? + config.eta.value(t)?;

    let context = PredictionContext::new(spec.prediction, &state.q)?;
    let mut br = Vec::with_capacity(n);
    for i in 0..n {
        let opponents = context.opponents(i);
        br.push(game.select_best_response(i, &opponents, slack, tie_break, rngs.tie(i))?);
    }

    let xi_prev = state.xi.clone();
    let mut actions = Vec::with_capacity(n);
    let mut flags = Vec::with_capacity(n);
    let mut rho_used = Vec::with_capacity(n);
    for i in 0..n {
        let rho = config.rho.value(i, t)?;
        let deliberate = draw_deliberate_flag(rho, rngs.flag(i))?;
        let action = if deliberate {
            state.ell[i] += 1;
            let count = state.ell[i];
            spec.empirical_update
                .apply(state.q.component_mut(i), br[i], count)?;
            br[i]
        } else {
            xi_prev.component(i).sample(rngs.sample(i))
        };
        actions.push(action);
        flags.push(deliberate);
        rho_used.push(rho);
    }

    state.xi = spec.convergence.apply(&state.q)?;
    state.xi_prev = xi_prev;
    state.round = t;
    state.actions = actions;
    state.flags = flags;
    state.rho_used = rho_used;
    state.br = br.into_iter().map(Some).collect();
    Ok(())
}

/// A single player's run viewed on its own deliberate clock.
///
/// Index `s` (0-based here, 1-based in the math) enumerates deliberate
/// rounds; `tau[s]` is the wall-clock round of the s-th deliberate action.
/// On this clock the player's empirical state evolves exactly like a base
/// fictitious-play run, which is what the oracle tests exploit.
#[derive(Debug, Clone)]
pub struct EmbeddedProcess {
    pub player: PlayerId,
    /// τ(s): wall-clock round of the s-th deliberate action; τ(0) = 1.
    pub tau: Vec<usize>,
    /// ã(s): the action taken at τ(s).
    pub actions: Vec<ActionId>,
    /// q̃_i(s): the player's own empirical state right after τ(s).
    pub own_q: Vec<SimplexVector>,
    /// q̂^i(s): the full empirical profile at round τ(s+1) − 1, i.e. what
    /// the player's (s+1)-th deliberate decision was based on. One entry
    /// shorter than `tau`.
    pub cross_q: Vec<JointStrategy>,
    /// p̂^i(s): the prediction formed from `cross_q[s]`, one distribution
    /// per opponent (or per other player under centroid prediction).
    pub predictions: Vec<Vec<SimplexVector>>,
}

/// Reconstructs a player's embedded deliberate-round process from a trace.
pub fn extract_embedded_process(
    trace: &[TraceRecord],
    player: PlayerId,
    prediction: PredictionMap,
) -> Result<EmbeddedProcess, StrongError> {
    validate_trace(trace)?;
    let players = trace[0].flags.len();
    if player >= players {
        return Err(StrongError::PlayerOutOfRange { player, players });
    }
    let mut tau = Vec::new();
    let mut actions = Vec::new();
    let mut own_q = Vec::new();
    for record in trace {
        if record.flags[player] {
            tau.push(record.t);
            actions.push(record.actions[player]);
            own_q.push(record.q.component(player).clone());
        }
    }
    let mut cross_q = Vec::new();
    let mut predictions = Vec::new();
    for window in tau.windows(2) {
        let basis_round = window[1] - 1; // τ(s+1) − 1 ≥ τ(s) ≥ 1
        let q = trace[basis_round - 1].q.clone();
        let context = PredictionContext::new(prediction, &q)?;
        let prediction_vecs: Vec<SimplexVector> =
            context.opponents(player).into_iter().cloned().collect();
        cross_q.push(q);
        predictions.push(prediction_vecs);
    }
    Ok(EmbeddedProcess {
        player,
        tau,
        actions,
        own_q,
        cross_q,
        predictions,
    })
}

/// Counting-ratio diagnostic ℓ_i(t) / Σ_{k≤t} ρ_i(k) per round.
///
/// Under vanishing-but-divergent rates this ratio tends to 1; the audit
/// band checks the final value. Uses the trace's logged effective rates,
/// so the forced round-1 activation contributes 1 to both sides.
#[derive(Debug, Clone)]
pub struct CountingRatios {
    pub player: PlayerId,
    /// Ratio after each round, aligned with the trace.
    pub ratios: Vec<f64>,
    /// Σ ρ_i(k) over the whole trace.
    pub cumulative_rho: f64,
    /// ℓ_i(T) at the end of the trace.
    pub final_count: usize,
}

impl CountingRatios {
    pub fn final_ratio(&self) -> f64 {
        *self.ratios.last().expect("validated traces are nonempty")
    }
}

pub fn counting_ratio_diagnostic(
    trace: &[TraceRecord],
    player: PlayerId,
) -> Result<CountingRatios, StrongError> {
    validate_trace(trace)?;
    let players = trace[0].flags.len();
    if player >= players {
        return Err(StrongError::PlayerOutOfRange { player, players });
    }
    let mut cumulative = 0.0;
    let mut ratios = Vec::with_capacity(trace.len());
    for record in trace {
        cumulative += record.rho[player];
        ratios.push(record.ell[player] as f64 / cumulative);
    }
    Ok(CountingRatios {
        player,
        cumulative_rho: cumulative,
        final_count: trace.last().unwrap().ell[player],
        ratios,
    })
}

/// Cross-player synchrony diagnostic Σ_{k≤t} ρ_i(k) / Σ_{k≤t} ρ_j(k).
pub fn cumulative_rho_ratio(
    trace: &[TraceRecord],
    i: PlayerId,
    j: PlayerId,
) -> Result<Vec<f64>, StrongError> {
    validate_trace(trace)?;
    let players = trace[0].flags.len();
    for &p in &[i, j] {
        if p >= players {
            return Err(StrongError::PlayerOutOfRange { player: p, players });
        }
    }
    let mut sum_i = 0.0;
    let mut sum_j = 0.0;
    let mut out = Vec::with_capacity(trace.len());
    for record in trace {
        sum_i += record.rho[i];
        sum_j += record.rho[j];
        out.push(sum_i / sum_j);
    }
    Ok(out)
}

fn validate_trace(trace: &[TraceRecord]) -> Result<(), StrongError> {
    if trace.is_empty() {
        return Err(StrongError::EmptyTrace);
    }
    for (idx, record) in trace.iter().enumerate() {
        if record.t != idx + 1 {
            return Err(StrongError::NonContiguousTrace {
                position: idx + 1,
                found: record.t,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::builtin;
    use crate::schedule::RhoFamily;

    fn mp() -> NormalFormGame {
        builtin("matching-pennies").unwrap()
    }

    fn always_on(players: usize) -> StrongConfig {
        StrongConfig::uniform(
            RhoFamily::constant(1.0).unwrap(),
            DecaySchedule::Zero,
            players,
        )
        .unwrap()
    }

    #[test]
    fn init_counts_round_one_as_deliberate() {
        let game = mp();
        let spec = AlgorithmSpec::classical_fp();
        let state = StrongState::init(&spec, &game, &[1, 0]).unwrap();
        assert_eq!(state.round, 1);
        assert_eq!(state.ell, vec![1, 1]);
        assert_eq!(state.flags, vec![true, true]);
        assert_eq!(state.rho_used, vec![1.0, 1.0]);
        assert_eq!(state.q.component(0).weights(), &[0.0, 1.0]);
        assert!(state.realized_mixed_strategy().is_err(), "no BR yet at round 1");
    }

    #[test]
    fn mixture_matches_hand_example() {
        // ρ = 0.3 on b = 0 over ξ = (0.5, 0.5) → (0.65, 0.35).
        let xi = SimplexVector::uniform(2).unwrap();
        let g = mix_pure(0, &xi, 0.3).unwrap();
        assert!((g.get(0) - 0.65).abs() < 1e-15);
        assert!((g.get(1) - 0.35).abs() < 1e-15);
        // Degenerate rates collapse to the pure BR / the statistic itself.
        assert_eq!(mix_pure(0, &xi, 1.0).unwrap().weights(), &[1.0, 0.0]);
        assert_eq!(mix_pure(0, &xi, 0.0).unwrap().weights(), &[0.5, 0.5]);
        assert!(mix_pure(0, &xi, 1.5).is_err());
    }

    #[test]
    fn always_deliberate_wrapper_reproduces_base_run_exactly() {
        let game = mp();
        let spec = AlgorithmSpec::classical_fp();
        let config = always_on(2);
        let mut rngs = RngBank::new(7, 2);
        let mut strong = StrongState::init(&spec, &game, &[0, 0]).unwrap();

        let mut base = crate::algorithm::FpState::init(&spec, &game, &[0, 0]).unwrap();
        let mut base_rngs = RngBank::new(7, 2);
        for _ in 0..500 {
            strong_step(&spec, &config, &game, &mut strong, TieBreak::LowestIndex, &mut rngs)
                .unwrap();
            let actions =
                crate::algorithm::fp_type_step(&spec, &game, &mut base, TieBreak::LowestIndex, &mut base_rngs)
                    .unwrap();
            assert_eq!(strong.actions, actions);
            for i in 0..2 {
                assert_eq!(
                    strong.q.component(i).weights(),
                    base.q.component(i).weights(),
                    "bit-exact agreement required at round {}",
                    strong.round
                );
            }
        }
        assert_eq!(strong.ell, vec![501, 501]);
    }

    #[test]
    fn non_deliberate_rounds_freeze_the_empirical_state() {
        let game = mp();
        let spec = AlgorithmSpec::classical_fp();
        let config = StrongConfig::uniform(
            RhoFamily::constant(0.0).unwrap(),
            DecaySchedule::Zero,
            2,
        )
        .unwrap();
        let mut rngs = RngBank::new(3, 2);
        let mut state = StrongState::init(&spec, &game, &[0, 1]).unwrap();
        let q1 = state.q.clone();
        for _ in 0..50 {
            strong_step(&spec, &config, &game, &mut state, TieBreak::LowestIndex, &mut rngs)
                .unwrap();
            assert_eq!(state.ell, vec![1, 1]);
            assert_eq!(state.q.distance(&q1).unwrap(), 0.0);
            // With ρ = 0 everyone samples ξ(t−1) = the frozen point mass.
            assert_eq!(state.actions, vec![0, 1]);
            assert_eq!(state.flags, vec![false, false]);
        }
    }

    #[test]
    fn realized_mixture_uses_previous_xi() {
        let game = mp();
        let spec = AlgorithmSpec::classical_fp();
        let config = always_on(2);
        let mut rngs = RngBank::new(11, 2);
        let mut state = StrongState::init(&spec, &game, &[0, 0]).unwrap();
        strong_step(&spec, &config, &game, &mut state, TieBreak::LowestIndex, &mut rngs).unwrap();
        // ρ ≡ 1 ⇒ g is the point mass on the BR regardless of ξ.
        let g = state.realized_mixed_strategy().unwrap();
        for i in 0..2 {
            assert_eq!(g.component(i).get(state.br[i].unwrap()), 1.0);
        }
        // Mixed rate: g blends the *previous* statistic.
        let half = StrongConfig::uniform(
            RhoFamily::constant(0.5).unwrap(),
            DecaySchedule::Zero,
            2,
        )
        .unwrap();
        let xi_before = state.xi.clone();
        strong_step(&spec, &half, &game, &mut state, TieBreak::LowestIndex, &mut rngs).unwrap();
        let g = state.realized_mixed_strategy().unwrap();
        for i in 0..2 {
            let b = state.br[i].unwrap();
            let expected: Vec<f64> = xi_before
                .component(i)
                .weights()
                .iter()
                .enumerate()
                .map(|(k, w)| 0.5 * w + if k == b { 0.5 } else { 0.0 })
                .collect();
            assert_eq!(g.component(i).weights(), expected.as_slice());
        }
    }

    #[test]
    fn flag_draw_validates_probability() {
        let mut rng = crate::rng::RngBank::new(0, 1);
        assert!(draw_deliberate_flag(f64::NAN, rng.flag(0)).is_err());
        assert!(draw_deliberate_flag(-0.1, rng.flag(0)).is_err());
        assert!(draw_deliberate_flag(1.0, rng.flag(0)).unwrap());
        assert!(!draw_deliberate_flag(0.0, rng.flag(0)).unwrap());
    }

    #[test]
    fn embedded_process_indexes_deliberate_rounds() {
        // Hand-built 4-round trace for one player: deliberate at t = 1, 3, 4.
        let q = |w: [f64; 2]| SimplexVector::new(w.to_vec()).unwrap();
        let joint = |a: [f64; 2], b: [f64; 2]| JointStrategy::new(vec![q(a), q(b)]).unwrap();
        let mk = |t: usize, flag0: bool, ell0: usize, qv: JointStrategy| TraceRecord {
            t,
            actions: vec![t % 2, 1],
            flags: vec![flag0, true],
            rho: vec![0.5, 1.0],
            ell: vec![ell0, t],
            q: qv.clone(),
            xi: qv.clone(),
            g_sampling: qv.clone(),
            g_updated: qv,
            xi_metric: 0.0,
            g_metric: 0.0,
            stage_utility: vec![0.0, 0.0],
        };
        let trace = vec![
            mk(1, true, 1, joint([1.0, 0.0], [0.0, 1.0])),
            mk(2, false, 1, joint([0.9, 0.1], [0.1, 0.9])),
            mk(3, true, 2, joint([0.8, 0.2], [0.2, 0.8])),
            mk(4, true, 3, joint([0.7, 0.3], [0.3, 0.7])),
        ];
        let embedded = extract_embedded_process(&trace, 0, PredictionMap::Identity).unwrap();
        assert_eq!(embedded.tau, vec![1, 3, 4]);
        assert_eq!(embedded.actions, vec![1, 1, 0]);
        // Decision at τ(s+1) uses the state from round τ(s+1) − 1.
        assert_eq!(embedded.cross_q.len(), 2);
        assert_eq!(embedded.cross_q[0].component(0).weights(), &[0.9, 0.1]);
        assert_eq!(embedded.cross_q[1].component(0).weights(), &[0.8, 0.2]);
        assert_eq!(embedded.predictions[0].len(), 1);
        assert_eq!(embedded.predictions[0][0].weights(), &[0.1, 0.9]);

        let err = extract_embedded_process(&trace, 5, PredictionMap::Identity);
        assert!(matches!(err, Err(StrongError::PlayerOutOfRange { .. })));
    }

    #[test]
    fn counting_ratio_on_always_deliberate_trace_is_one() {
        let q = JointStrategy::new(vec![
            SimplexVector::uniform(2).unwrap(),
            SimplexVector::uniform(2).unwrap(),
        ])
        .unwrap();
        let trace: Vec<TraceRecord> = (1..=10)
            .map(|t| TraceRecord {
                t,
                actions: vec![0, 0],
                flags: vec![true, true],
                rho: vec![1.0, 1.0],
                ell: vec![t, t],
                q: q.clone(),
                xi: q.clone(),
                g_sampling: q.clone(),
                g_updated: q.clone(),
                xi_metric: 0.0,
                g_metric: 0.0,
                stage_utility: vec![0.0, 0.0],
            })
            .collect();
        let diag = counting_ratio_diagnostic(&trace, 0).unwrap();
        assert_eq!(diag.final_ratio(), 1.0);
        assert_eq!(diag.final_count, 10);
        assert!(diag.ratios.iter().all(|&r| r == 1.0));
        let sync = cumulative_rho_ratio(&trace, 0, 1).unwrap();
        assert!(sync.iter().all(|&r| r == 1.0));
    }
}
