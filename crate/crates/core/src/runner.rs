//! Experiment execution: one trace per seed, streamed to its sink, with
//! summary statistics folded on the fly so memory stays flat at large
//! horizons. Seeds run in parallel; each worker owns its RNG streams and
//! output file, and aggregation is a join step.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithm::{fp_type_step, AlgorithmError, FpState};
use crate::config::{MetricKind, ResolvedExperiment};
use crate::equilibrium::{
    consensus_ne_residual, distance_to_set, mce_residual, EquilibriumError, EquilibriumSet,
};
use crate::game::{ActionId, GameError, NormalFormGame, TieBreak};
use crate::rng::RngBank;
use crate::simplex::{JointStrategy, SimplexError};
use crate::strong::{strong_step, StrongError, StrongState};
use crate::trace::{TraceError, TraceRecord, TraceWriter};

/// Window length (rounds) for the received-utility moving average.
pub const UTILITY_WINDOW: usize = 1000;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("could not write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("the miscoordination probe requires a 2-player identical-interest game")]
    ProbeGameUnsuitable,
    #[error("probe horizon must be at least 1")]
    ProbeHorizonZero,
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Strong(#[from] StrongError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Precomputed equilibrium machinery for the per-round metric columns.
/// Building it performs any set enumeration the metrics need, so an
/// unsatisfiable configuration fails here, before simulation.
#[derive(Debug)]
pub struct MetricEngine {
    xi_kind: MetricKind,
    g_kind: MetricKind,
    nash: Option<EquilibriumSet>,
    consensus: Option<EquilibriumSet>,
}

impl MetricEngine {
    pub fn new(
        game: &NormalFormGame,
        xi_kind: MetricKind,
        g_kind: MetricKind,
    ) -> Result<Self, RunnerError> {
        let needs = |kind: MetricKind| [xi_kind, g_kind].contains(&kind);
        let nash = if needs(MetricKind::NashDistance) {
            Some(EquilibriumSet::enumerated_nash(game)?)
        } else {
            None
        };
        let consensus = if needs(MetricKind::ConsensusDistance) {
            Some(EquilibriumSet::consensus_nash(game)?)
        } else {
            None
        };
        Ok(MetricEngine {
            xi_kind,
            g_kind,
            nash,
            consensus,
        })
    }

    pub fn eval(
        &self,
        game: &NormalFormGame,
        kind: MetricKind,
        p: &JointStrategy,
    ) -> Result<f64, RunnerError> {
        Ok(match kind {
            MetricKind::NashDistance => {
                distance_to_set(p, self.nash.as_ref().expect("built in new()"))?
            }
            MetricKind::ConsensusDistance => {
                distance_to_set(p, self.consensus.as_ref().expect("built in new()"))?
            }
            MetricKind::NashConsensusResidual => consensus_ne_residual(game, p)?,
            MetricKind::MceResidual => mce_residual(game, p)?,
        })
    }

    pub fn xi_metric(&self, game: &NormalFormGame, p: &JointStrategy) -> Result<f64, RunnerError> {
        self.eval(game, self.xi_kind, p)
    }

    pub fn g_metric(&self, game: &NormalFormGame, p: &JointStrategy) -> Result<f64, RunnerError> {
        self.eval(game, self.g_kind, p)
    }

    pub fn nash_set(&self) -> Option<&EquilibriumSet> {
        self.nash.as_ref()
    }

    pub fn consensus_set(&self) -> Option<&EquilibriumSet> {
        self.consensus.as_ref()
    }
}

/// Everything the summary keeps about one seed's run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub final_xi_metric: f64,
    pub final_g_metric: f64,
    /// min over t ≥ 2 of the g metric (round 1 has no best response).
    pub min_g_metric_after_round_one: f64,
    /// max / median of the ξ metric over the last decade of rounds, i.e.
    /// the final tenth of the horizon (t ∈ (T − T/10, T]).
    pub max_xi_metric_last_decade: f64,
    pub median_xi_metric_last_decade: f64,
    /// Moving average (window [`UTILITY_WINDOW`]) of realized stage
    /// utility per player, evaluated at T…
    pub windowed_utility_final: Vec<f64>,
    /// …and its extremes over t ≥ max(window, T/10).
    pub windowed_utility_min: Vec<f64>,
    pub windowed_utility_max: Vec<f64>,
    /// ℓ_i(T) / Σ_{t ≤ T} ρ_i(t) per player (exactly 1 in base runs).
    pub counting_ratios: Vec<f64>,
    pub final_q: JointStrategy,
    pub final_xi: JointStrategy,
}

/// Five-number summary over seeds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

/// Median with the even-count midpoint convention.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("metrics are finite"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn quantile_summary(values: &[f64]) -> QuantileSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("metrics are finite"));
    let at = |q: f64| {
        // Nearest-rank with midpoint interpolation on exact halves.
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        0.5 * (sorted[lo] + sorted[hi])
    };
    QuantileSummary {
        min: sorted[0],
        q25: at(0.25),
        median: at(0.5),
        q75: at(0.75),
        max: sorted[sorted.len() - 1],
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub final_xi_metric: QuantileSummary,
    pub final_g_metric: QuantileSummary,
    pub per_seed: Vec<SeedOutcome>,
}

impl ExperimentSummary {
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("summary serialization is infallible")
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    /// Per-seed traces when run with [`TraceStorage::Memory`].
    pub traces: Option<Vec<Vec<TraceRecord>>>,
}

/// Where per-round records go.
#[derive(Debug, Clone)]
pub enum TraceStorage {
    /// Keep only the summary accumulators.
    Discard,
    /// Collect records in memory (tests, diagnostics).
    Memory,
    /// One `trace_seed{S}.csv` per seed in this directory.
    Files(PathBuf),
}

enum SeedSink {
    Discard,
    Memory(Vec<TraceRecord>),
    File(TraceWriter<BufWriter<File>>),
}

impl SeedSink {
    fn push(&mut self, record: &TraceRecord) -> Result<(), RunnerError> {
        match self {
            SeedSink::Discard => Ok(()),
            SeedSink::Memory(records) => {
                records.push(record.clone());
                Ok(())
            }
            SeedSink::File(writer) => Ok(writer.write(record)?),
        }
    }

    fn finish(self) -> Result<Option<Vec<TraceRecord>>, RunnerError> {
        match self {
            SeedSink::Discard => Ok(None),
            SeedSink::Memory(records) => Ok(Some(records)),
            SeedSink::File(writer) => {
                writer.finish()?;
                Ok(None)
            }
        }
    }
}

/// Streaming summary accumulators for one seed.
struct SeedAccumulators {
    horizon: usize,
    /// First round of the final tenth of the horizon ("last decade").
    last_decade_start: usize,
    /// Utility-window extremes are tracked from a tenth of the way in, so
    /// late oscillations are measured without the burn-in transient.
    utility_watch_start: usize,
    players: usize,
    last_xi_metric: f64,
    last_g_metric: f64,
    min_g_after_one: f64,
    decade_xi: Vec<f64>,
    window: Vec<std::collections::VecDeque<f64>>,
    window_sum: Vec<f64>,
    window_min: Vec<f64>,
    window_max: Vec<f64>,
    cumulative_rho: Vec<f64>,
}

impl SeedAccumulators {
    fn new(horizon: usize, players: usize) -> Self {
        SeedAccumulators {
            horizon,
            last_decade_start: (horizon - horizon / 10 + 1).min(horizon).max(1),
            utility_watch_start: (horizon / 10).max(1),
            players,
            last_xi_metric: f64::NAN,
            last_g_metric: f64::NAN,
            min_g_after_one: f64::INFINITY,
            decade_xi: Vec::new(),
            window: vec![std::collections::VecDeque::with_capacity(UTILITY_WINDOW); players],
            window_sum: vec![0.0; players],
            window_min: vec![f64::INFINITY; players],
            window_max: vec![f64::NEG_INFINITY; players],
            cumulative_rho: vec![0.0; players],
        }
    }

    fn observe(&mut self, record: &TraceRecord) {
        self.last_xi_metric = record.xi_metric;
        self.last_g_metric = record.g_metric;
        if record.t >= 2 {
            self.min_g_after_one = self.min_g_after_one.min(record.g_metric);
        }
        if record.t >= self.last_decade_start {
            self.decade_xi.push(record.xi_metric);
        }
        for i in 0..self.players {
            self.cumulative_rho[i] += record.rho[i];
            let w = &mut self.window[i];
            w.push_back(record.stage_utility[i]);
            self.window_sum[i] += record.stage_utility[i];
            if w.len() > UTILITY_WINDOW {
                self.window_sum[i] -= w.pop_front().expect("nonempty");
            }
            if w.len() == UTILITY_WINDOW && record.t >= UTILITY_WINDOW.max(self.utility_watch_start)
            {
                let mean = self.window_sum[i] / UTILITY_WINDOW as f64;
                self.window_min[i] = self.window_min[i].min(mean);
                self.window_max[i] = self.window_max[i].max(mean);
            }
        }
    }

    fn finish(self, seed: u64, final_ell: &[usize], q: JointStrategy, xi: JointStrategy) -> SeedOutcome {
        let windowed_final: Vec<f64> = (0..self.players)
            .map(|i| self.window_sum[i] / self.window[i].len().max(1) as f64)
            .collect();
        let fallback = |bound: f64, i: usize| {
            if bound.is_finite() {
                bound
            } else {
                windowed_final[i]
            }
        };
        let window_min: Vec<f64> = (0..self.players).map(|i| fallback(self.window_min[i], i)).collect();
        let window_max: Vec<f64> = (0..self.players).map(|i| fallback(self.window_max[i], i)).collect();
        let counting_ratios = (0..self.players)
            .map(|i| final_ell[i] as f64 / self.cumulative_rho[i])
            .collect();
        let min_g = if self.horizon >= 2 {
            self.min_g_after_one
        } else {
            self.last_g_metric
        };
        SeedOutcome {
            seed,
            final_xi_metric: self.last_xi_metric,
            final_g_metric: self.last_g_metric,
            min_g_metric_after_round_one: min_g,
            max_xi_metric_last_decade: self
                .decade_xi
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
            median_xi_metric_last_decade: median(&self.decade_xi),
            windowed_utility_final: windowed_final,
            windowed_utility_min: window_min,
            windowed_utility_max: window_max,
            counting_ratios,
            final_q: q,
            final_xi: xi,
        }
    }
}

fn stage_utilities(game: &NormalFormGame, actions: &[ActionId]) -> Result<Vec<f64>, RunnerError> {
    (0..game.players())
        .map(|i| Ok(game.utility(i, actions)?))
        .collect()
}

/// Runs one seed to completion, streaming records into `sink`.
fn run_seed(
    exp: &ResolvedExperiment,
    engine: &MetricEngine,
    seed: u64,
    sink: &mut SeedSink,
) -> Result<SeedOutcome, RunnerError> {
    let game = &exp.game;
    let n = game.players();
    let mut rngs = RngBank::new(seed, n);
    let mut acc = SeedAccumulators::new(exp.horizon, n);

    match &exp.strong {
        None => {
            let mut state = FpState::init(&exp.spec, game, &exp.initial_actions)?;
            let mut actions = exp.initial_actions.clone();
            for t in 1..=exp.horizon {
                if t > 1 {
                    actions = fp_type_step(&exp.spec, game, &mut state, exp.tie_break, &mut rngs)?;
                }
                // Base play is pure: the realized per-round strategy is the
                // point mass on the action, under either index convention.
                let g = JointStrategy::from_pure_actions(&actions, game.action_counts())?;
                let record = TraceRecord {
                    t,
                    actions: actions.clone(),
                    flags: vec![true; n],
                    rho: vec![1.0; n],
                    ell: vec![t; n],
                    q: state.q.clone(),
                    xi: state.xi.clone(),
                    xi_metric: engine.xi_metric(game, &state.xi)?,
                    g_metric: engine.g_metric(game, &g)?,
                    stage_utility: stage_utilities(game, &actions)?,
                    g_sampling: g.clone(),
                    g_updated: g,
                };
                acc.observe(&record);
                sink.push(&record)?;
            }
            let final_ell = vec![exp.horizon; n];
            Ok(acc.finish(seed, &final_ell, state.q.clone(), state.xi.clone()))
        }
        Some(strong) => {
            let mut state = StrongState::init(&exp.spec, game, &exp.initial_actions)?;
            for t in 1..=exp.horizon {
                let (gs, gp) = if t == 1 {
                    // Round 1 is the forced deliberate initialization; no
                    // best response exists yet, so the realized strategy
                    // is the initial point mass under both conventions.
                    let g =
                        JointStrategy::from_pure_actions(&exp.initial_actions, game.action_counts())?;
                    (g.clone(), g)
                } else {
                    strong_step(&exp.spec, strong, game, &mut state, exp.tie_break, &mut rngs)?;
                    (
                        state.realized_mixed_strategy()?,
                        state.realized_mixed_strategy_current_xi()?,
                    )
                };
                let record = TraceRecord {
                    t,
                    actions: state.actions.clone(),
                    flags: state.flags.clone(),
                    rho: state.rho_used.clone(),
                    ell: state.ell.clone(),
                    q: state.q.clone(),
                    xi: state.xi.clone(),
                    xi_metric: engine.xi_metric(game, &state.xi)?,
                    g_metric: engine.g_metric(game, &gs)?,
                    stage_utility: stage_utilities(game, &state.actions)?,
                    g_sampling: gs,
                    g_updated: gp,
                };
                acc.observe(&record);
                sink.push(&record)?;
            }
            Ok(acc.finish(seed, &state.ell, state.q.clone(), state.xi.clone()))
        }
    }
}

fn make_sink(storage: &TraceStorage, exp: &ResolvedExperiment, seed: u64) -> Result<SeedSink, RunnerError> {
    Ok(match storage {
        TraceStorage::Discard => SeedSink::Discard,
        TraceStorage::Memory => SeedSink::Memory(Vec::with_capacity(exp.horizon)),
        TraceStorage::Files(dir) => {
            let path = dir.join(trace_file_name(seed));
            let file = File::create(&path).map_err(|source| RunnerError::Io {
                path: path.clone(),
                source,
            })?;
            SeedSink::File(TraceWriter::new(
                BufWriter::new(file),
                exp.game.action_counts(),
            )?)
        }
    })
}

/// Canonical per-seed trace file name.
pub fn trace_file_name(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

/// Runs every seed of the experiment, in parallel, against the given
/// trace storage. Results are aggregated in seed order regardless of
/// completion order, so summaries are deterministic.
pub fn run_experiment_with_storage(
    exp: &ResolvedExperiment,
    storage: TraceStorage,
) -> Result<ExperimentOutcome, RunnerError> {
    let engine = MetricEngine::new(&exp.game, exp.xi_metric, exp.g_metric)?;
    if let TraceStorage::Files(dir) = &storage {
        std::fs::create_dir_all(dir).map_err(|source| RunnerError::Io {
            path: dir.clone(),
            source,
        })?;
    }

    let seed_count = exp.seeds.len();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(seed_count)
        .max(1);

    type SeedResult = Result<(SeedOutcome, Option<Vec<TraceRecord>>), RunnerError>;
    let results: Mutex<Vec<Option<SeedResult>>> =
        Mutex::new((0..seed_count).map(|_| None).collect());
    let next = AtomicUsize::new(0);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::Relaxed);
                if index >= seed_count {
                    break;
                }
                let seed = exp.seeds[index];
                let result = make_sink(&storage, exp, seed).and_then(|mut sink| {
                    let outcome = run_seed(exp, &engine, seed, &mut sink)?;
                    let trace = sink.finish()?;
                    Ok((outcome, trace))
                });
                results.lock().expect("no panics hold this lock")[index] = Some(result);
            });
        }
    });

    let collected = results.into_inner().expect("workers joined");
    let mut per_seed = Vec::with_capacity(seed_count);
    let mut traces = Vec::new();
    let keep_traces = matches!(storage, TraceStorage::Memory);
    for slot in collected {
        let (outcome, trace) = slot.expect("every index was claimed by a worker")?;
        per_seed.push(outcome);
        if keep_traces {
            traces.push(trace.expect("memory storage returns records"));
        }
    }

    let finals_xi: Vec<f64> = per_seed.iter().map(|s| s.final_xi_metric).collect();
    let finals_g: Vec<f64> = per_seed.iter().map(|s| s.final_g_metric).collect();
    let summary = ExperimentSummary {
        name: exp.name.clone(),
        horizon: exp.horizon,
        seeds: exp.seeds.clone(),
        final_xi_metric: quantile_summary(&finals_xi),
        final_g_metric: quantile_summary(&finals_g),
        per_seed,
    };
    Ok(ExperimentOutcome {
        summary,
        traces: keep_traces.then_some(traces),
    })
}

/// Runs the experiment with the storage implied by its output settings:
/// trace files when an output directory is set and traces are enabled,
/// summary-only otherwise.
pub fn run_experiment(exp: &ResolvedExperiment) -> Result<ExperimentOutcome, RunnerError> {
    let storage = match (&exp.out_dir, exp.write_traces) {
        (Some(dir), true) => TraceStorage::Files(dir.clone()),
        _ => TraceStorage::Discard,
    };
    run_experiment_with_storage(exp, storage)
}

/// Outcome of the miscoordination probe: a base fictitious-play run on a
/// 2-player identical-interest game, classified round by round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MiscoordinationReport {
    pub rounds: usize,
    /// Rounds whose realized profile is *not* a pure Nash profile.
    pub mismatch_rounds: usize,
    /// Rounds at the game's minimum achievable utility.
    pub min_utility_rounds: usize,
    /// The shared stage utility, round by round.
    pub utilities: Vec<f64>,
}

impl MiscoordinationReport {
    pub fn all_rounds_mismatched(&self) -> bool {
        self.mismatch_rounds == self.rounds
    }

    pub fn all_rounds_at_minimum(&self) -> bool {
        self.min_utility_rounds == self.rounds
    }
}

/// Classifies every round of a classical-FP run as coordinated (a pure
/// Nash profile) or miscoordinated, and logs the shared utility.
pub fn miscoordination_probe(
    game: &NormalFormGame,
    initial_actions: &[ActionId],
    tie_break: TieBreak,
    horizon: usize,
) -> Result<MiscoordinationReport, RunnerError> {
    if game.players() != 2 || !game.is_identical_interest() {
        return Err(RunnerError::ProbeGameUnsuitable);
    }
    if horizon == 0 {
        return Err(RunnerError::ProbeHorizonZero);
    }
    let spec = crate::algorithm::AlgorithmSpec::classical_fp();
    let pure_nash = game.pure_nash_profiles();
    let min_utility = game.min_utility(0);
    let mut rngs = RngBank::new(0, 2);
    let mut state = FpState::init(&spec, game, initial_actions)?;

    let mut report = MiscoordinationReport {
        rounds: horizon,
        mismatch_rounds: 0,
        min_utility_rounds: 0,
        utilities: Vec::with_capacity(horizon),
    };
    let mut actions = initial_actions.to_vec();
    for t in 1..=horizon {
        if t > 1 {
            actions = fp_type_step(&spec, game, &mut state, tie_break, &mut rngs)?;
        }
        if !pure_nash.contains(&actions) {
            report.mismatch_rounds += 1;
        }
        let u = game.utility(0, &actions)?;
        if (u - min_utility).abs() <= 1e-12 {
            report.min_utility_rounds += 1;
        }
        report.utilities.push(u);
    }
    Ok(report)
}
