//! Post-hoc verification that a finished run actually satisfied the
//! conditions its convergence guarantees lean on: deliberate-count
//! tracking of cumulative activation rates, cross-player rate synchrony,
//! the per-round empirical step bound, and vanishing best-response slack.
//!
//! The audit works from traces (plus the experiment description), so it
//! can run on freshly produced runs or on stored CSV files equally.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithm::AlgorithmError;
use crate::config::ResolvedExperiment;
use crate::schedule::{validate_rho_schedule, CheckStatus, RateCertificate, ScheduleError};
use crate::simplex::{SimplexError, SIMPLEX_DIAMETER};
use crate::strong::{counting_ratio_diagnostic, cumulative_rho_ratio, StrongError};
use crate::trace::{TraceError, TraceRecord};

/// Identifier for the deliberate-count check ℓ_i(T)/Σρ_i(t) ≈ 1.
pub const CHECK_COUNTING_RATIO: &str = "counting-ratio";
/// Identifier for the empirical step bound ‖q(t+1)−q(t)‖ ≤ √2·γ(ℓ).
pub const CHECK_STEP_BOUND: &str = "step-bound";
/// Identifier for the vanishing best-response slack check.
pub const CHECK_SLACK_DECAY: &str = "slack-decay";

/// Accepted band for counting and cross-player cumulative-rate ratios.
pub const RATIO_BAND: (f64, f64) = (0.9, 1.1);
/// Numerical headroom on the step bound (renormalization drift).
pub const STEP_EXCESS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("trace is incomplete: {0}")]
    IncompleteTrace(String),
    #[error("trace records {got} players, experiment has {expected}")]
    PlayerMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Strong(#[from] StrongError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleSample {
    pub t: usize,
    pub slack: f64,
}

/// One run's audit: per-check numbers plus pass/fail statuses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub rounds: usize,
    pub players: usize,
    /// ℓ_i(T) / Σ_{t≤T} ρ_i(t) per player.
    pub counting_ratios: Vec<f64>,
    pub counting_ratio_status: CheckStatus,
    /// Final Σρ_i / Σρ_j over player pairs i < j.
    pub cumulative_rho_ratios: Vec<f64>,
    pub rate_sync_status: CheckStatus,
    /// max over players and rounds of ‖q_i(t+1)−q_i(t)‖ minus its bound
    /// (√2·γ at the new deliberate count, or zero on lazy rounds).
    pub max_step_excess: f64,
    pub step_bound_status: CheckStatus,
    /// Total best-response slack ε(t−1)+η(t) sampled along the horizon.
    pub slack_samples: Vec<ScheduleSample>,
    pub slack_vanishes: bool,
    pub slack_status: CheckStatus,
    /// Analytic certificate of the activation-rate schedule (strong runs).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<RateCertificate>,
}

impl AuditReport {
    /// True when nothing failed outright (not-certifiable schedules are
    /// warnings, not failures; the empirical checks cover them).
    pub fn passed(&self) -> bool {
        let empirical = self.counting_ratio_status.passed()
            && self.rate_sync_status.passed()
            && self.step_bound_status.passed()
            && self.slack_status.passed();
        let analytic = self.certificate.as_ref().map_or(true, |c| {
            ![c.decay, c.divergence, c.sync].contains(&CheckStatus::Fail)
        });
        empirical && analytic
    }

    /// `(check id, status)` for every non-passing check.
    pub fn problems(&self) -> Vec<(&'static str, CheckStatus)> {
        let mut out = Vec::new();
        for (id, status) in [
            (CHECK_COUNTING_RATIO, self.counting_ratio_status),
            (crate::schedule::CHECK_RATE_SYNC, self.rate_sync_status),
            (CHECK_STEP_BOUND, self.step_bound_status),
            (CHECK_SLACK_DECAY, self.slack_status),
        ] {
            if !status.passed() {
                out.push((id, status));
            }
        }
        if let Some(c) = &self.certificate {
            if let Some(problem) = c.first_problem() {
                out.push(problem);
            }
        }
        out
    }
}

fn band_status(values: &[f64]) -> CheckStatus {
    if values
        .iter()
        .all(|&v| v.is_finite() && v >= RATIO_BAND.0 && v <= RATIO_BAND.1)
    {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    }
}

/// Audits one seed's trace against the experiment that produced it.
pub fn audit_trace(
    trace: &[TraceRecord],
    exp: &ResolvedExperiment,
) -> Result<AuditReport, AuditError> {
    if trace.is_empty() {
        return Err(AuditError::IncompleteTrace("no rounds recorded".into()));
    }
    let players = exp.game.players();
    if trace[0].flags.len() != players {
        return Err(AuditError::PlayerMismatch {
            expected: players,
            got: trace[0].flags.len(),
        });
    }

    // Deliberate counts vs cumulative rates.
    let mut counting_ratios = Vec::with_capacity(players);
    for i in 0..players {
        counting_ratios.push(counting_ratio_diagnostic(trace, i)?.final_ratio());
    }

    // Cross-player cumulative-rate synchrony.
    let mut cumulative_rho_ratios = Vec::new();
    for i in 0..players {
        for j in (i + 1)..players {
            let series = cumulative_rho_ratio(trace, i, j)?;
            cumulative_rho_ratios.push(*series.last().expect("trace is nonempty"));
        }
    }
    let rate_sync_status = band_status(&cumulative_rho_ratios);

    // Step bound: lazy rounds freeze q, deliberate rounds move it by at
    // most the simplex diameter times the step factor at the new count.
    let mut max_step_excess = f64::NEG_INFINITY;
    for pair in trace.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        for i in 0..players {
            let step = prev.q.component(i).distance(cur.q.component(i))?;
            let bound = if cur.flags[i] {
                SIMPLEX_DIAMETER * exp.spec.empirical_update.step_factor(cur.ell[i])?
            } else {
                0.0
            };
            max_step_excess = max_step_excess.max(step - bound);
        }
    }
    if trace.len() < 2 {
        max_step_excess = 0.0;
    }
    let step_bound_status = if max_step_excess <= STEP_EXCESS_TOL {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };

    // Slack decay: sample the total slack entering each round and check
    // the schedules vanish analytically.
    let eta = exp
        .strong
        .as_ref()
        .map(|s| s.eta)
        .unwrap_or(crate::schedule::DecaySchedule::Zero);
    let horizon = trace.len();
    let mut sample_points: Vec<usize> = [2usize, 5, 10, 100, 1_000, 10_000]
        .into_iter()
        .filter(|&t| t <= horizon)
        .collect();
    for t in [horizon / 10, horizon] {
        if t >= 2 && !sample_points.contains(&t) {
            sample_points.push(t);
        }
    }
    sample_points.sort_unstable();
    let mut slack_samples = Vec::with_capacity(sample_points.len());
    for t in sample_points {
        slack_samples.push(ScheduleSample {
            t,
            slack: exp.spec.br_slack.value(t - 1)? + eta.value(t)?,
        });
    }
    let slack_vanishes = exp.spec.br_slack.vanishes() && eta.vanishes();
    let slack_status = if slack_vanishes {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };

    let certificate = exp.strong.as_ref().map(|s| validate_rho_schedule(&s.rho));

    Ok(AuditReport {
        rounds: trace.len(),
        players,
        counting_ratio_status: band_status(&counting_ratios),
        counting_ratios,
        cumulative_rho_ratios,
        rate_sync_status,
        max_step_excess,
        step_bound_status,
        slack_samples,
        slack_vanishes,
        slack_status,
        certificate,
    })
}
