//! Step-size, slack, and activation-rate schedules.
//!
//! Three sequences drive the dynamics: the empirical step size γ(t), the
//! best-response slack ε(t) (and its wrapper analogue η(t)), and the
//! per-player deliberate-activation rate ρ_i(t) of the randomized wrapper.
//! The shipped families have closed-form certificates for the three rate
//! conditions the convergence argument needs — decay to zero, divergent
//! cumulative sum, and cross-player synchrony of the cumulative sums —
//! checked analytically per family by [`validate_rho_schedule`]; custom
//! tables are never certified, only described.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("power-law exponent {0} must be finite and non-negative so the rate stays in [0, 1]")]
    NegativeExponent(f64),
    #[error("step-size exponent {0} outside the shipped range (0.5, 1]")]
    StepExponentOutOfRange(f64),
    #[error("a step-size schedule must produce positive steps; the zero schedule is not one")]
    ZeroStep,
    #[error("rate value {0} outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("rate table is empty")]
    EmptyTable,
    #[error("schedules are evaluated from round 1; round 0 has no value")]
    RoundZero,
    #[error("per-player schedule has {got} entries, expected {expected}")]
    PlayerCountMismatch { expected: usize, got: usize },
}

/// A deterministic sequence on [0, 1] used for step sizes and slacks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum DecaySchedule {
    /// Identically zero (exact best responses).
    Zero,
    /// 1/t.
    InverseT,
    /// t^(−exponent) with exponent ≥ 0.
    PowerLaw { exponent: f64 },
}

impl DecaySchedule {
    pub fn power(exponent: f64) -> Result<Self, ScheduleError> {
        if !exponent.is_finite() || exponent < 0.0 {
            return Err(ScheduleError::NegativeExponent(exponent));
        }
        Ok(DecaySchedule::PowerLaw { exponent })
    }

    /// Value at round `t ≥ 1`.
    pub fn value(&self, t: usize) -> Result<f64, ScheduleError> {
        if t == 0 {
            return Err(ScheduleError::RoundZero);
        }
        Ok(match self {
            DecaySchedule::Zero => 0.0,
            DecaySchedule::InverseT => 1.0 / t as f64,
            DecaySchedule::PowerLaw { exponent } => (t as f64).powf(-exponent),
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, DecaySchedule::Zero)
            || matches!(self, DecaySchedule::PowerLaw { exponent } if *exponent == f64::INFINITY)
    }

    /// Checks the family is usable as an empirical step size: values in
    /// (0, 1], vanishing, with divergent sum. Shipped presets: 1/t and
    /// t^(−c) for c in (0.5, 1].
    pub fn validate_as_step(&self) -> Result<(), ScheduleError> {
        match self {
            DecaySchedule::Zero => Err(ScheduleError::ZeroStep),
            DecaySchedule::InverseT => Ok(()),
            DecaySchedule::PowerLaw { exponent } => {
                if *exponent > 0.5 && *exponent <= 1.0 {
                    Ok(())
                } else {
                    Err(ScheduleError::StepExponentOutOfRange(*exponent))
                }
            }
        }
    }

    /// True when the sequence decays to zero.
    pub fn vanishes(&self) -> bool {
        match self {
            DecaySchedule::Zero => true,
            DecaySchedule::InverseT => true,
            DecaySchedule::PowerLaw { exponent } => *exponent > 0.0,
        }
    }
}

/// One player's deliberate-activation rate family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "family")]
pub enum RhoFamily {
    /// scale · t^(−exponent); the workhorse family. scale and values stay
    /// in [0, 1]; exponent ≥ 0 keeps the sequence bounded by the scale.
    Power { scale: f64, exponent: f64 },
    /// Constant `value` through round `until`, then t^(−exponent).
    ConstantThenPower {
        value: f64,
        until: usize,
        exponent: f64,
    },
    /// Fixed rate every round (diagnostic; a positive constant never
    /// decays, so it cannot be certified).
    Constant { value: f64 },
    /// Explicit per-round values; rounds past the end reuse the last entry.
    Table { values: Vec<f64> },
}

impl RhoFamily {
    pub fn power(scale: f64, exponent: f64) -> Result<Self, ScheduleError> {
        if !(0.0..=1.0).contains(&scale) || !scale.is_finite() {
            return Err(ScheduleError::RateOutOfRange(scale));
        }
        if !exponent.is_finite() || exponent < 0.0 {
            return Err(ScheduleError::NegativeExponent(exponent));
        }
        Ok(RhoFamily::Power { scale, exponent })
    }

    pub fn constant_then_power(value: f64, until: usize, exponent: f64) -> Result<Self, ScheduleError> {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(ScheduleError::RateOutOfRange(value));
        }
        if !exponent.is_finite() || exponent < 0.0 {
            return Err(ScheduleError::NegativeExponent(exponent));
        }
        Ok(RhoFamily::ConstantThenPower { value, until, exponent })
    }

    pub fn constant(value: f64) -> Result<Self, ScheduleError> {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            return Err(ScheduleError::RateOutOfRange(value));
        }
        Ok(RhoFamily::Constant { value })
    }

    pub fn table(values: Vec<f64>) -> Result<Self, ScheduleError> {
        if values.is_empty() {
            return Err(ScheduleError::EmptyTable);
        }
        for &v in &values {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(ScheduleError::RateOutOfRange(v));
            }
        }
        Ok(RhoFamily::Table { values })
    }

    /// Rate at round `t ≥ 1`, always in [0, 1].
    pub fn value(&self, t: usize) -> Result<f64, ScheduleError> {
        if t == 0 {
            return Err(ScheduleError::RoundZero);
        }
        Ok(match self {
            RhoFamily::Power { scale, exponent } => scale * (t as f64).powf(-exponent),
            RhoFamily::ConstantThenPower { value, until, exponent } => {
                if t <= *until {
                    *value
                } else {
                    (t as f64).powf(-exponent)
                }
            }
            RhoFamily::Constant { value } => *value,
            RhoFamily::Table { values } => values[(t - 1).min(values.len() - 1)],
        })
    }

    /// The family's tail behaviour as (scale, exponent) of scale·t^(−e),
    /// when it has one.
    fn tail(&self) -> Option<(f64, f64)> {
        match self {
            RhoFamily::Power { scale, exponent } => Some((*scale, *exponent)),
            RhoFamily::ConstantThenPower { exponent, .. } => Some((1.0, *exponent)),
            RhoFamily::Constant { value } => Some((*value, 0.0)),
            RhoFamily::Table { .. } => None,
        }
    }
}

/// Per-player activation-rate schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoSchedule {
    families: Vec<RhoFamily>,
}

impl RhoSchedule {
    pub fn per_player(families: Vec<RhoFamily>) -> Result<Self, ScheduleError> {
        if families.is_empty() {
            return Err(ScheduleError::EmptyTable);
        }
        Ok(RhoSchedule { families })
    }

    /// The same family for every player.
    pub fn uniform(family: RhoFamily, players: usize) -> Result<Self, ScheduleError> {
        if players == 0 {
            return Err(ScheduleError::PlayerCountMismatch { expected: 1, got: 0 });
        }
        Ok(RhoSchedule {
            families: vec![family; players],
        })
    }

    pub fn players(&self) -> usize {
        self.families.len()
    }

    pub fn family(&self, player: usize) -> &RhoFamily {
        &self.families[player]
    }

    pub fn value(&self, player: usize, t: usize) -> Result<f64, ScheduleError> {
        self.families[player].value(t)
    }

    pub fn check_players(&self, expected: usize) -> Result<(), ScheduleError> {
        if self.families.len() != expected {
            return Err(ScheduleError::PlayerCountMismatch {
                expected,
                got: self.families.len(),
            });
        }
        Ok(())
    }
}

/// Outcome of one analytic rate check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The family has no closed form to certify (custom tables).
    NotCertifiable,
}

impl CheckStatus {
    pub fn passed(self) -> bool {
        self == CheckStatus::Pass
    }
}

/// Stable identifiers for the rate conditions; these appear verbatim in
/// reports and error messages.
pub const CHECK_RATE_DECAY: &str = "rate-decay";
pub const CHECK_RATE_DIVERGENCE: &str = "rate-divergence";
pub const CHECK_RATE_SYNC: &str = "rate-sync";

/// Analytic certificate for an activation-rate schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateCertificate {
    /// `rate-decay`: every player's rate vanishes.
    pub decay: CheckStatus,
    /// `rate-divergence`: every player's cumulative rate diverges.
    pub divergence: CheckStatus,
    /// `rate-sync`: cross-player cumulative-rate ratios converge to one.
    pub sync: CheckStatus,
    pub notes: Vec<String>,
}

impl RateCertificate {
    pub fn certified(&self) -> bool {
        self.decay.passed() && self.divergence.passed() && self.sync.passed()
    }

    /// First failing or uncertifiable check id, if any.
    pub fn first_problem(&self) -> Option<(&'static str, CheckStatus)> {
        [
            (CHECK_RATE_DECAY, self.decay),
            (CHECK_RATE_DIVERGENCE, self.divergence),
            (CHECK_RATE_SYNC, self.sync),
        ]
        .into_iter()
        .find(|(_, s)| !s.passed())
    }
}

/// Analytic certification of the three rate conditions, per family:
///
/// * power families `scale·t^(−r)`: decay needs r > 0 (or scale 0 — but a
///   zero rate then fails divergence); divergence needs r ≤ 1 and scale > 0
///   (p-series); synchrony needs every player to share one asymptotic
///   class (equal scale and exponent), since the cumulative-rate ratio of
///   `s·t^(−r)` against `s'·t^(−r')` tends to s/s' when r = r' and to 0 or
///   ∞ when r ≠ r'.
/// * constant-then-power prefixes wash out of the diverging sums, so only
///   the tail exponent matters.
/// * positive constants never decay; zero constants never diverge.
/// * custom tables are reported as not certifiable.
pub fn validate_rho_schedule(schedule: &RhoSchedule) -> RateCertificate {
    let mut notes = Vec::new();
    let mut decay = CheckStatus::Pass;
    let mut divergence = CheckStatus::Pass;
    let mut sync = CheckStatus::Pass;

    let mut tails: Vec<Option<(f64, f64)>> = Vec::new();
    for (i, family) in schedule.families.iter().enumerate() {
        let tail = family.tail();
        tails.push(tail);
        match tail {
            None => {
                notes.push(format!(
                    "player {i}: custom rate table; no closed form, not certifiable"
                ));
                decay = CheckStatus::NotCertifiable;
                divergence = CheckStatus::NotCertifiable;
                sync = CheckStatus::NotCertifiable;
            }
            Some((scale, exponent)) => {
                if scale == 0.0 {
                    notes.push(format!(
                        "player {i}: rate is identically zero; cumulative rate cannot diverge"
                    ));
                    divergence = CheckStatus::Fail;
                } else {
                    if exponent <= 0.0 {
                        notes.push(format!(
                            "player {i}: rate does not decay to zero (exponent {exponent}); the deliberate-rate must vanish"
                        ));
                        decay = CheckStatus::Fail;
                    }
                    if exponent > 1.0 {
                        notes.push(format!(
                            "player {i}: exponent {exponent} > 1 makes the cumulative deliberate-rate converge (p-series); it must diverge"
                        ));
                        divergence = CheckStatus::Fail;
                    }
                }
            }
        }
    }

    if sync.passed() {
        let classes: Vec<(f64, f64)> = tails.iter().flatten().copied().collect();
        if classes.len() == tails.len() && !classes.is_empty() {
            let (s0, e0) = classes[0];
            for (i, &(s, e)) in classes.iter().enumerate().skip(1) {
                if e != e0 {
                    notes.push(format!(
                        "players 0 and {i}: exponents {e0} vs {e} drive the cumulative-rate ratio to 0 or infinity; players' cumulative deliberate rates must stay in sync"
                    ));
                    sync = CheckStatus::Fail;
                } else if s != s0 && s0 > 0.0 && s > 0.0 && e0 <= 1.0 {
                    // Equal exponents, different scales: ratio → s0/s ≠ 1
                    // (the log-divergence at exponent exactly 1 still
                    // carries the scale factor).
                    notes.push(format!(
                        "players 0 and {i}: cumulative-rate ratio tends to {:.6}, not 1; players' cumulative deliberate rates must stay in sync",
                        s0 / s
                    ));
                    sync = CheckStatus::Fail;
                }
            }
        }
    }

    RateCertificate {
        decay,
        divergence,
        sync,
        notes,
    }
}
