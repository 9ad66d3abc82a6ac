//! Repeated-play learning laboratory.
//!
//! A library for simulating fictitious-play-type learning in finite
//! normal-form games, together with the randomized "deliberate-round"
//! wrapper that upgrades convergence of empirical statistics into
//! convergence of the period-by-period strategies themselves, plus the
//! equilibrium metrics and assumption audits needed to see the difference.
//!
//! Layout:
//! * [`simplex`] — probability vectors and joint profiles.
//! * [`game`] — normal-form games, utilities, best responses.
//! * [`games`] — built-in matrices and the on-disk game format.
//! * [`schedule`] — step/slack/activation-rate schedules and their
//!   analytic certificates.
//! * [`algorithm`] — the fictitious-play family (classical, geometric-step,
//!   centroid variants) and the synchronous base stepper.
//! * [`strong`] — the randomized wrapper, its realized mixed strategies,
//!   and the embedded deliberate-round process.
//! * [`equilibrium`] — Nash enumeration, residuals, distances, consensus
//!   and mean-centric sets.
//! * [`rng`] — reproducible per-player random streams.
//! * [`trace`] — per-round records and their CSV form.
//! * [`config`] — experiment descriptions (TOML-serializable).
//! * [`runner`] — seeded experiment execution and summaries.
//! * [`audit`] — after-the-fact verification of the rate assumptions on
//!   recorded traces.
//! * [`presets`] — ready-to-run experiment configurations.

pub mod algorithm;
pub mod audit;
pub mod config;
pub mod equilibrium;
pub mod game;
pub mod games;
pub mod presets;
pub mod rng;
pub mod runner;
pub mod schedule;
pub mod simplex;
pub mod strong;
pub mod trace;

pub use algorithm::{AlgorithmSpec, FpState, HistoryBuffer, fp_type_step};
pub use game::{ActionId, GameFlags, NormalFormGame, PlayerId, TieBreak};
pub use simplex::{JointStrategy, SimplexVector};
