//! Per-round trace records and their CSV serialization.
//!
//! One record per round per seed. Base (every-round-deliberate) runs fill
//! the wrapper columns with their degenerate values (flags 1, rates 1,
//! deliberate count = round), so a single schema covers both variants and
//! the audit tooling can treat any trace uniformly. Floats are written in
//! Rust's shortest round-trip decimal form, which makes `read(write(x))`
//! exact and reruns byte-identical.

use std::io::{Read, Write};

use thiserror::Error;

use crate::game::ActionId;
use crate::simplex::{JointStrategy, SimplexError, SimplexVector};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace is empty")]
    Empty,
    #[error("trace rounds must be 1,2,3,…; found {found} at row {row}")]
    NonContiguous { row: usize, found: usize },
    #[error("row {row} has {got} values, expected {expected}")]
    RowWidth {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("could not parse {value:?} in column {column} of row {row}")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("unrecognized trace header: {0}")]
    BadHeader(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Everything recorded about one round.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based round number.
    pub t: usize,
    /// Action played by each player.
    pub actions: Vec<ActionId>,
    /// Deliberate-activation flags X_i(t); identically true in base runs.
    pub flags: Vec<bool>,
    /// Effective deliberate probability this round (1.0 at t = 1, where
    /// the initialization forces a deliberate round).
    pub rho: Vec<f64>,
    /// Deliberate-round counts ℓ_i(t).
    pub ell: Vec<usize>,
    /// Empirical states q(t).
    pub q: JointStrategy,
    /// Convergence statistic ξ(t).
    pub xi: JointStrategy,
    /// Realized per-round mixed strategy, sampling-law indexing
    /// (mixes the previous round's ξ).
    pub g_sampling: JointStrategy,
    /// Same statistic with the current round's ξ (the literal general
    /// form); logged alongside for comparison.
    pub g_updated: JointStrategy,
    /// Equilibrium metric of ξ(t) (distance or residual per run config).
    pub xi_metric: f64,
    /// Equilibrium metric of g(t) (sampling-law variant).
    pub g_metric: f64,
    /// Realized stage utility per player.
    pub stage_utility: Vec<f64>,
}

/// Column names for a trace over games with the given action counts.
pub fn trace_header(action_counts: &[usize]) -> Vec<String> {
    let n = action_counts.len();
    let mut cols = vec!["t".to_string()];
    cols.extend((0..n).map(|i| format!("a{i}")));
    cols.extend((0..n).map(|i| format!("x{i}")));
    cols.extend((0..n).map(|i| format!("rho{i}")));
    cols.extend((0..n).map(|i| format!("ell{i}")));
    for (prefix, _) in [("q", 0), ("xi", 0), ("gs", 0), ("gp", 0)] {
        for (i, &m) in action_counts.iter().enumerate() {
            for k in 0..m {
                cols.push(format!("{prefix}{i}_{k}"));
            }
        }
    }
    cols.push("xi_metric".into());
    cols.push("g_metric".into());
    cols.extend((0..n).map(|i| format!("u{i}")));
    cols
}

fn push_f64(row: &mut Vec<String>, v: f64) {
    row.push(format!("{v}"));
}

fn record_to_row(record: &TraceRecord) -> Vec<String> {
    let mut row = Vec::new();
    row.push(record.t.to_string());
    for &a in &record.actions {
        row.push(a.to_string());
    }
    for &x in &record.flags {
        row.push(if x { "1" } else { "0" }.to_string());
    }
    for &r in &record.rho {
        push_f64(&mut row, r);
    }
    for &l in &record.ell {
        row.push(l.to_string());
    }
    for profile in [&record.q, &record.xi, &record.g_sampling, &record.g_updated] {
        for component in profile.components() {
            for &w in component.weights() {
                push_f64(&mut row, w);
            }
        }
    }
    push_f64(&mut row, record.xi_metric);
    push_f64(&mut row, record.g_metric);
    for &u in &record.stage_utility {
        push_f64(&mut row, u);
    }
    row
}

/// Streaming CSV writer: opens with the header, then appends one row per
/// round as the run progresses.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
    action_counts: Vec<usize>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(sink: W, action_counts: &[usize]) -> Result<Self, TraceError> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(trace_header(action_counts))?;
        Ok(TraceWriter {
            inner,
            action_counts: action_counts.to_vec(),
        })
    }

    pub fn write(&mut self, record: &TraceRecord) -> Result<(), TraceError> {
        debug_assert_eq!(record.q.shape(), self.action_counts);
        self.inner.write_record(record_to_row(record))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), TraceError> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Writes a whole trace in one call.
pub fn write_trace<W: Write>(
    sink: W,
    action_counts: &[usize],
    records: &[TraceRecord],
) -> Result<(), TraceError> {
    let mut w = TraceWriter::new(sink, action_counts)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

/// Parses a trace written by [`TraceWriter`], recovering the action counts
/// from the header. Round-trips floats exactly.
pub fn read_trace<R: Read>(source: R) -> Result<(Vec<usize>, Vec<TraceRecord>), TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(source);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|s| s.to_string())
        .collect();
    // Recover the shape from the q-columns.
    let mut action_counts: Vec<usize> = Vec::new();
    for col in &header {
        if let Some(rest) = col.strip_prefix('q') {
            if let Some((player, action)) = rest.split_once('_') {
                if let (Ok(i), Ok(k)) = (player.parse::<usize>(), action.parse::<usize>()) {
                    if action_counts.len() <= i {
                        action_counts.resize(i + 1, 0);
                    }
                    action_counts[i] = action_counts[i].max(k + 1);
                }
            }
        }
    }
    if action_counts.is_empty() || action_counts.iter().any(|&m| m == 0) {
        return Err(TraceError::BadHeader(header.join(",")));
    }
    let expected = trace_header(&action_counts);
    if header != expected {
        return Err(TraceError::BadHeader(header.join(",")));
    }
    let n = action_counts.len();
    let width = expected.len();

    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        if row.len() != width {
            return Err(TraceError::RowWidth {
                row: row_idx + 1,
                expected: width,
                got: row.len(),
            });
        }
        let mut cursor = 0usize;
        let mut take = |count: usize| {
            let slice: Vec<&str> = (cursor..cursor + count).map(|c| row.get(c).unwrap()).collect();
            cursor += count;
            slice
        };
        let parse_usize = |s: &str, column: &str| {
            s.parse::<usize>().map_err(|_| TraceError::BadValue {
                row: row_idx + 1,
                column: column.to_string(),
                value: s.to_string(),
            })
        };
        let parse_f64 = |s: &str, column: &str| {
            s.parse::<f64>().map_err(|_| TraceError::BadValue {
                row: row_idx + 1,
                column: column.to_string(),
                value: s.to_string(),
            })
        };

        let t = parse_usize(take(1)[0], "t")?;
        if t != row_idx + 1 {
            return Err(TraceError::NonContiguous {
                row: row_idx + 1,
                found: t,
            });
        }
        let actions = take(n)
            .iter()
            .map(|s| parse_usize(s, "a"))
            .collect::<Result<Vec<_>, _>>()?;
        let flags = take(n)
            .iter()
            .map(|s| Ok(parse_usize(s, "x")? != 0))
            .collect::<Result<Vec<_>, TraceError>>()?;
        let rho = take(n)
            .iter()
            .map(|s| parse_f64(s, "rho"))
            .collect::<Result<Vec<_>, _>>()?;
        let ell = take(n)
            .iter()
            .map(|s| parse_usize(s, "ell"))
            .collect::<Result<Vec<_>, _>>()?;

        let mut profiles: Vec<JointStrategy> = Vec::with_capacity(4);
        for prefix in ["q", "xi", "gs", "gp"] {
            let mut components = Vec::with_capacity(n);
            for &m in &action_counts {
                let weights = take(m)
                    .iter()
                    .map(|s| parse_f64(s, prefix))
                    .collect::<Result<Vec<_>, _>>()?;
                components.push(SimplexVector::new(weights)?);
            }
            profiles.push(JointStrategy::new(components)?);
        }
        let gp = profiles.pop().unwrap();
        let gs = profiles.pop().unwrap();
        let xi = profiles.pop().unwrap();
        let q = profiles.pop().unwrap();

        let xi_metric = parse_f64(take(1)[0], "xi_metric")?;
        let g_metric = parse_f64(take(1)[0], "g_metric")?;
        let stage_utility = take(n)
            .iter()
            .map(|s| parse_f64(s, "u"))
            .collect::<Result<Vec<_>, _>>()?;

        records.push(TraceRecord {
            t,
            actions,
            flags,
            rho,
            ell,
            q,
            xi,
            g_sampling: gs,
            g_updated: gp,
            xi_metric,
            g_metric,
            stage_utility,
        });
    }
    if records.is_empty() {
        return Err(TraceError::Empty);
    }
    Ok((action_counts, records))
}
