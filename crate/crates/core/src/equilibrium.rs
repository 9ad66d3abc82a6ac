//! Equilibrium sets, residuals, and distances.
//!
//! Three target notions appear in the convergence claims:
//!
//! * **Nash equilibria** — enumerated exactly for two-player games up to
//!   6×6 by support enumeration, giving a finite point list that distance
//!   metrics can minimize over.
//! * **Consensus Nash equilibria** — Nash points where every player uses
//!   the same strategy; found by a grid sweep over the single shared
//!   simplex followed by local refinement.
//! * **Mean-centric equilibria** — each player optimal against the
//!   centroid; this set is not finitely enumerable, so it is measured by
//!   residual only.
//!
//! Residuals (best achievable utility minus realized utility, worst case
//! over players) are the testable surrogate for set distance: they are
//! zero exactly on the set and cheap to evaluate anywhere.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameError, NormalFormGame, PlayerId};
use crate::simplex::{JointStrategy, SimplexError, SimplexVector};

/// Residual bound every enumerated Nash point must satisfy.
pub const NE_POINT_TOL: f64 = 1e-9;
/// Residual bound grid-certified consensus points must satisfy.
pub const CONSENSUS_POINT_TOL: f64 = 1e-6;
/// Consensus defect bound for grid-certified points (they are built by
/// replication, so this holds exactly).
pub const CONSENSUS_DEFECT_TOL: f64 = 1e-9;
/// Default grid spacing per simplex coordinate for the consensus sweep.
pub const DEFAULT_CONSENSUS_RESOLUTION: f64 = 1.0 / 200.0;
/// Support enumeration is exact but exponential in actions; cap it where
/// it is still instant.
pub const MAX_ENUMERATION_ACTIONS: usize = 6;

/// Pivot threshold below which an indifference subsystem is treated as
/// singular and its support pair skipped.
const SINGULAR_PIVOT_TOL: f64 = 1e-12;
/// Solutions may carry tiny negative weights from elimination round-off.
const NONNEG_TOL: f64 = 1e-9;
/// Off-support action within this of the equilibrium value ⇒ the game is
/// degenerate (equilibrium components possible; the list is then only a
/// set of representatives).
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("support enumeration handles exactly 2 players; game has {0}")]
    TwoPlayerOnly(usize),
    #[error("support enumeration is capped at {max} actions per player; player {player} has {actions}")]
    TooManyActions {
        player: PlayerId,
        actions: usize,
        max: usize,
    },
    #[error("{kind:?} set is residual-only; use its residual metric instead of set distance")]
    ResidualOnly { kind: EquilibriumKind },
    #[error("equilibrium set has no certified points")]
    NoPoints,
    #[error("consensus search requires a permutation-invariant game")]
    NotPermutationInvariant,
    #[error("this operation requires all players to share one action space")]
    SharedActionSpaceRequired,
    #[error("grid resolution must lie in (0, 1]; got {0}")]
    BadResolution(f64),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    Nash,
    ConsensusNash,
    MeanCentric,
}

/// A certified equilibrium set: either a finite point list (Nash,
/// consensus Nash) or a residual-only marker (mean-centric).
///
/// Serializes to structured text so enumerations can be reused across
/// sweeps instead of recomputed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquilibriumSet {
    pub kind: EquilibriumKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    points: Option<Vec<JointStrategy>>,
    /// True when off-support ties were detected during enumeration: the
    /// game has equilibrium components and the list holds representatives
    /// only, so distances to it are lower bounds.
    pub degenerate: bool,
}

impl EquilibriumSet {
    /// Exact Nash set of a small two-player game.
    pub fn enumerated_nash(game: &NormalFormGame) -> Result<Self, EquilibriumError> {
        let (points, degenerate) = enumerate_ne_two_player(game)?;
        Ok(EquilibriumSet {
            kind: EquilibriumKind::Nash,
            points: Some(points),
            degenerate,
        })
    }

    /// Grid-certified consensus Nash set at the default resolution.
    pub fn consensus_nash(game: &NormalFormGame) -> Result<Self, EquilibriumError> {
        Self::consensus_nash_at(game, DEFAULT_CONSENSUS_RESOLUTION)
    }

    pub fn consensus_nash_at(
        game: &NormalFormGame,
        resolution: f64,
    ) -> Result<Self, EquilibriumError> {
        let points = consensus_ne_grid(game, resolution)?;
        Ok(EquilibriumSet {
            kind: EquilibriumKind::ConsensusNash,
            points: Some(points),
            degenerate: false,
        })
    }

    /// The mean-centric set, which has no point-list representation.
    pub fn mean_centric() -> Self {
        EquilibriumSet {
            kind: EquilibriumKind::MeanCentric,
            points: None,
            degenerate: false,
        }
    }

    pub fn points(&self) -> Option<&[JointStrategy]> {
        self.points.as_deref()
    }

    /// Euclidean distance from `p` to the nearest listed point.
    pub fn distance(&self, p: &JointStrategy) -> Result<f64, EquilibriumError> {
        distance_to_set(p, self)
    }
}

/// Worst-case unilateral improvement available at `p`:
/// `max_i (v_i(p_{−i}) − U_i(p))`, clamped at zero. Zero exactly on the
/// Nash set.
pub fn epsilon_ne_residual(
    game: &NormalFormGame,
    p: &JointStrategy,
) -> Result<f64, EquilibriumError> {
    let mut worst = 0.0f64;
    for i in 0..game.players() {
        let opponents = crate::game::opponents_of(p, i);
        let v = game.best_response_value(i, &opponents)?;
        let u = game.mixed_utility(i, p)?;
        worst = worst.max(v - u);
    }
    Ok(worst)
}

/// Distance from `p` to a point-list set: `min` over members of the
/// Euclidean distance on concatenated components.
pub fn distance_to_set(
    p: &JointStrategy,
    set: &EquilibriumSet,
) -> Result<f64, EquilibriumError> {
    let points = set
        .points()
        .ok_or(EquilibriumError::ResidualOnly { kind: set.kind })?;
    if points.is_empty() {
        return Err(EquilibriumError::NoPoints);
    }
    let mut best = f64::INFINITY;
    for point in points {
        best = best.min(p.distance(point)?);
    }
    Ok(best)
}

/// All Nash equilibria of a nondegenerate two-player game (≤ 6 actions
/// per player) by support enumeration, plus a degeneracy flag.
///
/// For each pair of equal-size supports, the opponent strategy that makes
/// a player indifferent across their support solves a small linear system
/// (Gaussian elimination with partial pivoting; singular systems skip the
/// pair). Candidates are kept when they are nonnegative and no outside
/// action beats the support value; an outside action *tying* the value
/// marks the game degenerate, in which case the returned points are
/// representatives of equilibrium components rather than the whole set.
pub fn enumerate_ne_two_player(
    game: &NormalFormGame,
) -> Result<(Vec<JointStrategy>, bool), EquilibriumError> {
    if game.players() != 2 {
        return Err(EquilibriumError::TwoPlayerOnly(game.players()));
    }
    for (player, &m) in game.action_counts().iter().enumerate() {
        if m > MAX_ENUMERATION_ACTIONS {
            return Err(EquilibriumError::TooManyActions {
                player,
                actions: m,
                max: MAX_ENUMERATION_ACTIONS,
            });
        }
    }
    let m = [game.action_counts()[0], game.action_counts()[1]];
    let supports = [supports_by_size(m[0]), supports_by_size(m[1])];

    let mut found: Vec<JointStrategy> = Vec::new();
    let mut degenerate = false;
    for k in 1..=m[0].min(m[1]) {
        for s_row in &supports[0][k - 1] {
            for s_col in &supports[1][k - 1] {
                // Column player's weights make the row player indifferent
                // across s_row, and vice versa.
                let Some((y, _v_row)) = indifference_solve(game, 0, s_row, s_col) else {
                    continue;
                };
                let Some((x, _v_col)) = indifference_solve(game, 1, s_col, s_row) else {
                    continue;
                };
                let Some(px) = embed(&x, s_row, m[0]) else { continue };
                let Some(py) = embed(&y, s_col, m[1]) else { continue };
                let candidate = JointStrategy::new(vec![px, py])?;
                if epsilon_ne_residual(game, &candidate)? > NE_POINT_TOL {
                    continue;
                }
                if has_off_support_tie(game, &candidate, s_row, s_col)? {
                    degenerate = true;
                }
                if found
                    .iter()
                    .all(|q| q.distance(&candidate).unwrap_or(f64::INFINITY) > 1e-8)
                {
                    found.push(candidate);
                }
            }
        }
    }
    Ok((found, degenerate))
}

/// Solves for opponent weights over `opp_support` (plus the game value)
/// that make `player` indifferent across `own_support`. Returns `None`
/// when the subsystem is singular.
fn indifference_solve(
    game: &NormalFormGame,
    player: PlayerId,
    own_support: &[usize],
    opp_support: &[usize],
) -> Option<(Vec<f64>, f64)> {
    let k = own_support.len();
    debug_assert_eq!(k, opp_support.len());
    // Unknowns: k opponent weights, then the indifference value v.
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    let mut b = vec![0.0; k + 1];
    for (row, &own) in own_support.iter().enumerate() {
        for (col, &opp) in opp_support.iter().enumerate() {
            let joint = if player == 0 { [own, opp] } else { [opp, own] };
            a[row][col] = game.utility(player, &joint).ok()?;
        }
        a[row][k] = -1.0;
    }
    for col in 0..k {
        a[k][col] = 1.0;
    }
    b[k] = 1.0;
    let solution = solve_linear(a, b)?;
    let (weights, value) = solution.split_at(k);
    let mut weights = weights.to_vec();
    for w in &mut weights {
        if *w < -NONNEG_TOL {
            return None;
        }
        if *w < 0.0 {
            *w = 0.0;
        }
    }
    Some((weights, value[0]))
}

/// Gaussian elimination with partial pivoting; `None` on a singular
/// system. Sized for the ≤ 7×7 systems support enumeration produces.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&r, &s| {
            a[r][col]
                .abs()
                .partial_cmp(&a[s][col].abs())
                .expect("utilities are finite")
        })?;
        if a[pivot_row][col].abs() < SINGULAR_PIVOT_TOL {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..n {
                    a[row][c] -= factor * a[col][c];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for c in row + 1..n {
            s -= a[row][c] * x[c];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Places support weights into a full-length strategy vector, fixing up
/// elimination round-off by normalizing. `None` when the weights cannot
/// form a distribution.
fn embed(weights: &[f64], support: &[usize], len: usize) -> Option<SimplexVector> {
    let sum: f64 = weights.iter().sum();
    if !(sum.is_finite() && sum > 0.5) {
        return None;
    }
    let mut full = vec![0.0; len];
    for (&w, &index) in weights.iter().zip(support) {
        full[index] = w / sum;
    }
    SimplexVector::new(full).ok()
}

fn has_off_support_tie(
    game: &NormalFormGame,
    candidate: &JointStrategy,
    s_row: &[usize],
    s_col: &[usize],
) -> Result<bool, EquilibriumError> {
    for (player, support) in [(0usize, s_row), (1usize, s_col)] {
        let opponents = crate::game::opponents_of(candidate, player);
        let values = game.action_values(player, &opponents)?;
        let v = game.best_response_value(player, &opponents)?;
        for (action, &value) in values.iter().enumerate() {
            if !support.contains(&action) && value >= v - DEGENERACY_TOL {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Non-empty subsets of `0..m` grouped by size (index `k−1` holds the
/// size-`k` supports), each in ascending-index order.
fn supports_by_size(m: usize) -> Vec<Vec<Vec<usize>>> {
    let mut by_size: Vec<Vec<Vec<usize>>> = vec![Vec::new(); m];
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        by_size[support.len() - 1].push(support);
    }
    by_size
}

/// Consensus Nash points: grid sweep over the single shared simplex, keep
/// near-equilibrium candidates, refine each by step-halving local search
/// until the Nash residual is below [`CONSENSUS_POINT_TOL`], then dedupe.
///
/// Requires a permutation-invariant game on a shared action space; those
/// guarantee the set is nonempty.
pub fn consensus_ne_grid(
    game: &NormalFormGame,
    resolution: f64,
) -> Result<Vec<JointStrategy>, EquilibriumError> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(EquilibriumError::BadResolution(resolution));
    }
    if !game.has_shared_action_space() {
        return Err(EquilibriumError::SharedActionSpaceRequired);
    }
    if !game.flags().permutation_invariant {
        return Err(EquilibriumError::NotPermutationInvariant);
    }
    let n = game.players();
    let m = game.action_counts()[0];
    let steps = (1.0 / resolution).round().max(1.0) as usize;

    let residual_of = |point: &SimplexVector| -> Result<f64, EquilibriumError> {
        let profile = JointStrategy::replicate(point.clone(), n)?;
        epsilon_ne_residual(game, &profile)
    };

    // Residuals are Lipschitz in the profile with constant on the order
    // of n·max|u|, so anything within one grid cell of an equilibrium
    // stays under this retention bound.
    let retain = 2.0 * n as f64 * game.max_abs_utility() * resolution + CONSENSUS_POINT_TOL;

    let mut kept: Vec<(SimplexVector, f64)> = Vec::new();
    for counts in compositions(steps, m) {
        let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / steps as f64).collect();
        let point = SimplexVector::new(weights)?;
        if residual_of(&point)? > retain {
            continue;
        }
        let (refined, residual) = refine_consensus(&residual_of, &point, resolution)?;
        if residual > CONSENSUS_POINT_TOL {
            continue;
        }
        match kept
            .iter_mut()
            .find(|(p, _)| p.distance(&refined).unwrap_or(f64::INFINITY) <= resolution / 2.0)
        {
            Some(slot) => {
                if residual < slot.1 {
                    *slot = (refined, residual);
                }
            }
            None => kept.push((refined, residual)),
        }
    }
    kept.sort_by(|(a, _), (b, _)| {
        a.weights()
            .partial_cmp(b.weights())
            .expect("simplex weights are finite")
    });
    kept.into_iter()
        .map(|(point, _)| Ok(JointStrategy::replicate(point, n)?))
        .collect()
}

/// All ways to split `total` grid steps across `slots` coordinates, in
/// lexicographic order.
fn compositions(total: usize, slots: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            let mut full = prefix.clone();
            full.push(total);
            out.push(full);
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(total - first, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, slots, &mut Vec::new(), &mut out);
    out
}

/// Step-halving descent on the consensus simplex: repeatedly tries moving
/// `step` mass between coordinate pairs, keeps the best improvement, and
/// halves the step when stuck.
fn refine_consensus<F>(
    residual_of: &F,
    start: &SimplexVector,
    initial_step: f64,
) -> Result<(SimplexVector, f64), EquilibriumError>
where
    F: Fn(&SimplexVector) -> Result<f64, EquilibriumError>,
{
    let m = start.len();
    let mut best = start.clone();
    let mut best_residual = residual_of(&best)?;
    let mut step = initial_step;
    while step > 1e-13 && best_residual > 1e-12 {
        let mut improvement: Option<(SimplexVector, f64)> = None;
        for from in 0..m {
            let available = best.get(from);
            if available <= 0.0 {
                continue;
            }
            let delta = step.min(available);
            for to in 0..m {
                if to == from {
                    continue;
                }
                let mut weights = best.weights().to_vec();
                weights[from] -= delta;
                weights[to] += delta;
                let Ok(candidate) = SimplexVector::new(weights) else {
                    continue;
                };
                let residual = residual_of(&candidate)?;
                let current_best = improvement.as_ref().map_or(best_residual, |(_, r)| *r);
                if residual < current_best {
                    improvement = Some((candidate, residual));
                }
            }
        }
        match improvement {
            Some((candidate, residual)) => {
                best = candidate;
                best_residual = residual;
            }
            None => step /= 2.0,
        }
    }
    Ok((best, best_residual))
}

/// How far `p` is from being a *consensus* Nash point: the max of its
/// Nash residual (utility units) and its consensus defect (strategy
/// units). Zero exactly on the consensus Nash set.
pub fn consensus_ne_residual(
    game: &NormalFormGame,
    p: &JointStrategy,
) -> Result<f64, EquilibriumError> {
    let residual = epsilon_ne_residual(game, p)?;
    let defect = p
        .consensus_defect()
        .map_err(|_| EquilibriumError::SharedActionSpaceRequired)?;
    Ok(residual.max(defect))
}

/// Mean-centric residual: worst-case gap between a player's best reply to
/// the centroid and their actual utility against the centroid,
/// `max_i (max_a U_i(a, p̄_{−i}) − U_i(p_i, p̄_{−i}))`, clamped at zero.
pub fn mce_residual(game: &NormalFormGame, p: &JointStrategy) -> Result<f64, EquilibriumError> {
    if !game.has_shared_action_space() {
        return Err(EquilibriumError::SharedActionSpaceRequired);
    }
    let centroid = p
        .centroid()
        .map_err(|_| EquilibriumError::SharedActionSpaceRequired)?;
    let n = p.players();
    let mut worst = 0.0f64;
    for i in 0..n {
        let opponents: Vec<&SimplexVector> = vec![&centroid; n - 1];
        let values = game.action_values(i, &opponents)?;
        let v = values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let u: f64 = p
            .component(i)
            .weights()
            .iter()
            .zip(&values)
            .map(|(w, value)| w * value)
            .sum();
        worst = worst.max(v - u);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::builtin;

    fn uniform_point() -> JointStrategy {
        JointStrategy::new(vec![
            SimplexVector::uniform(2).unwrap(),
            SimplexVector::uniform(2).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn matching_pennies_has_exactly_the_uniform_ne() {
        let game = builtin("matching-pennies").unwrap();
        let (points, degenerate) = enumerate_ne_two_player(&game).unwrap();
        assert!(!degenerate);
        assert_eq!(points.len(), 1);
        assert!(points[0].distance(&uniform_point()).unwrap() < 1e-12);
    }

    #[test]
    fn coordination_game_has_two_pure_and_one_mixed_ne() {
        let game = builtin("coordination").unwrap();
        let (points, degenerate) = enumerate_ne_two_player(&game).unwrap();
        assert!(!degenerate);
        assert_eq!(points.len(), 3);
        let pure_aa = JointStrategy::from_pure_actions(&[0, 0], &[2, 2]).unwrap();
        let pure_bb = JointStrategy::from_pure_actions(&[1, 1], &[2, 2]).unwrap();
        let third = SimplexVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let mixed = JointStrategy::replicate(third, 2).unwrap();
        for target in [&pure_aa, &pure_bb, &mixed] {
            assert!(
                points.iter().any(|p| p.distance(target).unwrap() < 1e-9),
                "missing equilibrium {target:?}"
            );
        }
    }

    #[test]
    fn dominant_strategy_game_has_single_pure_ne() {
        // Row 0 strictly dominates for player 1; player 2 then prefers col 0.
        let game = NormalFormGame::new(
            vec![2, 2],
            vec![vec![2.0, 2.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]],
            Default::default(),
        )
        .unwrap();
        let (points, degenerate) = enumerate_ne_two_player(&game).unwrap();
        assert!(!degenerate);
        assert_eq!(points.len(), 1);
        let expected = JointStrategy::from_pure_actions(&[0, 0], &[2, 2]).unwrap();
        assert!(points[0].distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn every_enumerated_point_passes_the_residual_check() {
        for name in ["matching-pennies", "coordination", "crossed-coordination"] {
            let game = builtin(name).unwrap();
            let (points, _) = enumerate_ne_two_player(&game).unwrap();
            assert!(!points.is_empty(), "{name}: empty NE set");
            for p in &points {
                assert!(
                    epsilon_ne_residual(&game, p).unwrap() <= NE_POINT_TOL,
                    "{name}: residual too large"
                );
            }
        }
    }

    #[test]
    fn degenerate_game_is_flagged() {
        // Player 2 is wholly indifferent: every profile where player 1
        // best-responds is an equilibrium (a component, not a point).
        let game = NormalFormGame::new(
            vec![2, 2],
            vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.0]],
            Default::default(),
        )
        .unwrap();
        let (points, degenerate) = enumerate_ne_two_player(&game).unwrap();
        assert!(degenerate);
        assert!(!points.is_empty());
    }

    #[test]
    fn residual_examples() {
        let game = builtin("matching-pennies").unwrap();
        assert_eq!(epsilon_ne_residual(&game, &uniform_point()).unwrap(), 0.0);
        // Pure (H, H): player 2 could move from −1 to +1 by switching.
        let hh = JointStrategy::from_pure_actions(&[0, 0], &[2, 2]).unwrap();
        assert_eq!(epsilon_ne_residual(&game, &hh).unwrap(), 2.0);
    }

    #[test]
    fn distance_examples() {
        let game = builtin("matching-pennies").unwrap();
        let set = EquilibriumSet::enumerated_nash(&game).unwrap();
        let far = JointStrategy::from_pure_actions(&[0, 1], &[2, 2]).unwrap();
        assert!((set.distance(&far).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(set.distance(&uniform_point()).unwrap(), 0.0);
        let nearby = JointStrategy::new(vec![
            SimplexVector::new(vec![0.6, 0.4]).unwrap(),
            SimplexVector::uniform(2).unwrap(),
        ])
        .unwrap();
        assert!((set.distance(&nearby).unwrap() - 0.02f64.sqrt()).abs() < 1e-12);

        let mce = EquilibriumSet::mean_centric();
        assert!(matches!(
            mce.distance(&uniform_point()),
            Err(EquilibriumError::ResidualOnly { .. })
        ));
    }

    #[test]
    fn consensus_grid_finds_all_three_points_of_the_coordination_game() {
        let game = builtin("coordination").unwrap();
        let set = EquilibriumSet::consensus_nash(&game).unwrap();
        let points = set.points().unwrap();
        assert_eq!(points.len(), 3);
        for p in points {
            assert!(epsilon_ne_residual(&game, p).unwrap() <= CONSENSUS_POINT_TOL);
            assert!(p.consensus_defect().unwrap() <= CONSENSUS_DEFECT_TOL);
        }
        let third = SimplexVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let mixed = JointStrategy::replicate(third, 2).unwrap();
        assert!(
            points.iter().any(|p| p.distance(&mixed).unwrap() < 1e-5),
            "interior consensus point not refined onto (2/3, 1/3)"
        );
    }

    #[test]
    fn anti_coordination_consensus_point_is_uniform() {
        let game = builtin("crossed-coordination").unwrap();
        let set = EquilibriumSet::consensus_nash(&game).unwrap();
        let points = set.points().unwrap();
        assert_eq!(points.len(), 1);
        assert!(points[0].distance(&uniform_point()).unwrap() < 1e-6);
    }

    #[test]
    fn consensus_grid_rejects_unsuitable_games() {
        let game = builtin("matching-pennies").unwrap();
        assert!(matches!(
            consensus_ne_grid(&game, 0.01),
            Err(EquilibriumError::NotPermutationInvariant)
        ));
        let game = builtin("coordination").unwrap();
        assert!(matches!(
            consensus_ne_grid(&game, 0.0),
            Err(EquilibriumError::BadResolution(_))
        ));
    }

    #[test]
    fn coarse_grids_still_find_vertex_equilibria() {
        let game = builtin("coordination").unwrap();
        let points = consensus_ne_grid(&game, 0.25).unwrap();
        let pure_aa = JointStrategy::from_pure_actions(&[0, 0], &[2, 2]).unwrap();
        let pure_bb = JointStrategy::from_pure_actions(&[1, 1], &[2, 2]).unwrap();
        for target in [&pure_aa, &pure_bb] {
            assert!(points.iter().any(|p| p.distance(target).unwrap() < 1e-9));
        }
    }

    #[test]
    fn consensus_points_are_mean_centric() {
        for name in ["coordination", "coordination-three", "crossed-coordination"] {
            let game = builtin(name).unwrap();
            let set = EquilibriumSet::consensus_nash(&game).unwrap();
            for p in set.points().unwrap() {
                assert!(
                    mce_residual(&game, p).unwrap() <= 1e-6,
                    "{name}: consensus point fails the mean-centric check"
                );
            }
        }
    }

    #[test]
    fn mce_examples() {
        // Miscoordinated vertex profile: far from mean-centric.
        let game = builtin("coordination").unwrap();
        let vertex = JointStrategy::from_pure_actions(&[0, 1], &[2, 2]).unwrap();
        let r = mce_residual(&game, &vertex).unwrap();
        assert!((r - 0.5).abs() < 1e-12, "direct evaluation gives 0.5, got {r}");

        // One-player game: centroid is the player's own strategy, so the
        // mean-centric residual coincides with the Nash residual.
        let solo = NormalFormGame::new(vec![3], vec![vec![1.0, 5.0, 2.0]], Default::default())
            .unwrap();
        let p = JointStrategy::new(vec![SimplexVector::uniform(3).unwrap()]).unwrap();
        let mce = mce_residual(&solo, &p).unwrap();
        let ne = epsilon_ne_residual(&solo, &p).unwrap();
        assert!((mce - ne).abs() < 1e-12);
        assert!((mce - (5.0 - 8.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn consensus_residual_blends_nash_residual_and_defect() {
        let game = builtin("coordination").unwrap();
        let third = SimplexVector::new(vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let consensus = JointStrategy::replicate(third.clone(), 2).unwrap();
        assert!(consensus_ne_residual(&game, &consensus).unwrap() < 1e-12);
        // A Nash point that is not consensus keeps a defect-sized residual.
        let skewed = JointStrategy::new(vec![
            third,
            SimplexVector::new(vec![0.5, 0.5]).unwrap(),
        ])
        .unwrap();
        let r = consensus_ne_residual(&game, &skewed).unwrap();
        assert!(r >= skewed.consensus_defect().unwrap() - 1e-15);
        assert!(r > 0.1);
    }

    #[test]
    fn equilibrium_sets_round_trip_through_structured_text() {
        let game = builtin("coordination").unwrap();
        let set = EquilibriumSet::enumerated_nash(&game).unwrap();
        let text = toml::to_string(&set).unwrap();
        let back: EquilibriumSet = toml::from_str(&text).unwrap();
        assert_eq!(back.kind, EquilibriumKind::Nash);
        assert_eq!(back.points().unwrap().len(), set.points().unwrap().len());
        for (a, b) in back.points().unwrap().iter().zip(set.points().unwrap()) {
            assert_eq!(a.distance(b).unwrap(), 0.0);
        }
    }
}
