//! Probability vectors and mixed-strategy profiles.
//!
//! Everything downstream (best responses, empirical frequencies, convergence
//! maps, equilibrium metrics) works over these two types:
//!
//! * [`SimplexVector`] — a point of the probability simplex, validated at
//!   construction and kept on the simplex through repeated recursive updates
//!   by a drift-controlled renormalization.
//! * [`JointStrategy`] — one simplex point per player; distances between
//!   profiles are Euclidean over the concatenated components.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for accepting an externally supplied weight vector as a
/// probability vector: |sum − 1| must be within this bound.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

/// Drift threshold for the internal renormalization applied after recursive
/// updates; tighter than [`SIMPLEX_SUM_TOL`] so accumulated rounding never
/// becomes visible to callers.
pub const RENORM_DRIFT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("weight vector must have at least one entry")]
    Empty,
    #[error("weight {value} at index {index} is not a finite probability")]
    BadWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, which is farther than {SIMPLEX_SUM_TOL} from 1")]
    BadSum { sum: f64 },
    #[error("index {index} out of range for a {len}-point simplex")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("step factor {gamma} outside (0, 1]")]
    BadStep { gamma: f64 },
    #[error("components have different action counts ({0} vs {1}); a common action space is required")]
    HeterogeneousComponents(usize, usize),
    #[error("profiles have different shapes and cannot be compared")]
    ShapeMismatch,
}

/// A probability vector: finite, non-negative entries summing to one
/// (within [`SIMPLEX_SUM_TOL`] at the construction boundary).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, SimplexError> {
        if weights.is_empty() {
            return Err(SimplexError::Empty);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(SimplexError::BadWeight { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(SimplexError::BadSum { sum });
        }
        let mut v = SimplexVector(weights);
        v.renormalize_if_drifted();
        Ok(v)
    }

    /// Dirac vector putting all mass on `index`.
    pub fn pure(index: usize, len: usize) -> Result<Self, SimplexError> {
        if index >= len {
            return Err(SimplexError::IndexOutOfRange { index, len });
        }
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Ok(SimplexVector(w))
    }

    pub fn uniform(len: usize) -> Result<Self, SimplexError> {
        if len == 0 {
            return Err(SimplexError::Empty);
        }
        Ok(SimplexVector(vec![1.0 / len as f64; len]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    /// Inverse-CDF sample: returns the index of the drawn atom.
    ///
    /// Uses a single uniform draw and a cumulative scan, so the RNG stream
    /// advances by exactly one `f64` per call regardless of the outcome.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, &w) in self.0.iter().enumerate() {
            acc += w;
            if u < acc {
                return k;
            }
        }
        // Rounding can leave acc slightly below 1; the draw belongs to the
        // last atom with positive mass.
        self.0
            .iter()
            .rposition(|&w| w > 0.0)
            .unwrap_or(self.0.len() - 1)
    }

    /// One recursive update step `q ← q + γ·(e_vertex − q)`.
    ///
    /// This is the single shared arithmetic path for every empirical-update
    /// family, so schedules that coincide numerically produce bit-identical
    /// trajectories. Renormalizes if the component sum drifts beyond
    /// [`RENORM_DRIFT_TOL`].
    pub fn step_toward_vertex(&mut self, vertex: usize, gamma: f64) -> Result<(), SimplexError> {
        if vertex >= self.0.len() {
            return Err(SimplexError::IndexOutOfRange {
                index: vertex,
                len: self.0.len(),
            });
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(SimplexError::BadStep { gamma });
        }
        for (k, w) in self.0.iter_mut().enumerate() {
            let target = if k == vertex { 1.0 } else { 0.0 };
            *w += gamma * (target - *w);
        }
        self.renormalize_if_drifted();
        Ok(())
    }

    /// Divides by the component sum when it has drifted more than
    /// [`RENORM_DRIFT_TOL`] from one.
    pub fn renormalize_if_drifted(&mut self) {
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > RENORM_DRIFT_TOL {
            for w in &mut self.0 {
                *w /= sum;
            }
        }
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Euclidean distance to another vector of the same length.
    pub fn distance(&self, other: &SimplexVector) -> Result<f64, SimplexError> {
        if self.len() != other.len() {
            return Err(SimplexError::HeterogeneousComponents(self.len(), other.len()));
        }
        Ok(self.squared_distance_unchecked(other).sqrt())
    }

    pub(crate) fn squared_distance_unchecked(&self, other: &SimplexVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn linf_distance(&self, other: &SimplexVector) -> Result<f64, SimplexError> {
        if self.len() != other.len() {
            return Err(SimplexError::HeterogeneousComponents(self.len(), other.len()));
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = SimplexError;
    fn try_from(weights: Vec<f64>) -> Result<Self, Self::Error> {
        SimplexVector::new(weights)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(v: SimplexVector) -> Vec<f64> {
        v.0
    }
}

/// One mixed strategy per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointStrategy(Vec<SimplexVector>);

impl JointStrategy {
    pub fn new(components: Vec<SimplexVector>) -> Result<Self, SimplexError> {
        if components.is_empty() {
            return Err(SimplexError::Empty);
        }
        Ok(JointStrategy(components))
    }

    /// Dirac profile for a pure joint action.
    pub fn from_pure_actions(actions: &[usize], action_counts: &[usize]) -> Result<Self, SimplexError> {
        if actions.is_empty() || actions.len() != action_counts.len() {
            return Err(SimplexError::ShapeMismatch);
        }
        let components = actions
            .iter()
            .zip(action_counts)
            .map(|(&a, &m)| SimplexVector::pure(a, m))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(JointStrategy(components))
    }

    /// `n` copies of the same component (used by consensus-style maps).
    pub fn replicate(component: SimplexVector, n: usize) -> Result<Self, SimplexError> {
        if n == 0 {
            return Err(SimplexError::Empty);
        }
        Ok(JointStrategy(vec![component; n]))
    }

    pub fn players(&self) -> usize {
        self.0.len()
    }

    pub fn component(&self, player: usize) -> &SimplexVector {
        &self.0[player]
    }

    pub fn component_mut(&mut self, player: usize) -> &mut SimplexVector {
        &mut self.0[player]
    }

    pub fn components(&self) -> &[SimplexVector] {
        &self.0
    }

    /// Per-player action counts of this profile.
    pub fn shape(&self) -> Vec<usize> {
        self.0.iter().map(SimplexVector::len).collect()
    }

    /// Mean of the components. Errors if the players do not share one
    /// action count.
    pub fn centroid(&self) -> Result<SimplexVector, SimplexError> {
        let m = self.0[0].len();
        for c in &self.0 {
            if c.len() != m {
                return Err(SimplexError::HeterogeneousComponents(m, c.len()));
            }
        }
        let n = self.0.len() as f64;
        let mut mean = vec![0.0; m];
        for c in &self.0 {
            for (k, &w) in c.weights().iter().enumerate() {
                mean[k] += w / n;
            }
        }
        let mut v = SimplexVector(mean);
        v.renormalize_if_drifted();
        Ok(v)
    }

    /// Euclidean distance over the concatenated components.
    pub fn distance(&self, other: &JointStrategy) -> Result<f64, SimplexError> {
        if self.shape() != other.shape() {
            return Err(SimplexError::ShapeMismatch);
        }
        let sq: f64 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.squared_distance_unchecked(b))
            .sum();
        Ok(sq.sqrt())
    }

    /// Largest absolute coordinate difference across all components.
    pub fn linf_distance(&self, other: &JointStrategy) -> Result<f64, SimplexError> {
        if self.shape() != other.shape() {
            return Err(SimplexError::ShapeMismatch);
        }
        let mut worst = 0.0f64;
        for (a, b) in self.0.iter().zip(&other.0) {
            worst = worst.max(a.linf_distance(b)?);
        }
        Ok(worst)
    }

    /// Largest pairwise distance between components ("consensus defect");
    /// zero exactly when all players use one common strategy.
    pub fn consensus_defect(&self) -> Result<f64, SimplexError> {
        let mut worst = 0.0f64;
        for i in 0..self.0.len() {
            for j in (i + 1)..self.0.len() {
                worst = worst.max(self.0[i].distance(&self.0[j])?);
            }
        }
        Ok(worst)
    }
}

/// Diameter of any probability simplex with ≥ 2 vertices under the
/// Euclidean norm (distance between two vertices).
pub const SIMPLEX_DIAMETER: f64 = std::f64::consts::SQRT_2;
