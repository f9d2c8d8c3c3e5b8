//! Reward-recovery metrics and alignment verdicts.
//!
//! Learned rewards are compared only after removing the gauge freedom that
//! choice data cannot pin down (constant shifts, positive scale):
//! [`normalize_affine`] maps a table to `[0, 1]` with the minimum at 0 and
//! the maximum at 1, and [`rmse`] measures entrywise error between two
//! normalized tables.
//!
//! [`alignment_verdict`] asks the question the metrics cannot: if the agent
//! optimized the learned reward under the true dynamics, would the resulting
//! policy also be optimal for the true reward? The check runs greedy policy
//! extraction at a near-one discount and demands a true-value gap below
//! [`ALIGNMENT_VALUE_GAP_TOL`] at every state.

use crate::mdp::{MdpError, TabularMdp, DEFAULT_SOLVE_TOL};
use thiserror::Error;

/// Max per-state true-value shortfall tolerated before a learned reward is
/// declared misaligned.
pub const ALIGNMENT_VALUE_GAP_TOL: f64 = 1e-6;

/// Relative spread below which a reward table counts as constant.
pub const DEGENERATE_RANGE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("reward table contains a non-finite entry")]
    NonFiniteEntry,

    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// A reward table affinely mapped to `[0, 1]`.
///
/// Constant input tables cannot be spread out; they map to all zeros with the
/// `degenerate` flag set.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedReward {
    values: Vec<Vec<f64>>,
    degenerate: bool,
}

impl NormalizedReward {
    pub fn values(&self) -> &Vec<Vec<f64>> {
        &self.values
    }

    pub fn degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Shifts and scales a table so its minimum is exactly 0 and its maximum
/// exactly 1.
pub fn normalize_affine(table: &[Vec<f64>]) -> NormalizedReward {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for row in table {
        for &v in row {
            min = min.min(v);
            max = max.max(v);
        }
    }
    let spread = max - min;
    if !spread.is_finite() || spread <= DEGENERATE_RANGE_TOL * max.abs().max(min.abs()).max(1.0) {
        return NormalizedReward {
            values: table.iter().map(|row| vec![0.0; row.len()]).collect(),
            degenerate: true,
        };
    }
    NormalizedReward {
        values: table
            .iter()
            .map(|row| row.iter().map(|&v| (v - min) / spread).collect())
            .collect(),
        degenerate: false,
    }
}

/// Root mean squared error over all table entries.
pub fn rmse(a: &NormalizedReward, b: &NormalizedReward) -> Result<f64, EvalError> {
    if a.values.len() != b.values.len() {
        return Err(EvalError::ShapeMismatch(format!(
            "{} rows vs {} rows",
            a.values.len(),
            b.values.len()
        )));
    }
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    for (ra, rb) in a.values.iter().zip(b.values.iter()) {
        if ra.len() != rb.len() {
            return Err(EvalError::ShapeMismatch(format!(
                "row width {} vs {}",
                ra.len(),
                rb.len()
            )));
        }
        for (&va, &vb) in ra.iter().zip(rb.iter()) {
            sum_sq += (va - vb) * (va - vb);
            count += 1;
        }
    }
    Ok((sum_sq / count as f64).sqrt())
}

/// The policy evidence behind a verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyComparison {
    /// Greedy action per state under the learned reward (lowest-index ties).
    pub greedy_actions: Vec<usize>,
    /// Largest shortfall of that policy's true value against the true
    /// optimum, over states.
    pub value_gap: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentVerdict {
    pub aligned: bool,
    pub evidence: PolicyComparison,
    pub details: String,
}

/// Judges a learned reward by the behavior it induces: extract the greedy
/// optimal policy for the learned reward under `dynamics` at `gamma_high`,
/// evaluate that policy under the true reward, and compare with the true
/// optimum. Aligned means the gap is below [`ALIGNMENT_VALUE_GAP_TOL`] at
/// every state.
pub fn alignment_verdict(
    learned_reward: &[Vec<f64>],
    true_reward: &[Vec<f64>],
    dynamics: &TabularMdp,
    gamma_high: f64,
) -> Result<AlignmentVerdict, EvalError> {
    for table in [learned_reward, true_reward] {
        if table.len() != dynamics.num_states()
            || table.iter().any(|row| row.len() != dynamics.num_actions())
        {
            return Err(EvalError::ShapeMismatch(format!(
                "reward table does not match {}x{} dynamics",
                dynamics.num_states(),
                dynamics.num_actions()
            )));
        }
        if table.iter().flatten().any(|v| !v.is_finite()) {
            return Err(EvalError::NonFiniteEntry);
        }
    }

    let learned_mdp = dynamics.with_rewards(learned_reward.to_vec())?;
    let true_mdp = dynamics.with_rewards(true_reward.to_vec())?;

    let learned_bundle = learned_mdp.optimal_values(gamma_high, DEFAULT_SOLVE_TOL)?;
    let policy = learned_bundle.greedy_policy();
    let policy_values = true_mdp.discounted_values(&policy, gamma_high)?;
    let true_bundle = true_mdp.optimal_values(gamma_high, DEFAULT_SOLVE_TOL)?;

    let value_gap = true_bundle
        .v()
        .iter()
        .zip(policy_values.v().iter())
        .map(|(opt, got)| opt - got)
        .fold(f64::NEG_INFINITY, f64::max);
    let aligned = value_gap < ALIGNMENT_VALUE_GAP_TOL;
    let greedy_actions = policy.actions();
    let details = format!(
        "max true-value gap {value_gap:.3e} at gamma {gamma_high}; greedy actions {greedy_actions:?}"
    );
    Ok(AlignmentVerdict {
        aligned,
        evidence: PolicyComparison {
            greedy_actions,
            value_gap,
            gamma: gamma_high,
        },
        details,
    })
}
