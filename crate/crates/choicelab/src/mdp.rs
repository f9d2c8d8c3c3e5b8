//! Finite tabular MDPs and the quantities computed on them.
//!
//! A [`TabularMdp`] stores a dense transition table `P[a][s][s']` and a reward
//! table `r[s][a]`. Together with a [`Policy`] it induces a Markov chain on
//! states, from which this module derives:
//!
//! - the stationary distribution of the induced chain (unique when the chain
//!   is unichain),
//! - the long-run average reward `r̄`,
//! - the relative (bias) value function `Ṽ`, i.e. the solution of the Poisson
//!   equation `Ṽ = r_π − r̄·1 + P_π Ṽ` normalized so that the
//!   stationary-weighted mean of `Ṽ` is zero,
//! - discounted state values, action values and advantages for a fixed policy
//!   or for the optimal policy (value iteration).
//!
//! All linear systems are small and dense; they are solved with LU
//! factorization. Types are immutable after construction and every operation
//! is a pure function of its inputs, so values can be shared freely across
//! threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// Default tolerance for iterative solvers and residual checks.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

/// Iteration cap shared by value iteration and the power-iteration fallback.
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Tolerance on transition and policy row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Errors from MDP construction and the solvers built on top of it.
#[derive(Debug, Error)]
pub enum MdpError {
    #[error("transition row (a={action}, s={state}) sums to {sum:.17}, expected 1")]
    RowNotStochastic {
        action: usize,
        state: usize,
        sum: f64,
    },

    #[error("probability out of range at (a={action}, s={state}, s'={next}): {value}")]
    ProbabilityOutOfRange {
        action: usize,
        state: usize,
        next: usize,
        value: f64,
    },

    #[error("reward at (s={state}, a={action}) is not finite")]
    NonFiniteReward { state: usize, action: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("induced state chain is not unichain")]
    NotUnichain,

    #[error("no convergence after {iterations} iterations at tolerance {tol}")]
    NoConvergence { tol: f64, iterations: usize },

    #[error("linear system is singular")]
    SingularSystem,

    #[error("discount factor {0} is outside (0, 1)")]
    InvalidDiscount(f64),

    #[error("advantage table not admissible: max over actions at state {state} is {max}")]
    NotAdmissible { state: usize, max: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("mdp file format error: {0}")]
    Format(String),
}

/// A finite MDP with dense transition and reward tables.
///
/// `transitions[a][s][s']` is the probability of moving to `s'` when taking
/// action `a` in state `s`; `rewards[s][a]` is the immediate reward. States
/// and actions are dense indices `0..num_states` and `0..num_actions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<Vec<Vec<f64>>>,
    rewards: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_labels: Option<Vec<String>>,
}

impl TabularMdp {
    /// Builds an MDP, checking that every transition row is a probability
    /// distribution (within [`ROW_SUM_TOL`]) and every reward is finite.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<Vec<Vec<f64>>>,
        rewards: Vec<Vec<f64>>,
    ) -> Result<Self, MdpError> {
        let mdp = Self {
            num_states,
            num_actions,
            transitions,
            rewards,
            state_labels: None,
            action_labels: None,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    /// Attaches display labels. Lengths must match the state/action counts.
    pub fn with_labels(
        mut self,
        state_labels: Option<Vec<String>>,
        action_labels: Option<Vec<String>>,
    ) -> Result<Self, MdpError> {
        if let Some(ref labels) = state_labels {
            if labels.len() != self.num_states {
                return Err(MdpError::DimensionMismatch(format!(
                    "{} state labels for {} states",
                    labels.len(),
                    self.num_states
                )));
            }
        }
        if let Some(ref labels) = action_labels {
            if labels.len() != self.num_actions {
                return Err(MdpError::DimensionMismatch(format!(
                    "{} action labels for {} actions",
                    labels.len(),
                    self.num_actions
                )));
            }
        }
        self.state_labels = state_labels;
        self.action_labels = action_labels;
        Ok(self)
    }

    /// Same dynamics, different reward table.
    pub fn with_rewards(&self, rewards: Vec<Vec<f64>>) -> Result<Self, MdpError> {
        let mut out = self.clone();
        out.rewards = rewards;
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<(), MdpError> {
        if self.num_states == 0 || self.num_actions == 0 {
            return Err(MdpError::DimensionMismatch(
                "state and action counts must be positive".into(),
            ));
        }
        if self.transitions.len() != self.num_actions {
            return Err(MdpError::DimensionMismatch(format!(
                "transition table has {} action slices, expected {}",
                self.transitions.len(),
                self.num_actions
            )));
        }
        for (a, slice) in self.transitions.iter().enumerate() {
            if slice.len() != self.num_states {
                return Err(MdpError::DimensionMismatch(format!(
                    "transition slice for action {a} has {} rows, expected {}",
                    slice.len(),
                    self.num_states
                )));
            }
            for (s, row) in slice.iter().enumerate() {
                if row.len() != self.num_states {
                    return Err(MdpError::DimensionMismatch(format!(
                        "transition row (a={a}, s={s}) has {} entries, expected {}",
                        row.len(),
                        self.num_states
                    )));
                }
                let mut sum = 0.0;
                for (next, &p) in row.iter().enumerate() {
                    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                        return Err(MdpError::ProbabilityOutOfRange {
                            action: a,
                            state: s,
                            next,
                            value: p,
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(MdpError::RowNotStochastic {
                        action: a,
                        state: s,
                        sum,
                    });
                }
            }
        }
        if self.rewards.len() != self.num_states {
            return Err(MdpError::DimensionMismatch(format!(
                "reward table has {} rows, expected {}",
                self.rewards.len(),
                self.num_states
            )));
        }
        for (s, row) in self.rewards.iter().enumerate() {
            if row.len() != self.num_actions {
                return Err(MdpError::DimensionMismatch(format!(
                    "reward row for state {s} has {} entries, expected {}",
                    row.len(),
                    self.num_actions
                )));
            }
            for (a, &r) in row.iter().enumerate() {
                if !r.is_finite() {
                    return Err(MdpError::NonFiniteReward { state: s, action: a });
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Transition probability `P[a][s][s']`.
    pub fn transition(&self, action: usize, state: usize, next: usize) -> f64 {
        self.transitions[action][state][next]
    }

    /// The full next-state distribution for `(s, a)`.
    pub fn transition_row(&self, action: usize, state: usize) -> &[f64] {
        &self.transitions[action][state]
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        self.rewards[state][action]
    }

    pub fn rewards_table(&self) -> &Vec<Vec<f64>> {
        &self.rewards
    }

    pub fn state_labels(&self) -> Option<&[String]> {
        self.state_labels.as_deref()
    }

    pub fn action_labels(&self) -> Option<&[String]> {
        self.action_labels.as_deref()
    }

    /// Policy-averaged transition matrix `P_π` and reward vector `r_π`.
    fn induced_chain(&self, policy: &Policy) -> Result<(Vec<Vec<f64>>, Vec<f64>), MdpError> {
        self.check_policy_dims(policy)?;
        let n = self.num_states;
        let mut p_pi = vec![vec![0.0; n]; n];
        let mut r_pi = vec![0.0; n];
        for s in 0..n {
            for a in 0..self.num_actions {
                let w = policy.prob(s, a);
                if w == 0.0 {
                    continue;
                }
                r_pi[s] += w * self.rewards[s][a];
                let row = &self.transitions[a][s];
                for next in 0..n {
                    p_pi[s][next] += w * row[next];
                }
            }
        }
        Ok((p_pi, r_pi))
    }

    fn check_policy_dims(&self, policy: &Policy) -> Result<(), MdpError> {
        if policy.num_states() != self.num_states || policy.num_actions() != self.num_actions {
            return Err(MdpError::DimensionMismatch(format!(
                "policy is {}x{}, mdp is {}x{}",
                policy.num_states(),
                policy.num_actions(),
                self.num_states,
                self.num_actions
            )));
        }
        Ok(())
    }

    /// True iff the state chain induced by `policy` has a single closed
    /// communicating class, so long-run state frequencies do not depend on
    /// the start state.
    ///
    /// The check is structural: it looks only at which transitions have
    /// positive probability, never at their magnitudes.
    pub fn check_unichain(&self, policy: &Policy) -> Result<bool, MdpError> {
        let (p_pi, _) = self.induced_chain(policy)?;
        Ok(count_closed_classes(&p_pi) == 1)
    }

    /// The unique stationary distribution of the induced chain.
    ///
    /// Solves `π_stat P_π = π_stat, Σ π_stat = 1` through the nonsingular
    /// system `(I − P_π + 1·1ᵀ)ᵀ x = 1`, falling back to damped power
    /// iteration if the factorization fails. The returned distribution has
    /// residual `‖π_stat P_π − π_stat‖∞ ≤ tol`.
    pub fn stationary_distribution(
        &self,
        policy: &Policy,
        tol: f64,
    ) -> Result<StationaryDistribution, MdpError> {
        if !self.check_unichain(policy)? {
            return Err(MdpError::NotUnichain);
        }
        let (p_pi, _) = self.induced_chain(policy)?;
        let n = self.num_states;

        if let Some(x) = solve_stationary_direct(&p_pi) {
            if stationary_residual(&x, &p_pi) <= tol && x.iter().all(|&v| v >= -1e-9) {
                let mut probs: Vec<f64> = x.iter().map(|&v| v.max(0.0)).collect();
                let total: f64 = probs.iter().sum();
                for p in &mut probs {
                    *p /= total;
                }
                return Ok(StationaryDistribution { probs });
            }
        }

        // Damped power iteration; the damping handles periodic chains.
        let mut x = vec![1.0 / n as f64; n];
        for it in 0..MAX_ITERATIONS {
            let mut next = vec![0.0; n];
            for s in 0..n {
                let xs = x[s];
                if xs == 0.0 {
                    continue;
                }
                for (t, &p) in p_pi[s].iter().enumerate() {
                    next[t] += xs * p;
                }
            }
            for s in 0..n {
                next[s] = 0.5 * (next[s] + x[s]);
            }
            let total: f64 = next.iter().sum();
            for v in &mut next {
                *v /= total;
            }
            x = next;
            if it % 8 == 0 && stationary_residual(&x, &p_pi) <= tol {
                return Ok(StationaryDistribution { probs: x });
            }
        }
        Err(MdpError::NoConvergence {
            tol,
            iterations: MAX_ITERATIONS,
        })
    }

    /// Long-run average reward `r̄ = Σ_s π_stat(s) Σ_a π(a|s) r(s,a)`.
    pub fn average_reward(&self, policy: &Policy) -> Result<f64, MdpError> {
        let stat = self.stationary_distribution(policy, DEFAULT_SOLVE_TOL)?;
        let (_, r_pi) = self.induced_chain(policy)?;
        Ok(stat
            .probs
            .iter()
            .zip(r_pi.iter())
            .map(|(&p, &r)| p * r)
            .sum())
    }

    /// Average reward plus the bias (relative value) vector.
    ///
    /// The bias solves the Poisson equation `Ṽ = r_π − r̄·1 + P_π Ṽ` with the
    /// normalization `π_stat · Ṽ = 0`, obtained in one shot from the
    /// fundamental-matrix system `(I − P_π + 1·π_statᵀ) Ṽ = r_π − r̄·1`. This
    /// is the solution that equals the Abel limit of discounted excess reward.
    pub fn relative_value(&self, policy: &Policy) -> Result<RelativeValueFunction, MdpError> {
        let stat = self.stationary_distribution(policy, DEFAULT_SOLVE_TOL)?;
        let (p_pi, r_pi) = self.induced_chain(policy)?;
        let n = self.num_states;
        let average_reward: f64 = stat
            .probs
            .iter()
            .zip(r_pi.iter())
            .map(|(&p, &r)| p * r)
            .sum();

        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let eye = if i == j { 1.0 } else { 0.0 };
                a[(i, j)] = eye - p_pi[i][j] + stat.probs[j];
            }
        }
        let b = DVector::<f64>::from_iterator(n, r_pi.iter().map(|&r| r - average_reward));
        let bias = a
            .lu()
            .solve(&b)
            .ok_or(MdpError::SingularSystem)?
            .iter()
            .copied()
            .collect();
        Ok(RelativeValueFunction {
            average_reward,
            bias,
        })
    }

    /// Discounted value, action-value and advantage tables for a fixed
    /// policy, via the direct linear solve `(I − γ P_π) V = r_π`.
    pub fn discounted_values(
        &self,
        policy: &Policy,
        gamma: f64,
    ) -> Result<ValueBundle, MdpError> {
        if !(0.0..1.0).contains(&gamma) || gamma == 0.0 {
            return Err(MdpError::InvalidDiscount(gamma));
        }
        let (p_pi, r_pi) = self.induced_chain(policy)?;
        let n = self.num_states;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let eye = if i == j { 1.0 } else { 0.0 };
                a[(i, j)] = eye - gamma * p_pi[i][j];
            }
        }
        let b = DVector::<f64>::from_iterator(n, r_pi.iter().copied());
        let v: Vec<f64> = a
            .lu()
            .solve(&b)
            .ok_or(MdpError::SingularSystem)?
            .iter()
            .copied()
            .collect();
        Ok(self.bundle_from_values(v, gamma, false))
    }

    /// Optimal discounted values via value iteration.
    ///
    /// Iterates the Bellman optimality operator until the sup-norm change is
    /// below `tol`, then recomputes `Q` once and sets `V = max_a Q`, so the
    /// returned bundle satisfies `max_a Δ(s, a) = 0` exactly per state.
    pub fn optimal_values(&self, gamma: f64, tol: f64) -> Result<ValueBundle, MdpError> {
        if !(0.0..1.0).contains(&gamma) || gamma == 0.0 {
            return Err(MdpError::InvalidDiscount(gamma));
        }
        let n = self.num_states;
        let mut v = vec![0.0; n];
        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let mut next = vec![f64::NEG_INFINITY; n];
            for s in 0..n {
                for a in 0..self.num_actions {
                    let mut q = self.rewards[s][a];
                    let row = &self.transitions[a][s];
                    for (sp, &p) in row.iter().enumerate() {
                        if p != 0.0 {
                            q += gamma * p * v[sp];
                        }
                    }
                    if q > next[s] {
                        next[s] = q;
                    }
                }
            }
            let delta = v
                .iter()
                .zip(next.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            v = next;
            if delta <= tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(MdpError::NoConvergence {
                tol,
                iterations: MAX_ITERATIONS,
            });
        }
        Ok(self.bundle_from_values(v, gamma, true))
    }

    /// Builds (V, Q, Δ) from a state-value vector. When `optimal` is set the
    /// value vector is replaced by `max_a Q` so that advantages are exactly
    /// max-zero per state.
    fn bundle_from_values(&self, v: Vec<f64>, gamma: f64, optimal: bool) -> ValueBundle {
        let n = self.num_states;
        let mut q = vec![vec![0.0; self.num_actions]; n];
        for s in 0..n {
            for a in 0..self.num_actions {
                let mut val = self.rewards[s][a];
                let row = &self.transitions[a][s];
                for (sp, &p) in row.iter().enumerate() {
                    if p != 0.0 {
                        val += gamma * p * v[sp];
                    }
                }
                q[s][a] = val;
            }
        }
        let v_out: Vec<f64> = if optimal {
            q.iter()
                .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
                .collect()
        } else {
            v
        };
        let advantage: Vec<Vec<f64>> = q
            .iter()
            .zip(v_out.iter())
            .map(|(row, &vs)| row.iter().map(|&qa| qa - vs).collect())
            .collect();
        ValueBundle {
            discount: gamma,
            v: v_out,
            q,
            advantage,
        }
    }

    /// Serializes to the structured-text MDP format (JSON). Floats are
    /// written in shortest round-trip form, so load/save is lossless.
    pub fn save(&self, path: &Path) -> Result<(), MdpError> {
        let text = self.to_json_string()?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MdpError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> Result<String, MdpError> {
        serde_json::to_string_pretty(self).map_err(|e| MdpError::Format(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self, MdpError> {
        let mdp: Self =
            serde_json::from_str(text).map_err(|e| MdpError::Format(e.to_string()))?;
        mdp.validate()?;
        Ok(mdp)
    }
}

/// A stochastic policy `π(a|s)` as a dense table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    probs: Vec<Vec<f64>>,
}

impl Policy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self, MdpError> {
        if probs.is_empty() || probs[0].is_empty() {
            return Err(MdpError::DimensionMismatch("empty policy table".into()));
        }
        let num_actions = probs[0].len();
        for (s, row) in probs.iter().enumerate() {
            if row.len() != num_actions {
                return Err(MdpError::DimensionMismatch(format!(
                    "policy row {s} has {} entries, expected {num_actions}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (a, &p) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                    return Err(MdpError::ProbabilityOutOfRange {
                        action: a,
                        state: s,
                        next: 0,
                        value: p,
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MdpError::RowNotStochastic {
                    action: 0,
                    state: s,
                    sum,
                });
            }
        }
        Ok(Self { probs })
    }

    /// Uniform over all actions in every state.
    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let p = 1.0 / num_actions as f64;
        Self {
            probs: vec![vec![p; num_actions]; num_states],
        }
    }

    /// Deterministic policy from a per-state action choice.
    pub fn deterministic(actions: &[usize], num_actions: usize) -> Self {
        let probs = actions
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; num_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        Self { probs }
    }

    pub fn num_states(&self) -> usize {
        self.probs.len()
    }

    pub fn num_actions(&self) -> usize {
        self.probs[0].len()
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[state][action]
    }

    /// The chosen action per state, for deterministic policies.
    pub fn actions(&self) -> Vec<usize> {
        self.probs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap_or(0)
            })
            .collect()
    }
}

/// The unique stationary distribution of a unichain Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    probs: Vec<f64>,
}

impl StationaryDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, state: usize) -> f64 {
        self.probs[state]
    }
}

/// Average reward `r̄` together with the bias values `Ṽ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeValueFunction {
    average_reward: f64,
    bias: Vec<f64>,
}

impl RelativeValueFunction {
    pub fn average_reward(&self) -> f64 {
        self.average_reward
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_at(&self, state: usize) -> f64 {
        self.bias[state]
    }

    /// The bias vector scaled entrywise by `c`.
    pub fn scaled_bias(&self, c: f64) -> Vec<f64> {
        self.bias.iter().map(|&v| c * v).collect()
    }
}

/// Discounted values for one discount factor: `V(s)`, `Q(s,a)` and the
/// advantage `Δ(s,a) = Q(s,a) − V(s)` stored exactly as that difference.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueBundle {
    discount: f64,
    v: Vec<f64>,
    q: Vec<Vec<f64>>,
    advantage: Vec<Vec<f64>>,
}

impl ValueBundle {
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn q(&self) -> &Vec<Vec<f64>> {
        &self.q
    }

    pub fn advantage(&self) -> &Vec<Vec<f64>> {
        &self.advantage
    }

    /// Greedy deterministic policy; ties resolve to the lowest action index.
    pub fn greedy_policy(&self) -> Policy {
        let actions: Vec<usize> = self
            .q
            .iter()
            .map(|row| {
                let mut best = 0;
                for (a, &qa) in row.iter().enumerate() {
                    if qa > row[best] {
                        best = a;
                    }
                }
                best
            })
            .collect();
        Policy::deterministic(&actions, self.q[0].len())
    }
}

/// Treats an admissible advantage table as a reward table.
///
/// Admissibility requires `max_a adv(s, a) = 0` (within `tol`) for every
/// state; any true optimal advantage function has this property. The returned
/// reward is the advantage itself, which induces the same advantages and
/// therefore the same greedy behavior.
pub fn impute_reward_from_advantage(
    adv: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<Vec<f64>>, MdpError> {
    for (s, row) in adv.iter().enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max.abs() > tol {
            return Err(MdpError::NotAdmissible { state: s, max });
        }
    }
    Ok(adv.to_vec())
}

/// Number of closed communicating classes of a finite chain, judged from the
/// sparsity pattern of `p`.
fn count_closed_classes(p: &[Vec<f64>]) -> usize {
    let n = p.len();
    let reach: Vec<Vec<bool>> = (0..n).map(|s| reachable_from(p, s)).collect();
    // A state is recurrent iff every state it can reach can reach it back.
    let recurrent: Vec<bool> = (0..n)
        .map(|s| (0..n).all(|t| !reach[s][t] || reach[t][s]))
        .collect();
    let mut classes = 0;
    let mut assigned = vec![false; n];
    for s in 0..n {
        if !recurrent[s] || assigned[s] {
            continue;
        }
        classes += 1;
        for t in s..n {
            if recurrent[t] && reach[s][t] && reach[t][s] {
                assigned[t] = true;
            }
        }
    }
    classes
}

fn reachable_from(p: &[Vec<f64>], start: usize) -> Vec<bool> {
    let n = p.len();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(s) = stack.pop() {
        for (t, &prob) in p[s].iter().enumerate() {
            if prob > 0.0 && !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// Solves `(I − P + 1·1ᵀ)ᵀ x = 1`, which is nonsingular exactly when the
/// chain is unichain and then yields the stationary distribution.
fn solve_stationary_direct(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = p.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // Transposed entry of I − P + ones.
            let eye = if i == j { 1.0 } else { 0.0 };
            a[(i, j)] = eye - p[j][i] + 1.0;
        }
    }
    let b = DVector::<f64>::from_element(n, 1.0);
    a.lu().solve(&b).map(|x| x.iter().copied().collect())
}

fn stationary_residual(x: &[f64], p: &[Vec<f64>]) -> f64 {
    let n = p.len();
    let mut res = 0.0_f64;
    for j in 0..n {
        let mut xp = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            xp += xi * p[i][j];
        }
        res = res.max((xp - x[j]).abs());
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn two_state_chain(p: [[f64; 2]; 2], r: [f64; 2]) -> TabularMdp {
        TabularMdp::new(
            2,
            1,
            vec![vec![p[0].to_vec(), p[1].to_vec()]],
            vec![vec![r[0]], vec![r[1]]],
        )
        .unwrap()
    }

    /// Random unichain MDP: strictly positive transition rows make the chain
    /// irreducible, hence unichain.
    fn random_unichain(rng: &mut ChaCha12Rng, num_states: usize, num_actions: usize) -> TabularMdp {
        let mut transitions = Vec::new();
        for _ in 0..num_actions {
            let mut slice = Vec::new();
            for _ in 0..num_states {
                let raw: Vec<f64> = (0..num_states).map(|_| rng.random_range(0.05..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                slice.push(raw.into_iter().map(|v| v / sum).collect());
            }
            transitions.push(slice);
        }
        let rewards = (0..num_states)
            .map(|_| (0..num_actions).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        TabularMdp::new(num_states, num_actions, transitions, rewards).unwrap()
    }

    fn random_policy(rng: &mut ChaCha12Rng, num_states: usize, num_actions: usize) -> Policy {
        let probs = (0..num_states)
            .map(|_| {
                let raw: Vec<f64> = (0..num_actions).map(|_| rng.random_range(0.1..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / sum).collect()
            })
            .collect();
        Policy::new(probs).unwrap()
    }

    #[test]
    fn rejects_nonstochastic_rows() {
        let err = TabularMdp::new(
            2,
            1,
            vec![vec![vec![0.6, 0.6], vec![0.5, 0.5]]],
            vec![vec![0.0], vec![0.0]],
        )
        .unwrap_err();
        assert!(matches!(err, MdpError::RowNotStochastic { .. }));
    }

    #[test]
    fn rejects_nonfinite_rewards() {
        let err = TabularMdp::new(
            1,
            1,
            vec![vec![vec![1.0]]],
            vec![vec![f64::NAN]],
        )
        .unwrap_err();
        assert!(matches!(err, MdpError::NonFiniteReward { .. }));
    }

    #[test]
    fn unichain_fully_connected_chain() {
        let mdp = two_state_chain([[0.5, 0.5], [0.5, 0.5]], [0.0, 1.0]);
        let policy = Policy::uniform(2, 1);
        assert!(mdp.check_unichain(&policy).unwrap());
    }

    #[test]
    fn unichain_rejects_two_absorbing_states() {
        let mdp = two_state_chain([[1.0, 0.0], [0.0, 1.0]], [0.0, 1.0]);
        let policy = Policy::uniform(2, 1);
        assert!(!mdp.check_unichain(&policy).unwrap());
    }

    #[test]
    fn unichain_dimension_mismatch() {
        let mdp = two_state_chain([[0.5, 0.5], [0.5, 0.5]], [0.0, 1.0]);
        let policy = Policy::uniform(3, 1);
        assert!(matches!(
            mdp.check_unichain(&policy),
            Err(MdpError::DimensionMismatch(_))
        ));
    }

    /// Independent oracle: Warshall transitive closure instead of BFS.
    #[test]
    fn unichain_matches_closure_oracle_on_random_chains() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(2..6);
            let mut p = vec![vec![0.0; n]; n];
            for row in p.iter_mut() {
                // Sparse random chain: between 1 and n positive entries.
                let k = rng.random_range(1..=n);
                let mut targets: Vec<usize> = (0..n).collect();
                targets.shuffle(&mut rng);
                for &t in targets.iter().take(k) {
                    row[t] = 1.0 / k as f64;
                }
            }
            let mdp = TabularMdp::new(
                n,
                1,
                vec![p.clone()],
                vec![vec![0.0]; n],
            )
            .unwrap();

            // Oracle: Warshall closure, then count closed mutually-reachable classes.
            let mut reach = vec![vec![false; n]; n];
            for i in 0..n {
                reach[i][i] = true;
                for j in 0..n {
                    if p[i][j] > 0.0 {
                        reach[i][j] = true;
                    }
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        if reach[i][k] && reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
            let recurrent: Vec<bool> = (0..n)
                .map(|s| (0..n).all(|t| !reach[s][t] || reach[t][s]))
                .collect();
            let mut reps: Vec<usize> = Vec::new();
            for s in 0..n {
                if recurrent[s] && !reps.iter().any(|&r| reach[r][s] && reach[s][r]) {
                    reps.push(s);
                }
            }
            let expected = reps.len() == 1;
            assert_eq!(
                mdp.check_unichain(&Policy::uniform(n, 1)).unwrap(),
                expected
            );
        }
    }

    #[test]
    fn stationary_symmetric_two_state() {
        let mdp = two_state_chain([[0.5, 0.5], [0.5, 0.5]], [0.0, 1.0]);
        let stat = mdp
            .stationary_distribution(&Policy::uniform(2, 1), 1e-10)
            .unwrap();
        assert_relative_eq!(stat.prob(0), 0.5, max_relative = 1e-12);
        assert_relative_eq!(stat.prob(1), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn stationary_absorbing_chain() {
        let mdp = two_state_chain([[0.0, 1.0], [0.0, 1.0]], [0.0, 1.0]);
        let stat = mdp
            .stationary_distribution(&Policy::uniform(2, 1), 1e-10)
            .unwrap();
        assert!(stat.prob(0).abs() < 1e-12);
        assert_relative_eq!(stat.prob(1), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn stationary_not_unichain_error() {
        let mdp = two_state_chain([[1.0, 0.0], [0.0, 1.0]], [0.0, 1.0]);
        assert!(matches!(
            mdp.stationary_distribution(&Policy::uniform(2, 1), 1e-10),
            Err(MdpError::NotUnichain)
        ));
    }

    /// The direct solve must agree with an independent power-iteration oracle
    /// and satisfy the fixed-point property on random chains.
    #[test]
    fn stationary_matches_power_iteration_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(2..8);
            let mdp = random_unichain(&mut rng, n, 1);
            let policy = Policy::uniform(n, 1);
            let stat = mdp.stationary_distribution(&policy, 1e-12).unwrap();

            // Oracle: plain power iteration on the transition matrix.
            let mut x = vec![1.0 / n as f64; n];
            for _ in 0..20_000 {
                let mut next = vec![0.0; n];
                for s in 0..n {
                    for t in 0..n {
                        next[t] += x[s] * mdp.transition(0, s, t);
                    }
                }
                x = next;
            }
            for s in 0..n {
                assert_relative_eq!(stat.prob(s), x[s], epsilon = 1e-9);
            }

            // Fixed point within 1e-10.
            let p: Vec<Vec<f64>> = (0..n)
                .map(|s| (0..n).map(|t| mdp.transition(0, s, t)).collect())
                .collect();
            assert!(stationary_residual(stat.probs(), &p) < 1e-10);
            let total: f64 = stat.probs().iter().sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn stationary_handles_periodic_chain() {
        let mdp = two_state_chain([[0.0, 1.0], [1.0, 0.0]], [0.0, 1.0]);
        let stat = mdp
            .stationary_distribution(&Policy::uniform(2, 1), 1e-10)
            .unwrap();
        assert_relative_eq!(stat.prob(0), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn average_reward_examples() {
        let uniform = two_state_chain([[0.5, 0.5], [0.5, 0.5]], [0.0, 1.0]);
        assert_relative_eq!(
            uniform.average_reward(&Policy::uniform(2, 1)).unwrap(),
            0.5,
            epsilon = 1e-12
        );

        let absorbing = two_state_chain([[0.0, 1.0], [0.0, 1.0]], [0.0, 1.0]);
        assert_relative_eq!(
            absorbing.average_reward(&Policy::uniform(2, 1)).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn relative_value_absorbing_chain_hand_solved() {
        // Chain 0 -> 1 (absorbing), r = (0, 1): r̄ = 1 and the Poisson system
        // gives Ṽ = (−1, 0).
        let mdp = two_state_chain([[0.0, 1.0], [0.0, 1.0]], [0.0, 1.0]);
        let rv = mdp.relative_value(&Policy::uniform(2, 1)).unwrap();
        assert_relative_eq!(rv.average_reward(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(rv.bias_at(0), -1.0, epsilon = 1e-10);
        assert!(rv.bias_at(1).abs() < 1e-10);
    }

    #[test]
    fn relative_value_constant_reward_is_zero() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..10 {
            let n = rng.random_range(2..6);
            let mdp = random_unichain(&mut rng, n, 2);
            let constant = vec![vec![0.7; 2]; n];
            let mdp = mdp.with_rewards(constant).unwrap();
            let policy = random_policy(&mut rng, n, 2);
            let rv = mdp.relative_value(&policy).unwrap();
            assert_relative_eq!(rv.average_reward(), 0.7, epsilon = 1e-10);
            for s in 0..n {
                assert!(rv.bias_at(s).abs() < 1e-9);
            }
        }
    }

    /// Poisson residual and normalization checks on 50 random unichain MDPs.
    #[test]
    fn relative_value_poisson_residual_on_random_mdps() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.random_range(2..=8);
            let m = rng.random_range(1..=3);
            let mdp = random_unichain(&mut rng, n, m);
            let policy = random_policy(&mut rng, n, m);
            let rv = mdp.relative_value(&policy).unwrap();
            let stat = mdp.stationary_distribution(&policy, 1e-12).unwrap();

            // π_stat · Ṽ = 0.
            let weighted: f64 = stat
                .probs()
                .iter()
                .zip(rv.bias().iter())
                .map(|(&p, &h)| p * h)
                .sum();
            assert!(weighted.abs() < 1e-8, "normalization violated: {weighted}");

            // Ṽ(s) = r_π(s) − r̄ + Σ P_π(s,s') Ṽ(s').
            for s in 0..n {
                let mut r_pi = 0.0;
                let mut next = 0.0;
                for a in 0..m {
                    r_pi += policy.prob(s, a) * mdp.reward(s, a);
                    for t in 0..n {
                        next += policy.prob(s, a) * mdp.transition(a, s, t) * rv.bias_at(t);
                    }
                }
                let residual = rv.bias_at(s) - (r_pi - rv.average_reward() + next);
                assert!(residual.abs() < 1e-8, "Poisson residual {residual} at {s}");
            }
        }
    }

    /// The bias is the Abel limit: V_γ − r̄/(1−γ) → Ṽ as γ ↑ 1, with the
    /// max-norm error shrinking monotonically along γ ∈ {0.9, 0.99, ...}.
    #[test]
    fn relative_value_is_abel_limit_of_discounted_values() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = rng.random_range(2..=6);
            let m = rng.random_range(1..=3);
            let mdp = random_unichain(&mut rng, n, m);
            let policy = random_policy(&mut rng, n, m);
            let rv = mdp.relative_value(&policy).unwrap();

            let mut last_err = f64::INFINITY;
            for gamma in [0.9, 0.99, 0.999, 0.9999] {
                let bundle = mdp.discounted_values(&policy, gamma).unwrap();
                let err = (0..n)
                    .map(|s| {
                        (bundle.v()[s] - rv.average_reward() / (1.0 - gamma) - rv.bias_at(s)).abs()
                    })
                    .fold(0.0_f64, f64::max);
                assert!(err < last_err, "Abel error not shrinking: {err} >= {last_err}");
                last_err = err;
            }
            assert!(last_err < 1e-3, "Abel limit not reached: {last_err}");
        }
    }

    #[test]
    fn discounted_values_geometric_series() {
        let mdp = TabularMdp::new(1, 1, vec![vec![vec![1.0]]], vec![vec![1.0]]).unwrap();
        let bundle = mdp.discounted_values(&Policy::uniform(1, 1), 0.9).unwrap();
        assert_relative_eq!(bundle.v()[0], 10.0, epsilon = 1e-9);
    }

    #[test]
    fn discounted_values_zero_reward() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mdp = random_unichain(&mut rng, 4, 2);
        let mdp = mdp.with_rewards(vec![vec![0.0; 2]; 4]).unwrap();
        let bundle = mdp
            .discounted_values(&Policy::uniform(4, 2), 0.95)
            .unwrap();
        for s in 0..4 {
            assert!(bundle.v()[s].abs() < 1e-12);
            for a in 0..2 {
                assert!(bundle.q()[s][a].abs() < 1e-12);
                assert!(bundle.advantage()[s][a].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn discounted_values_rejects_bad_gamma() {
        let mdp = TabularMdp::new(1, 1, vec![vec![vec![1.0]]], vec![vec![1.0]]).unwrap();
        assert!(matches!(
            mdp.discounted_values(&Policy::uniform(1, 1), 1.0),
            Err(MdpError::InvalidDiscount(_))
        ));
        assert!(matches!(
            mdp.optimal_values(0.0, 1e-10),
            Err(MdpError::InvalidDiscount(_))
        ));
    }

    #[test]
    fn optimal_values_zero_reward_gives_zero_advantage() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mdp = random_unichain(&mut rng, 5, 3);
        let mdp = mdp.with_rewards(vec![vec![0.0; 3]; 5]).unwrap();
        let bundle = mdp.optimal_values(0.95, 1e-12).unwrap();
        for s in 0..5 {
            for a in 0..3 {
                assert!(bundle.advantage()[s][a].abs() < 1e-12);
            }
        }
    }

    /// On random MDPs the optimal bundle has max_a Δ(s,a) = 0 per state and
    /// matches exhaustive policy enumeration.
    #[test]
    fn optimal_values_match_policy_enumeration() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for _ in 0..10 {
            let n = rng.random_range(2..4);
            let m = rng.random_range(2..3 + 1);
            let mdp = random_unichain(&mut rng, n, m);
            let gamma = 0.9;
            let bundle = mdp.optimal_values(gamma, 1e-12).unwrap();

            // Enumerate all deterministic policies.
            let mut best = vec![f64::NEG_INFINITY; n];
            let count = m.pow(n as u32);
            for code in 0..count {
                let mut c = code;
                let mut actions = Vec::with_capacity(n);
                for _ in 0..n {
                    actions.push(c % m);
                    c /= m;
                }
                let policy = Policy::deterministic(&actions, m);
                let v = mdp.discounted_values(&policy, gamma).unwrap();
                for s in 0..n {
                    best[s] = best[s].max(v.v()[s]);
                }
            }
            for s in 0..n {
                assert_relative_eq!(bundle.v()[s], best[s], epsilon = 1e-7);
                let max_adv = bundle.advantage()[s]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(max_adv.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn impute_passes_through_admissible_tables() {
        let adv = vec![vec![0.0, -0.5], vec![-0.2, 0.0]];
        let r = impute_reward_from_advantage(&adv, 1e-9).unwrap();
        assert_eq!(r, adv);

        let zeros = vec![vec![0.0; 2]; 2];
        assert_eq!(impute_reward_from_advantage(&zeros, 1e-9).unwrap(), zeros);
    }

    #[test]
    fn impute_rejects_inadmissible_tables() {
        let adv = vec![vec![-1.0, -1.0], vec![0.0, -0.3]];
        assert!(matches!(
            impute_reward_from_advantage(&adv, 1e-9),
            Err(MdpError::NotAdmissible { state: 0, .. })
        ));
    }

    /// Advantage-as-reward identity: for any pair of policies and r̃ = Δ_{π̄},
    /// V_{π,r} − V_{π,r̃} = V_{π̄,r} at every state.
    #[test]
    fn advantage_as_reward_identity_on_random_mdps() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..50 {
            let n = rng.random_range(2..=5);
            let m = rng.random_range(1..=3);
            let mdp = random_unichain(&mut rng, n, m);
            let pi = random_policy(&mut rng, n, m);
            let pi_bar = random_policy(&mut rng, n, m);
            let gamma = 0.9;

            let bundle_bar = mdp.discounted_values(&pi_bar, gamma).unwrap();
            let r_tilde = bundle_bar.advantage().clone();
            let shaped = mdp.with_rewards(r_tilde).unwrap();

            let v_r = mdp.discounted_values(&pi, gamma).unwrap();
            let v_shaped = shaped.discounted_values(&pi, gamma).unwrap();
            for s in 0..n {
                let lhs = v_r.v()[s] - v_shaped.v()[s];
                let rhs = bundle_bar.v()[s];
                assert!(
                    (lhs - rhs).abs() < 1e-8,
                    "identity violated: {lhs} vs {rhs}"
                );
            }
        }
    }

    /// Imputation idempotence: the optimal advantage of the MDP rewarded by
    /// an optimal advantage table is that table again.
    #[test]
    fn imputed_reward_reproduces_optimal_advantage() {
        let mut rng = ChaCha12Rng::seed_from_u64(43);
        let gamma = 0.999;
        for _ in 0..20 {
            let n = rng.random_range(2..=5);
            let m = rng.random_range(2..=3);
            let mdp = random_unichain(&mut rng, n, m);
            let bundle = mdp.optimal_values(gamma, 1e-12).unwrap();
            let imputed = impute_reward_from_advantage(bundle.advantage(), 1e-9).unwrap();
            let shaped = mdp.with_rewards(imputed).unwrap();
            let bundle2 = shaped.optimal_values(gamma, 1e-12).unwrap();
            for s in 0..n {
                for a in 0..m {
                    let d = bundle.advantage()[s][a] - bundle2.advantage()[s][a];
                    assert!(d.abs() < 1e-6, "idempotence violated by {d}");
                }
            }
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let mut rng = ChaCha12Rng::seed_from_u64(59);
        let mdp = random_unichain(&mut rng, 5, 2)
            .with_labels(
                Some((0..5).map(|i| format!("s{i}")).collect()),
                Some(vec!["a".into(), "b".into()]),
            )
            .unwrap();
        let text = mdp.to_json_string().unwrap();
        let back = TabularMdp::from_json_str(&text).unwrap();
        assert_eq!(mdp, back);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chain.mdp.json");
        mdp.save(&path).unwrap();
        let loaded = TabularMdp::load(&path).unwrap();
        assert_eq!(mdp, loaded);
    }

    #[test]
    fn load_rejects_invalid_tables() {
        let text = r#"{
            "num_states": 2, "num_actions": 1,
            "transitions": [[[0.9, 0.2], [0.5, 0.5]]],
            "rewards": [[0.0], [1.0]]
        }"#;
        assert!(matches!(
            TabularMdp::from_json_str(text),
            Err(MdpError::RowNotStochastic { .. })
        ));
    }
}
