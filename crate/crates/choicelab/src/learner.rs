//! Maximum-likelihood fitting of choice models to preference data.
//!
//! The learner holds a tabular parameter vector θ: one reward entry per
//! state-action pair and one value entry per state. A comparison `(h, h', y)`
//! is modeled as
//!
//! ```text
//! p̂(h, h') = σ( Σ r̂(s_t, a_t) + V̂(s_T)  −  Σ r̂(s'_t, a'_t) − V̂(s'_{T'}) )
//! ```
//!
//! and θ is chosen to minimize the negative log-likelihood by shuffled
//! minibatch SGD. Freezing `V̂` at zero turns the bootstrapped-return
//! hypothesis into the partial-return hypothesis — the two share every code
//! path, so their losses and gradients agree bit for bit on the same data.
//!
//! The score difference is linear in θ; [`FeatureVector`] materializes the
//! coefficients (visit-count differences for reward entries, terminal
//! indicators for value entries) and the loss gradient over a batch is simply
//! `Σ (p̂ − y)·φ`.
//!
//! [`fit_cumulative_advantage`] instead fits a free table `q` scored through
//! `Δ̂(s,a) = q(s,a) − max_{a'} q(s,a')`, which keeps the estimated advantage
//! admissible (per-state maximum exactly zero) without any projection step.

use crate::choice::{log_sigmoid, sigmoid, ChoiceDataset, ChoiceTriple, PartialTrajectory};
use crate::mdp::{impute_reward_from_advantage, MdpError, TabularMdp};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid fit config: {0}")]
    InvalidConfig(String),

    #[error("triple {triple} indexes (s={state}, a={action}) outside {num_states}x{num_actions} tables")]
    IndexOutOfRange {
        triple: usize,
        state: usize,
        action: usize,
        num_states: usize,
        num_actions: usize,
    },

    #[error("loss became non-finite at epoch {epoch}; lower the learning rate")]
    NonFiniteLoss { epoch: usize },

    #[error(transparent)]
    Mdp(#[from] MdpError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("params file format error: {0}")]
    Format(String),
}

/// Which choice model the learner assumes generated the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// Reward entries only; the value table is frozen at zero.
    PartialReturn,
    /// Reward and terminal-value entries fit jointly.
    BootstrappedReturn,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::PartialReturn => "partial_return",
            Hypothesis::BootstrappedReturn => "bootstrapped_return",
        }
    }
}

/// Parameter initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    Zeros,
    /// Independent draws from Uniform(−0.01, 0.01).
    UniformSmall,
}

/// SGD settings. The defaults (rate 0.05, batches of 64, 100 epochs, zero
/// init) converge in seconds on the grid experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub init: InitScheme,
    /// Optional L2 clip applied to each batch-mean gradient.
    pub gradient_clip: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 64,
            epochs: 100,
            seed: 0,
            init: InitScheme::Zeros,
            gradient_clip: None,
        }
    }
}

impl FitConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<(), FitError> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(FitError::InvalidConfig(format!(
                "learning rate {} must be positive and finite",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(FitError::InvalidConfig("batch size must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(FitError::InvalidConfig("epoch count must be positive".into()));
        }
        if let Some(clip) = self.gradient_clip {
            if !(clip > 0.0) {
                return Err(FitError::InvalidConfig(format!(
                    "gradient clip {clip} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// The learner's tabular parameters: `r̂(s, a)` and `V̂(s)`.
///
/// When `frozen_v` is set the value table is identically zero and receives no
/// gradient updates; scoring still adds the (zero) terminal terms, so frozen
/// parameters behave exactly like the partial-return model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    r_hat: Vec<Vec<f64>>,
    v_hat: Vec<f64>,
    frozen_v: bool,
}

impl Params {
    pub fn zeros(num_states: usize, num_actions: usize, frozen_v: bool) -> Self {
        Self {
            r_hat: vec![vec![0.0; num_actions]; num_states],
            v_hat: vec![0.0; num_states],
            frozen_v,
        }
    }

    pub fn from_tables(r_hat: Vec<Vec<f64>>, v_hat: Vec<f64>, frozen_v: bool) -> Self {
        Self {
            r_hat,
            v_hat,
            frozen_v,
        }
    }

    fn init(
        num_states: usize,
        num_actions: usize,
        frozen_v: bool,
        scheme: InitScheme,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        match scheme {
            InitScheme::Zeros => Self::zeros(num_states, num_actions, frozen_v),
            InitScheme::UniformSmall => {
                let r_hat = (0..num_states)
                    .map(|_| {
                        (0..num_actions)
                            .map(|_| rng.random_range(-0.01..0.01))
                            .collect()
                    })
                    .collect();
                let v_hat = if frozen_v {
                    vec![0.0; num_states]
                } else {
                    (0..num_states)
                        .map(|_| rng.random_range(-0.01..0.01))
                        .collect()
                };
                Self {
                    r_hat,
                    v_hat,
                    frozen_v,
                }
            }
        }
    }

    pub fn num_states(&self) -> usize {
        self.r_hat.len()
    }

    pub fn num_actions(&self) -> usize {
        self.r_hat[0].len()
    }

    pub fn r_hat(&self) -> &Vec<Vec<f64>> {
        &self.r_hat
    }

    pub fn v_hat(&self) -> &[f64] {
        &self.v_hat
    }

    pub fn frozen_v(&self) -> bool {
        self.frozen_v
    }

    /// Total parameter count `|S × A| + |S|`.
    pub fn param_count(&self) -> usize {
        self.num_states() * self.num_actions() + self.num_states()
    }

    /// Flat parameter lookup: reward entries first (`s·A + a`), then value
    /// entries (`S·A + s`).
    pub fn theta(&self, index: usize) -> f64 {
        let split = self.num_states() * self.num_actions();
        if index < split {
            self.r_hat[index / self.num_actions()][index % self.num_actions()]
        } else {
            self.v_hat[index - split]
        }
    }

    fn step_sum(&self, h: &PartialTrajectory) -> f64 {
        h.steps().map(|(s, a)| self.r_hat[s][a]).sum()
    }

    /// Bootstrapped score difference under the current estimates, with the
    /// reward sums and the terminal values differenced separately. Two
    /// trajectories sharing a terminal state therefore cancel the value
    /// contribution exactly, whatever `V̂` holds.
    pub fn score_diff(&self, h: &PartialTrajectory, h_prime: &PartialTrajectory) -> f64 {
        (self.step_sum(h) - self.step_sum(h_prime))
            + (self.v_hat[h.terminal()] - self.v_hat[h_prime.terminal()])
    }

    /// Serializes to the same structured-text (JSON) format as reward tables.
    pub fn save(&self, path: &Path) -> Result<(), FitError> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| FitError::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FitError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| FitError::Format(e.to_string()))
    }
}

/// Probability the model assigns to `h` being chosen over `h_prime`.
pub fn predict_prob(params: &Params, h: &PartialTrajectory, h_prime: &PartialTrajectory) -> f64 {
    sigmoid(params.score_diff(h, h_prime))
}

/// Negative log-likelihood of the triples under `params`, evaluated in
/// log-sigmoid form so it stays finite for any finite parameters.
pub fn nll_loss(params: &Params, triples: &[ChoiceTriple]) -> f64 {
    triples
        .iter()
        .map(|t| {
            let z = params.score_diff(&t.h, &t.h_prime);
            if t.y == 1 {
                -log_sigmoid(z)
            } else {
                -log_sigmoid(-z)
            }
        })
        .sum()
}

/// Sparse coefficients of the score difference in the flat parameter vector:
/// `+1` per visit in `h`, `−1` per visit in `h'` for reward entries, plus the
/// terminal indicators for value entries. Cancelling entries are dropped, so
/// a pair with a common terminal has no value coordinates at all.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    pub fn from_pair(
        h: &PartialTrajectory,
        h_prime: &PartialTrajectory,
        num_states: usize,
        num_actions: usize,
    ) -> Self {
        let split = num_states * num_actions;
        let mut entries: Vec<(usize, f64)> =
            Vec::with_capacity(h.num_transitions() + h_prime.num_transitions() + 2);
        let add = |entries: &mut Vec<(usize, f64)>, index: usize, count: f64| {
            match entries.iter_mut().find(|(i, _)| *i == index) {
                Some((_, c)) => *c += count,
                None => entries.push((index, count)),
            }
        };
        for (s, a) in h.steps() {
            add(&mut entries, s * num_actions + a, 1.0);
        }
        for (s, a) in h_prime.steps() {
            add(&mut entries, s * num_actions + a, -1.0);
        }
        add(&mut entries, split + h.terminal(), 1.0);
        add(&mut entries, split + h_prime.terminal(), -1.0);
        entries.retain(|&(_, c)| c != 0.0);
        entries.sort_unstable_by_key(|&(i, _)| i);
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dot(&self, params: &Params) -> f64 {
        self.entries.iter().map(|&(i, c)| c * params.theta(i)).sum()
    }
}

/// Summed loss gradient over a batch: `Σ (p̂ − y)·φ(h, h')`, returned as a
/// dense flat vector. Value coordinates are zeroed when `V̂` is frozen.
pub fn gradient(params: &Params, batch: &[ChoiceTriple]) -> Vec<f64> {
    let split = params.num_states() * params.num_actions();
    let mut grad = vec![0.0; params.param_count()];
    for t in batch {
        let coef = predict_prob(params, &t.h, &t.h_prime) - t.y as f64;
        if coef == 0.0 {
            continue;
        }
        let phi = FeatureVector::from_pair(
            &t.h,
            &t.h_prime,
            params.num_states(),
            params.num_actions(),
        );
        for &(i, c) in phi.entries() {
            grad[i] += coef * c;
        }
    }
    if params.frozen_v() {
        for g in grad.iter_mut().skip(split) {
            *g = 0.0;
        }
    }
    grad
}

/// A fitted model plus its per-epoch training losses.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Params,
    pub epoch_loss: Vec<f64>,
}

impl FitResult {
    /// Writes the training curve as `epoch,loss` CSV rows.
    pub fn save_loss_curve(&self, path: &Path) -> Result<(), FitError> {
        use std::io::Write;
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "# schema: choicelab-losscurve-v1")?;
        writeln!(w, "epoch,loss")?;
        for (epoch, loss) in self.epoch_loss.iter().enumerate() {
            writeln!(w, "{epoch},{loss}")?;
        }
        Ok(())
    }
}

/// Triple pre-compiled to flat parameter indices for the SGD inner loop.
struct CompiledTriple {
    h_steps: Vec<u32>,
    h_prime_steps: Vec<u32>,
    h_terminal: u32,
    h_prime_terminal: u32,
    y: f64,
}

fn compile_triples(
    triples: &[ChoiceTriple],
    num_states: usize,
    num_actions: usize,
) -> Result<Vec<CompiledTriple>, FitError> {
    let split = num_states * num_actions;
    let compile_steps = |h: &PartialTrajectory, idx: usize| -> Result<Vec<u32>, FitError> {
        h.steps()
            .map(|(s, a)| {
                if s >= num_states || a >= num_actions {
                    Err(FitError::IndexOutOfRange {
                        triple: idx,
                        state: s,
                        action: a,
                        num_states,
                        num_actions,
                    })
                } else {
                    Ok((s * num_actions + a) as u32)
                }
            })
            .collect()
    };
    triples
        .iter()
        .enumerate()
        .map(|(idx, t)| {
            for h in [&t.h, &t.h_prime] {
                if h.terminal() >= num_states {
                    return Err(FitError::IndexOutOfRange {
                        triple: idx,
                        state: h.terminal(),
                        action: 0,
                        num_states,
                        num_actions,
                    });
                }
            }
            Ok(CompiledTriple {
                h_steps: compile_steps(&t.h, idx)?,
                h_prime_steps: compile_steps(&t.h_prime, idx)?,
                h_terminal: (split + t.h.terminal()) as u32,
                h_prime_terminal: (split + t.h_prime.terminal()) as u32,
                y: t.y as f64,
            })
        })
        .collect()
}

fn bump(grad: &mut [f64], touched: &mut Vec<u32>, i: u32, v: f64) {
    if grad[i as usize] == 0.0 {
        touched.push(i);
    }
    grad[i as usize] += v;
}

/// Scales the accumulated batch gradient to its mean, applies the optional L2
/// clip, updates `theta`, and zeroes the touched slots for the next batch.
fn apply_batch(
    theta: &mut [f64],
    grad: &mut [f64],
    touched: &mut Vec<u32>,
    batch_len: usize,
    config: &FitConfig,
) {
    touched.sort_unstable();
    touched.dedup();
    let mut scale = config.learning_rate / batch_len as f64;
    if let Some(clip) = config.gradient_clip {
        let norm = touched
            .iter()
            .map(|&i| {
                let g = grad[i as usize] / batch_len as f64;
                g * g
            })
            .sum::<f64>()
            .sqrt();
        if norm > clip {
            scale *= clip / norm;
        }
    }
    for &i in touched.iter() {
        theta[i as usize] -= scale * grad[i as usize];
        grad[i as usize] = 0.0;
    }
}

fn compiled_loss(theta: &[f64], compiled: &[CompiledTriple]) -> f64 {
    compiled
        .iter()
        .map(|t| {
            let mut z = 0.0;
            for &i in &t.h_steps {
                z += theta[i as usize];
            }
            for &i in &t.h_prime_steps {
                z -= theta[i as usize];
            }
            z += theta[t.h_terminal as usize] - theta[t.h_prime_terminal as usize];
            if t.y == 1.0 {
                -log_sigmoid(z)
            } else {
                -log_sigmoid(-z)
            }
        })
        .sum()
}

/// Fits the chosen hypothesis by shuffled minibatch SGD on the negative
/// log-likelihood, stepping along the batch-mean gradient. Deterministic for
/// a fixed config seed; the loss over the whole dataset is recorded once per
/// epoch.
pub fn fit(
    data: &ChoiceDataset,
    hypothesis: Hypothesis,
    num_states: usize,
    num_actions: usize,
    config: &FitConfig,
) -> Result<FitResult, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyDataset);
    }
    config.validate()?;
    let frozen_v = matches!(hypothesis, Hypothesis::PartialReturn);
    let compiled = compile_triples(&data.triples, num_states, num_actions)?;
    let split = num_states * num_actions;
    let total = split + num_states;

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let init = Params::init(num_states, num_actions, frozen_v, config.init, &mut rng);
    let mut theta: Vec<f64> = init
        .r_hat
        .iter()
        .flatten()
        .copied()
        .chain(init.v_hat.iter().copied())
        .collect();

    let mut order: Vec<usize> = (0..compiled.len()).collect();
    let mut grad = vec![0.0_f64; total];
    let mut touched: Vec<u32> = Vec::with_capacity(8 * config.batch_size);
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            touched.clear();
            for &idx in batch {
                let t = &compiled[idx];
                let mut z = 0.0;
                for &i in &t.h_steps {
                    z += theta[i as usize];
                }
                for &i in &t.h_prime_steps {
                    z -= theta[i as usize];
                }
                z += theta[t.h_terminal as usize] - theta[t.h_prime_terminal as usize];
                let coef = sigmoid(z) - t.y;
                if coef == 0.0 {
                    continue;
                }
                for &i in &t.h_steps {
                    bump(&mut grad, &mut touched, i, coef);
                }
                for &i in &t.h_prime_steps {
                    bump(&mut grad, &mut touched, i, -coef);
                }
                if !frozen_v {
                    bump(&mut grad, &mut touched, t.h_terminal, coef);
                    bump(&mut grad, &mut touched, t.h_prime_terminal, -coef);
                }
            }
            apply_batch(&mut theta, &mut grad, &mut touched, batch.len(), config);
        }
        let loss = compiled_loss(&theta, &compiled);
        if !loss.is_finite() {
            return Err(FitError::NonFiniteLoss { epoch });
        }
        epoch_loss.push(loss);
    }

    let r_hat = (0..num_states)
        .map(|s| theta[s * num_actions..(s + 1) * num_actions].to_vec())
        .collect();
    let v_hat = theta[split..].to_vec();
    Ok(FitResult {
        params: Params {
            r_hat,
            v_hat,
            frozen_v,
        },
        epoch_loss,
    })
}

/// Result of the cumulative-advantage fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CumAdvFit {
    /// Admissible advantage estimate (per-state max exactly zero).
    pub advantage: Vec<Vec<f64>>,
    /// Reward imputed from the advantage estimate — the advantage itself.
    pub imputed_reward: Vec<Vec<f64>>,
    pub epoch_loss: Vec<f64>,
}

/// Fits the cumulative-advantage hypothesis.
///
/// Scores are `Σ_t Δ̂(s_t, a_t)` with `Δ̂(s,a) = q(s,a) − max_{a'} q(s,a')`
/// over a free table `q`, so admissibility holds by construction; ties in the
/// max resolve to the lowest action index. The agent's transition model fixes
/// the table dimensions and is the model under which the imputed reward will
/// be used.
///
/// SGD treats the per-state max as constant within each step (the
/// straight-through treatment): each visit contributes gradient only to its
/// own `q` entry. Carrying the exact subgradient through the max instead
/// turns within-state ordering into a tug-of-war between the visited entry
/// and the argmax entry, and on data the admissible class cannot fit (e.g.
/// comparisons across states with very different rewards) that tug-of-war
/// parks the fit at a tie instead of tracking the within-state choice rates.
pub fn fit_cumulative_advantage(
    data: &ChoiceDataset,
    known_transitions: &TabularMdp,
    config: &FitConfig,
) -> Result<CumAdvFit, FitError> {
    if data.is_empty() {
        return Err(FitError::EmptyDataset);
    }
    config.validate()?;
    let num_states = known_transitions.num_states();
    let num_actions = known_transitions.num_actions();
    let compiled = compile_triples(&data.triples, num_states, num_actions)?;

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut q: Vec<f64> = match config.init {
        InitScheme::Zeros => vec![0.0; num_states * num_actions],
        InitScheme::UniformSmall => (0..num_states * num_actions)
            .map(|_| rng.random_range(-0.01..0.01))
            .collect(),
    };

    fn row_argmax(q: &[f64], s: usize, num_actions: usize) -> usize {
        let row = &q[s * num_actions..(s + 1) * num_actions];
        let mut best = 0;
        for (a, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = a;
            }
        }
        s * num_actions + best
    }
    fn score_z(q: &[f64], t: &CompiledTriple, num_actions: usize) -> f64 {
        let adv = |i: u32| -> f64 {
            let i = i as usize;
            q[i] - q[row_argmax(q, i / num_actions, num_actions)]
        };
        let mut z = 0.0;
        for &i in &t.h_steps {
            z += adv(i);
        }
        for &i in &t.h_prime_steps {
            z -= adv(i);
        }
        z
    }

    let mut order: Vec<usize> = (0..compiled.len()).collect();
    let mut grad = vec![0.0_f64; num_states * num_actions];
    let mut touched: Vec<u32> = Vec::with_capacity(8 * config.batch_size);
    let mut epoch_loss = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            touched.clear();
            for &idx in batch {
                let t = &compiled[idx];
                let coef = sigmoid(score_z(&q, t, num_actions)) - t.y;
                if coef == 0.0 {
                    continue;
                }
                // Straight-through: the row max is held constant, so a visit
                // moves only its own entry.
                for &i in &t.h_steps {
                    bump(&mut grad, &mut touched, i, coef);
                }
                for &i in &t.h_prime_steps {
                    bump(&mut grad, &mut touched, i, -coef);
                }
            }
            apply_batch(&mut q, &mut grad, &mut touched, batch.len(), config);
        }
        let loss: f64 = compiled
            .iter()
            .map(|t| {
                let z = score_z(&q, t, num_actions);
                if t.y == 1.0 {
                    -log_sigmoid(z)
                } else {
                    -log_sigmoid(-z)
                }
            })
            .sum();
        if !loss.is_finite() {
            return Err(FitError::NonFiniteLoss { epoch });
        }
        epoch_loss.push(loss);
    }

    let advantage: Vec<Vec<f64>> = (0..num_states)
        .map(|s| {
            let m = q[row_argmax(&q, s, num_actions)];
            (0..num_actions)
                .map(|a| q[s * num_actions + a] - m)
                .collect()
        })
        .collect();
    let imputed_reward = impute_reward_from_advantage(&advantage, 1e-9)?;
    Ok(CumAdvFit {
        advantage,
        imputed_reward,
        epoch_loss,
    })
}
