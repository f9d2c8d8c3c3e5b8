//! Partial-trajectory sampling, trajectory scoring, and synthetic choice data.
//!
//! A simulated human compares two partial trajectories by assigning each a
//! scalar score and passing the difference through the standard logistic
//! function (a Bradley-Terry choice with unit temperature). Three scoring
//! rules are supported:
//!
//! | kind                  | score of `(s_0, a_0, …, s_T)`            |
//! |-----------------------|-------------------------------------------|
//! | partial return        | `Σ_{t<T} r(s_t, a_t)`                     |
//! | cumulative advantage  | `Σ_{t<T} Δ(s_t, a_t)`                     |
//! | bootstrapped return   | `Σ_{t<T} r(s_t, a_t) + c·V(s_T)`          |
//!
//! Only the bootstrapped score looks at the terminal state, which is how a
//! human's beliefs about the future enter their choices. The scale `c ≥ 1`
//! multiplies the value table alone.
//!
//! Datasets are reproducible: the metadata block stores the seed and the
//! generation settings, and regenerating from them is bit-exact. The on-disk
//! format is line-oriented text, documented at [`save_dataset`].

use crate::mdp::TabularMdp;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

/// Attempt cap for rejection resampling inside [`generate_dataset`].
pub const RESAMPLE_CAP: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum ChoiceError {
    #[error("value scale must be >= 1, got {0}")]
    InvalidValueScale(f64),

    #[error("trajectory needs |states| = |actions| + 1, got {states} states and {actions} actions")]
    MalformedTrajectory { states: usize, actions: usize },

    #[error("upweight probability {0} must lie in [0, 1]")]
    InvalidWeight(f64),

    #[error("rejection sampling stalled after {attempts} attempts under filter {filter}")]
    GenerationStalled { attempts: usize, filter: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("dataset parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Numerically stable standard logistic function.
///
/// Built so that `sigmoid(d) + sigmoid(-d) == 1.0` holds exactly in floating
/// point: both calls derive from the same `exp(-|d|)`, the small side is kept
/// positive (clamped to the smallest positive double under extreme
/// magnitudes), and the large side is its exact complement.
pub fn sigmoid(d: f64) -> f64 {
    let t = (-d.abs()).exp();
    let p_small = (t / (1.0 + t)).max(f64::MIN_POSITIVE);
    if d >= 0.0 {
        1.0 - p_small
    } else {
        p_small
    }
}

/// `ln(sigmoid(d))` without overflow or `ln(0)`: `min(d, 0) − ln1p(e^{−|d|})`.
pub fn log_sigmoid(d: f64) -> f64 {
    d.min(0.0) - (-d.abs()).exp().ln_1p()
}

/// Probability that the first of two scored alternatives is chosen.
pub fn logit_choice_prob(score_h: f64, score_h_prime: f64) -> f64 {
    sigmoid(score_h - score_h_prime)
}

/// Bernoulli draw: 1 with probability `p`.
pub fn sample_choice<R: Rng>(p: f64, rng: &mut R) -> u8 {
    debug_assert!((0.0..=1.0).contains(&p));
    u8::from(rng.random::<f64>() < p)
}

/// Noise-free choice: pick the higher-probability side outright and flip a
/// fair coin at exact indifference (`p == 0.5`).
pub fn deterministic_choice<R: Rng>(p: f64, rng: &mut R) -> u8 {
    if p > 0.5 {
        1
    } else if p < 0.5 {
        0
    } else {
        u8::from(rng.random::<f64>() < 0.5)
    }
}

/// An alternating state/action sequence `(s_0, a_0, …, a_{T-1}, s_T)`.
///
/// Actions are always materialized; single-action environments use action 0
/// throughout (see [`PartialTrajectory::from_states`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialTrajectory {
    states: Vec<usize>,
    actions: Vec<usize>,
}

impl PartialTrajectory {
    pub fn new(states: Vec<usize>, actions: Vec<usize>) -> Result<Self, ChoiceError> {
        if states.is_empty() || states.len() != actions.len() + 1 {
            return Err(ChoiceError::MalformedTrajectory {
                states: states.len(),
                actions: actions.len(),
            });
        }
        Ok(Self { states, actions })
    }

    /// Trajectory in a single-action environment: the action sequence is all
    /// zeros.
    pub fn from_states(states: Vec<usize>) -> Result<Self, ChoiceError> {
        if states.is_empty() {
            return Err(ChoiceError::MalformedTrajectory {
                states: 0,
                actions: 0,
            });
        }
        let actions = vec![0; states.len() - 1];
        Ok(Self { states, actions })
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }

    /// Number of transitions `T`.
    pub fn num_transitions(&self) -> usize {
        self.actions.len()
    }

    pub fn terminal(&self) -> usize {
        *self.states.last().expect("trajectories are nonempty")
    }

    /// The `(s_t, a_t)` pairs for `t < T`.
    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.states.iter().copied().zip(self.actions.iter().copied())
    }
}

/// One recorded comparison: `y = 1` means `h` was chosen over `h_prime`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceTriple {
    pub h: PartialTrajectory,
    pub h_prime: PartialTrajectory,
    pub y: u8,
}

/// Everything needed to regenerate a dataset bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub generator: String,
    pub scorer: String,
    pub seed: u64,
    pub filter: String,
    pub value_scale: f64,
    pub trajectory_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceDataset {
    pub triples: Vec<ChoiceTriple>,
    pub meta: DatasetMeta,
}

impl ChoiceDataset {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScorerKind {
    PartialReturn,
    CumulativeAdvantage,
    BootstrappedReturn,
}

impl ScorerKind {
    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::PartialReturn => "partial_return",
            ScorerKind::CumulativeAdvantage => "cumulative_advantage",
            ScorerKind::BootstrappedReturn => "bootstrapped_return",
        }
    }
}

/// A trajectory-scoring rule with the tables it needs.
///
/// Constructors take the tables their kind requires, so a scorer with a
/// missing table cannot be built.
#[derive(Debug, Clone)]
pub struct Scorer {
    kind: ScorerKind,
    rewards: Option<Vec<Vec<f64>>>,
    values: Option<Vec<f64>>,
    advantages: Option<Vec<Vec<f64>>>,
    value_scale: f64,
}

impl Scorer {
    pub fn partial_return(rewards: Vec<Vec<f64>>) -> Self {
        Self {
            kind: ScorerKind::PartialReturn,
            rewards: Some(rewards),
            values: None,
            advantages: None,
            value_scale: 1.0,
        }
    }

    /// Bootstrapped-return scorer; `value_scale` multiplies only the terminal
    /// value term and must be at least 1.
    pub fn bootstrapped(
        rewards: Vec<Vec<f64>>,
        values: Vec<f64>,
        value_scale: f64,
    ) -> Result<Self, ChoiceError> {
        if !(value_scale >= 1.0) {
            return Err(ChoiceError::InvalidValueScale(value_scale));
        }
        Ok(Self {
            kind: ScorerKind::BootstrappedReturn,
            rewards: Some(rewards),
            values: Some(values),
            advantages: None,
            value_scale,
        })
    }

    pub fn cumulative_advantage(advantages: Vec<Vec<f64>>) -> Self {
        Self {
            kind: ScorerKind::CumulativeAdvantage,
            rewards: None,
            values: None,
            advantages: Some(advantages),
            value_scale: 1.0,
        }
    }

    pub fn kind(&self) -> ScorerKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn value_scale(&self) -> f64 {
        self.value_scale
    }

    /// Score of a single trajectory under this rule.
    pub fn score(&self, h: &PartialTrajectory) -> f64 {
        match self.kind {
            ScorerKind::PartialReturn => self.step_sum(h),
            ScorerKind::CumulativeAdvantage => self.step_sum(h),
            ScorerKind::BootstrappedReturn => {
                let values = self.values.as_ref().expect("ctor guarantees values");
                self.step_sum(h) + self.value_scale * values[h.terminal()]
            }
        }
    }

    /// Score difference `score(h) − score(h')`, with the step sums and the
    /// terminal-value terms each differenced separately. Grouping this way
    /// makes the value contribution vanish exactly (not just approximately)
    /// whenever the two trajectories share a terminal state.
    pub fn score_diff(&self, h: &PartialTrajectory, h_prime: &PartialTrajectory) -> f64 {
        let steps = self.step_sum(h) - self.step_sum(h_prime);
        match self.kind {
            ScorerKind::PartialReturn | ScorerKind::CumulativeAdvantage => steps,
            ScorerKind::BootstrappedReturn => {
                let values = self.values.as_ref().expect("ctor guarantees values");
                steps + self.value_scale * (values[h.terminal()] - values[h_prime.terminal()])
            }
        }
    }

    fn step_sum(&self, h: &PartialTrajectory) -> f64 {
        let table = match self.kind {
            ScorerKind::CumulativeAdvantage => {
                self.advantages.as_ref().expect("ctor guarantees advantages")
            }
            _ => self.rewards.as_ref().expect("ctor guarantees rewards"),
        };
        h.steps().map(|(s, a)| table[s][a]).sum()
    }
}

/// How comparison pairs are filtered during generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Accept every sampled pair.
    None,
    /// Resample pairs whose two trajectories end in the same state.
    ExcludeSameTerminal,
    /// Resample each trajectory until it ends at the given state.
    CommonTerminal(usize),
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FilterMode::None => write!(f, "none"),
            FilterMode::ExcludeSameTerminal => write!(f, "exclude_same_terminal"),
            FilterMode::CommonTerminal(s) => write!(f, "common_terminal({s})"),
        }
    }
}

/// Samples a trajectory of `length` transitions from `dynamics`: the start
/// state is uniform over all states, actions are uniform (a single action is
/// taken implicitly), and successors follow the transition rows.
pub fn sample_trajectory<R: Rng>(
    dynamics: &TabularMdp,
    length: usize,
    rng: &mut R,
) -> PartialTrajectory {
    let mut states = Vec::with_capacity(length + 1);
    let mut actions = Vec::with_capacity(length);
    let mut s = rng.random_range(0..dynamics.num_states());
    states.push(s);
    for _ in 0..length {
        let a = if dynamics.num_actions() == 1 {
            0
        } else {
            rng.random_range(0..dynamics.num_actions())
        };
        s = sample_categorical(dynamics.transition_row(a, s), rng);
        actions.push(a);
        states.push(s);
    }
    PartialTrajectory { states, actions }
}

fn sample_categorical<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            cum += p;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

fn sample_pair<R: Rng>(
    dynamics: &TabularMdp,
    length: usize,
    filter: FilterMode,
    rng: &mut R,
) -> Result<(PartialTrajectory, PartialTrajectory), ChoiceError> {
    match filter {
        FilterMode::None => Ok((
            sample_trajectory(dynamics, length, rng),
            sample_trajectory(dynamics, length, rng),
        )),
        FilterMode::ExcludeSameTerminal => {
            for _ in 0..RESAMPLE_CAP {
                let h = sample_trajectory(dynamics, length, rng);
                let h2 = sample_trajectory(dynamics, length, rng);
                if h.terminal() != h2.terminal() {
                    return Ok((h, h2));
                }
            }
            Err(ChoiceError::GenerationStalled {
                attempts: RESAMPLE_CAP,
                filter: filter.to_string(),
            })
        }
        FilterMode::CommonTerminal(target) => {
            let one = |rng: &mut R| -> Result<PartialTrajectory, ChoiceError> {
                for _ in 0..RESAMPLE_CAP {
                    let h = sample_trajectory(dynamics, length, rng);
                    if h.terminal() == target {
                        return Ok(h);
                    }
                }
                Err(ChoiceError::GenerationStalled {
                    attempts: RESAMPLE_CAP,
                    filter: filter.to_string(),
                })
            };
            let h = one(rng)?;
            let h2 = one(rng)?;
            Ok((h, h2))
        }
    }
}

/// Generates `n` choice triples: pairs sampled from the behavior dynamics
/// under `filter`, choices drawn from the logit model on the scorer's score
/// difference. The dataset records its generation metadata and is bit-exactly
/// reproducible from it.
pub fn generate_dataset(
    n: usize,
    dynamics: &TabularMdp,
    scorer: &Scorer,
    filter: FilterMode,
    length: usize,
    seed: u64,
) -> Result<ChoiceDataset, ChoiceError> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut triples = Vec::with_capacity(n);
    for _ in 0..n {
        let (h, h_prime) = sample_pair(dynamics, length, filter, &mut rng)?;
        let p = sigmoid(scorer.score_diff(&h, &h_prime));
        let y = sample_choice(p, &mut rng);
        triples.push(ChoiceTriple { h, h_prime, y });
    }
    Ok(ChoiceDataset {
        triples,
        meta: DatasetMeta {
            generator: format!(
                "uniform_walk({}s,{}a)",
                dynamics.num_states(),
                dynamics.num_actions()
            ),
            scorer: scorer.name().to_string(),
            seed,
            filter: filter.to_string(),
            value_scale: scorer.value_scale(),
            trajectory_len: length,
        },
    })
}

/// Like [`generate_dataset`] with no filter, except that each comparison is
/// the designated pair with probability `weight` instead of a background
/// sample. At `weight == 0` no coin is drawn, so the output is bit-identical
/// to the plain generator; at `weight == 1` every triple is the designated
/// pair.
pub fn upweighted_pair_dataset(
    n: usize,
    pair: (&PartialTrajectory, &PartialTrajectory),
    weight: f64,
    dynamics: &TabularMdp,
    scorer: &Scorer,
    length: usize,
    seed: u64,
) -> Result<ChoiceDataset, ChoiceError> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(ChoiceError::InvalidWeight(weight));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut triples = Vec::with_capacity(n);
    for _ in 0..n {
        let designated = if weight == 0.0 {
            false
        } else if weight == 1.0 {
            true
        } else {
            rng.random::<f64>() < weight
        };
        let (h, h_prime) = if designated {
            (pair.0.clone(), pair.1.clone())
        } else {
            sample_pair(dynamics, length, FilterMode::None, &mut rng)?
        };
        let p = sigmoid(scorer.score_diff(&h, &h_prime));
        let y = sample_choice(p, &mut rng);
        triples.push(ChoiceTriple { h, h_prime, y });
    }
    Ok(ChoiceDataset {
        triples,
        meta: DatasetMeta {
            generator: format!(
                "upweighted(w={weight},{}s,{}a)",
                dynamics.num_states(),
                dynamics.num_actions()
            ),
            scorer: scorer.name().to_string(),
            seed,
            filter: FilterMode::None.to_string(),
            value_scale: scorer.value_scale(),
            trajectory_len: length,
        },
    })
}

/// Writes the line-oriented dataset format:
///
/// ```text
/// # choicelab dataset v1
/// # generator = uniform_walk(25s,1a)
/// # scorer = bootstrapped_return
/// # seed = 42
/// # filter = exclude_same_terminal
/// # value_scale = 1
/// # trajectory_len = 3
/// 4,9,8,7|0,0,0<TAB>11,16,17,22|0,0,0<TAB>1
/// ```
///
/// Each record line holds `h`, `h'` and `y` separated by tabs; a trajectory
/// is its comma-separated states, a `|`, and its comma-separated actions
/// (empty after the bar for zero-transition trajectories). Integers and the
/// shortest-round-trip float in the header make save/load bit-exact.
pub fn save_dataset(dataset: &ChoiceDataset, path: &Path) -> Result<(), ChoiceError> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_dataset(dataset, &mut w)
}

pub fn write_dataset<W: Write>(dataset: &ChoiceDataset, w: &mut W) -> Result<(), ChoiceError> {
    let m = &dataset.meta;
    writeln!(w, "# choicelab dataset v1")?;
    writeln!(w, "# generator = {}", m.generator)?;
    writeln!(w, "# scorer = {}", m.scorer)?;
    writeln!(w, "# seed = {}", m.seed)?;
    writeln!(w, "# filter = {}", m.filter)?;
    writeln!(w, "# value_scale = {}", m.value_scale)?;
    writeln!(w, "# trajectory_len = {}", m.trajectory_len)?;
    for triple in &dataset.triples {
        write_trajectory(w, &triple.h)?;
        write!(w, "\t")?;
        write_trajectory(w, &triple.h_prime)?;
        writeln!(w, "\t{}", triple.y)?;
    }
    Ok(())
}

fn write_trajectory<W: Write>(w: &mut W, h: &PartialTrajectory) -> Result<(), ChoiceError> {
    let states: Vec<String> = h.states.iter().map(|s| s.to_string()).collect();
    let actions: Vec<String> = h.actions.iter().map(|a| a.to_string()).collect();
    write!(w, "{}|{}", states.join(","), actions.join(","))?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<ChoiceDataset, ChoiceError> {
    let file = std::fs::File::open(path)?;
    read_dataset(&mut BufReader::new(file))
}

pub fn read_dataset<R: Read>(r: &mut BufReader<R>) -> Result<ChoiceDataset, ChoiceError> {
    let mut generator = None;
    let mut scorer = None;
    let mut seed = None;
    let mut filter = None;
    let mut value_scale = None;
    let mut trajectory_len = None;
    let mut triples = Vec::new();

    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((key, value)) = rest.split_once(" = ") {
                match key {
                    "generator" => generator = Some(value.to_string()),
                    "scorer" => scorer = Some(value.to_string()),
                    "seed" => {
                        seed = Some(value.parse().map_err(|e| ChoiceError::Parse {
                            line: line_no,
                            message: format!("bad seed: {e}"),
                        })?)
                    }
                    "filter" => filter = Some(value.to_string()),
                    "value_scale" => {
                        value_scale = Some(value.parse().map_err(|e| ChoiceError::Parse {
                            line: line_no,
                            message: format!("bad value_scale: {e}"),
                        })?)
                    }
                    "trajectory_len" => {
                        trajectory_len = Some(value.parse().map_err(|e| ChoiceError::Parse {
                            line: line_no,
                            message: format!("bad trajectory_len: {e}"),
                        })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        let mut fields = line.split('\t');
        let (h, h_prime, y) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), Some(c), None) => (a, b, c),
            _ => {
                return Err(ChoiceError::Parse {
                    line: line_no,
                    message: "expected 3 tab-separated fields".into(),
                })
            }
        };
        let h = parse_trajectory(h, line_no)?;
        let h_prime = parse_trajectory(h_prime, line_no)?;
        let y: u8 = y.parse().map_err(|e| ChoiceError::Parse {
            line: line_no,
            message: format!("bad choice bit: {e}"),
        })?;
        if y > 1 {
            return Err(ChoiceError::Parse {
                line: line_no,
                message: format!("choice bit must be 0 or 1, got {y}"),
            });
        }
        triples.push(ChoiceTriple { h, h_prime, y });
    }

    let missing = |what: &str| ChoiceError::Parse {
        line: 0,
        message: format!("missing header field {what}"),
    };
    Ok(ChoiceDataset {
        triples,
        meta: DatasetMeta {
            generator: generator.ok_or_else(|| missing("generator"))?,
            scorer: scorer.ok_or_else(|| missing("scorer"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
            filter: filter.ok_or_else(|| missing("filter"))?,
            value_scale: value_scale.ok_or_else(|| missing("value_scale"))?,
            trajectory_len: trajectory_len.ok_or_else(|| missing("trajectory_len"))?,
        },
    })
}

fn parse_trajectory(text: &str, line_no: usize) -> Result<PartialTrajectory, ChoiceError> {
    let (states_text, actions_text) = text.split_once('|').ok_or_else(|| ChoiceError::Parse {
        line: line_no,
        message: "trajectory needs a | separator".into(),
    })?;
    let parse_list = |list: &str| -> Result<Vec<usize>, ChoiceError> {
        if list.is_empty() {
            return Ok(Vec::new());
        }
        list.split(',')
            .map(|tok| {
                tok.parse().map_err(|e| ChoiceError::Parse {
                    line: line_no,
                    message: format!("bad index {tok:?}: {e}"),
                })
            })
            .collect()
    };
    PartialTrajectory::new(parse_list(states_text)?, parse_list(actions_text)?)
}
