//! Experiment runners and their CSV outputs.
//!
//! Each `run_*` function executes one experiment across the configured seeds
//! and returns an outcome struct holding per-run [`RunRecord`]s plus whatever
//! experiment-specific evidence the run produced. Runs are independent; their
//! RNG streams are derived from `(seed, stream index)` with a splitmix-style
//! mixer, so executing them in a parallel pool cannot change any result.
//!
//! Output files (all CSV with a `# schema:` comment row):
//!
//! - `runs.csv` — one row per (experiment, seed, …) run,
//! - `curve_<id>.csv` — per-group mean RMSE and standard error against n,
//! - `matrix.csv` — the choice-model × learning-model alignment verdicts,
//! - `relvalue_<human>.csv` — a belief model's relative values by cell.

mod config;
mod runners;

pub use config::{ExperimentConfig, FilterKind};
pub use runners::{
    run_fig5a, run_fig5b, run_goodbad, run_onedgrid_demo, run_robustness_matrix, run_upweight,
    Fig5aOutcome, Fig5bOutcome, GoodBadOutcome, MatrixCell, MatrixOutcome, OnedgridOutcome,
    UpweightOutcome,
};

use crate::choice::ChoiceError;
use crate::env::EnvError;
use crate::eval::EvalError;
use crate::learner::FitError;
use crate::mdp::MdpError;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error(transparent)]
    Env(#[from] EnvError),

    #[error(transparent)]
    Mdp(#[from] MdpError),

    #[error(transparent)]
    Choice(#[from] ChoiceError),

    #[error(transparent)]
    Fit(#[from] FitError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("worker pool error: {0}")]
    Pool(String),
}

/// One fitted run. `wall_secs` is informational and excluded from
/// [`RunRecord::same_outcome`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub experiment: String,
    pub seed: u64,
    pub n: usize,
    pub c: f64,
    pub human: String,
    pub hypothesis: String,
    pub rmse: f64,
    pub aligned: bool,
    pub wall_secs: f64,
}

impl RunRecord {
    /// Equality on everything except wall-clock time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.experiment == other.experiment
            && self.seed == other.seed
            && self.n == other.n
            && self.c == other.c
            && self.human == other.human
            && self.hypothesis == other.hypothesis
            && self.rmse.to_bits() == other.rmse.to_bits()
            && self.aligned == other.aligned
    }
}

/// Derives an independent substream seed from `(master, index)`.
///
/// Splitmix64 finalizer: statistically independent outputs for distinct
/// inputs, stable across platforms.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs a closure inside a rayon pool of `jobs` threads (0 = rayon default).
pub(crate) fn run_pooled<T, F>(jobs: usize, f: F) -> Result<T, ExpError>
where
    T: Send,
    F: FnOnce() -> Result<T, ExpError> + Send,
{
    if jobs == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| ExpError::Pool(e.to_string()))?
            .install(f)
    }
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// A `(group, n)` aggregate for the curve files.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub group: String,
    pub n: usize,
    pub mean_rmse: f64,
    pub stderr: f64,
}

/// Aggregates records into curve rows keyed by `group_of(record)` and n,
/// preserving first-seen group order.
pub fn curve_rows<F>(records: &[RunRecord], group_of: F) -> Vec<CurveRow>
where
    F: Fn(&RunRecord) -> Option<String>,
{
    let mut keys: Vec<(String, usize)> = Vec::new();
    let mut buckets: std::collections::HashMap<(String, usize), Vec<f64>> =
        std::collections::HashMap::new();
    for record in records {
        let Some(group) = group_of(record) else {
            continue;
        };
        let key = (group, record.n);
        if !buckets.contains_key(&key) {
            keys.push(key.clone());
        }
        buckets.entry(key).or_default().push(record.rmse);
    }
    keys.into_iter()
        .map(|key| {
            let (mean_rmse, stderr) = mean_stderr(&buckets[&key]);
            CurveRow {
                group: key.0,
                n: key.1,
                mean_rmse,
                stderr,
            }
        })
        .collect()
}

pub fn write_runs_csv(path: &Path, records: &[RunRecord]) -> Result<(), ExpError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# schema: choicelab-runs-v1")?;
    writeln!(w, "experiment,seed,n,c,human,hypothesis,rmse,aligned,wall_secs")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{:.3}",
            r.experiment, r.seed, r.n, r.c, r.human, r.hypothesis, r.rmse, r.aligned, r.wall_secs
        )?;
    }
    Ok(())
}

pub fn write_curve_csv(path: &Path, rows: &[CurveRow]) -> Result<(), ExpError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# schema: choicelab-curve-v1")?;
    writeln!(w, "group,n,mean_rmse,stderr")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.group, r.n, r.mean_rmse, r.stderr)?;
    }
    Ok(())
}

pub fn write_matrix_csv(path: &Path, outcome: &MatrixOutcome) -> Result<(), ExpError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# schema: choicelab-matrix-v1")?;
    writeln!(
        w,
        "choice_model,human_beliefs,learner,aligned,aligned_seeds,total_seeds"
    )?;
    for cell in &outcome.cells {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            cell.choice_model,
            cell.beliefs,
            cell.learner,
            if cell.aligned { "yes" } else { "no" },
            cell.aligned_seeds,
            cell.total_seeds
        )?;
    }
    Ok(())
}

/// Dumps a belief model's relative values as `(x, y, value)` rows.
pub fn write_relvalue_csv(
    path: &Path,
    spec: &crate::env::GridSpec,
    bias: &[f64],
) -> Result<(), ExpError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# schema: choicelab-relvalue-v1")?;
    writeln!(w, "x,y,value")?;
    for (s, &v) in bias.iter().enumerate() {
        let (x, y) = spec.coords(s);
        writeln!(w, "{x},{y},{v}")?;
    }
    Ok(())
}
