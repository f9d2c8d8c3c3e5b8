//! Thin command-line front end over the experiment runners in
//! [`choicelab::exp`]: parse flags, merge them over an optional TOML config,
//! dispatch one experiment, write its CSV outputs.

use choicelab::env::Topology;
use choicelab::exp::{
    curve_rows, run_fig5a, run_fig5b, run_goodbad, run_onedgrid_demo, run_robustness_matrix,
    run_upweight, write_curve_csv, write_matrix_csv, write_relvalue_csv, write_runs_csv,
    ExperimentConfig,
};
use choicelab::mdp::Policy;
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "choicelab",
    version,
    about = "Choice-model experiments on tabular environments",
    long_about = "Runs the reward-learning experiments and writes their CSV outputs.\n\
                  Settings come from a flat TOML config file (see --config); any\n\
                  flag given here overrides the corresponding config key."
)]
struct Cli {
    /// Flat TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed; replaces the configured seed list with base, base+1, ...
    /// of the same length.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for independent runs (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Grid width.
    #[arg(long, global = true)]
    width: Option<usize>,

    /// Grid height.
    #[arg(long, global = true)]
    height: Option<usize>,

    /// Goal cell x coordinate.
    #[arg(long, global = true)]
    goal_x: Option<usize>,

    /// Goal cell y coordinate.
    #[arg(long, global = true)]
    goal_y: Option<usize>,

    /// Belief topology: walls | wrap.
    #[arg(long, global = true)]
    topology: Option<String>,

    /// Probability of progressing toward the goal in the belief models.
    #[arg(long, global = true)]
    progress_prob: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reward recovery for both belief humans across dataset sizes.
    Fig5a,
    /// Value-scale and common-terminal sweeps for the walls human.
    Fig5b,
    /// Good/bad misalignment experiment (three learners, one choice model).
    Goodbad,
    /// Upweighted-pair experiment on the terminal-value gadget.
    Upweight,
    /// Choice-model x learning-model robustness matrix.
    Matrix,
    /// Treasure-corridor belief demo.
    Onedgrid,
    /// Dump both belief humans' relative values as CSV heatmap data.
    Relvalue,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };

    if let Some(base) = cli.seed {
        let count = config.seeds.len().max(1) as u64;
        config.seeds = (0..count).map(|i| base.wrapping_add(i)).collect();
    }
    if let Some(out) = &cli.out {
        config.out = out.display().to_string();
    }
    if let Some(jobs) = cli.jobs {
        config.jobs = jobs;
    }
    if let Some(width) = cli.width {
        config.width = width;
    }
    if let Some(height) = cli.height {
        config.height = height;
    }
    if let Some(goal_x) = cli.goal_x {
        config.goal_x = goal_x;
    }
    if let Some(goal_y) = cli.goal_y {
        config.goal_y = goal_y;
    }
    if let Some(progress_prob) = cli.progress_prob {
        config.progress_prob = progress_prob;
    }
    if let Some(topology) = &cli.topology {
        config.topology = match topology.as_str() {
            "walls" => Topology::Walls,
            "wrap" | "wrap_around" => Topology::WrapAround,
            other => return Err(format!("unknown topology {other:?} (walls | wrap)").into()),
        };
    }
    config.validate()?;

    let out_dir = PathBuf::from(&config.out);
    std::fs::create_dir_all(&out_dir)?;

    match cli.command {
        Command::Fig5a => fig5a(&config, &out_dir)?,
        Command::Fig5b => fig5b(&config, &out_dir)?,
        Command::Goodbad => goodbad(&config, &out_dir)?,
        Command::Upweight => upweight(&config, &out_dir)?,
        Command::Matrix => matrix(&config, &out_dir)?,
        Command::Onedgrid => onedgrid(&config, &out_dir)?,
        Command::Relvalue => relvalue(&config, &out_dir)?,
    }
    Ok(())
}

fn fig5a(config: &ExperimentConfig, out_dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let outcome = run_fig5a(config)?;
    write_runs_csv(&out_dir.join("runs.csv"), &outcome.records)?;
    let curves = curve_rows(&outcome.records, |r| Some(r.human.clone()));
    write_curve_csv(&out_dir.join("curve_fig5a.csv"), &curves)?;
    println!("fig5a: {} runs -> {}", outcome.records.len(), out_dir.display());
    for row in &curves {
        println!(
            "  {:<6} n={:<6} rmse {:.4} +- {:.4}",
            row.group, row.n, row.mean_rmse, row.stderr
        );
    }
    Ok(())
}

fn fig5b(config: &ExperimentConfig, out_dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let outcome = run_fig5b(config)?;
    write_runs_csv(&out_dir.join("runs.csv"), &outcome.records)?;
    let curves = curve_rows(&outcome.records, |r| {
        Some(format!("{}[c={}]", r.experiment, r.c))
    });
    write_curve_csv(&out_dir.join("curve_fig5b.csv"), &curves)?;
    println!("fig5b: {} runs -> {}", outcome.records.len(), out_dir.display());
    for row in &curves {
        println!(
            "  {:<24} n={:<6} rmse {:.4} +- {:.4}",
            row.group, row.n, row.mean_rmse, row.stderr
        );
    }
    Ok(())
}

fn goodbad(config: &ExperimentConfig, out_dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let outcome = run_goodbad(config)?;
    write_runs_csv(&out_dir.join("runs.csv"), &outcome.records)?;
    println!("goodbad: {} runs -> {}", outcome.records.len(), out_dir.display());
    for hypothesis in ["partial_return", "bootstrapped_return", "cumulative_advantage"] {
        let aligned = outcome
            .records
            .iter()
            .filter(|r| r.hypothesis == hypothesis && r.aligned)
            .count();
        let total = outcome
            .records
            .iter()
            .filter(|r| r.hypothesis == hypothesis)
            .count();
        println!("  {hypothesis:<22} aligned {aligned}/{total}");
    }
    let flips = outcome
        .ca_ordering_matches_reward
        .iter()
        .filter(|&&b| b)
        .count();
    println!(
        "  advantage fit ranks move above stay in good: {}/{} seeds",
        flips,
        outcome.ca_ordering_matches_reward.len()
    );
    Ok(())
}

fn upweight(config: &ExperimentConfig, out_dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let outcome = run_upweight(config)?;
    write_runs_csv(&out_dir.join("runs.csv"), &outcome.records)?;
    println!("upweight: {} runs -> {}", outcome.records.len(), out_dir.display());
    for &weight in &config.upweight_weights {
        for hypothesis in ["partial_return", "bootstrapped_return"] {
            let flipped = outcome
                .rows
                .iter()
                .filter(|r| r.weight == weight && r.hypothesis == hypothesis && r.flipped)
                .count();
            let total = outcome
                .rows
                .iter()
                .filter(|r| r.weight == weight && r.hypothesis == hypothesis)
                .count();
            println!("  w={weight:<5} {hypothesis:<22} flipped {flipped}/{total}");
        }
    }
    Ok(())
}

fn matrix(config: &ExperimentConfig, out_dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let outcome = run_robustness_matrix(config)?;
    write_runs_csv(&out_dir.join("runs.csv"), &outcome.records)?;
    write_matrix_csv(&out_dir.join("matrix.csv"), &outcome)?;
    println!("matrix: {} runs -> {}", outcome.records.len(), out_dir.display());
    println!(
        "  {:<22} {:<12} {:<16} {:<22} {}",
        "choice model", "beliefs", "partial_return", "cumulative_advantage", "bootstrapped_return"
    );
    for row in outcome.cells.chunks(3) {
        println!(
            "  {:<22} {:<12} {:<16} {:<22} {}",
            row[0].choice_model,
            row[0].beliefs,
            if row[0].aligned { "yes" } else { "no" },
            if row[1].aligned { "yes" } else { "no" },
            if row[2].aligned { "yes" } else { "no" },
        );
    }
    Ok(())
}

fn onedgrid(config: &ExperimentConfig, out_dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let outcome = run_onedgrid_demo(config)?;
    write_runs_csv(&out_dir.join("runs.csv"), &outcome.records)?;
    println!(
        "onedgrid: partial returns are {} (one step left) and {} (two steps right)",
        outcome.partial_return_left, outcome.partial_return_right
    );
    for p in &outcome.preferences {
        println!(
            "  {:<9} believer scores left {:.3}, right {:.3} -> prefers {}",
            p.belief,
            p.score_one_step_left,
            p.score_two_steps_right,
            if p.prefers_left { "left" } else { "right" }
        );
    }
    Ok(())
}

fn relvalue(config: &ExperimentConfig, out_dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    use choicelab::env::build_belief_model;
    for (name, topology) in [("walls", Topology::Walls), ("wrap", Topology::WrapAround)] {
        let spec = config.grid_spec()?.with_topology(topology);
        let belief = build_belief_model(&spec);
        let rv = belief
            .mdp
            .relative_value(&Policy::uniform(spec.num_states(), 1))?;
        let path = out_dir.join(format!("relvalue_{name}.csv"));
        write_relvalue_csv(&path, &spec, rv.bias())?;
        println!(
            "relvalue: {name} human, average reward {:.3} -> {}",
            rv.average_reward(),
            path.display()
        );
    }
    Ok(())
}
