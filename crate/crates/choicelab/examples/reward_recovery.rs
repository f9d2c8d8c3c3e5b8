//! Recovers the grid reward from two humans with conflicting beliefs.
//!
//! Both humans share the goal (reward 1 at the top-right corner) but score
//! trajectories with value functions from different transition beliefs.
//! Fitting the bootstrapped-return model to each human's choices recovers the
//! same normalized reward — the beliefs end up in the value table, not the
//! reward table. This is a scaled-down run; use the `fig5a` CLI subcommand
//! for the full sweep.
//!
//! ```bash
//! cargo run -p choicelab --example reward_recovery
//! ```

use choicelab::choice::{generate_dataset, FilterMode, Scorer};
use choicelab::env::{
    build_behavior_dynamics, build_belief_model, build_grid_reward, replicate_reward, GridSpec,
    Topology,
};
use choicelab::exp::{run_fig5a, ExperimentConfig};
use choicelab::learner::{fit, FitConfig, Hypothesis};
use choicelab::mdp::Policy;

fn main() {
    let config = ExperimentConfig {
        sizes: vec![6000],
        seeds: vec![1, 2],
        epochs: 150,
        ..ExperimentConfig::default()
    };
    let outcome = run_fig5a(&config).expect("experiment runs");

    println!("normalized-reward RMSE against the true reward (n = 6000):");
    for r in &outcome.records {
        if r.human == "cross" {
            continue;
        }
        println!(
            "  {:<6} seed {}: rmse {:.4}  (goal-seeking policy: {})",
            r.human,
            r.seed,
            r.rmse,
            if r.aligned { "yes" } else { "no" }
        );
    }
    println!();
    println!("agreement between the two humans' fitted rewards:");
    for r in &outcome.records {
        if r.human == "cross" {
            println!("  seed {}: cross-human rmse {:.4}", r.seed, r.rmse);
        }
    }

    // One direct fit, saving the fitted tables and the training curve.
    let spec = GridSpec::standard(Topology::Walls);
    let belief = build_belief_model(&spec);
    let values = belief
        .mdp
        .relative_value(&Policy::uniform(25, 1))
        .expect("belief chain is unichain");
    let truth = replicate_reward(&build_grid_reward(&spec), 1);
    let human = Scorer::bootstrapped(truth, values.bias().to_vec(), 1.0).expect("valid scale");
    let walk = build_behavior_dynamics(&spec);
    let data = generate_dataset(6000, &walk, &human, FilterMode::ExcludeSameTerminal, 3, 7)
        .expect("generation cannot stall");
    let fitted = fit(
        &data,
        Hypothesis::BootstrappedReturn,
        25,
        1,
        &FitConfig {
            epochs: 150,
            ..FitConfig::default()
        },
    )
    .expect("fit converges");

    let dir = std::env::temp_dir().join("choicelab_example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let params_path = dir.join("fitted_params.json");
    let curve_path = dir.join("training_curve.csv");
    fitted.params.save(&params_path).expect("writable");
    fitted.save_loss_curve(&curve_path).expect("writable");
    println!();
    println!(
        "direct fit: final loss {:.1}, params -> {}, curve -> {}",
        fitted.epoch_loss.last().unwrap(),
        params_path.display(),
        curve_path.display()
    );
}
