//! Fits all three learners to the same good/bad choice data and shows which
//! ones recover a reward an agent can safely optimize.
//!
//! The human compares single transitions by immediate reward alone. Within
//! the good state, `move` pays more than `stay` (0 vs −ε) — yet staying is
//! optimal, because moving lands in the bad state where everything costs 1.
//! A learner forced to explain the choices with an admissible advantage
//! function must rank `move` above `stay`, and an agent greedy with respect
//! to that estimate walks straight into the bad state.
//!
//! ```bash
//! cargo run -p choicelab --example goodbad_misalignment
//! ```

use choicelab::exp::{run_goodbad, ExperimentConfig};

fn main() {
    let config = ExperimentConfig {
        seeds: vec![1, 2, 3],
        goodbad_n: 20_000,
        ..ExperimentConfig::default()
    };
    let outcome = run_goodbad(&config).expect("experiment runs");

    println!("learner verdicts on partial-return choices (n = 20000):");
    for r in &outcome.records {
        println!(
            "  seed {} {:<22} rmse {:.3}  {}",
            r.seed,
            r.hypothesis,
            r.rmse,
            if r.aligned { "aligned" } else { "NOT aligned" }
        );
    }
    let held = outcome
        .ca_ordering_matches_reward
        .iter()
        .filter(|&&b| b)
        .count();
    println!();
    println!(
        "advantage fit ranked move above stay in the good state in {held}/{} seeds,",
        outcome.ca_ordering_matches_reward.len()
    );
    println!("so the imputed reward sends the greedy agent out of the good state.");
}
