//! The treasure-corridor story: beliefs decide which trajectory looks better.
//!
//! A robot stands near the left end of a corridor with treasure at the far
//! right. Trajectory A takes one step left (cost 1); trajectory B takes two
//! steps right (cost 2). Partial returns alone say A beats B at −1 vs −2.
//! But a human who believes the corridor wraps around expects the left exit
//! to come out next to the treasure, while a dead-end believer expects it to
//! waste time — their bootstrapped scores disagree about which trajectory is
//! better, exactly as their beliefs say they should.
//!
//! ```bash
//! cargo run -p choicelab --example corridor_beliefs
//! ```

use choicelab::exp::{run_onedgrid_demo, ExperimentConfig};

fn main() {
    let config = ExperimentConfig::default();
    let outcome = run_onedgrid_demo(&config).expect("demo configuration is valid");

    println!(
        "corridor of {} cells, treasure at the right end, robot at cell {}",
        config.onedgrid_length, config.onedgrid_start
    );
    println!(
        "partial returns: one step left = {}, two steps right = {}",
        outcome.partial_return_left, outcome.partial_return_right
    );
    println!();
    for p in &outcome.preferences {
        println!(
            "{:<9} believer: left scores {:8.3}, right scores {:8.3} -> prefers {}",
            p.belief,
            p.score_one_step_left,
            p.score_two_steps_right,
            if p.prefers_left {
                "the single left step"
            } else {
                "heading right"
            }
        );
    }
    println!();
    println!("Partial return would always pick the cheaper trajectory; the");
    println!("bootstrapped score lets the terminal value carry the beliefs.");
}
