//! Generates synthetic choice data and round-trips it through the dataset
//! file format.
//!
//! Comparison trajectories are length-3 random walks on the physical grid;
//! the simulated human scores each pair with the bootstrapped return under
//! wrap-around beliefs and answers through the logit choice rule.
//!
//! ```bash
//! cargo run -p choicelab --example choice_datasets
//! ```

use choicelab::choice::{
    generate_dataset, load_dataset, save_dataset, FilterMode, Scorer,
};
use choicelab::env::{
    build_behavior_dynamics, build_belief_model, build_grid_reward, replicate_reward, GridSpec,
    Topology,
};
use choicelab::mdp::Policy;

fn main() {
    let spec = GridSpec::standard(Topology::WrapAround);
    let walk = build_behavior_dynamics(&spec);
    let belief = build_belief_model(&spec);
    let values = belief
        .mdp
        .relative_value(&Policy::uniform(spec.num_states(), 1))
        .expect("belief chain is unichain");
    let rewards = replicate_reward(&build_grid_reward(&spec), 1);
    let human = Scorer::bootstrapped(rewards, values.bias().to_vec(), 1.0)
        .expect("value scale 1 is valid");

    let data = generate_dataset(
        2000,
        &walk,
        &human,
        FilterMode::ExcludeSameTerminal,
        3,
        42,
    )
    .expect("grid generation cannot stall");

    println!("generated {} comparisons; first three:", data.len());
    for t in data.triples.iter().take(3) {
        let coords = |s: usize| {
            let (x, y) = spec.coords(s);
            format!("({x},{y})")
        };
        let path = |states: &[usize]| states.iter().map(|&s| coords(s)).collect::<Vec<_>>().join(" -> ");
        println!(
            "  h: {:<40} h': {:<40} chose {}",
            path(t.h.states()),
            path(t.h_prime.states()),
            if t.y == 1 { "h" } else { "h'" }
        );
    }

    let chose_h = data.triples.iter().filter(|t| t.y == 1).count();
    println!("h chosen in {chose_h}/{} comparisons", data.len());

    let dir = std::env::temp_dir().join("choicelab_example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("wrap_choices.txt");
    save_dataset(&data, &path).expect("writable temp dir");
    let loaded = load_dataset(&path).expect("file parses back");
    assert_eq!(data, loaded, "round trip must be bit-exact");
    println!(
        "saved to {} and reloaded bit-exactly (seed {} regenerates it)",
        path.display(),
        data.meta.seed
    );
}
