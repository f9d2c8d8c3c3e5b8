//! Tour of the tabular MDP quantities on the good/bad MDP: stationary
//! distributions, average reward, bias values, discounted bundles, and
//! advantage-as-reward imputation.
//!
//! ```bash
//! cargo run -p choicelab --example mdp_quantities
//! ```

use choicelab::env::{build_goodbad_mdp, BAD, GOOD, MOVE, STAY};
use choicelab::mdp::{impute_reward_from_advantage, Policy};

fn main() {
    let mdp = build_goodbad_mdp(0.1).expect("epsilon is positive");
    println!("good/bad MDP: stay self-loops, move swaps states");
    println!(
        "rewards: r(good,stay)={}, r(good,move)={}, r(bad,*)={}",
        mdp.reward(GOOD, STAY),
        mdp.reward(GOOD, MOVE),
        mdp.reward(BAD, STAY)
    );

    // Long-run quantities under the always-move policy (a period-2 chain).
    let move_policy = Policy::deterministic(&[MOVE, MOVE], 2);
    assert!(mdp.check_unichain(&move_policy).expect("dims match"));
    let stat = mdp
        .stationary_distribution(&move_policy, 1e-10)
        .expect("unichain");
    let rv = mdp.relative_value(&move_policy).expect("unichain");
    println!();
    println!(
        "always-move: stationary ({:.2}, {:.2}), average reward {:.3}, bias ({:.3}, {:.3})",
        stat.prob(GOOD),
        stat.prob(BAD),
        rv.average_reward(),
        rv.bias_at(GOOD),
        rv.bias_at(BAD)
    );

    // Discounted optimum: staying in good wins.
    let bundle = mdp.optimal_values(0.99, 1e-10).expect("converges");
    println!();
    println!("optimal values at gamma = 0.99:");
    for s in [GOOD, BAD] {
        println!(
            "  V({}) = {:8.3}   advantages: stay {:7.3}, move {:7.3}",
            if s == GOOD { "good" } else { "bad" },
            bundle.v()[s],
            bundle.advantage()[s][STAY],
            bundle.advantage()[s][MOVE]
        );
    }
    println!(
        "greedy actions: good -> {}, bad -> {}",
        ["stay", "move"][bundle.greedy_policy().actions()[GOOD]],
        ["stay", "move"][bundle.greedy_policy().actions()[BAD]]
    );

    // The optimal advantage table is itself a reward with the same optimal
    // behavior.
    let imputed = impute_reward_from_advantage(bundle.advantage(), 1e-9).expect("admissible");
    let shaped = mdp.with_rewards(imputed).expect("finite rewards");
    let bundle2 = shaped.optimal_values(0.99, 1e-10).expect("converges");
    println!();
    println!(
        "advantage-as-reward keeps the greedy policy: {:?} == {:?}",
        bundle2.greedy_policy().actions(),
        bundle.greedy_policy().actions()
    );
}
