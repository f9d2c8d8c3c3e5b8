//! A simulation laboratory for reward learning from pairwise choices between
//! partial trajectories.
//!
//! The library models a human who compares short state/action sequences and
//! chooses stochastically between them, an agent that fits tabular reward and
//! value estimates to those choices by maximum likelihood, and the evaluation
//! machinery that asks whether the recovered reward would steer the agent the
//! way the human intended.
//!
//! # Modules
//!
//! - [`mdp`] — tabular MDPs, stationary distributions, average reward,
//!   relative (bias) values, discounted and optimal value bundles.
//! - [`env`] — the grid environment, its belief models and behavior walk, the
//!   1-d treasure corridor and the good/bad MDP.
//! - [`choice`] — trajectory sampling, the three scoring rules, the logit
//!   choice model and dataset generation/serialization.
//! - [`learner`] — maximum-likelihood fitting of the choice-model hypotheses
//!   by minibatch SGD.
//! - [`eval`] — reward normalization, RMSE, and policy-level alignment
//!   verdicts.
//! - [`exp`] — the experiment runners behind the `choicelab` binary, with CSV
//!   output.
//!
//! # Quick start
//!
//! ```
//! use choicelab::env::{build_belief_model, build_behavior_dynamics, GridSpec, Topology};
//! use choicelab::choice::{generate_dataset, FilterMode, Scorer};
//! use choicelab::mdp::Policy;
//!
//! // A human who believes the grid wraps around scores trajectories with
//! // their belief-dependent relative values.
//! let spec = GridSpec::standard(Topology::WrapAround);
//! let belief = build_belief_model(&spec);
//! let values = belief.mdp.relative_value(&Policy::uniform(25, 1)).unwrap();
//!
//! let rewards: Vec<Vec<f64>> = (0..25).map(|s| vec![f64::from(u8::from(s == 24))]).collect();
//! let scorer = Scorer::bootstrapped(rewards, values.bias().to_vec(), 1.0).unwrap();
//! let walk = build_behavior_dynamics(&spec);
//! let data = generate_dataset(1000, &walk, &scorer, FilterMode::ExcludeSameTerminal, 3, 7).unwrap();
//! assert_eq!(data.len(), 1000);
//! ```

pub mod choice;
pub mod env;
pub mod eval;
pub mod exp;
pub mod learner;
pub mod mdp;

pub use choice::{ChoiceDataset, ChoiceTriple, FilterMode, PartialTrajectory, Scorer, ScorerKind};
pub use env::{BeliefModel, GridSpec, Topology};
pub use eval::{AlignmentVerdict, NormalizedReward};
pub use learner::{FitConfig, Hypothesis, Params};
pub use mdp::{Policy, RelativeValueFunction, StationaryDistribution, TabularMdp, ValueBundle};
