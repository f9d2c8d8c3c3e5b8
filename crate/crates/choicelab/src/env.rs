//! Constructors for the concrete MDPs and belief models used in experiments.
//!
//! The central environment is a small 2-D grid with one rewarding goal cell.
//! Three different dynamics objects live on the same state space:
//!
//! - a **belief model** ([`build_belief_model`]): a single-action chain
//!   describing how a human imagines movement — progress toward the goal with
//!   probability `progress_prob`, stay put otherwise, goal absorbing. Under
//!   [`Topology::WrapAround`] the human believes movement wraps at the
//!   borders, which changes shortest-path distances and therefore values;
//! - a **behavior walk** ([`build_behavior_dynamics`]): the uniform random
//!   walk on the physical (non-wrapping) grid used to sample the comparison
//!   trajectories shown to humans;
//! - an **agent MDP** ([`build_grid_agent_mdp`]): five deterministic movement
//!   actions, used when a learner's recovered reward is judged by the policy
//!   it induces.
//!
//! Also here: the 1-D treasure grid for the wrap-belief demo and the
//! two-state good/bad MDP used in the misalignment experiments.

use crate::mdp::TabularMdp;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether grid movement clips at the borders or wraps around them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Walls,
    WrapAround,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Topology::Walls => write!(f, "walls"),
            Topology::WrapAround => write!(f, "wrap"),
        }
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("goal ({0}, {1}) lies outside a {2}x{3} grid")]
    GoalOutsideGrid(usize, usize, usize, usize),

    #[error("progress probability {0} is outside (0, 1]")]
    InvalidProgressProb(f64),

    #[error("grid dimensions must be positive")]
    EmptyGrid,

    #[error("1-d grid needs at least 2 cells, got {0}")]
    GridTooShort(usize),

    #[error("treasure index {0} is outside a 1-d grid of length {1}")]
    TreasureOutsideGrid(usize, usize),

    #[error("reward parameters must be finite")]
    NonFiniteReward,

    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
}

/// Geometry and belief parameters of the grid environment.
///
/// States are indexed row-major: `index = x + width * y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub goal: (usize, usize),
    pub progress_prob: f64,
    pub topology: Topology,
}

impl GridSpec {
    pub fn new(
        width: usize,
        height: usize,
        goal: (usize, usize),
        progress_prob: f64,
        topology: Topology,
    ) -> Result<Self, EnvError> {
        if width == 0 || height == 0 {
            return Err(EnvError::EmptyGrid);
        }
        if goal.0 >= width || goal.1 >= height {
            return Err(EnvError::GoalOutsideGrid(goal.0, goal.1, width, height));
        }
        if !(progress_prob > 0.0 && progress_prob <= 1.0) {
            return Err(EnvError::InvalidProgressProb(progress_prob));
        }
        Ok(Self {
            width,
            height,
            goal,
            progress_prob,
            topology,
        })
    }

    /// The 5x5 grid with the goal in the top-right corner and 0.9 progress
    /// probability.
    pub fn standard(topology: Topology) -> Self {
        Self {
            width: 5,
            height: 5,
            goal: (4, 4),
            progress_prob: 0.9,
            topology,
        }
    }

    pub fn num_states(&self) -> usize {
        self.width * self.height
    }

    pub fn state_index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.width && y < self.height);
        x + self.width * y
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index % self.width, index / self.width)
    }

    pub fn goal_index(&self) -> usize {
        self.state_index(self.goal.0, self.goal.1)
    }

    /// Same geometry with a different topology.
    pub fn with_topology(&self, topology: Topology) -> Self {
        Self { topology, ..self.clone() }
    }

    /// Von Neumann neighbors under this spec's topology. Walls clip moves at
    /// the border (the off-grid direction yields no neighbor); wrap-around
    /// uses modular adjacency. Self-loops are excluded and duplicates merged.
    fn neighbors(&self, index: usize) -> Vec<usize> {
        let (x, y) = self.coords(index);
        let mut out = Vec::with_capacity(4);
        match self.topology {
            Topology::Walls => {
                if x + 1 < self.width {
                    out.push(self.state_index(x + 1, y));
                }
                if x > 0 {
                    out.push(self.state_index(x - 1, y));
                }
                if y + 1 < self.height {
                    out.push(self.state_index(x, y + 1));
                }
                if y > 0 {
                    out.push(self.state_index(x, y - 1));
                }
            }
            Topology::WrapAround => {
                let w = self.width;
                let h = self.height;
                out.push(self.state_index((x + 1) % w, y));
                out.push(self.state_index((x + w - 1) % w, y));
                out.push(self.state_index(x, (y + 1) % h));
                out.push(self.state_index(x, (y + h - 1) % h));
                out.sort_unstable();
                out.dedup();
                out.retain(|&n| n != index);
            }
        }
        out
    }

    /// Shortest-path distance (in steps) from every state to the goal under
    /// this spec's topology, by breadth-first search.
    pub fn distances_to_goal(&self) -> Vec<usize> {
        let n = self.num_states();
        let goal = self.goal_index();
        let mut dist = vec![usize::MAX; n];
        dist[goal] = 0;
        let mut queue = std::collections::VecDeque::from([goal]);
        while let Some(s) = queue.pop_front() {
            for t in self.neighbors(s) {
                if dist[t] == usize::MAX {
                    dist[t] = dist[s] + 1;
                    queue.push_back(t);
                }
            }
        }
        dist
    }
}

/// A human's single-action model of how the world evolves: the chain they
/// imagine when assessing where a trajectory will lead.
#[derive(Debug, Clone)]
pub struct BeliefModel {
    pub mdp: TabularMdp,
    pub description: String,
}

/// State-only reward table: 1 at the goal cell, 0 elsewhere.
pub fn build_grid_reward(spec: &GridSpec) -> Vec<f64> {
    let mut r = vec![0.0; spec.num_states()];
    r[spec.goal_index()] = 1.0;
    r
}

/// Replicates a state-only reward across `num_actions` action columns.
pub fn replicate_reward(state_reward: &[f64], num_actions: usize) -> Vec<Vec<f64>> {
    state_reward
        .iter()
        .map(|&r| vec![r; num_actions])
        .collect()
}

/// The believed goal-seeking chain: from each non-goal state the walker moves
/// to a uniformly chosen neighbor that strictly reduces the shortest-path
/// distance to the goal with probability `progress_prob`, and stays put
/// otherwise. The goal is absorbing. Distances follow the spec's topology, so
/// a wrap-around believer sees short paths through the borders.
pub fn build_belief_model(spec: &GridSpec) -> BeliefModel {
    let n = spec.num_states();
    let goal = spec.goal_index();
    let dist = spec.distances_to_goal();
    let mut rows = vec![vec![0.0; n]; n];
    for s in 0..n {
        if s == goal {
            rows[s][s] = 1.0;
            continue;
        }
        let progress: Vec<usize> = spec
            .neighbors(s)
            .into_iter()
            .filter(|&t| dist[t] + 1 == dist[s])
            .collect();
        debug_assert!(!progress.is_empty(), "state {s} has no path to goal");
        let p_each = spec.progress_prob / progress.len() as f64;
        for &t in &progress {
            rows[s][t] += p_each;
        }
        rows[s][s] += 1.0 - spec.progress_prob;
    }
    let rewards = replicate_reward(&build_grid_reward(spec), 1);
    let mdp = TabularMdp::new(n, 1, vec![rows], rewards)
        .expect("belief chain rows are stochastic by construction");
    BeliefModel {
        mdp,
        description: format!(
            "{}x{} grid, goal ({}, {}), {} beliefs, progress {}",
            spec.width, spec.height, spec.goal.0, spec.goal.1, spec.topology, spec.progress_prob
        ),
    }
}

/// The random walk that generates comparison trajectories: one of the four
/// moves is drawn uniformly and a move off the grid resolves to staying put.
/// This walk always lives on the physical, non-wrapping grid regardless of
/// the spec's (belief) topology, and its rewards are zero because it is only
/// used for sampling.
pub fn build_behavior_dynamics(spec: &GridSpec) -> TabularMdp {
    let n = spec.num_states();
    let mut rows = vec![vec![0.0; n]; n];
    for s in 0..n {
        let (x, y) = spec.coords(s);
        let moves = [
            (x as isize + 1, y as isize),
            (x as isize - 1, y as isize),
            (x as isize, y as isize + 1),
            (x as isize, y as isize - 1),
        ];
        for (mx, my) in moves {
            let target = if mx >= 0 && (mx as usize) < spec.width && my >= 0 && (my as usize) < spec.height
            {
                spec.state_index(mx as usize, my as usize)
            } else {
                s
            };
            rows[s][target] += 0.25;
        }
    }
    TabularMdp::new(n, 1, vec![rows], vec![vec![0.0]; n])
        .expect("walk rows are stochastic by construction")
}

/// Movement actions of the agent grid, in index order.
pub const GRID_ACTIONS: [&str; 5] = ["up", "down", "left", "right", "stay"];

/// The grid as the agent experiences it: five deterministic movement actions
/// (up, down, left, right, stay) and the state-only goal reward replicated
/// across actions. Under [`Topology::Walls`] an off-grid move stays put;
/// under [`Topology::WrapAround`] it wraps. The wrap variant is the
/// "incorrect beliefs" transition model of the robustness experiments.
pub fn build_grid_agent_mdp(spec: &GridSpec) -> TabularMdp {
    let n = spec.num_states();
    let mut transitions = Vec::with_capacity(5);
    for action in 0..5 {
        let mut rows = vec![vec![0.0; n]; n];
        for s in 0..n {
            let (x, y) = spec.coords(s);
            let (dx, dy): (isize, isize) = match action {
                0 => (0, 1),
                1 => (0, -1),
                2 => (-1, 0),
                3 => (1, 0),
                _ => (0, 0),
            };
            let target = match spec.topology {
                Topology::Walls => {
                    let nx = x as isize + dx;
                    let ny = y as isize + dy;
                    if nx >= 0 && (nx as usize) < spec.width && ny >= 0 && (ny as usize) < spec.height
                    {
                        spec.state_index(nx as usize, ny as usize)
                    } else {
                        s
                    }
                }
                Topology::WrapAround => {
                    let w = spec.width as isize;
                    let h = spec.height as isize;
                    let nx = (x as isize + dx).rem_euclid(w) as usize;
                    let ny = (y as isize + dy).rem_euclid(h) as usize;
                    spec.state_index(nx, ny)
                }
            };
            rows[s][target] = 1.0;
        }
        transitions.push(rows);
    }
    let rewards = replicate_reward(&build_grid_reward(spec), 5);
    TabularMdp::new(n, 5, transitions, rewards)
        .expect("deterministic rows are stochastic")
        .with_labels(None, Some(GRID_ACTIONS.iter().map(|s| s.to_string()).collect()))
        .expect("label count matches")
}

/// Action indices of the 1-d grid.
pub const ONED_LEFT: usize = 0;
pub const ONED_RIGHT: usize = 1;

/// A 1-d corridor with a treasure cell: each step costs `step_cost`, the
/// treasure is absorbing and pays `treasure_reward`. With `wrap` set, walking
/// left off cell 0 re-enters at the right end; otherwise it stays put.
pub fn build_onedgrid(
    length: usize,
    treasure: usize,
    step_cost: f64,
    treasure_reward: f64,
    wrap: bool,
) -> Result<TabularMdp, EnvError> {
    if length < 2 {
        return Err(EnvError::GridTooShort(length));
    }
    if treasure >= length {
        return Err(EnvError::TreasureOutsideGrid(treasure, length));
    }
    if !step_cost.is_finite() || !treasure_reward.is_finite() {
        return Err(EnvError::NonFiniteReward);
    }
    let mut left = vec![vec![0.0; length]; length];
    let mut right = vec![vec![0.0; length]; length];
    for s in 0..length {
        if s == treasure {
            left[s][s] = 1.0;
            right[s][s] = 1.0;
            continue;
        }
        let left_target = if s == 0 {
            if wrap {
                length - 1
            } else {
                0
            }
        } else {
            s - 1
        };
        let right_target = if s + 1 < length { s + 1 } else { s };
        left[s][left_target] = 1.0;
        right[s][right_target] = 1.0;
    }
    let rewards = (0..length)
        .map(|s| {
            if s == treasure {
                vec![treasure_reward; 2]
            } else {
                vec![-step_cost; 2]
            }
        })
        .collect();
    Ok(TabularMdp::new(length, 2, vec![left, right], rewards)
        .expect("corridor rows are stochastic by construction")
        .with_labels(None, Some(vec!["left".into(), "right".into()]))
        .expect("label count matches"))
}

/// State and action indices of the good/bad MDP.
pub const GOOD: usize = 0;
pub const BAD: usize = 1;
pub const STAY: usize = 0;
pub const MOVE: usize = 1;

/// Two states, two actions: `stay` self-loops, `move` swaps states.
/// Rewards: r(good, stay) = −ε, r(good, move) = 0, r(bad, ·) = −1.
///
/// Staying in `good` is optimal, yet within `good` the reward of `stay` is
/// strictly below the reward of `move` — the wedge the misalignment
/// experiments exploit.
pub fn build_goodbad_mdp(epsilon: f64) -> Result<TabularMdp, EnvError> {
    if !(epsilon > 0.0) {
        return Err(EnvError::InvalidEpsilon(epsilon));
    }
    let stay = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let swap = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
    let rewards = vec![vec![-epsilon, 0.0], vec![-1.0, -1.0]];
    Ok(TabularMdp::new(2, 2, vec![stay, swap], rewards)
        .expect("swap/stay rows are stochastic")
        .with_labels(
            Some(vec!["good".into(), "bad".into()]),
            Some(vec!["stay".into(), "move".into()]),
        )
        .expect("label counts match"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::Policy;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn walls_spec() -> GridSpec {
        GridSpec::standard(Topology::Walls)
    }

    fn wrap_spec() -> GridSpec {
        GridSpec::standard(Topology::WrapAround)
    }

    /// Closed-form Manhattan distance, the independent oracle for walls BFS.
    fn manhattan(spec: &GridSpec, s: usize) -> usize {
        let (x, y) = spec.coords(s);
        let (gx, gy) = spec.goal;
        x.abs_diff(gx) + y.abs_diff(gy)
    }

    /// Closed-form toroidal distance, the independent oracle for wrap BFS.
    fn toroidal(spec: &GridSpec, s: usize) -> usize {
        let (x, y) = spec.coords(s);
        let (gx, gy) = spec.goal;
        let dx = x.abs_diff(gx).min(spec.width - x.abs_diff(gx));
        let dy = y.abs_diff(gy).min(spec.height - y.abs_diff(gy));
        dx + dy
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            GridSpec::new(5, 5, (5, 0), 0.9, Topology::Walls),
            Err(EnvError::GoalOutsideGrid(..))
        ));
        assert!(matches!(
            GridSpec::new(5, 5, (0, 0), 0.0, Topology::Walls),
            Err(EnvError::InvalidProgressProb(_))
        ));
        assert!(matches!(
            GridSpec::new(0, 5, (0, 0), 0.9, Topology::Walls),
            Err(EnvError::EmptyGrid)
        ));
    }

    #[test]
    fn grid_reward_places_single_one_at_goal() {
        let r = build_grid_reward(&walls_spec());
        assert_eq!(r.len(), 25);
        for (i, &v) in r.iter().enumerate() {
            if i == walls_spec().state_index(4, 4) {
                assert_eq!(v, 1.0);
            } else {
                assert_eq!(v, 0.0);
            }
        }

        let tiny = GridSpec::new(1, 1, (0, 0), 0.9, Topology::Walls).unwrap();
        assert_eq!(build_grid_reward(&tiny), vec![1.0]);

        let origin = GridSpec::new(5, 5, (0, 0), 0.9, Topology::Walls).unwrap();
        let r = build_grid_reward(&origin);
        assert_eq!(r[0], 1.0);
        assert_eq!(r.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn bfs_distances_match_closed_forms() {
        let walls = walls_spec();
        let wrap = wrap_spec();
        let dw = walls.distances_to_goal();
        let dt = wrap.distances_to_goal();
        for s in 0..25 {
            assert_eq!(dw[s], manhattan(&walls, s), "walls distance at {s}");
            assert_eq!(dt[s], toroidal(&wrap, s), "wrap distance at {s}");
        }
    }

    #[test]
    fn belief_rows_walls_corner() {
        let spec = walls_spec();
        let belief = build_belief_model(&spec);
        let s = spec.state_index(0, 0);
        let row = belief.mdp.transition_row(0, s);
        assert_relative_eq!(row[spec.state_index(1, 0)], 0.45, epsilon = 1e-15);
        assert_relative_eq!(row[spec.state_index(0, 1)], 0.45, epsilon = 1e-15);
        assert_relative_eq!(row[s], 0.1, epsilon = 1e-15);
        assert_relative_eq!(row.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn belief_rows_wrap_corner_progresses_through_walls() {
        let spec = wrap_spec();
        let belief = build_belief_model(&spec);
        let s = spec.state_index(0, 0);
        let row = belief.mdp.transition_row(0, s);
        // Toroidal distance from (0,0) to (4,4) is 2; the reducing neighbors
        // are (4,0) and (0,4), reached through the walls.
        assert_relative_eq!(row[spec.state_index(4, 0)], 0.45, epsilon = 1e-15);
        assert_relative_eq!(row[spec.state_index(0, 4)], 0.45, epsilon = 1e-15);
        assert_relative_eq!(row[s], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn belief_goal_row_is_absorbing() {
        for spec in [walls_spec(), wrap_spec()] {
            let belief = build_belief_model(&spec);
            let g = spec.goal_index();
            assert_eq!(belief.mdp.transition(0, g, g), 1.0);
        }
    }

    #[test]
    fn belief_chain_is_unichain_with_goal_stationary() {
        for spec in [walls_spec(), wrap_spec()] {
            let belief = build_belief_model(&spec);
            let policy = Policy::uniform(25, 1);
            assert!(belief.mdp.check_unichain(&policy).unwrap());
            let stat = belief.mdp.stationary_distribution(&policy, 1e-10).unwrap();
            assert_relative_eq!(stat.prob(spec.goal_index()), 1.0, epsilon = 1e-10);
            assert_relative_eq!(
                belief.mdp.average_reward(&policy).unwrap(),
                1.0,
                epsilon = 1e-10
            );
        }
    }

    /// Independent oracle for the belief values: the expected absorption time
    /// from distance d is d / progress_prob, so the bias is −d / progress_prob.
    #[test]
    fn belief_bias_equals_negative_expected_hitting_time() {
        for spec in [walls_spec(), wrap_spec()] {
            let belief = build_belief_model(&spec);
            let rv = belief.mdp.relative_value(&Policy::uniform(25, 1)).unwrap();
            let dist = spec.distances_to_goal();
            for s in 0..25 {
                let expected = -(dist[s] as f64) / spec.progress_prob;
                assert_relative_eq!(rv.bias_at(s), expected, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn walls_bias_increases_along_shortest_paths() {
        let spec = walls_spec();
        let belief = build_belief_model(&spec);
        let rv = belief.mdp.relative_value(&Policy::uniform(25, 1)).unwrap();
        let dist = spec.distances_to_goal();
        for s in 0..25 {
            if s == spec.goal_index() {
                continue;
            }
            for t in spec.neighbors(s) {
                if dist[t] + 1 == dist[s] {
                    assert!(
                        rv.bias_at(t) > rv.bias_at(s),
                        "bias not increasing along a shortest path at {s} -> {t}"
                    );
                }
            }
        }
    }

    #[test]
    fn wrap_bias_is_high_near_corners() {
        let spec = wrap_spec();
        let belief = build_belief_model(&spec);
        let rv = belief.mdp.relative_value(&Policy::uniform(25, 1)).unwrap();
        let at = |x, y| rv.bias_at(spec.state_index(x, y));
        // Equal wall-distance (5) from the goal, but the corner-adjacent edge
        // states sit two wrap-steps away while the interior states sit four.
        assert!(at(3, 0) > at(2, 1));
        assert!(at(0, 3) > at(1, 2));
        // Corners beat mid-edges outright.
        assert!(at(0, 0) > at(2, 0));
        assert!(at(0, 0) > at(0, 2));
    }

    #[test]
    fn belief_models_agree_where_progress_sets_coincide() {
        let walls = build_belief_model(&walls_spec());
        let wrap = build_belief_model(&wrap_spec());
        let spec_w = walls_spec();
        let spec_t = wrap_spec();
        let dw = spec_w.distances_to_goal();
        let dt = spec_t.distances_to_goal();
        let mut checked = 0;
        for s in 0..25 {
            let pw: Vec<usize> = spec_w
                .neighbors(s)
                .into_iter()
                .filter(|&t| dw[t] + 1 == dw[s])
                .collect();
            let pt: Vec<usize> = spec_t
                .neighbors(s)
                .into_iter()
                .filter(|&t| dt[t] + 1 == dt[s])
                .collect();
            let mut pw_sorted = pw.clone();
            let mut pt_sorted = pt.clone();
            pw_sorted.sort_unstable();
            pt_sorted.sort_unstable();
            if pw_sorted == pt_sorted {
                checked += 1;
                for t in 0..25 {
                    assert_eq!(
                        walls.mdp.transition(0, s, t),
                        wrap.mdp.transition(0, s, t),
                        "rows differ at state {s}"
                    );
                }
            }
        }
        assert!(checked > 0, "no coinciding progress sets found");
    }

    #[test]
    fn behavior_walk_rows() {
        let spec = walls_spec();
        let walk = build_behavior_dynamics(&spec);

        // Interior: four neighbors, 0.25 each.
        let mid = spec.state_index(2, 2);
        for (dx, dy) in [(1i32, 0i32), (-1, 0), (0, 1), (0, -1)] {
            let t = spec.state_index((2 + dx) as usize, (2 + dy) as usize);
            assert_eq!(walk.transition(0, mid, t), 0.25);
        }
        assert_eq!(walk.transition(0, mid, mid), 0.0);

        // Corner: two off-grid moves resolve to staying put.
        let corner = spec.state_index(0, 0);
        assert_eq!(walk.transition(0, corner, corner), 0.5);
        assert_eq!(walk.transition(0, corner, spec.state_index(1, 0)), 0.25);
        assert_eq!(walk.transition(0, corner, spec.state_index(0, 1)), 0.25);

        // Edge, non-corner: one off-grid move.
        let edge = spec.state_index(0, 2);
        assert_eq!(walk.transition(0, edge, edge), 0.25);
        for t in [
            spec.state_index(1, 2),
            spec.state_index(0, 1),
            spec.state_index(0, 3),
        ] {
            assert_eq!(walk.transition(0, edge, t), 0.25);
        }
    }

    #[test]
    fn behavior_walk_is_symmetric_with_uniform_stationary() {
        let spec = walls_spec();
        let walk = build_behavior_dynamics(&spec);
        let stat = walk
            .stationary_distribution(&Policy::uniform(25, 1), 1e-10)
            .unwrap();
        for s in 0..25 {
            assert_relative_eq!(stat.prob(s), 1.0 / 25.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn agent_grid_greedy_policy_reaches_goal_on_shortest_paths() {
        let spec = walls_spec();
        let agent = build_grid_agent_mdp(&spec);
        let bundle = agent.optimal_values(0.999, 1e-10).unwrap();
        let greedy = bundle.greedy_policy().actions();
        let dist = spec.distances_to_goal();
        for start in 0..25 {
            let mut s = start;
            for _ in 0..dist[start] {
                let a = greedy[s];
                s = (0..25)
                    .find(|&t| agent.transition(a, s, t) == 1.0)
                    .unwrap();
            }
            assert_eq!(s, spec.goal_index(), "greedy path from {start} missed goal");
            // Having arrived, the greedy action keeps collecting the goal reward.
            let a = greedy[s];
            assert_eq!(agent.transition(a, s, s), 1.0);
        }
    }

    #[test]
    fn agent_grid_wrap_moves_through_borders() {
        let spec = wrap_spec();
        let agent = build_grid_agent_mdp(&spec);
        let corner = spec.state_index(0, 0);
        // Moving left from column 0 wraps to column 4.
        assert_eq!(agent.transition(2, corner, spec.state_index(4, 0)), 1.0);
        // Moving down from row 0 wraps to row 4.
        assert_eq!(agent.transition(1, corner, spec.state_index(0, 4)), 1.0);
    }

    #[test]
    fn onedgrid_rewards_and_moves() {
        let mdp = build_onedgrid(7, 6, 1.0, 10.0, false).unwrap();
        assert_eq!(mdp.reward(1, ONED_LEFT), -1.0);
        assert_eq!(mdp.reward(6, ONED_RIGHT), 10.0);
        // Dead end on the left.
        assert_eq!(mdp.transition(ONED_LEFT, 0, 0), 1.0);
        // Treasure absorbs.
        assert_eq!(mdp.transition(ONED_RIGHT, 6, 6), 1.0);

        let wrapped = build_onedgrid(7, 6, 1.0, 10.0, true).unwrap();
        assert_eq!(wrapped.transition(ONED_LEFT, 0, 6), 1.0);

        let free = build_onedgrid(7, 6, 0.0, 10.0, false).unwrap();
        for s in 0..6 {
            assert_eq!(free.reward(s, ONED_LEFT), 0.0);
            assert_eq!(free.reward(s, ONED_RIGHT), 0.0);
        }

        assert!(matches!(
            build_onedgrid(1, 0, 1.0, 10.0, false),
            Err(EnvError::GridTooShort(1))
        ));
    }

    #[test]
    fn goodbad_matches_reward_and_transition_tables() {
        let mdp = build_goodbad_mdp(0.1).unwrap();
        assert_eq!(mdp.reward(GOOD, STAY), -0.1);
        assert_eq!(mdp.reward(GOOD, MOVE), 0.0);
        assert_eq!(mdp.reward(BAD, STAY), -1.0);
        assert_eq!(mdp.reward(BAD, MOVE), -1.0);
        assert_eq!(mdp.transition(MOVE, GOOD, BAD), 1.0);
        assert_eq!(mdp.transition(STAY, BAD, BAD), 1.0);

        let tiny = build_goodbad_mdp(1e-12).unwrap();
        assert_relative_eq!(tiny.reward(GOOD, STAY), 0.0, epsilon = 1e-9);

        assert!(matches!(
            build_goodbad_mdp(0.0),
            Err(EnvError::InvalidEpsilon(_))
        ));
    }

    #[test]
    fn goodbad_optimal_stays_in_good() {
        let mdp = build_goodbad_mdp(0.1).unwrap();
        let bundle = mdp.optimal_values(0.99, 1e-12).unwrap();
        assert_eq!(bundle.greedy_policy().actions()[GOOD], STAY);
        assert!(bundle.advantage()[GOOD][STAY].abs() < 1e-9);
        assert!(bundle.advantage()[GOOD][MOVE] < 0.0);
        // Always-stay policy values the bad state at −1/(1−γ).
        let stay_policy = Policy::deterministic(&[STAY, STAY], 2);
        let v = mdp.discounted_values(&stay_policy, 0.9).unwrap();
        assert_relative_eq!(v.v()[BAD], -10.0, epsilon = 1e-9);
    }

    proptest! {
        /// Every builder yields row-stochastic tables for arbitrary geometry.
        #[test]
        fn builders_produce_valid_mdps(
            width in 1usize..7,
            height in 1usize..7,
            gx in 0usize..7,
            gy in 0usize..7,
            progress in 0.05f64..=1.0,
            wrap in proptest::bool::ANY,
        ) {
            prop_assume!(gx < width && gy < height);
            let topology = if wrap { Topology::WrapAround } else { Topology::Walls };
            let spec = GridSpec::new(width, height, (gx, gy), progress, topology).unwrap();
            // TabularMdp::new validates row sums; reaching here is the test.
            let belief = build_belief_model(&spec);
            prop_assert!(belief.mdp.check_unichain(&Policy::uniform(spec.num_states(), 1)).unwrap());
            build_behavior_dynamics(&spec);
            build_grid_agent_mdp(&spec);
        }
    }
}
