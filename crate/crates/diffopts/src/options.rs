// SPDX-License-Identifier: Apache-2.0

//! Score field construction, option-goal discovery, and baseline option sets.
//!
//! The score field `f_t(s) = |sum_{i>=2} omega_i^t phi_i(s) phitilde_i|^2`
//! measures how far state `s`'s `t`-step occupation distribution is from
//! stationarity. Its local maxima are the states hardest to reach by
//! diffusion; one shortest-path option is built per maximum. Baselines:
//! eigenvector-following options, Fiedler-extreme point options, and
//! uniformly random goal options.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Action, ACTIONS};
use crate::graph::{walk_matrices, StateGraph};
use crate::spectral::{decompose, WalkSpectrum};
use crate::{Error, Result};

/// Per-state scores at one diffusion scale.
#[derive(Debug, Clone)]
pub struct ScoreField {
    /// Diffusion scale the field was computed at.
    pub t: u32,
    /// Score per state, nonnegative.
    pub values: Vec<f64>,
}

/// Initiation set of an option.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initiation {
    /// The option may start from every state.
    All,
    /// The option may start only from this state (point option).
    Source(usize),
}

/// A temporally extended action: initiation set, deterministic policy, and
/// termination set.
#[derive(Debug, Clone)]
pub struct GridOption {
    /// Target state the option drives toward.
    pub goal: usize,
    /// States the option may be invoked from.
    pub initiation: Initiation,
    /// Primitive action per state; `None` on termination states.
    pub policy: Vec<Option<Action>>,
    /// States where the option terminates deterministically.
    pub termination: Vec<bool>,
}

impl GridOption {
    /// Whether the option may be invoked from `s`.
    pub fn in_initiation(&self, s: usize) -> bool {
        match self.initiation {
            Initiation::All => true,
            Initiation::Source(src) => s == src,
        }
    }

    /// Whether invoking from `s` would advance the agent: `s` must be in the
    /// initiation set and not already terminal.
    pub fn eligible(&self, s: usize) -> bool {
        self.in_initiation(s) && !self.termination[s]
    }
}

/// Discovery method tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Score-field local maxima from the full walk spectrum.
    Diffusion,
    /// Eigenvector-following baseline.
    Eigen,
    /// Fiedler-extreme point-option baseline.
    Cover,
    /// Uniformly random goal baseline.
    Random,
    /// No options: primitive actions only.
    None,
}

impl Method {
    /// Parse a method name.
    pub fn parse(s: &str) -> Result<Method> {
        match s.to_ascii_lowercase().as_str() {
            "diffusion" => Ok(Method::Diffusion),
            "eigen" => Ok(Method::Eigen),
            "cover" => Ok(Method::Cover),
            "random" => Ok(Method::Random),
            "none" => Ok(Method::None),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}' (expected diffusion/eigen/cover/random/none)"
            ))),
        }
    }

    /// Canonical lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            Method::Diffusion => "diffusion",
            Method::Eigen => "eigen",
            Method::Cover => "cover",
            Method::Random => "random",
            Method::None => "none",
        }
    }
}

/// A discovered set of options plus the parameters that produced it.
#[derive(Debug, Clone)]
pub struct OptionSet {
    /// How the set was discovered.
    pub method: Method,
    /// Diffusion scale, when the method uses one.
    pub t: Option<u32>,
    /// Requested option count, when the method takes one.
    pub k: Option<usize>,
    /// Seed, when the method samples.
    pub seed: Option<u64>,
    /// The options themselves.
    pub options: Vec<GridOption>,
}

impl OptionSet {
    /// The empty set: primitive actions only.
    pub fn empty() -> OptionSet {
        OptionSet {
            method: Method::None,
            t: None,
            k: None,
            seed: None,
            options: Vec::new(),
        }
    }

    /// Number of options.
    pub fn len(&self) -> usize {
        self.options.len()
    }

    /// Whether the set holds no options.
    pub fn is_empty(&self) -> bool {
        self.options.is_empty()
    }

    /// Goal states in option order.
    pub fn goals(&self) -> Vec<usize> {
        self.options.iter().map(|o| o.goal).collect()
    }
}

/// Compute the score field at scale `t` from the full spectrum, skipping the
/// top eigenpair.
pub fn score_field(sp: &WalkSpectrum, t: u32) -> ScoreField {
    assert!(t > 0, "diffusion scale must be positive");
    let n = sp.num_states();
    // E = sum_{i>=2} omega_i^t phitilde_i phi_i^T; f(s) = |E delta_s|^2.
    let mut scaled = DMatrix::zeros(n, n.saturating_sub(1));
    for i in 1..n {
        let w = sp.omegas()[i].powi(t as i32);
        for s in 0..n {
            scaled[(s, i - 1)] = w * sp.right()[(s, i)];
        }
    }
    let e = scaled * sp.left().columns(1, n - 1).transpose();
    let values = (0..n).map(|s| e.column(s).norm_squared()).collect();
    ScoreField { t, values }
}

/// Local maxima of a score field over the graph's neighbor structure.
///
/// A state is a maximum when its value strictly exceeds all neighbors, or
/// when it is the minimum-index representative of an equal-value plateau
/// whose boundary is strictly smaller. Output is sorted by descending value,
/// ties by ascending state index.
pub fn local_maxima(f: &ScoreField, g: &StateGraph) -> Vec<usize> {
    let n = g.num_states();
    let mut seen = vec![false; n];
    let mut maxima: Vec<(usize, f64)> = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        // Flood-fill the equal-value plateau containing s.
        let mut plateau = vec![s];
        let mut stack = vec![s];
        seen[s] = true;
        let mut is_max = true;
        while let Some(p) = stack.pop() {
            for nb in g.neighbors(p) {
                if f.values[nb] == f.values[p] {
                    if !seen[nb] {
                        seen[nb] = true;
                        plateau.push(nb);
                        stack.push(nb);
                    }
                } else if f.values[nb] > f.values[p] {
                    is_max = false;
                }
            }
        }
        if is_max {
            let rep = *plateau.iter().min().unwrap();
            maxima.push((rep, f.values[rep]));
        }
    }
    maxima.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    maxima.into_iter().map(|(s, _)| s).collect()
}

/// Map from grid coordinates to state index for a graph with geometry.
fn coord_index(g: &StateGraph) -> HashMap<(usize, usize), usize> {
    g.states()
        .iter()
        .enumerate()
        .map(|(i, &rc)| (rc, i))
        .collect()
}

/// Deterministic successor table over the graph's grid geometry: entry
/// `[s][a]` is where action `a` leads from `s`, staying in place when the
/// target cell is not a state.
fn grid_successors(g: &StateGraph) -> Vec<[usize; 4]> {
    let index = coord_index(g);
    g.states()
        .iter()
        .enumerate()
        .map(|(s, &(r, c))| {
            let mut succ = [s; 4];
            for a in ACTIONS {
                let (dr, dc) = a.delta();
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr >= 0 && nc >= 0 {
                    if let Some(&j) = index.get(&(nr as usize, nc as usize)) {
                        succ[a.index()] = j;
                    }
                }
            }
            succ
        })
        .collect()
}

/// Shortest-path policy toward `goal` by breadth-first search.
///
/// The policy maps every non-goal state to the first action (in Left, Right,
/// Up, Down order) whose successor lies one step closer to the goal; the
/// goal itself maps to no action.
pub fn shortest_path_policy(g: &StateGraph, goal: usize) -> Result<Vec<Option<Action>>> {
    let n = g.num_states();
    let mut dist = vec![usize::MAX; n];
    dist[goal] = 0;
    let mut queue = std::collections::VecDeque::from([goal]);
    while let Some(s) = queue.pop_front() {
        for nb in g.neighbors(s) {
            if dist[nb] == usize::MAX {
                dist[nb] = dist[s] + 1;
                queue.push_back(nb);
            }
        }
    }
    if let Some(from) = (0..n).find(|&s| dist[s] == usize::MAX) {
        return Err(Error::UnreachableGoal { from, goal });
    }
    let succ = grid_successors(g);
    let mut policy = vec![None; n];
    for s in 0..n {
        if s == goal {
            continue;
        }
        let chosen = ACTIONS
            .into_iter()
            .find(|a| {
                let sp = succ[s][a.index()];
                sp != s && dist[sp] + 1 == dist[s]
            })
            .expect("grid geometry must realize every BFS edge");
        policy[s] = Some(chosen);
    }
    Ok(policy)
}

/// One-hot termination vector.
fn point_termination(n: usize, goal: usize) -> Vec<bool> {
    let mut term = vec![false; n];
    term[goal] = true;
    term
}

/// Build one shortest-path option per goal state, initiation everywhere.
fn goal_options(g: &StateGraph, goals: &[usize]) -> Result<Vec<GridOption>> {
    goals
        .iter()
        .map(|&goal| {
            Ok(GridOption {
                goal,
                initiation: Initiation::All,
                policy: shortest_path_policy(g, goal)?,
                termination: point_termination(g.num_states(), goal),
            })
        })
        .collect()
}

/// Discover diffusion options at scale `t`.
///
/// Pipeline: walk matrices, spectrum (through the polar positive part when
/// the graph is directed), score field, local maxima, one shortest-path
/// option per maximum.
pub fn discover_diffusion_options(g: &StateGraph, t: u32) -> Result<OptionSet> {
    let wm = walk_matrices(g)?;
    let sp = decompose(g, &wm)?;
    let f = score_field(&sp, t);
    let goals = local_maxima(&f, g);
    Ok(OptionSet {
        method: Method::Diffusion,
        t: Some(t),
        k: None,
        seed: None,
        options: goal_options(g, &goals)?,
    })
}

/// Eigenvector-following baseline: exact value iteration on the intrinsic
/// reward `sign * (phitilde_i(s') - phitilde_i(s))`, both signs of each
/// eigenvector from the second onward, until `k` options with distinct goal
/// states exist.
pub fn eigenoptions(g: &StateGraph, k: usize) -> Result<OptionSet> {
    assert!(k >= 1, "option count must be positive");
    let wm = walk_matrices(g)?;
    let sp = decompose(g, &wm)?;
    let n = g.num_states();
    let succ = grid_successors(g);
    let gamma = 0.9;

    let mut options: Vec<GridOption> = Vec::new();
    'outer: for i in 1..n {
        for sign in [1.0f64, -1.0] {
            let value = DVector::from_iterator(n, (0..n).map(|s| sign * sp.right()[(s, i)]));
            let reward = |s: usize, sp_: usize| value[sp_] - value[s];

            // Value iteration with the implicit terminate-now action worth 0.
            let mut v = vec![0.0f64; n];
            loop {
                let mut delta = 0.0f64;
                for s in 0..n {
                    let best = ACTIONS
                        .into_iter()
                        .map(|a| {
                            let sp_ = succ[s][a.index()];
                            reward(s, sp_) + gamma * v[sp_]
                        })
                        .fold(f64::NEG_INFINITY, f64::max);
                    let new = best.max(0.0);
                    delta = delta.max((new - v[s]).abs());
                    v[s] = new;
                }
                if delta < 1e-13 {
                    break;
                }
            }

            let q_best: Vec<f64> = (0..n)
                .map(|s| {
                    ACTIONS
                        .into_iter()
                        .map(|a| {
                            let sp_ = succ[s][a.index()];
                            reward(s, sp_) + gamma * v[sp_]
                        })
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect();
            let termination: Vec<bool> = q_best.iter().map(|&q| q <= 1e-12).collect();
            if !termination.iter().any(|&t| t) {
                continue;
            }
            let goal = (0..n)
                .filter(|&s| termination[s])
                .max_by(|&a, &b| value[a].partial_cmp(&value[b]).unwrap().then(b.cmp(&a)))
                .unwrap();
            if options.iter().any(|o| o.goal == goal) {
                continue;
            }
            let mut policy = vec![None; n];
            for s in 0..n {
                if termination[s] {
                    continue;
                }
                let chosen = ACTIONS
                    .into_iter()
                    .max_by(|a, b| {
                        let qa = reward(s, succ[s][a.index()]) + gamma * v[succ[s][a.index()]];
                        let qb = reward(s, succ[s][b.index()]) + gamma * v[succ[s][b.index()]];
                        qa.partial_cmp(&qb).unwrap().then(b.index().cmp(&a.index()))
                    })
                    .unwrap();
                policy[s] = Some(chosen);
            }
            options.push(GridOption {
                goal,
                initiation: Initiation::All,
                policy,
                termination,
            });
            if options.len() == k {
                break 'outer;
            }
        }
    }
    if options.len() < k {
        return Err(Error::InvalidConfig(format!(
            "cannot build {k} eigenvector options with distinct goals on {n} states"
        )));
    }
    Ok(OptionSet {
        method: Method::Eigen,
        t: None,
        k: Some(k),
        seed: None,
        options,
    })
}

/// Second-smallest eigenpair of the unnormalized Laplacian `L = D - A`.
fn fiedler_vector(adjacency: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = adjacency.nrows();
    let mut l = -adjacency.clone();
    for i in 0..n {
        l[(i, i)] += adjacency.row(i).sum();
    }
    let evd = nalgebra::SymmetricEigen::try_new(l, f64::EPSILON, 0).ok_or(Error::EvdFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| evd.eigenvalues[i].partial_cmp(&evd.eigenvalues[j]).unwrap());
    Ok(evd.eigenvectors.column(order[1]).into_owned())
}

/// Fiedler-extreme point-option baseline.
///
/// Each round takes the Fiedler vector (second eigenvector of the
/// unnormalized Laplacian) of the current augmented graph, joins its argmin
/// and argmax states with a pair of point options (policies on the original
/// graph), then augments the graph with an edge between them.
pub fn cover_options(g: &StateGraph, k: usize) -> Result<OptionSet> {
    assert!(k >= 1, "option count must be positive");
    let n = g.num_states();
    let mut aug = g.m().clone();
    let mut options: Vec<GridOption> = Vec::new();
    let mut guard = 0;
    while options.len() < k {
        guard += 1;
        if guard > k {
            return Err(Error::InvalidConfig(format!(
                "cannot build {k} distinct point options on {n} states"
            )));
        }
        let fiedler = fiedler_vector(&aug)?;
        let (mut a, mut b) = (0usize, 0usize);
        for s in 1..n {
            if fiedler[s] < fiedler[a] {
                a = s;
            }
            if fiedler[s] > fiedler[b] {
                b = s;
            }
        }
        for (src, dst) in [(a, b), (b, a)] {
            if options.len() == k {
                break;
            }
            if options
                .iter()
                .any(|o| o.initiation == Initiation::Source(src) && o.goal == dst)
            {
                continue;
            }
            options.push(GridOption {
                goal: dst,
                initiation: Initiation::Source(src),
                policy: shortest_path_policy(g, dst)?,
                termination: point_termination(n, dst),
            });
        }
        aug[(a, b)] = 1.0;
        aug[(b, a)] = 1.0;
    }
    Ok(OptionSet {
        method: Method::Cover,
        t: None,
        k: Some(k),
        seed: None,
        options,
    })
}

/// Uniformly random goal baseline: `k` distinct goal states with
/// shortest-path policies.
pub fn random_options(g: &StateGraph, k: usize, seed: u64) -> Result<OptionSet> {
    let n = g.num_states();
    if k > n {
        return Err(Error::InvalidConfig(format!(
            "requested {k} random options on {n} states"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let goals = rand::seq::index::sample(&mut rng, n, k).into_vec();
    Ok(OptionSet {
        method: Method::Random,
        t: None,
        k: Some(k),
        seed: Some(seed),
        options: goal_options(g, &goals)?,
    })
}

/// Mean squared diffusion distance from `s` to the rest of the graph under
/// the stationary law, by the brute-force definition: naive matrix powers of
/// the reconstructed walk.
///
/// This is the oracle the score field is checked against; the two agree up
/// to a constant independent of `s`.
pub fn mean_sq_diffusion_distance(sp: &WalkSpectrum, s: usize, t: u32) -> f64 {
    assert!(t >= 1, "diffusion scale must be positive");
    let n = sp.num_states();
    let w = sp.reconstruct_walk();
    let mut wt = w.clone();
    for _ in 1..t {
        wt = &w * wt;
    }
    (0..n)
        .map(|s2| sp.pi0()[s2] * (wt.column(s) - wt.column(s2)).norm_squared())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::load_domain;
    use crate::graph::build_state_graph;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn fourrooms_graph() -> StateGraph {
        let d = load_domain(include_str!("../maps/fourrooms.map"), None).unwrap();
        build_state_graph(&d).unwrap()
    }

    fn spectrum(g: &StateGraph) -> WalkSpectrum {
        decompose(g, &walk_matrices(g).unwrap()).unwrap()
    }

    #[test]
    fn corridor_score_field_matches_hand_values() {
        let d = load_domain("S..", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let f = score_field(&spectrum(&g), 1);
        assert_abs_diff_eq!(f.values[0], 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(f.values[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.values[2], 0.125, epsilon = 1e-12);
    }

    #[test]
    fn two_cell_score_field_vanishes() {
        let d = load_domain("S.", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let f = score_field(&spectrum(&g), 3);
        for v in f.values {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn score_field_equals_distance_to_stationarity() {
        let g = fourrooms_graph();
        let wm = walk_matrices(&g).unwrap();
        let sp = spectrum(&g);
        for t in [1u32, 4] {
            let f = score_field(&sp, t);
            let mut wt = DMatrix::<f64>::identity(g.num_states(), g.num_states());
            for _ in 0..t {
                wt = &wm.w * wt;
            }
            for s in 0..g.num_states() {
                let brute = (wt.column(s) - &wm.pi0).norm_squared();
                assert!(
                    (f.values[s] - brute).abs() < 1e-8,
                    "t={t} s={s}: {} vs {brute}",
                    f.values[s]
                );
            }
        }
    }

    #[test]
    fn corridor_maxima_are_the_endpoints() {
        let d = load_domain("S..", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let f = score_field(&spectrum(&g), 1);
        assert_eq!(local_maxima(&f, &g), vec![0, 2]);
    }

    #[test]
    fn constant_field_collapses_to_one_representative() {
        let g = fourrooms_graph();
        let f = ScoreField {
            t: 1,
            values: vec![1.0; g.num_states()],
        };
        assert_eq!(local_maxima(&f, &g), vec![0]);
    }

    #[test]
    fn policy_on_corridor_points_at_the_goal() {
        let d = load_domain("S....", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let policy = shortest_path_policy(&g, 4).unwrap();
        for s in 0..4 {
            assert_eq!(policy[s], Some(Action::Right));
        }
        assert_eq!(policy[4], None);
    }

    #[test]
    fn policy_walk_length_equals_bfs_distance() {
        let g = fourrooms_graph();
        let succ = grid_successors(&g);
        let goal = 42;
        let policy = shortest_path_policy(&g, goal).unwrap();
        // Independent BFS distances from the goal.
        let mut dist = vec![usize::MAX; g.num_states()];
        dist[goal] = 0;
        let mut queue = std::collections::VecDeque::from([goal]);
        while let Some(s) = queue.pop_front() {
            for nb in g.neighbors(s) {
                if dist[nb] == usize::MAX {
                    dist[nb] = dist[s] + 1;
                    queue.push_back(nb);
                }
            }
        }
        for start in 0..g.num_states() {
            let mut s = start;
            let mut steps = 0;
            while s != goal {
                s = succ[s][policy[s].unwrap().index()];
                steps += 1;
                assert!(steps <= g.num_states());
            }
            assert_eq!(steps, dist[start], "start {start}");
        }
    }

    #[test]
    fn fourrooms_option_counts_shrink_with_scale() {
        let g = fourrooms_graph();
        let at4 = discover_diffusion_options(&g, 4).unwrap();
        let at13 = discover_diffusion_options(&g, 13).unwrap();
        assert_eq!(at4.len(), 20);
        assert_eq!(at13.len(), 15);
        assert!(at13.len() <= at4.len());
    }

    #[test]
    fn two_cell_discovery_yields_one_option() {
        let d = load_domain("S.", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let set = discover_diffusion_options(&g, 2).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn eigenvector_option_signs_differ_on_corridor() {
        let d = load_domain("S..", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let set = eigenoptions(&g, 2).unwrap();
        assert_eq!(set.len(), 2);
        assert_ne!(set.options[0].goal, set.options[1].goal);
        assert_ne!(set.options[0].termination, set.options[1].termination);
    }

    #[test]
    fn eigenvector_options_reach_termination_quickly() {
        let g = fourrooms_graph();
        let succ = grid_successors(&g);
        let set = eigenoptions(&g, 20).unwrap();
        assert_eq!(set.len(), 20);
        let goals = set.goals();
        let mut unique = goals.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), goals.len(), "goals must be distinct");
        for opt in &set.options {
            for start in 0..g.num_states() {
                let mut s = start;
                let mut steps = 0;
                while !opt.termination[s] {
                    s = succ[s][opt.policy[s].unwrap().index()];
                    steps += 1;
                    assert!(steps <= g.num_states(), "option stalled from {start}");
                }
            }
        }
    }

    #[test]
    fn first_point_options_join_corridor_endpoints() {
        let d = load_domain("S....", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let set = cover_options(&g, 2).unwrap();
        let mut ends: Vec<usize> = vec![set.options[0].goal, set.options[1].goal];
        ends.sort_unstable();
        assert_eq!(ends, vec![0, 4]);
        assert_eq!(set.options[0].initiation, Initiation::Source(0));
        assert!(!set.options[0].eligible(2));
    }

    #[test]
    fn augmentation_does_not_decrease_algebraic_connectivity() {
        let d = load_domain("S....\n.###.\n.....", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let n = g.num_states();
        let lambda2 = |m: &DMatrix<f64>| {
            let deg = DVector::from_iterator(n, (0..n).map(|i| m.row(i).sum()));
            let lap = DMatrix::from_diagonal(&deg) - m;
            let mut eigs: Vec<f64> = nalgebra::SymmetricEigen::new(lap)
                .eigenvalues
                .iter()
                .copied()
                .collect();
            eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            eigs[1]
        };
        let before = lambda2(g.m());
        let set = cover_options(&g, 2).unwrap();
        let mut aug = g.m().clone();
        let (a, b) = (set.options[0].initiation, set.options[0].goal);
        if let Initiation::Source(src) = a {
            aug[(src, b)] = 1.0;
            aug[(b, src)] = 1.0;
        }
        assert!(lambda2(&aug) >= before - 1e-12);
    }

    #[test]
    fn random_goals_are_distinct_and_reproducible() {
        let g = fourrooms_graph();
        let a = random_options(&g, 20, 9).unwrap();
        let b = random_options(&g, 20, 9).unwrap();
        assert_eq!(a.goals(), b.goals());
        let mut goals = a.goals();
        goals.sort_unstable();
        goals.dedup();
        assert_eq!(goals.len(), 20);
        let c = random_options(&g, g.num_states(), 3).unwrap();
        let mut all = c.goals();
        all.sort_unstable();
        assert_eq!(all, (0..g.num_states()).collect::<Vec<_>>());
    }

    #[test]
    fn score_minus_mean_squared_distance_is_constant() {
        let d = load_domain("S..\n...", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let sp = spectrum(&g);
        for t in [1u32, 4] {
            let f = score_field(&sp, t);
            let gaps: Vec<f64> = (0..g.num_states())
                .map(|s| f.values[s] - mean_sq_diffusion_distance(&sp, s, t))
                .collect();
            let spread = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - gaps.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(spread < 1e-10, "t={t}: spread {spread}");
        }
    }

    #[test]
    fn score_and_mean_squared_distance_share_argmax() {
        let g = fourrooms_graph();
        let sp = spectrum(&g);
        let f = score_field(&sp, 4);
        let argmax_f = (0..g.num_states())
            .max_by(|&a, &b| f.values[a].partial_cmp(&f.values[b]).unwrap())
            .unwrap();
        let argmax_m = (0..g.num_states())
            .max_by(|&a, &b| {
                mean_sq_diffusion_distance(&sp, a, 4)
                    .partial_cmp(&mean_sq_diffusion_distance(&sp, b, 4))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(argmax_f, argmax_m);
    }

    #[test]
    fn score_respects_spectral_upper_bound() {
        let g = fourrooms_graph();
        let sp = spectrum(&g);
        for t in [1u32, 4, 13] {
            let f = score_field(&sp, t);
            let omega2 = sp.omegas()[1];
            for s in 0..g.num_states() {
                let bound = omega2.powi(2 * t as i32) * (1.0 / sp.pi0()[s] - 1.0) + 1e-10;
                assert!(f.values[s] <= bound, "t={t} s={s}");
            }
        }
    }

    #[test]
    fn score_field_is_invariant_to_eigenvector_sign_and_rotation() {
        // An open square grid has degenerate eigenvalues by symmetry.
        let d = load_domain("S....\n.....\n.....\n.....\n.....", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let wm = walk_matrices(&g).unwrap();
        let sp = decompose(&g, &wm).unwrap();
        let f = score_field(&sp, 4);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = g.num_states();
        let mut psi = sp.psi().clone();
        // Flip a few signs.
        for i in [1usize, 3, 5] {
            for s in 0..n {
                psi[(s, i)] = -psi[(s, i)];
            }
        }
        // Rotate inside each degenerate pair.
        for i in 1..n - 1 {
            if (sp.nus()[i + 1] - sp.nus()[i]).abs() < 1e-12 {
                let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let (c, s_) = (theta.cos(), theta.sin());
                for row in 0..n {
                    let (x, y) = (psi[(row, i)], psi[(row, i + 1)]);
                    psi[(row, i)] = c * x - s_ * y;
                    psi[(row, i + 1)] = s_ * x + c * y;
                }
            }
        }
        // Rebuild the field from the perturbed basis directly.
        let sqrt_d = g.d().map(f64::sqrt);
        let mut scaled = DMatrix::zeros(n, n - 1);
        let mut left = DMatrix::zeros(n, n - 1);
        for i in 1..n {
            let w = sp.omegas()[i].powi(4);
            for s in 0..n {
                scaled[(s, i - 1)] = w * sqrt_d[s] * psi[(s, i)];
                left[(s, i - 1)] = psi[(s, i)] / sqrt_d[s];
            }
        }
        let e = scaled * left.transpose();
        for s in 0..n {
            let rebuilt = e.column(s).norm_squared();
            assert!(
                (rebuilt - f.values[s]).abs() < 1e-8,
                "s={s}: {rebuilt} vs {}",
                f.values[s]
            );
        }
    }
}
