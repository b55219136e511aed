// SPDX-License-Identifier: Apache-2.0

//! Tabular Q-learning over a mixed action space of primitives and options.
//!
//! The agent follows the learned Q function at states it has visited and
//! explores uniformly over eligible choices elsewhere. Options execute their
//! own policies to termination (or the episode's remaining step budget) and
//! are backed up with a multi-step SMDP update discounted by the number of
//! environment steps consumed. Every intra-option step counts toward the
//! episode's step budget.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{Domain, ACTIONS};
use crate::options::{GridOption, OptionSet};
use crate::{Error, Result};

/// Learning protocol parameters.
#[derive(Debug, Clone)]
pub struct LearningConfig {
    /// Q-learning step size.
    pub alpha: f64,
    /// Discount factor, strictly below 1.
    pub gamma: f64,
    /// Episodes per run.
    pub episodes: usize,
    /// Environment steps allowed per episode.
    pub max_steps_per_episode: u32,
    /// Value logged for an episode that never reaches the goal.
    pub default_steps_on_failure: u32,
    /// Monte-Carlo repetitions per task goal.
    pub monte_carlo_iterations: usize,
}

impl Default for LearningConfig {
    fn default() -> Self {
        LearningConfig {
            alpha: 0.1,
            gamma: 0.9,
            episodes: 400,
            max_steps_per_episode: 100,
            default_steps_on_failure: 101,
            monte_carlo_iterations: 30,
        }
    }
}

impl LearningConfig {
    /// Check the parameters are usable.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig("gamma must lie in (0, 1)".into()));
        }
        if self.episodes == 0 || self.monte_carlo_iterations == 0 {
            return Err(Error::InvalidConfig(
                "episode and iteration counts must be positive".into(),
            ));
        }
        if self.max_steps_per_episode == 0 {
            return Err(Error::InvalidConfig("step budget must be positive".into()));
        }
        if self.default_steps_on_failure <= self.max_steps_per_episode {
            return Err(Error::InvalidConfig(
                "failure sentinel must exceed the step budget".into(),
            ));
        }
        Ok(())
    }
}

/// Result of running one option to termination or budget exhaustion.
#[derive(Debug, Clone)]
pub struct OptionOutcome {
    /// State the option ended in.
    pub end_state: usize,
    /// Environment steps consumed.
    pub steps_used: u32,
    /// Whether the option reached its own termination set.
    pub reached_goal: bool,
    /// Every state occupied, starting state first.
    pub path: Vec<usize>,
}

/// Log of one learning run.
#[derive(Debug, Clone)]
pub struct RunLog {
    /// Steps to the goal per episode; failures log the sentinel value.
    pub steps_per_episode: Vec<u32>,
    /// Occupancy count per state over all episodes.
    pub visitation: Vec<u64>,
    /// Seed the run's random stream was built from.
    pub seed: u64,
}

/// Execute `opt` from `state` under the domain's dynamics until the option
/// terminates or `budget` environment steps are spent.
///
/// Wind applies during execution, so the realized path may deviate from the
/// option's deterministic intent.
pub fn execute_option<R: Rng + ?Sized>(
    domain: &Domain,
    opt: &GridOption,
    state: usize,
    budget: u32,
    rng: &mut R,
) -> Result<OptionOutcome> {
    if !opt.in_initiation(state) {
        return Err(Error::NotInInitiationSet(state));
    }
    let mut cur = state;
    let mut steps = 0u32;
    let mut path = vec![state];
    while !opt.termination[cur] && steps < budget {
        let Some(action) = opt.policy[cur] else {
            break;
        };
        cur = domain.step(cur, action, rng);
        steps += 1;
        path.push(cur);
    }
    Ok(OptionOutcome {
        end_state: cur,
        steps_used: steps,
        reached_goal: opt.termination[cur],
        path,
    })
}

/// Choices available to the agent: the four primitives then one entry per
/// option, eligibility-filtered per state.
fn eligible_choices(opts: &OptionSet, num_states: usize) -> Vec<Vec<usize>> {
    (0..num_states)
        .map(|s| {
            let mut choices: Vec<usize> = (0..4).collect();
            for (j, opt) in opts.options.iter().enumerate() {
                if opt.eligible(s) {
                    choices.push(4 + j);
                }
            }
            choices
        })
        .collect()
}

/// One Q-learning run: `episodes` episodes from the domain's start cell to
/// `task_goal`, logging steps per episode and state occupancy.
///
/// At a visited state the agent is greedy over its eligible choices (exact
/// ties broken uniformly); at an unvisited state it picks uniformly among
/// them. Reward is 1 on a choice whose final transition lands on the task
/// goal, 0 otherwise; options are backed up with the discounted multi-step
/// target.
pub fn q_learning_run(
    domain: &Domain,
    opts: &OptionSet,
    task_goal: usize,
    cfg: &LearningConfig,
    seed: u64,
) -> Result<RunLog> {
    cfg.validate()?;
    let n = domain.num_states();
    if task_goal >= n {
        return Err(Error::InvalidConfig(format!(
            "task goal {task_goal} is not a state index"
        )));
    }
    if task_goal == domain.start() {
        return Err(Error::InvalidConfig(
            "task goal coincides with the start cell".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_choices = 4 + opts.len();
    let eligible = eligible_choices(opts, n);
    let mut q = vec![vec![0.0f64; num_choices]; n];
    let mut visited = vec![false; n];
    let mut visitation = vec![0u64; n];
    let mut steps_per_episode = Vec::with_capacity(cfg.episodes);

    for _ in 0..cfg.episodes {
        let mut s = domain.start();
        visitation[s] += 1;
        let mut steps = 0u32;
        let mut done = false;
        while !done && steps < cfg.max_steps_per_episode {
            let choice = if visited[s] {
                let best = eligible[s]
                    .iter()
                    .map(|&c| q[s][c])
                    .fold(f64::NEG_INFINITY, f64::max);
                let ties: Vec<usize> = eligible[s]
                    .iter()
                    .copied()
                    .filter(|&c| q[s][c] == best)
                    .collect();
                *ties.choose(&mut rng).unwrap()
            } else {
                *eligible[s].choose(&mut rng).unwrap()
            };

            let target;
            let next;
            if choice < 4 {
                let sp = domain.step(s, ACTIONS[choice], &mut rng);
                steps += 1;
                visitation[sp] += 1;
                done = sp == task_goal;
                let reward = if done { 1.0 } else { 0.0 };
                let bootstrap = if done {
                    0.0
                } else {
                    q[sp].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                };
                target = reward + cfg.gamma * bootstrap;
                next = sp;
            } else {
                let opt = &opts.options[choice - 4];
                let budget = cfg.max_steps_per_episode - steps;
                let outcome = execute_option(domain, opt, s, budget, &mut rng)?;
                let k = outcome.steps_used;
                debug_assert!(k >= 1, "eligible option must consume a step");
                steps += k;
                for &p in &outcome.path[1..] {
                    visitation[p] += 1;
                }
                done = outcome.end_state == task_goal;
                let reward = if done { 1.0 } else { 0.0 };
                let ret = cfg.gamma.powi(k as i32 - 1) * reward;
                let bootstrap = if done {
                    0.0
                } else {
                    cfg.gamma.powi(k as i32)
                        * q[outcome.end_state]
                            .iter()
                            .cloned()
                            .fold(f64::NEG_INFINITY, f64::max)
                };
                target = ret + bootstrap;
                next = outcome.end_state;
            }
            q[s][choice] += cfg.alpha * (target - q[s][choice]);
            visited[s] = true;
            s = next;
        }
        steps_per_episode.push(if done {
            steps
        } else {
            cfg.default_steps_on_failure
        });
    }
    Ok(RunLog {
        steps_per_episode,
        visitation,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::load_domain;
    use crate::graph::build_state_graph;
    use crate::options::{discover_diffusion_options, Initiation};

    fn fourrooms() -> Domain {
        load_domain(include_str!("../maps/fourrooms.map"), None).unwrap()
    }

    #[test]
    fn option_from_its_own_goal_consumes_nothing() {
        let d = fourrooms();
        let g = build_state_graph(&d).unwrap();
        let set = discover_diffusion_options(&g, 4).unwrap();
        let opt = &set.options[0];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = execute_option(&d, opt, opt.goal, 50, &mut rng).unwrap();
        assert_eq!(out.end_state, opt.goal);
        assert_eq!(out.steps_used, 0);
        assert!(out.reached_goal);
        assert_eq!(out.path, vec![opt.goal]);
    }

    #[test]
    fn option_execution_length_matches_bfs_distance() {
        let d = fourrooms();
        let g = build_state_graph(&d).unwrap();
        let set = discover_diffusion_options(&g, 4).unwrap();
        let opt = &set.options[0];
        // BFS distances to the option goal.
        let mut dist = vec![usize::MAX; g.num_states()];
        dist[opt.goal] = 0;
        let mut queue = std::collections::VecDeque::from([opt.goal]);
        while let Some(s) = queue.pop_front() {
            for nb in g.neighbors(s) {
                if dist[nb] == usize::MAX {
                    dist[nb] = dist[s] + 1;
                    queue.push_back(nb);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for start in 0..g.num_states() {
            let out = execute_option(&d, opt, start, 1000, &mut rng).unwrap();
            assert!(out.reached_goal);
            assert_eq!(out.steps_used as usize, dist[start], "start {start}");
            assert_eq!(out.path.len() as u32, out.steps_used + 1);
        }
    }

    #[test]
    fn budget_cuts_option_short() {
        let d = load_domain("S....", None).unwrap();
        let g = build_state_graph(&d).unwrap();
        let set = discover_diffusion_options(&g, 1).unwrap();
        let opt = set.options.iter().find(|o| o.goal == 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = execute_option(&d, opt, 0, 1, &mut rng).unwrap();
        assert_eq!(out.steps_used, 1);
        assert!(!out.reached_goal);
        assert_eq!(out.end_state, 1);
    }

    #[test]
    fn initiation_set_is_enforced() {
        let d = load_domain("S....", None).unwrap();
        let opt = GridOption {
            goal: 4,
            initiation: Initiation::Source(0),
            policy: vec![Some(crate::env::Action::Right); 5],
            termination: vec![false, false, false, false, true],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(matches!(
            execute_option(&d, &opt, 2, 10, &mut rng),
            Err(Error::NotInInitiationSet(2))
        ));
    }

    #[test]
    fn adjacent_goal_converges_to_one_step() {
        let d = load_domain("S.", None).unwrap();
        let cfg = LearningConfig::default();
        let log = q_learning_run(&d, &OptionSet::empty(), 1, &cfg, 5).unwrap();
        assert_eq!(log.steps_per_episode.len(), 400);
        let tail = &log.steps_per_episode[350..];
        assert!(tail.iter().all(|&s| s == 1), "tail {tail:?}");
    }

    #[test]
    fn unreachable_budget_logs_the_failure_sentinel() {
        let d = fourrooms();
        let cfg = LearningConfig {
            episodes: 3,
            max_steps_per_episode: 1,
            default_steps_on_failure: 2,
            ..LearningConfig::default()
        };
        // Any non-adjacent goal cannot be reached in one step.
        let goal = d.goals().iter().copied().find(|&g| g != d.start()).unwrap();
        let log = q_learning_run(&d, &OptionSet::empty(), goal, &cfg, 6).unwrap();
        assert_eq!(log.steps_per_episode, vec![2, 2, 2]);
    }

    #[test]
    fn runs_are_deterministic_in_the_seed() {
        let d = fourrooms();
        let g = build_state_graph(&d).unwrap();
        let set = discover_diffusion_options(&g, 4).unwrap();
        let cfg = LearningConfig {
            episodes: 40,
            ..LearningConfig::default()
        };
        let goal = d.goals()[0];
        let a = q_learning_run(&d, &set, goal, &cfg, 77).unwrap();
        let b = q_learning_run(&d, &set, goal, &cfg, 77).unwrap();
        let c = q_learning_run(&d, &set, goal, &cfg, 78).unwrap();
        assert_eq!(a.steps_per_episode, b.steps_per_episode);
        assert_eq!(a.visitation, b.visitation);
        assert_ne!(a.visitation, c.visitation);
    }

    #[test]
    fn episode_lengths_respect_the_cap() {
        let d = fourrooms();
        let g = build_state_graph(&d).unwrap();
        let set = discover_diffusion_options(&g, 4).unwrap();
        let cfg = LearningConfig {
            episodes: 60,
            ..LearningConfig::default()
        };
        let log = q_learning_run(&d, &set, d.goals()[1], &cfg, 8).unwrap();
        for &s in &log.steps_per_episode {
            assert!((1..=101).contains(&s));
        }
    }

    #[test]
    fn start_as_goal_is_rejected() {
        let d = fourrooms();
        let cfg = LearningConfig::default();
        assert!(matches!(
            q_learning_run(&d, &OptionSet::empty(), d.start(), &cfg, 0),
            Err(Error::InvalidConfig(_))
        ));
    }
}
