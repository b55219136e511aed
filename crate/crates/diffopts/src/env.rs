// SPDX-License-Identifier: Apache-2.0

//! Grid domains loaded from ASCII maps, with exact transition dynamics.
//!
//! A map is a rectangle of `#` (wall), `.` (free), `S` (start, exactly one),
//! and `G` (goal, any number). Free cells (including `S` and `G`) are indexed
//! in row-major order; every operation below speaks in those state indices.
//! Dynamics are deterministic single-cell moves, optionally perturbed by a
//! wind that replaces the chosen action with a fixed direction at some
//! probability.

use nalgebra::DMatrix;
use rand::Rng;

use crate::{Error, Result};

/// The four primitive movement actions.
///
/// The declaration order (Left, Right, Up, Down) is the canonical tie-break
/// order everywhere a deterministic choice among equal actions is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    /// Move one column left.
    Left,
    /// Move one column right.
    Right,
    /// Move one row up.
    Up,
    /// Move one row down.
    Down,
}

/// All actions in canonical order.
pub const ACTIONS: [Action; 4] = [Action::Left, Action::Right, Action::Up, Action::Down];

impl Action {
    /// Row/column displacement of this action.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Left => (0, -1),
            Action::Right => (0, 1),
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
        }
    }

    /// Canonical index of this action in [`ACTIONS`].
    pub fn index(self) -> usize {
        match self {
            Action::Left => 0,
            Action::Right => 1,
            Action::Up => 2,
            Action::Down => 3,
        }
    }

    /// Canonical lowercase name.
    pub fn name(self) -> &'static str {
        match self {
            Action::Left => "left",
            Action::Right => "right",
            Action::Up => "up",
            Action::Down => "down",
        }
    }

    /// Parse a direction name (case-insensitive).
    pub fn parse(s: &str) -> Result<Action> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Action::Left),
            "right" => Ok(Action::Right),
            "up" => Ok(Action::Up),
            "down" => Ok(Action::Down),
            other => Err(Error::InvalidConfig(format!(
                "unknown direction '{other}' (expected left/right/up/down)"
            ))),
        }
    }
}

/// Wind perturbation: with probability `probability` the agent moves one cell
/// in `direction` (staying put if blocked), regardless of its chosen action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wind {
    /// Direction the wind pushes toward.
    pub direction: Action,
    /// Probability in `[0, 1]` that the wind overrides the chosen action.
    pub probability: f64,
}

/// A grid world over the free cells of an ASCII map.
///
/// Immutable after load; safe to share read-only across threads. All
/// randomness is drawn from explicit streams passed by the caller.
#[derive(Debug, Clone)]
pub struct Domain {
    width: usize,
    height: usize,
    /// Free cells as `(row, col)` in row-major order.
    states: Vec<(usize, usize)>,
    /// Map from grid position to state index; `usize::MAX` on walls.
    index: Vec<usize>,
    start: usize,
    goals: Vec<usize>,
    wind: Option<Wind>,
}

/// Parse an ASCII map into a [`Domain`].
///
/// The map must be rectangular, use only `#`, `.`, `S`, `G`, contain exactly
/// one `S`, and have all free cells (including `S` and `G`) in a single
/// 4-connected component.
pub fn load_domain(map_text: &str, wind: Option<Wind>) -> Result<Domain> {
    let rows: Vec<&str> = map_text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(Error::MalformedMap("empty map".into()));
    }
    let height = rows.len();
    let width = rows[0].chars().count();
    for (r, row) in rows.iter().enumerate() {
        if row.chars().count() != width {
            return Err(Error::MalformedMap(format!(
                "row {r} has {} columns, expected {width}",
                row.chars().count()
            )));
        }
    }

    let mut states = Vec::new();
    let mut index = vec![usize::MAX; height * width];
    let mut start = None;
    let mut goal_cells = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for (c, ch) in row.chars().enumerate() {
            match ch {
                '#' | '.' => {}
                'S' => {
                    if start.replace((r, c)).is_some() {
                        return Err(Error::MalformedMap("more than one start cell".into()));
                    }
                }
                'G' => goal_cells.push((r, c)),
                other => {
                    return Err(Error::MalformedMap(format!(
                        "illegal character '{other}' at row {r}, column {c}"
                    )))
                }
            }
            if ch != '#' {
                index[r * width + c] = states.len();
                states.push((r, c));
            }
        }
    }
    let start_cell = start.ok_or_else(|| Error::MalformedMap("no start cell".into()))?;

    if states.is_empty() {
        return Err(Error::MalformedMap("no free cells".into()));
    }

    // Connectivity check over the 4-neighborhood of free cells.
    let mut seen = vec![false; states.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(s) = stack.pop() {
        let (r, c) = states[s];
        for (dr, dc) in [(0isize, 1isize), (0, -1), (1, 0), (-1, 0)] {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr as usize >= height || nc as usize >= width {
                continue;
            }
            let ni = index[nr as usize * width + nc as usize];
            if ni != usize::MAX && !seen[ni] {
                seen[ni] = true;
                count += 1;
                stack.push(ni);
            }
        }
    }
    if count != states.len() {
        return Err(Error::DisconnectedDomain);
    }

    if let Some(w) = wind {
        if !(0.0..=1.0).contains(&w.probability) {
            return Err(Error::InvalidConfig(format!(
                "wind probability {} outside [0, 1]",
                w.probability
            )));
        }
    }

    let start_idx = index[start_cell.0 * width + start_cell.1];
    let goals = goal_cells
        .iter()
        .map(|&(r, c)| index[r * width + c])
        .collect();
    Ok(Domain {
        width,
        height,
        states,
        index,
        start: start_idx,
        goals,
        wind,
    })
}

impl Domain {
    /// Number of free states.
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Grid width in cells.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Grid height in cells.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Free cells as `(row, col)`, in state-index order.
    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    /// State index of the start cell.
    pub fn start(&self) -> usize {
        self.start
    }

    /// State indices of the goal cells.
    pub fn goals(&self) -> &[usize] {
        &self.goals
    }

    /// Wind spec, if any.
    pub fn wind(&self) -> Option<Wind> {
        self.wind
    }

    /// State index at `(row, col)`, or `None` on a wall or out of bounds.
    pub fn state_at(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.height || col >= self.width {
            return None;
        }
        let i = self.index[row * self.width + col];
        (i != usize::MAX).then_some(i)
    }

    /// Where `action` leads from `state` under deterministic dynamics.
    ///
    /// Blocked moves (wall or border) stay in place.
    pub fn deterministic_successor(&self, state: usize, action: Action) -> usize {
        let (r, c) = self.states[state];
        let (dr, dc) = action.delta();
        let (nr, nc) = (r as isize + dr, c as isize + dc);
        if nr < 0 || nc < 0 || nr as usize >= self.height || nc as usize >= self.width {
            return state;
        }
        let ni = self.index[nr as usize * self.width + nc as usize];
        if ni == usize::MAX {
            state
        } else {
            ni
        }
    }

    /// One environment transition from `state` under `action`.
    ///
    /// With wind `p`, the wind direction replaces the chosen action with
    /// probability `p`; otherwise (and always in deterministic domains) the
    /// single-cell move applies, staying in place when blocked.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, action: Action, rng: &mut R) -> usize {
        if let Some(w) = self.wind {
            if rng.gen::<f64>() < w.probability {
                return self.deterministic_successor(state, w.direction);
            }
        }
        self.deterministic_successor(state, action)
    }

    /// Exact transition kernel under a uniformly random action.
    ///
    /// Entry `(s', s)` is the probability of landing in `s'` from `s` when
    /// the action is drawn uniformly from the four actions and the dynamics
    /// (including wind) are applied exactly. Columns sum to 1.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.states.len();
        let mut t = DMatrix::zeros(n, n);
        let (wind_p, wind_succ): (f64, Option<Vec<usize>>) = match self.wind {
            Some(w) => (
                w.probability,
                Some(
                    (0..n)
                        .map(|s| self.deterministic_successor(s, w.direction))
                        .collect(),
                ),
            ),
            None => (0.0, None),
        };
        for s in 0..n {
            for a in ACTIONS {
                let sp = self.deterministic_successor(s, a);
                t[(sp, s)] += (1.0 - wind_p) * 0.25;
            }
            if let Some(ref ws) = wind_succ {
                t[(ws[s], s)] += wind_p;
            }
        }
        t
    }
}
