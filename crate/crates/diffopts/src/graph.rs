// SPDX-License-Identifier: Apache-2.0

//! State graphs over domains: weight matrix, degrees, lazy random walk,
//! normalized Laplacian, and the stationary distribution.
//!
//! Deterministic domains become symmetric binary graphs; stochastic kernels
//! become directed weighted graphs. Both feed the same walk construction
//! `W = (I + M D^-1) / 2` and `N = I - D^{-1/2} M D^{-1/2}`.

use nalgebra::{DMatrix, DVector};

use crate::env::{Domain, ACTIONS};
use crate::{Error, Result};

/// Weighted state graph with degree bookkeeping.
///
/// Entry `m[(j, i)]` is the weight of the transition `i -> j` (columns index
/// the source state), so a column-stochastic kernel can be stored directly.
/// For symmetric graphs the orientation is immaterial. Degrees are row sums,
/// i.e. the total weight arriving at each state.
#[derive(Debug, Clone)]
pub struct StateGraph {
    states: Vec<(usize, usize)>,
    m: DMatrix<f64>,
    symmetric: bool,
    d: DVector<f64>,
    total_degree: f64,
}

/// Lazy walk matrix, normalized Laplacian, and stationary distribution.
#[derive(Debug, Clone)]
pub struct WalkMatrices {
    /// Lazy walk `W = (I + M D^-1) / 2`; column-stochastic when M is
    /// symmetric.
    pub w: DMatrix<f64>,
    /// Normalized Laplacian `N = I - D^{-1/2} M D^{-1/2}`; symmetric when M
    /// is.
    pub n: DMatrix<f64>,
    /// Stationary distribution of W, normalized to sum 1.
    pub pi0: DVector<f64>,
}

/// Build the symmetric binary state graph of a deterministic domain.
///
/// States are the domain's free cells; two states are joined (weight 1) when
/// a single action moves between them. Self-loops are excluded; laziness
/// enters through the walk matrix instead.
pub fn build_state_graph(domain: &Domain) -> Result<StateGraph> {
    let n = domain.num_states();
    let mut m = DMatrix::zeros(n, n);
    for s in 0..n {
        for a in ACTIONS {
            let sp = domain.deterministic_successor(s, a);
            if sp != s {
                m[(s, sp)] = 1.0;
                m[(sp, s)] = 1.0;
            }
        }
    }
    StateGraph::new(m, domain.states().to_vec())
}

/// Build a directed state graph from a column-stochastic kernel.
///
/// Entry `(s', s)` of `t` is the probability of moving `s -> s'`. The kernel
/// is stored with its diagonal zeroed (self-stay mass is the laziness channel
/// and re-enters through W); degrees are row sums, the total transition
/// weight arriving at each state. With a symmetric kernel this reduces to
/// the deterministic construction up to scale.
pub fn build_directed_graph(t: &DMatrix<f64>, states: Vec<(usize, usize)>) -> Result<StateGraph> {
    if t.nrows() != t.ncols() {
        return Err(Error::NonStochasticInput(format!(
            "matrix is {}x{}, expected square",
            t.nrows(),
            t.ncols()
        )));
    }
    let n = t.nrows();
    for j in 0..n {
        let mut sum = 0.0;
        for i in 0..n {
            let v = t[(i, j)];
            if v < 0.0 {
                return Err(Error::NonStochasticInput(format!(
                    "negative entry {v} at ({i}, {j})"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NonStochasticInput(format!(
                "column {j} sums to {sum}, expected 1"
            )));
        }
    }
    let mut m = t.clone();
    for i in 0..n {
        m[(i, i)] = 0.0;
    }
    StateGraph::new(m, states)
}

impl StateGraph {
    /// Wrap a nonnegative weight matrix with zero diagonal as a state graph.
    ///
    /// `states` supplies grid coordinates per state; synthetic coordinates
    /// are fine for graphs without geometry. The free cells must form one
    /// connected component under the undirected support of `m`.
    pub fn new(m: DMatrix<f64>, states: Vec<(usize, usize)>) -> Result<StateGraph> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "weight matrix must be square");
        assert_eq!(n, states.len(), "one coordinate per state");
        for i in 0..n {
            assert!(
                m[(i, i)] == 0.0,
                "self-loops are not stored in the weight matrix"
            );
        }
        // Connectivity over the undirected support.
        if n > 0 {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            let mut count = 1;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if !seen[j] && (m[(i, j)] != 0.0 || m[(j, i)] != 0.0) {
                        seen[j] = true;
                        count += 1;
                        stack.push(j);
                    }
                }
            }
            if count != n {
                return Err(Error::DisconnectedDomain);
            }
        }
        let symmetric = m == m.transpose();
        let d = DVector::from_iterator(n, (0..n).map(|i| m.row(i).sum()));
        let total_degree = d.sum();
        Ok(StateGraph {
            states,
            m,
            symmetric,
            d,
            total_degree,
        })
    }

    /// Build a symmetric graph from an adjacency matrix with synthetic
    /// coordinates, for graphs that have no grid geometry.
    pub fn from_adjacency(m: DMatrix<f64>) -> Result<StateGraph> {
        let n = m.nrows();
        assert_eq!(m, m.transpose(), "adjacency must be symmetric");
        let states = (0..n).map(|i| (i, 0)).collect();
        StateGraph::new(m, states)
    }

    /// Number of states.
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Grid coordinates per state.
    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    /// Weight matrix; `m[(j, i)]` is the weight of `i -> j`.
    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Whether the weight matrix is exactly symmetric.
    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    /// Degree vector (row sums of the weight matrix).
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    /// Total degree `d(S)`.
    pub fn total_degree(&self) -> f64 {
        self.total_degree
    }

    /// Neighbors of `s` under the undirected support of the weight matrix.
    pub fn neighbors(&self, s: usize) -> Vec<usize> {
        (0..self.num_states())
            .filter(|&j| j != s && (self.m[(s, j)] != 0.0 || self.m[(j, s)] != 0.0))
            .collect()
    }
}

/// Compute the lazy walk, normalized Laplacian, and stationary distribution.
///
/// For symmetric graphs the stationary law is degree-proportional; for
/// directed graphs it is the leading eigenvector of W found by power
/// iteration, normalized to sum 1.
pub fn walk_matrices(g: &StateGraph) -> Result<WalkMatrices> {
    let n = g.num_states();
    for s in 0..n {
        if g.d()[s] <= 0.0 {
            return Err(Error::ZeroDegreeState(s));
        }
    }
    let m = g.m();
    let d = g.d();
    let mut w = DMatrix::zeros(n, n);
    let mut nl = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            w[(i, j)] = 0.5 * (m[(i, j)] / d[j] + if i == j { 1.0 } else { 0.0 });
            nl[(i, j)] = (if i == j { 1.0 } else { 0.0 }) - m[(i, j)] / (d[i] * d[j]).sqrt();
        }
    }
    let pi0 = if g.symmetric() {
        d / g.total_degree()
    } else {
        leading_eigenvector(&w)
    };
    Ok(WalkMatrices { w, n: nl, pi0 })
}

/// Leading eigenvector of a nonnegative matrix by power iteration,
/// normalized to sum 1.
fn leading_eigenvector(w: &DMatrix<f64>) -> DVector<f64> {
    let n = w.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..100_000 {
        let mut next = w * &v;
        let sum = next.sum();
        next /= sum;
        let delta = (&next - &v).abs().max();
        v = next;
        if delta < 1e-15 {
            break;
        }
    }
    v
}
