//! Directed graphs, zero/nonzero structures and the composite state/output graph.
//!
//! Orientation convention used throughout the crate: a structural nonzero at
//! position `(i, j)` of a square system structure means state `j` influences
//! state `i`, and is stored as the digraph edge `j -> i`. Observing a state
//! therefore adds an edge from that state to an output node, and outputs are
//! sinks of the composite graph.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("position ({row}, {col}) outside a {rows}x{cols} structure")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("edge {source_node} -> {target} outside a digraph with {node_count} nodes")]
    EdgeOutOfRange {
        source_node: usize,
        target: usize,
        node_count: usize,
    },
    #[error("structure must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {what} ({left} vs {right})")]
    DimensionMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
}

/// Zero/nonzero pattern of a matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredMatrix {
    rows: usize,
    cols: usize,
    support: BTreeSet<(usize, usize)>,
}

impl StructuredMatrix {
    pub fn new<I>(rows: usize, cols: usize, support: I) -> Result<Self, StructureError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut set = BTreeSet::new();
        for (row, col) in support {
            if row >= rows || col >= cols {
                return Err(StructureError::OutOfBounds {
                    row,
                    col,
                    rows,
                    cols,
                });
            }
            set.insert((row, col));
        }
        Ok(Self {
            rows,
            cols,
            support: set,
        })
    }

    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            support: BTreeSet::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            support: (0..n).map(|i| (i, i)).collect(),
        }
    }

    /// One row per observed state, each row with a single nonzero.
    pub fn selection(n: usize, states: &[usize]) -> Result<Self, StructureError> {
        Self::new(
            states.len(),
            n,
            states.iter().enumerate().map(|(r, &s)| (r, s)),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.support.contains(&(row, col))
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.support.iter().copied()
    }

    pub fn row_support(&self, row: usize) -> impl Iterator<Item = usize> + '_ {
        self.support
            .range((row, 0)..(row + 1, 0))
            .map(|&(_, c)| c)
    }

    /// Stack `self` on top of `other` (same column count).
    pub fn vstack(&self, other: &StructuredMatrix) -> Result<Self, StructureError> {
        if self.cols != other.cols {
            return Err(StructureError::DimensionMismatch {
                what: "column count of stacked structures",
                left: self.cols,
                right: other.cols,
            });
        }
        let mut support = self.support.clone();
        support.extend(other.support().map(|(r, c)| (r + self.rows, c)));
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            support,
        })
    }

    /// Drop rows without any nonzero; returns the compacted structure and the
    /// indices of the removed rows.
    pub fn drop_empty_rows(&self) -> (Self, Vec<usize>) {
        let occupied: BTreeSet<usize> = self.support.iter().map(|&(r, _)| r).collect();
        let dropped: Vec<usize> = (0..self.rows).filter(|r| !occupied.contains(r)).collect();
        let remap: Vec<Option<usize>> = {
            let mut next = 0;
            (0..self.rows)
                .map(|r| {
                    if occupied.contains(&r) {
                        next += 1;
                        Some(next - 1)
                    } else {
                        None
                    }
                })
                .collect()
        };
        let support = self
            .support
            .iter()
            .map(|&(r, c)| (remap[r].expect("occupied row"), c))
            .collect();
        (
            Self {
                rows: occupied.len(),
                cols: self.cols,
                support,
            },
            dropped,
        )
    }
}

/// Directed graph on dense node ids `0..node_count` with sorted, duplicate-free
/// adjacency lists. Self-loops are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Digraph {
    out: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Digraph {
    pub fn new(node_count: usize) -> Self {
        Self {
            out: vec![Vec::new(); node_count],
            edge_count: 0,
        }
    }

    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self, StructureError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut out = vec![Vec::new(); node_count];
        for (s, t) in edges {
            if s >= node_count || t >= node_count {
                return Err(StructureError::EdgeOutOfRange {
                    source_node: s,
                    target: t,
                    node_count,
                });
            }
            out[s].push(t);
        }
        let mut edge_count = 0;
        for adj in &mut out {
            adj.sort_unstable();
            adj.dedup();
            edge_count += adj.len();
        }
        Ok(Self { out, edge_count })
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.out[node]
    }

    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        self.out[source].binary_search(&target).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(s, adj)| adj.iter().map(move |&t| (s, t)))
    }

    pub fn reversed(&self) -> Digraph {
        Digraph::from_edges(self.node_count(), self.edges().map(|(s, t)| (t, s)))
            .expect("reversal keeps endpoints in range")
    }

    /// Subgraph induced by `nodes`, relabelled in the order given.
    pub fn induced(&self, nodes: &[usize]) -> Digraph {
        let mut local = vec![usize::MAX; self.node_count()];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let edges = nodes.iter().flat_map(|&v| {
            let local = &local;
            self.out[v]
                .iter()
                .filter(move |&&t| local[t] != usize::MAX)
                .map(move |&t| (local[v], local[t]))
        });
        Digraph::from_edges(nodes.len(), edges.collect::<Vec<_>>())
            .expect("induced edges are in range")
    }

    /// Square structure with `(i, j)` present iff edge `j -> i`.
    pub fn to_structure(&self) -> StructuredMatrix {
        let n = self.node_count();
        StructuredMatrix::new(n, n, self.edges().map(|(s, t)| (t, s)))
            .expect("edges are in range")
    }
}

/// Digraph of a square system structure: nonzero `(i, j)` becomes edge `j -> i`.
pub fn digraph_from_structure(a: &StructuredMatrix) -> Result<Digraph, StructureError> {
    if !a.is_square() {
        return Err(StructureError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Digraph::from_edges(a.rows(), a.support().map(|(i, j)| (j, i)))
}

/// Forward reachability closure of `sources`, sources included.
pub fn reachable(g: &Digraph, sources: impl IntoIterator<Item = usize>) -> BTreeSet<usize> {
    let mut seen = vec![false; g.node_count()];
    let mut queue = VecDeque::new();
    for s in sources {
        if !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in g.successors(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen.iter()
        .enumerate()
        .filter_map(|(v, &s)| s.then_some(v))
        .collect()
}

/// State graph plus output nodes. Output `k` receives an edge from state `j`
/// iff the observation structure has a nonzero at `(k, j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositeDigraph {
    states: Digraph,
    observed_by_output: Vec<Vec<usize>>,
    dropped_rows: Vec<usize>,
}

impl CompositeDigraph {
    pub fn state_count(&self) -> usize {
        self.states.node_count()
    }

    pub fn output_count(&self) -> usize {
        self.observed_by_output.len()
    }

    /// Node count of the composite graph: states first, then outputs.
    pub fn node_count(&self) -> usize {
        self.state_count() + self.output_count()
    }

    pub fn states(&self) -> &Digraph {
        &self.states
    }

    /// States feeding output `k`.
    pub fn output_inputs(&self, k: usize) -> &[usize] {
        &self.observed_by_output[k]
    }

    /// Observation rows that were dropped for having no nonzero.
    pub fn dropped_rows(&self) -> &[usize] {
        &self.dropped_rows
    }

    /// The whole composite graph as a digraph; output `k` is node `n + k`.
    pub fn as_digraph(&self) -> Digraph {
        let n = self.state_count();
        let outputs = self
            .observed_by_output
            .iter()
            .enumerate()
            .flat_map(|(k, states)| states.iter().map(move |&s| (s, n + k)));
        Digraph::from_edges(
            self.node_count(),
            self.states.edges().chain(outputs).collect::<Vec<_>>(),
        )
        .expect("composite edges are in range")
    }

    /// States with at least one outgoing edge to an output.
    pub fn observed_states(&self) -> BTreeSet<usize> {
        self.observed_by_output.iter().flatten().copied().collect()
    }
}

/// Composite graph of the pair `(A, H)`. Observation rows with an empty
/// support are dropped with a warning.
pub fn composite(
    a: &StructuredMatrix,
    h: &StructuredMatrix,
) -> Result<CompositeDigraph, StructureError> {
    let states = digraph_from_structure(a)?;
    if h.cols() != a.cols() {
        return Err(StructureError::DimensionMismatch {
            what: "observation columns vs state count",
            left: h.cols(),
            right: a.cols(),
        });
    }
    let (compact, dropped_rows) = h.drop_empty_rows();
    if !dropped_rows.is_empty() {
        log::warn!(
            "dropping {} observation row(s) with empty support: {:?}",
            dropped_rows.len(),
            dropped_rows
        );
    }
    let observed_by_output = (0..compact.rows())
        .map(|r| compact.row_support(r).collect())
        .collect();
    Ok(CompositeDigraph {
        states,
        observed_by_output,
        dropped_rows,
    })
}
