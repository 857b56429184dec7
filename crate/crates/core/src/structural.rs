//! Structural observability tests: accessibility plus the rank condition on
//! the stacked structure, for a single system and for the networked
//! Kronecker system.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{composite, reachable, StructureError, StructuredMatrix};
use crate::matching::structural_rank;
use crate::netdesign::{w_structure, AgentNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservabilityVerdict {
    pub accessible: bool,
    pub inaccessible_states: Vec<usize>,
    pub s_rank_ok: bool,
    pub deficiency: usize,
    pub overall: bool,
}

/// Generic observability of `(A, H)` from structure alone.
///
/// Accessibility: every state reaches an observed state along the state
/// graph. Rank condition: the stacked `[A; H]` has structural rank `n`.
pub fn check_centralized(
    a: &StructuredMatrix,
    h: &StructuredMatrix,
) -> Result<ObservabilityVerdict, StructureError> {
    let comp = composite(a, h)?;
    let n = comp.state_count();
    let upstream = reachable(&comp.states().reversed(), comp.observed_states());
    let inaccessible_states: Vec<usize> = (0..n).filter(|v| !upstream.contains(v)).collect();
    let stacked = a.vstack(h)?;
    let deficiency = n - structural_rank(&stacked);
    let accessible = inaccessible_states.is_empty();
    let s_rank_ok = deficiency == 0;
    Ok(ObservabilityVerdict {
        accessible,
        inaccessible_states,
        s_rank_ok,
        deficiency,
        overall: accessible && s_rank_ok,
    })
}

/// Structure of `W (x) A`: block `(i, j)` is a copy of `A` iff `(i, j)` is in `W`.
pub fn kron_structure(w: &StructuredMatrix, a: &StructuredMatrix) -> StructuredMatrix {
    let support: Vec<(usize, usize)> = w
        .support()
        .flat_map(|(bi, bj)| {
            a.support()
                .map(move |(r, c)| (bi * a.rows() + r, bj * a.cols() + c))
        })
        .collect();
    StructuredMatrix::new(w.rows() * a.rows(), w.cols() * a.cols(), support)
        .expect("kronecker support is in range")
}

/// Block-diagonal fused observation structure: agent `i` sees the union of
/// the rows of itself and its alpha in-neighbours. With single-state rows the
/// Gram structure `sum_j H_j^T H_j` is diagonal, so each fused state becomes one
/// row selecting `(i, s)`.
pub fn fused_observation_structure(net: &AgentNetwork, n: usize) -> StructuredMatrix {
    let mut rows = Vec::new();
    for agent in 0..net.agent_count() {
        for s in net.fused_states(agent) {
            rows.push(agent * n + s);
        }
    }
    StructuredMatrix::selection(net.agent_count() * n, &rows).expect("fused states are in range")
}

/// Distributed observability: the centralized test applied to
/// `(W (x) A, D_H)` where `W` follows the beta network and `D_H` the fused
/// per-agent observations.
pub fn check_distributed(
    net: &AgentNetwork,
    a: &StructuredMatrix,
) -> Result<ObservabilityVerdict, StructureError> {
    if !a.is_square() {
        return Err(StructureError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let big = kron_structure(&w_structure(net), a);
    let dh = fused_observation_structure(net, a.rows());
    check_centralized(&big, &dh)
}

/// Agents owning at least one state of a distributed verdict's failing set.
pub fn agents_of_states(states: &[usize], n: usize) -> BTreeSet<usize> {
    states.iter().map(|s| s / n).collect()
}
