//! Strongly connected components, their condensation, and the
//! parent/child x matched/unmatched labelling.

use serde::{Deserialize, Serialize};

use crate::graph::{reachable, Digraph};
use crate::matching::{build_bipartite, max_matching};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccDecomposition {
    components: Vec<Vec<usize>>,
    component_of: Vec<usize>,
    condensation: Digraph,
}

impl SccDecomposition {
    /// Components, each sorted, ordered by smallest member.
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component_of(&self, node: usize) -> usize {
        self.component_of[node]
    }

    pub fn condensation(&self) -> &Digraph {
        &self.condensation
    }
}

/// Tarjan's algorithm, iterative so deep graphs do not blow the stack.
pub fn tarjan_scc(g: &Digraph) -> SccDecomposition {
    let n = g.node_count();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut raw: Vec<Vec<usize>> = Vec::new();

    // call stack of (node, position in its successor list)
    let mut calls: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if index[start] != UNVISITED {
            continue;
        }
        calls.push((start, 0));
        index[start] = next_index;
        low[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(&mut (v, ref mut pos)) = calls.last_mut() {
            let succ = g.successors(v);
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("component root is on the stack");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                raw.push(comp);
            }
        }
    }

    raw.sort_by_key(|c| c[0]);
    let mut component_of = vec![0; n];
    for (k, comp) in raw.iter().enumerate() {
        for &v in comp {
            component_of[v] = k;
        }
    }
    let condensation = Digraph::from_edges(
        raw.len(),
        g.edges()
            .map(|(s, t)| (component_of[s], component_of[t]))
            .filter(|(a, b)| a != b)
            .collect::<Vec<_>>(),
    )
    .expect("component ids are in range");
    SccDecomposition {
        components: raw,
        component_of,
        condensation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SccLabel {
    /// No outgoing edge leaves the component.
    pub is_parent: bool,
    /// The component's internal edges admit a disjoint cycle cover.
    pub is_matched: bool,
}

/// Parent: out-degree zero in the condensation. Matched: perfect matching on
/// the bipartite graph of the component's internal edges.
pub fn classify_sccs(g: &Digraph, d: &SccDecomposition) -> Vec<SccLabel> {
    d.components()
        .iter()
        .enumerate()
        .map(|(k, comp)| {
            let internal = g.induced(comp);
            let is_matched = max_matching(&build_bipartite(&internal)).size() == comp.len();
            SccLabel {
                is_parent: d.condensation().successors(k).is_empty(),
                is_matched,
            }
        })
        .collect()
}

/// `true` iff component `i` reaches component `j` in the condensation
/// (reflexive).
pub fn partial_order(d: &SccDecomposition, i: usize, j: usize) -> bool {
    i == j || reachable(d.condensation(), [i]).contains(&j)
}

/// Decomposition plus labels, the form most callers want.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSccs {
    pub decomposition: SccDecomposition,
    pub labels: Vec<SccLabel>,
}

impl LabeledSccs {
    pub fn new(g: &Digraph) -> Self {
        let decomposition = tarjan_scc(g);
        let labels = classify_sccs(g, &decomposition);
        Self {
            decomposition,
            labels,
        }
    }

    pub fn matched_parents(&self) -> Vec<usize> {
        self.indices(|l| l.is_parent && l.is_matched)
    }

    pub fn unmatched_parents(&self) -> Vec<usize> {
        self.indices(|l| l.is_parent && !l.is_matched)
    }

    pub fn parents(&self) -> Vec<usize> {
        self.indices(|l| l.is_parent)
    }

    pub fn members(&self, component: usize) -> &[usize] {
        &self.decomposition.components()[component]
    }

    fn indices(&self, keep: impl Fn(&SccLabel) -> bool) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(k, l)| keep(l).then_some(k))
            .collect()
    }
}
