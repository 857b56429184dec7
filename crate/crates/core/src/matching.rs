//! Bipartite view of a structure, maximum matchings, structural rank and
//! contraction sets.
//!
//! Plus nodes are columns (source copies of states), minus nodes are rows
//! (sink copies). The digraph edge `j -> i` becomes the bipartite edge
//! `(j+, i-)`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Digraph, StructureError, StructuredMatrix};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("pair ({plus}+, {minus}-) is not an edge of the bipartite graph")]
    NotAnEdge { plus: usize, minus: usize },
    #[error("node {0} is incident to two matching pairs")]
    NotDisjoint(String),
    #[error("matching of size {size} is not maximum: augmenting path from {witness}+")]
    NotMaximum { size: usize, witness: usize },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    minus_count: usize,
    adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn new(plus_count: usize, minus_count: usize) -> Self {
        Self {
            minus_count,
            adj: vec![Vec::new(); plus_count],
        }
    }

    /// Columns become plus nodes, rows minus nodes.
    pub fn from_structure(s: &StructuredMatrix) -> Self {
        let mut b = Self::new(s.cols(), s.rows());
        for (row, col) in s.support() {
            b.adj[col].push(row);
        }
        for adj in &mut b.adj {
            adj.sort_unstable();
        }
        b
    }

    pub fn plus_count(&self) -> usize {
        self.adj.len()
    }

    pub fn minus_count(&self) -> usize {
        self.minus_count
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn neighbors(&self, plus: usize) -> &[usize] {
        &self.adj[plus]
    }

    pub fn has_edge(&self, plus: usize, minus: usize) -> bool {
        self.adj[plus].binary_search(&minus).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(p, adj)| adj.iter().map(move |&m| (p, m)))
    }

    pub fn minus_degree(&self, minus: usize) -> usize {
        self.adj.iter().filter(|a| a.binary_search(&minus).is_ok()).count()
    }

    /// Append a minus node adjacent to the given plus nodes; returns its id.
    pub fn push_minus(&mut self, plus_nodes: &[usize]) -> usize {
        let id = self.minus_count;
        self.minus_count += 1;
        for &p in plus_nodes {
            // ids only grow, so pushing keeps the lists sorted
            if self.adj[p].last() != Some(&id) {
                self.adj[p].push(id);
            }
        }
        id
    }
}

/// `(j+, i-)` for every digraph edge `j -> i`.
pub fn build_bipartite(g: &Digraph) -> BipartiteGraph {
    let mut b = BipartiteGraph::new(g.node_count(), g.node_count());
    for (s, t) in g.edges() {
        b.adj[s].push(t);
    }
    b
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    plus_to_minus: Vec<Option<usize>>,
    minus_to_plus: Vec<Option<usize>>,
    size: usize,
}

impl Matching {
    pub fn empty(b: &BipartiteGraph) -> Self {
        Self {
            plus_to_minus: vec![None; b.plus_count()],
            minus_to_plus: vec![None; b.minus_count()],
            size: 0,
        }
    }

    /// Build from explicit pairs, checking edge membership and disjointness.
    pub fn from_pairs(
        b: &BipartiteGraph,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, MatchingError> {
        let mut m = Self::empty(b);
        for (p, q) in pairs {
            if p >= b.plus_count() || q >= b.minus_count() || !b.has_edge(p, q) {
                return Err(MatchingError::NotAnEdge { plus: p, minus: q });
            }
            if m.plus_to_minus[p].is_some() {
                return Err(MatchingError::NotDisjoint(format!("{p}+")));
            }
            if m.minus_to_plus[q].is_some() {
                return Err(MatchingError::NotDisjoint(format!("{q}-")));
            }
            m.plus_to_minus[p] = Some(q);
            m.minus_to_plus[q] = Some(p);
            m.size += 1;
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn partner_of_plus(&self, plus: usize) -> Option<usize> {
        self.plus_to_minus[plus]
    }

    pub fn partner_of_minus(&self, minus: usize) -> Option<usize> {
        self.minus_to_plus[minus]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.plus_to_minus
            .iter()
            .enumerate()
            .filter_map(|(p, q)| q.map(|q| (p, q)))
    }

    /// Unmatched plus nodes (the set usually written delta-M).
    pub fn unmatched_plus(&self) -> Vec<usize> {
        (0..self.plus_to_minus.len())
            .filter(|&p| self.plus_to_minus[p].is_none())
            .collect()
    }

    /// Grow the minus side after [`BipartiteGraph::push_minus`].
    fn sync_minus(&mut self, b: &BipartiteGraph) {
        self.minus_to_plus.resize(b.minus_count(), None);
    }
}

/// Hopcroft-Karp maximum matching. Free plus nodes and adjacency lists are
/// scanned in increasing id order, so the result is deterministic.
pub fn max_matching(b: &BipartiteGraph) -> Matching {
    let mut m = Matching::empty(b);
    let n_plus = b.plus_count();
    let mut dist = vec![usize::MAX; n_plus];
    let mut cursor = vec![0usize; n_plus];
    loop {
        // layer the plus side by alternating distance from free plus nodes
        let mut queue = VecDeque::new();
        for (p, d) in dist.iter_mut().enumerate() {
            if m.plus_to_minus[p].is_none() {
                *d = 0;
                queue.push_back(p);
            } else {
                *d = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(p) = queue.pop_front() {
            for &q in b.neighbors(p) {
                match m.minus_to_plus[q] {
                    None => found = true,
                    Some(next) if dist[next] == usize::MAX => {
                        dist[next] = dist[p] + 1;
                        queue.push_back(next);
                    }
                    Some(_) => {}
                }
            }
        }
        if !found {
            break;
        }
        cursor.iter_mut().for_each(|c| *c = 0);
        for root in 0..n_plus {
            if m.plus_to_minus[root].is_none() && augment_layered(b, &mut m, &mut dist, &mut cursor, root)
            {
                m.size += 1;
            }
        }
    }
    m
}

/// Iterative layered DFS for one augmenting path from `root`.
fn augment_layered(
    b: &BipartiteGraph,
    m: &mut Matching,
    dist: &mut [usize],
    cursor: &mut [usize],
    root: usize,
) -> bool {
    // stack of (plus node, minus node used to enter it)
    let mut stack: Vec<(usize, Option<usize>)> = vec![(root, None)];
    while let Some(&(p, _)) = stack.last() {
        let adj = b.neighbors(p);
        let mut advanced = false;
        while cursor[p] < adj.len() {
            let q = adj[cursor[p]];
            cursor[p] += 1;
            match m.minus_to_plus[q] {
                None => {
                    // flip matched/unmatched along the stack
                    let mut free_minus = q;
                    while let Some((node, entered)) = stack.pop() {
                        m.plus_to_minus[node] = Some(free_minus);
                        m.minus_to_plus[free_minus] = Some(node);
                        if let Some(e) = entered {
                            free_minus = e;
                        }
                    }
                    return true;
                }
                Some(next) if dist[next] == dist[p].wrapping_add(1) => {
                    stack.push((next, Some(q)));
                    advanced = true;
                    break;
                }
                Some(_) => {}
            }
        }
        if !advanced {
            dist[p] = usize::MAX;
            stack.pop();
        }
    }
    false
}

/// Structural rank of any structure (maximum matching between columns and rows).
pub fn structural_rank(s: &StructuredMatrix) -> usize {
    max_matching(&BipartiteGraph::from_structure(s)).size()
}

/// Structural rank of a square system structure.
pub fn s_rank(a: &StructuredMatrix) -> Result<usize, StructureError> {
    if !a.is_square() {
        return Err(StructureError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Ok(structural_rank(a))
}

/// Auxiliary graph of a matching: matched pairs reversed (`minus -> plus`),
/// every other edge kept (`plus -> minus`). Plus node `p` is vertex `p`, minus
/// node `q` is vertex `plus_count + q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxiliaryGraph {
    plus_count: usize,
    graph: Digraph,
}

impl AuxiliaryGraph {
    pub fn new(b: &BipartiteGraph, m: &Matching) -> Self {
        let np = b.plus_count();
        let edges = b.edges().map(|(p, q)| {
            if m.partner_of_plus(p) == Some(q) {
                (np + q, p)
            } else {
                (p, np + q)
            }
        });
        let graph = Digraph::from_edges(np + b.minus_count(), edges.collect::<Vec<_>>())
            .expect("auxiliary edges are in range");
        Self {
            plus_count: np,
            graph,
        }
    }

    pub fn graph(&self) -> &Digraph {
        &self.graph
    }

    pub fn plus_vertex(&self, plus: usize) -> usize {
        plus
    }

    pub fn minus_vertex(&self, minus: usize) -> usize {
        self.plus_count + minus
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionSet {
    pub witness: usize,
    pub members: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionFamily {
    pub sets: Vec<ContractionSet>,
    pub union_members: BTreeSet<usize>,
}

impl ContractionFamily {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Member sets without witnesses, for comparisons across matchings.
    pub fn member_sets(&self) -> BTreeSet<BTreeSet<usize>> {
        self.sets.iter().map(|s| s.members.clone()).collect()
    }
}

struct AlternatingTree {
    /// For each reached plus node, the minus node it was entered through
    /// (`Some(None)` for the root).
    entered: Vec<Option<Option<usize>>>,
    /// For each reached minus node, the plus node that reached it.
    minus_parent: Vec<Option<usize>>,
    free_minus: Option<usize>,
}

impl AlternatingTree {
    fn grow(b: &BipartiteGraph, m: &Matching, root: usize) -> Self {
        let mut entered: Vec<Option<Option<usize>>> = vec![None; b.plus_count()];
        let mut minus_parent: Vec<Option<usize>> = vec![None; b.minus_count()];
        let mut free_minus = None;
        entered[root] = Some(None);
        let mut queue = VecDeque::from([root]);
        while let Some(p) = queue.pop_front() {
            for &q in b.neighbors(p) {
                if m.partner_of_plus(p) == Some(q) || minus_parent[q].is_some() {
                    continue;
                }
                minus_parent[q] = Some(p);
                match m.partner_of_minus(q) {
                    Some(next) => {
                        if entered[next].is_none() {
                            entered[next] = Some(Some(q));
                            queue.push_back(next);
                        }
                    }
                    None => {
                        if free_minus.is_none() {
                            free_minus = Some(q);
                        }
                    }
                }
            }
        }
        Self {
            entered,
            minus_parent,
            free_minus,
        }
    }

    fn plus_nodes(&self) -> BTreeSet<usize> {
        self.entered
            .iter()
            .enumerate()
            .filter_map(|(p, e)| e.is_some().then_some(p))
            .collect()
    }
}

/// Plus nodes reachable from `root` by alternating paths, root included.
pub fn alternating_reach(b: &BipartiteGraph, m: &Matching, root: usize) -> BTreeSet<usize> {
    AlternatingTree::grow(b, m, root).plus_nodes()
}

/// One contraction per unmatched plus node: the plus nodes reachable from it
/// along alternating paths. `m` must be a maximum matching of `b`.
pub fn contractions(b: &BipartiteGraph, m: &Matching) -> Result<ContractionFamily, MatchingError> {
    let m = Matching::from_pairs(b, m.pairs())?;
    let mut sets = Vec::new();
    let mut union_members = BTreeSet::new();
    for witness in m.unmatched_plus() {
        let tree = AlternatingTree::grow(b, &m, witness);
        if tree.free_minus.is_some() {
            return Err(MatchingError::NotMaximum {
                size: m.size(),
                witness,
            });
        }
        let members = tree.plus_nodes();
        union_members.extend(members.iter().copied());
        sets.push(ContractionSet { witness, members });
    }
    Ok(ContractionFamily {
        sets,
        union_members,
    })
}

/// Extend `m` to a maximum matching by single augmenting paths from free
/// plus nodes in increasing order. Minus nodes matched in `m` stay matched.
pub fn augment_matching(b: &BipartiteGraph, m: &Matching) -> Matching {
    let mut m = m.clone();
    m.sync_minus(b);
    for root in 0..b.plus_count() {
        if m.plus_to_minus[root].is_some() {
            continue;
        }
        let tree = AlternatingTree::grow(b, &m, root);
        let Some(mut q) = tree.free_minus else {
            continue;
        };
        loop {
            let p = tree.minus_parent[q].expect("reached minus has a parent");
            let old = m.plus_to_minus[p];
            m.plus_to_minus[p] = Some(q);
            m.minus_to_plus[q] = Some(p);
            match old {
                Some(prev) if p != root => q = prev,
                _ => break,
            }
        }
        m.size += 1;
    }
    m
}

/// A bipartite graph with a maximum matching that can absorb new minus nodes
/// (observation rows) one at a time.
#[derive(Debug, Clone)]
pub struct GrowingMatching {
    graph: BipartiteGraph,
    matching: Matching,
}

impl GrowingMatching {
    pub fn new(graph: BipartiteGraph) -> Self {
        let matching = max_matching(&graph);
        Self { graph, matching }
    }

    pub fn with_matching(graph: BipartiteGraph, matching: Matching) -> Self {
        Self { graph, matching }
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn size(&self) -> usize {
        self.matching.size()
    }

    pub fn reach(&self, root: usize) -> BTreeSet<usize> {
        alternating_reach(&self.graph, &self.matching, root)
    }

    /// Add a row observing `target` alone and augment along an alternating
    /// path from the free plus node `root`. `target` must be in
    /// `self.reach(root)`. Returns false (and changes nothing) otherwise.
    pub fn observe_from(&mut self, root: usize, target: usize) -> bool {
        if self.matching.partner_of_plus(root).is_some() {
            return false;
        }
        let tree = AlternatingTree::grow(&self.graph, &self.matching, root);
        if tree.entered[target].is_none() {
            return false;
        }
        let row = self.graph.push_minus(&[target]);
        self.matching.sync_minus(&self.graph);
        // shift every plus node on the root..target path one pair forward
        let mut node = target;
        let mut take = row;
        while let Some(via) = tree.entered[node] {
            self.matching.plus_to_minus[node] = Some(take);
            self.matching.minus_to_plus[take] = Some(node);
            match via {
                None => break,
                Some(q) => {
                    take = q;
                    node = tree.minus_parent[q].expect("entered minus has a parent");
                }
            }
        }
        self.matching.size += 1;
        true
    }
}
