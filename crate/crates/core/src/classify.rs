//! Observation counts and placements: one observation per contraction (type
//! alpha) and one per matched parent component not already covered (type
//! beta).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Digraph, StructuredMatrix};
use crate::matching::{
    augment_matching, build_bipartite, contractions, max_matching, BipartiteGraph,
    ContractionFamily, GrowingMatching, Matching, MatchingError,
};
use crate::scc::LabeledSccs;
use crate::structural::check_centralized;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("graph has no states")]
    EmptyGraph,
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error("placement left the system unobservable: {0}")]
    Unobservable(String),
}

/// Everything the placement logic needs, computed once per graph.
#[derive(Debug, Clone)]
pub struct StructuralAnalysis {
    pub graph: Digraph,
    pub bipartite: BipartiteGraph,
    pub matching: Matching,
    pub contractions: ContractionFamily,
    pub sccs: LabeledSccs,
}

impl StructuralAnalysis {
    pub fn new(graph: Digraph) -> Self {
        let bipartite = build_bipartite(&graph);
        let matching = max_matching(&bipartite);
        let contractions =
            contractions(&bipartite, &matching).expect("Hopcroft-Karp result is maximum");
        let sccs = LabeledSccs::new(&graph);
        Self {
            graph,
            bipartite,
            matching,
            contractions,
            sccs,
        }
    }

    /// Same analysis under a caller-chosen maximum matching.
    pub fn with_matching(
        graph: Digraph,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, MatchingError> {
        let bipartite = build_bipartite(&graph);
        let matching = Matching::from_pairs(&bipartite, pairs)?;
        let contractions = contractions(&bipartite, &matching)?;
        let sccs = LabeledSccs::new(&graph);
        Ok(Self {
            graph,
            bipartite,
            matching,
            contractions,
            sccs,
        })
    }

    pub fn state_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn s_rank(&self) -> usize {
        self.matching.size()
    }

    pub fn structure(&self) -> StructuredMatrix {
        self.graph.to_structure()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecessaryCounts {
    pub n_alpha: usize,
    pub n_beta_raw: usize,
    pub n_beta_min: usize,
    pub min_total: usize,
}

/// Bipartite graph contractions (plus) x components (minus), restricted to
/// the listed components; an edge means the two share a state.
fn overlap_graph(
    family: &ContractionFamily,
    sccs: &LabeledSccs,
    components: &[usize],
) -> BipartiteGraph {
    let mut b = BipartiteGraph::new(family.len(), 0);
    for &k in components {
        let touching: Vec<usize> = family
            .sets
            .iter()
            .enumerate()
            .filter(|(_, c)| sccs.members(k).iter().any(|v| c.members.contains(v)))
            .map(|(i, _)| i)
            .collect();
        b.push_minus(&touching);
    }
    b
}

/// `n_alpha = |contractions|`; `n_beta_raw` = matched parent components;
/// `n_beta_min` discounts matched parents that can each take a distinct
/// contraction's observation.
pub fn necessary_counts(family: &ContractionFamily, sccs: &LabeledSccs) -> NecessaryCounts {
    let matched_parents = sccs.matched_parents();
    let overlap = max_matching(&overlap_graph(family, sccs, &matched_parents)).size();
    let n_alpha = family.len();
    let n_beta_raw = matched_parents.len();
    let n_beta_min = n_beta_raw - overlap;
    NecessaryCounts {
        n_alpha,
        n_beta_raw,
        n_beta_min,
        min_total: n_alpha + n_beta_min,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementKind {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub state: usize,
    pub agent: usize,
    pub kind: PlacementKind,
    /// Contraction served, for alpha placements.
    pub contraction: Option<usize>,
    /// Parent component served or hit, if any.
    pub component: Option<usize>,
    /// Added only to reach an otherwise inaccessible unmatched parent.
    #[serde(default)]
    pub repair: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationPlan {
    pub state_count: usize,
    pub placements: Vec<Placement>,
}

impl ObservationPlan {
    pub fn n_alpha(&self) -> usize {
        self.count(|p| p.kind == PlacementKind::Alpha)
    }

    /// Beta placements, repairs excluded.
    pub fn n_beta(&self) -> usize {
        self.count(|p| p.kind == PlacementKind::Beta && !p.repair)
    }

    pub fn repairs(&self) -> usize {
        self.count(|p| p.repair)
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn observed_states(&self) -> BTreeSet<usize> {
        self.placements.iter().map(|p| p.state).collect()
    }

    /// One selection row per placement, in placement order.
    pub fn observation_structure(&self) -> StructuredMatrix {
        let states: Vec<usize> = self.placements.iter().map(|p| p.state).collect();
        StructuredMatrix::selection(self.state_count, &states).expect("placed states are in range")
    }

    pub fn agent_count(&self) -> usize {
        self.placements.iter().map(|p| p.agent + 1).max().unwrap_or(0)
    }

    /// The plan with placement `index` dropped; agents keep their ids.
    pub fn without(&self, index: usize) -> Self {
        let mut plan = self.clone();
        plan.placements.remove(index);
        plan
    }

    /// Every placement held by agent 0.
    pub fn single_agent(&self) -> Self {
        let mut plan = self.clone();
        plan.placements.iter_mut().for_each(|p| p.agent = 0);
        plan
    }

    fn count(&self, keep: impl Fn(&Placement) -> bool) -> usize {
        self.placements.iter().filter(|p| keep(p)).count()
    }
}

/// Assign each contraction a parent component it can observe into, first
/// saturating unmatched parents, then as many matched parents as possible.
/// Returns `assigned[contraction] = Some(component)`.
fn assign_parents(family: &ContractionFamily, sccs: &LabeledSccs) -> Vec<Option<usize>> {
    let unmatched = sccs.unmatched_parents();
    let matched = sccs.matched_parents();
    let all: Vec<usize> = unmatched.iter().chain(&matched).copied().collect();
    let full = overlap_graph(family, sccs, &all);
    let mut first = BipartiteGraph::new(family.len(), 0);
    for q in 0..all.len() {
        let touching: Vec<usize> = if q < unmatched.len() {
            (0..family.len()).filter(|&i| full.has_edge(i, q)).collect()
        } else {
            Vec::new()
        };
        first.push_minus(&touching);
    }
    let seeded = max_matching(&first);
    let seeded = Matching::from_pairs(&full, seeded.pairs()).expect("subgraph pairs are edges");
    let m = augment_matching(&full, &seeded);
    (0..family.len())
        .map(|i| m.partner_of_plus(i).map(|q| all[q]))
        .collect()
}

/// Place one observation per contraction and one per uncovered parent.
///
/// Alpha observations are chosen one contraction at a time on a growing
/// matching of `[A; H]`, so every new row raises the structural rank; this
/// keeps them distinct. Each is steered into the parent component assigned to
/// its contraction when one is reachable, otherwise into a state outside all
/// parents, otherwise the lowest id. Matched parents left uncovered get a beta
/// observation on their lowest state; unmatched parents left uncovered get a
/// repair observation. The result is checked for generic observability.
pub fn place_agents(analysis: &StructuralAnalysis) -> Result<ObservationPlan, ClassifyError> {
    let n = analysis.state_count();
    if n == 0 {
        return Err(ClassifyError::EmptyGraph);
    }
    let family = &analysis.contractions;
    let sccs = &analysis.sccs;
    let comp = |v: usize| sccs.decomposition.component_of(v);
    let is_parent = |v: usize| sccs.labels[comp(v)].is_parent;
    let assigned = assign_parents(family, sccs);

    let mut gm = GrowingMatching::with_matching(analysis.bipartite.clone(), analysis.matching.clone());
    let mut placements = Vec::new();
    for (i, set) in family.sets.iter().enumerate() {
        let reach = gm.reach(set.witness);
        let candidates: Vec<usize> = set.members.intersection(&reach).copied().collect();
        let target = assigned[i]
            .and_then(|k| candidates.iter().copied().find(|&v| comp(v) == k))
            .or_else(|| candidates.iter().copied().find(|&v| !is_parent(v)))
            .unwrap_or(candidates[0]);
        let grew = gm.observe_from(set.witness, target);
        debug_assert!(grew, "target was taken from the alternating reach");
        placements.push(Placement {
            state: target,
            agent: placements.len(),
            kind: PlacementKind::Alpha,
            contraction: Some(i),
            component: is_parent(target).then(|| comp(target)),
            repair: false,
        });
    }

    let covered: BTreeSet<usize> = placements.iter().map(|p| comp(p.state)).collect();
    for k in sccs.parents() {
        if covered.contains(&k) {
            continue;
        }
        let repair = !sccs.labels[k].is_matched;
        if repair {
            log::info!("repair observation for unmatched parent component {k}");
        }
        placements.push(Placement {
            state: sccs.members(k)[0],
            agent: placements.len(),
            kind: PlacementKind::Beta,
            contraction: None,
            component: Some(k),
            repair,
        });
    }

    let plan = ObservationPlan {
        state_count: n,
        placements,
    };
    let verdict = check_centralized(&analysis.structure(), &plan.observation_structure())
        .expect("plan rows are sized to the graph");
    if !verdict.overall {
        return Err(ClassifyError::Unobservable(format!(
            "inaccessible {:?}, rank deficiency {}",
            verdict.inaccessible_states, verdict.deficiency
        )));
    }
    Ok(plan)
}

/// States grouped by interchangeability: any member of an alpha class can
/// serve that contraction, any member of a beta class that parent component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub alpha_classes: Vec<BTreeSet<usize>>,
    pub beta_classes: Vec<Vec<usize>>,
}

pub fn equivalence_classes(analysis: &StructuralAnalysis) -> EquivalenceReport {
    EquivalenceReport {
        alpha_classes: analysis
            .contractions
            .sets
            .iter()
            .map(|c| c.members.clone())
            .collect(),
        beta_classes: analysis
            .sccs
            .matched_parents()
            .into_iter()
            .map(|k| analysis.sccs.members(k).to_vec())
            .collect(),
    }
}

/// One summary row of structural counts for a network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsRow {
    pub name: String,
    pub nodes: usize,
    pub arcs: usize,
    pub s_rank: usize,
    pub components: usize,
    pub parents: usize,
    pub matched: usize,
    pub matched_parents: usize,
    pub unmatched_parents: usize,
    pub n_alpha: usize,
    pub n_beta_raw: usize,
    pub n_beta_min: usize,
    pub min_total: usize,
}

impl CountsRow {
    pub const CSV_HEADER: &'static str = "name,nodes,arcs,s_rank,components,parents,matched,matched_parents,unmatched_parents,n_alpha,n_beta_raw,n_beta_min,min_total";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.name,
            self.nodes,
            self.arcs,
            self.s_rank,
            self.components,
            self.parents,
            self.matched,
            self.matched_parents,
            self.unmatched_parents,
            self.n_alpha,
            self.n_beta_raw,
            self.n_beta_min,
            self.min_total
        )
    }
}

pub fn structural_counts_report(name: &str, analysis: &StructuralAnalysis) -> CountsRow {
    let counts = necessary_counts(&analysis.contractions, &analysis.sccs);
    let sccs = &analysis.sccs;
    CountsRow {
        name: name.to_string(),
        nodes: analysis.state_count(),
        arcs: analysis.graph.edge_count(),
        s_rank: analysis.s_rank(),
        components: sccs.decomposition.len(),
        parents: sccs.parents().len(),
        matched: sccs.labels.iter().filter(|l| l.is_matched).count(),
        matched_parents: sccs.matched_parents().len(),
        unmatched_parents: sccs.unmatched_parents().len(),
        n_alpha: counts.n_alpha,
        n_beta_raw: counts.n_beta_raw,
        n_beta_min: counts.n_beta_min,
        min_total: counts.min_total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{six_state, three_into_two, SIX_STATE_MATCHING};

    #[test]
    fn six_state_counts() {
        let a = StructuralAnalysis::new(six_state());
        assert_eq!(a.s_rank(), 4);
        let c = necessary_counts(&a.contractions, &a.sccs);
        assert_eq!(
            c,
            NecessaryCounts {
                n_alpha: 2,
                n_beta_raw: 2,
                n_beta_min: 1,
                min_total: 3
            }
        );
    }

    #[test]
    fn six_state_reference_matching_contractions() {
        let a = StructuralAnalysis::with_matching(six_state(), SIX_STATE_MATCHING).unwrap();
        assert_eq!(a.matching.unmatched_plus(), vec![2, 3]);
        assert_eq!(
            a.contractions.member_sets(),
            BTreeSet::from([BTreeSet::from([0, 2]), BTreeSet::from([0, 3, 4, 5])])
        );
    }

    #[test]
    fn six_state_plan() {
        let a = StructuralAnalysis::new(six_state());
        let plan = place_agents(&a).unwrap();
        assert_eq!(plan.n_alpha(), 2);
        assert_eq!(plan.n_beta(), 1);
        assert_eq!(plan.repairs(), 0);
        assert_eq!(plan.observed_states(), BTreeSet::from([0, 4, 5]));
    }

    #[test]
    fn self_loops_only_need_beta() {
        let g = Digraph::from_edges(3, [(0, 0), (1, 1), (2, 2)]).unwrap();
        let a = StructuralAnalysis::new(g);
        let c = necessary_counts(&a.contractions, &a.sccs);
        assert_eq!((c.n_alpha, c.n_beta_min), (0, 3));
        let plan = place_agents(&a).unwrap();
        assert_eq!(plan.n_beta(), 3);
    }

    #[test]
    fn three_into_two_needs_one_alpha() {
        let a = StructuralAnalysis::new(three_into_two());
        let c = necessary_counts(&a.contractions, &a.sccs);
        assert_eq!(c.n_alpha, 1);
        let plan = place_agents(&a).unwrap();
        assert_eq!(plan.n_alpha(), 1);
    }

    #[test]
    fn path_without_loops_is_one_alpha() {
        // 0 -> 1 -> 2: the sink 2 is an unmatched parent and the only free column
        let g = Digraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let a = StructuralAnalysis::new(g);
        let plan = place_agents(&a).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan.placements[0].kind, PlacementKind::Alpha);
    }

    #[test]
    fn empty_graph_rejected() {
        let a = StructuralAnalysis::new(Digraph::new(0));
        assert!(matches!(place_agents(&a), Err(ClassifyError::EmptyGraph)));
    }

    #[test]
    fn counts_row_csv_has_header_arity() {
        let a = StructuralAnalysis::new(six_state());
        let row = structural_counts_report("six", &a);
        assert_eq!(
            row.csv_row().split(',').count(),
            CountsRow::CSV_HEADER.split(',').count()
        );
    }
}
