//! Agent networks: who measures what, who forwards raw measurements (alpha
//! edges) and who shares estimates (beta edges).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ObservationPlan, PlacementKind, StructuralAnalysis};
use crate::graph::{reachable, Digraph, StructuredMatrix};
use crate::matching::{max_matching, BipartiteGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DesignError {
    #[error("observation plan is empty")]
    EmptyPlan,
    #[error("plan uses {required} agents but only {given} were requested")]
    TooFewAgents { required: usize, given: usize },
    #[error("agent {agent} out of range for {count} agents")]
    AgentOutOfRange { agent: usize, count: usize },
    #[error("agent {agent} observes state {state} outside 0..{state_count}")]
    StateOutOfRange {
        agent: usize,
        state: usize,
        state_count: usize,
    },
}

/// Edges are `(sender, receiver)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentNetwork {
    state_count: usize,
    observations: Vec<BTreeSet<usize>>,
    alpha_agents: BTreeSet<usize>,
    alpha_edges: BTreeSet<(usize, usize)>,
    beta_edges: BTreeSet<(usize, usize)>,
}

impl AgentNetwork {
    /// Agents with the given measured states and no edges.
    pub fn new(state_count: usize, observations: Vec<BTreeSet<usize>>) -> Result<Self, DesignError> {
        for (agent, obs) in observations.iter().enumerate() {
            if let Some(&state) = obs.iter().find(|&&s| s >= state_count) {
                return Err(DesignError::StateOutOfRange {
                    agent,
                    state,
                    state_count,
                });
            }
        }
        Ok(Self {
            state_count,
            observations,
            alpha_agents: BTreeSet::new(),
            alpha_edges: BTreeSet::new(),
            beta_edges: BTreeSet::new(),
        })
    }

    /// Re-run the range checks, e.g. on a deserialized network.
    pub fn validated(self) -> Result<Self, DesignError> {
        let mut net = AgentNetwork::new(self.state_count, self.observations)?;
        for a in self.alpha_agents {
            net.mark_alpha(a)?;
        }
        for (s, t) in self.alpha_edges {
            net.add_alpha_edge(s, t)?;
        }
        for (s, t) in self.beta_edges {
            net.add_beta_edge(s, t)?;
        }
        Ok(net)
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn agent_count(&self) -> usize {
        self.observations.len()
    }

    pub fn observations(&self, agent: usize) -> &BTreeSet<usize> {
        &self.observations[agent]
    }

    pub fn alpha_agents(&self) -> &BTreeSet<usize> {
        &self.alpha_agents
    }

    pub fn mark_alpha(&mut self, agent: usize) -> Result<(), DesignError> {
        self.check_agent(agent)?;
        self.alpha_agents.insert(agent);
        Ok(())
    }

    pub fn alpha_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.alpha_edges
    }

    pub fn beta_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.beta_edges
    }

    pub fn add_alpha_edge(&mut self, from: usize, to: usize) -> Result<bool, DesignError> {
        self.check_agent(from)?;
        self.check_agent(to)?;
        Ok(from != to && self.alpha_edges.insert((from, to)))
    }

    pub fn add_beta_edge(&mut self, from: usize, to: usize) -> Result<bool, DesignError> {
        self.check_agent(from)?;
        self.check_agent(to)?;
        Ok(from != to && self.beta_edges.insert((from, to)))
    }

    pub fn remove_alpha_edge(&mut self, from: usize, to: usize) -> bool {
        self.alpha_edges.remove(&(from, to))
    }

    pub fn remove_beta_edge(&mut self, from: usize, to: usize) -> bool {
        self.beta_edges.remove(&(from, to))
    }

    pub fn alpha_in(&self, agent: usize) -> Vec<usize> {
        in_neighbors(&self.alpha_edges, agent)
    }

    pub fn beta_in(&self, agent: usize) -> Vec<usize> {
        in_neighbors(&self.beta_edges, agent)
    }

    /// States an agent has raw measurements of: its own plus those of its
    /// alpha in-neighbours.
    pub fn fused_states(&self, agent: usize) -> BTreeSet<usize> {
        let mut states = self.observations[agent].clone();
        for j in self.alpha_in(agent) {
            states.extend(self.observations[j].iter().copied());
        }
        states
    }

    pub fn beta_graph(&self) -> Digraph {
        Digraph::from_edges(self.agent_count(), self.beta_edges.iter().copied())
            .expect("edges were range checked on insertion")
    }

    fn check_agent(&self, agent: usize) -> Result<(), DesignError> {
        if agent >= self.agent_count() {
            return Err(DesignError::AgentOutOfRange {
                agent,
                count: self.agent_count(),
            });
        }
        Ok(())
    }
}

fn in_neighbors(edges: &BTreeSet<(usize, usize)>, agent: usize) -> Vec<usize> {
    edges
        .iter()
        .filter_map(|&(s, t)| (t == agent).then_some(s))
        .collect()
}

/// Agents measure what the plan assigns them; every agent holding an alpha
/// placement broadcasts to all others; beta edges form the ring
/// `0 -> 1 -> ... -> N-1 -> 0`. Agents beyond the plan measure nothing.
pub fn design_canonical(plan: &ObservationPlan, agent_count: usize) -> Result<AgentNetwork, DesignError> {
    if plan.is_empty() {
        return Err(DesignError::EmptyPlan);
    }
    let required = plan.agent_count();
    if agent_count < required {
        return Err(DesignError::TooFewAgents {
            required,
            given: agent_count,
        });
    }
    let mut observations = vec![BTreeSet::new(); agent_count];
    for p in &plan.placements {
        observations[p.agent].insert(p.state);
    }
    let mut net = AgentNetwork::new(plan.state_count, observations)?;
    for p in &plan.placements {
        if p.kind == PlacementKind::Alpha {
            net.mark_alpha(p.agent)?;
        }
    }
    let broadcasters: Vec<usize> = net.alpha_agents.iter().copied().collect();
    for a in broadcasters {
        for b in 0..agent_count {
            net.add_alpha_edge(a, b)?;
        }
    }
    if agent_count >= 2 {
        for i in 0..agent_count {
            net.add_beta_edge(i, (i + 1) % agent_count)?;
        }
    }
    Ok(net)
}

/// Zero pattern of the consensus matrix: the diagonal plus `(i, j)` for every
/// beta edge `j -> i`.
pub fn w_structure(net: &AgentNetwork) -> StructuredMatrix {
    let n = net.agent_count();
    let support = (0..n)
        .map(|i| (i, i))
        .chain(net.beta_edges.iter().map(|&(from, to)| (to, from)));
    StructuredMatrix::new(n, n, support).expect("agents are in range")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Violation {
    /// The agent's fused measurements leave these contractions unresolved.
    Contraction { agent: usize, contractions: Vec<usize> },
    /// Neither the agent nor any beta-reachable agent measures this parent
    /// component.
    ParentAccess { agent: usize, component: usize },
}

impl Violation {
    pub fn agent(&self) -> usize {
        match self {
            Violation::Contraction { agent, .. } | Violation::ParentAccess { agent, .. } => *agent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub violations: Vec<Violation>,
}

impl TopologyReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violating_agents(&self) -> BTreeSet<usize> {
        self.violations.iter().map(Violation::agent).collect()
    }
}

/// Per-agent design conditions.
///
/// Contraction condition: `[A; H_i]` must have full structural rank, where
/// `H_i` selects the agent's fused states. When it fails, the contractions
/// without a distinct fused representative are reported (all of them if a
/// representative system exists but the rank is still short).
///
/// Parent condition: for every parent component, the agent measures a state
/// of it (own or fused), or some agent it reaches along beta edges does.
pub fn verify_topology(net: &AgentNetwork, analysis: &StructuralAnalysis) -> TopologyReport {
    let a = analysis.structure();
    let n = analysis.state_count();
    let family = &analysis.contractions;
    let sccs = &analysis.sccs;
    let beta = net.beta_graph();
    let fused: Vec<BTreeSet<usize>> = (0..net.agent_count()).map(|i| net.fused_states(i)).collect();
    let mut violations = Vec::new();
    for agent in 0..net.agent_count() {
        let states: Vec<usize> = fused[agent].iter().copied().collect();
        let h = StructuredMatrix::selection(n, &states).expect("fused states are in range");
        let stacked = a.vstack(&h).expect("same column count");
        if crate::matching::structural_rank(&stacked) < n {
            let mut reps = BipartiteGraph::new(family.len(), 0);
            for s in &states {
                let touching: Vec<usize> = (0..family.len())
                    .filter(|&l| family.sets[l].members.contains(s))
                    .collect();
                reps.push_minus(&touching);
            }
            let m = max_matching(&reps);
            let mut missing = m.unmatched_plus();
            if missing.is_empty() {
                missing = (0..family.len()).collect();
            }
            violations.push(Violation::Contraction {
                agent,
                contractions: missing,
            });
        }
        let downstream = reachable(&beta, [agent]);
        for k in sccs.parents() {
            let members = sccs.members(k);
            let seen = downstream
                .iter()
                .any(|&j| members.iter().any(|v| fused[j].contains(v)));
            if !seen {
                violations.push(Violation::ParentAccess {
                    agent,
                    component: k,
                });
            }
        }
    }
    TopologyReport { violations }
}

/// Graphviz rendering: alpha edges solid, beta edges dashed; nodes list the
/// measured state labels.
pub fn to_dot(net: &AgentNetwork, labels: &[String]) -> String {
    let mut out = String::from("digraph agents {\n");
    for agent in 0..net.agent_count() {
        let measured: Vec<&str> = net.observations[agent]
            .iter()
            .map(|&s| labels.get(s).map(String::as_str).unwrap_or("?"))
            .collect();
        let shape = if net.alpha_agents.contains(&agent) {
            "box"
        } else {
            "ellipse"
        };
        let _ = writeln!(
            out,
            "  a{agent} [label=\"a{agent}\\n{}\", shape={shape}];",
            measured.join(",")
        );
    }
    for (s, t) in &net.alpha_edges {
        let _ = writeln!(out, "  a{s} -> a{t} [style=solid];");
    }
    for (s, t) in &net.beta_edges {
        let _ = writeln!(out, "  a{s} -> a{t} [style=dashed];");
    }
    out.push_str("}\n");
    out
}
