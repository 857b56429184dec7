//! Independent oracles and generators shared by the integration tests.
//! Everything here works on bitmasks and brute force so it shares no code
//! path with the library.

#![allow(dead_code)]

use std::collections::BTreeSet;

use netobserve_core::graph::Digraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Out-neighbour bitmask per node (`bit i` of `adj[j]` means `j -> i`).
pub type Masks = Vec<u32>;

pub fn masks(g: &Digraph) -> Masks {
    (0..g.node_count())
        .map(|v| g.successors(v).iter().fold(0u32, |m, &t| m | (1 << t)))
        .collect()
}

pub fn from_masks(adj: &[u32]) -> Digraph {
    let n = adj.len();
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).filter(move |&t| adj[s] >> t & 1 == 1).map(move |t| (s, t)))
        .collect();
    Digraph::from_edges(n, edges).unwrap()
}

/// Digraph number `code` on `n` nodes: bit `s*n + t` is the edge `s -> t`.
pub fn digraph_from_code(n: usize, code: u64) -> Masks {
    (0..n)
        .map(|s| ((code >> (s * n)) & ((1u64 << n) - 1)) as u32)
        .collect()
}

/// Maximum matching size between plus nodes (sources) and minus nodes
/// (targets): the largest set of targets that can be taken by distinct
/// sources, found by sweeping all reachable used-target subsets.
pub fn brute_matching_size(adj: &[u32]) -> usize {
    let n = adj.len();
    let mut reachable = vec![false; 1 << n];
    reachable[0] = true;
    for &a in adj {
        let mut next = reachable.clone();
        for mask in 0..(1usize << n) {
            if !reachable[mask] {
                continue;
            }
            let mut free = a & !(mask as u32);
            while free != 0 {
                let t = free.trailing_zeros() as usize;
                free &= free - 1;
                next[mask | (1 << t)] = true;
            }
        }
        reachable = next;
    }
    (0..(1usize << n))
        .filter(|&m| reachable[m])
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

fn neighbourhood(adj: &[u32], set: u32) -> u32 {
    let mut out = 0;
    let mut s = set;
    while s != 0 {
        let v = s.trailing_zeros() as usize;
        s &= s - 1;
        out |= adj[v];
    }
    out
}

/// Inclusion-minimal subsets `S` of `ground` containing `w` with
/// `|N(S)| < |S|`.
pub fn minimal_hall_violators(adj: &[u32], ground: u32, w: usize) -> Vec<u32> {
    let rest = ground & !(1 << w);
    let mut violators = Vec::new();
    // enumerate subsets of `rest`
    let mut sub = rest;
    loop {
        let s = sub | (1 << w);
        if neighbourhood(adj, s).count_ones() < s.count_ones() {
            violators.push(s);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    violators
        .iter()
        .copied()
        .filter(|&s| !violators.iter().any(|&t| t != s && t & s == t))
        .collect()
}

/// Mutual-reachability classes via transitive closure.
pub fn mutual_classes(adj: &[u32]) -> BTreeSet<Vec<usize>> {
    let n = adj.len();
    let mut reach: Vec<u32> = (0..n).map(|v| adj[v] | (1 << v)).collect();
    for k in 0..n {
        for i in 0..n {
            if reach[i] >> k & 1 == 1 {
                reach[i] |= reach[k];
            }
        }
    }
    (0..n)
        .map(|i| (0..n).filter(|&j| reach[i] >> j & 1 == 1 && reach[j] >> i & 1 == 1).collect())
        .collect()
}

pub fn mask_to_set(mask: u32) -> BTreeSet<usize> {
    (0..32).filter(|&i| mask >> i & 1 == 1).collect()
}

/// Directed graph with each ordered pair present with probability `p`
/// (self-loops included).
pub fn random_digraph(n: usize, p: f64, rng: &mut impl Rng) -> Digraph {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if rng.random_bool(p) {
                edges.push((s, t));
            }
        }
    }
    Digraph::from_edges(n, edges).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
