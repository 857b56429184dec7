mod common;

use std::collections::BTreeSet;

use netobserve_core::classify::{place_agents, StructuralAnalysis};
use netobserve_core::matching::{build_bipartite, contractions, max_matching};
use netobserve_core::scc::{tarjan_scc, LabeledSccs};
use netobserve_core::structural::check_centralized;
use proptest::prelude::*;

fn adjacency(max_n: usize) -> impl Strategy<Value = Vec<u32>> {
    (1..=max_n).prop_flat_map(|n| proptest::collection::vec(0u32..(1 << n), n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matching_size_is_maximum(adj in adjacency(9)) {
        let g = common::from_masks(&adj);
        let m = max_matching(&build_bipartite(&g));
        prop_assert_eq!(m.size(), common::brute_matching_size(&adj));
    }

    #[test]
    fn contractions_are_minimal_hall_violators(adj in adjacency(8)) {
        let g = common::from_masks(&adj);
        let b = build_bipartite(&g);
        let m = max_matching(&b);
        let family = contractions(&b, &m).unwrap();
        let basis: u32 = m.pairs().fold(0, |acc, (p, _)| acc | (1 << p));
        prop_assert_eq!(family.len(), adj.len() - m.size());
        for set in &family.sets {
            let v = common::minimal_hall_violators(&adj, basis | (1 << set.witness), set.witness);
            prop_assert_eq!(v.len(), 1);
            prop_assert_eq!(&common::mask_to_set(v[0]), &set.members);
        }
    }

    #[test]
    fn contraction_union_is_matching_invariant(adj in adjacency(8), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let g = common::from_masks(&adj);
        let n = adj.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut common::rng(perm_seed));
        let relabelled: Vec<u32> = {
            let mut r = vec![0u32; n];
            for s in 0..n {
                for t in 0..n {
                    if adj[s] >> t & 1 == 1 {
                        r[perm[s]] |= 1 << perm[t];
                    }
                }
            }
            r
        };
        let b = build_bipartite(&g);
        let f1 = contractions(&b, &max_matching(&b)).unwrap();
        let b2 = build_bipartite(&common::from_masks(&relabelled));
        let f2 = contractions(&b2, &max_matching(&b2)).unwrap();
        let back: BTreeSet<usize> = f2
            .union_members
            .iter()
            .map(|&v| perm.iter().position(|&p| p == v).unwrap())
            .collect();
        prop_assert_eq!(f1.len(), f2.len());
        prop_assert_eq!(f1.union_members, back);
    }

    #[test]
    fn scc_matches_mutual_reachability(adj in adjacency(10)) {
        let g = common::from_masks(&adj);
        let got: BTreeSet<Vec<usize>> = tarjan_scc(&g).components().iter().cloned().collect();
        prop_assert_eq!(got, common::mutual_classes(&adj));
    }

    #[test]
    fn parents_have_no_outgoing_edge(adj in adjacency(10)) {
        let g = common::from_masks(&adj);
        let sccs = LabeledSccs::new(&g);
        let d = &sccs.decomposition;
        for k in sccs.parents() {
            for s in 0..adj.len() {
                if d.component_of(s) == k {
                    for &t in g.successors(s) {
                        prop_assert_eq!(d.component_of(t), k);
                    }
                }
            }
        }
    }

    #[test]
    fn placement_makes_system_observable(adj in adjacency(10)) {
        let analysis = StructuralAnalysis::new(common::from_masks(&adj));
        let plan = place_agents(&analysis).unwrap();
        let v = check_centralized(&analysis.structure(), &plan.observation_structure()).unwrap();
        prop_assert!(v.overall);
        prop_assert_eq!(plan.n_alpha(), adj.len() - analysis.s_rank());
    }
}
