//! Small hand-checked systems used by tests, the acceptance suite and the CLI.

use crate::graph::Digraph;

/// Six states `x1..x6` as ids `0..5` with edges
/// `x1->x2, x3->x2, x4->x2, x2->x3, x2->x6, x4->x5, x4->x6` and self-loops on
/// `x5`, `x6`.
pub fn six_state() -> Digraph {
    Digraph::from_edges(
        6,
        [
            (0, 1),
            (2, 1),
            (3, 1),
            (1, 2),
            (1, 5),
            (3, 4),
            (3, 5),
            (4, 4),
            (5, 5),
        ],
    )
    .expect("fixture edges are in range")
}

/// Matching `{x1+x2-, x2+x3-, x5+x5-, x6+x6-}` of [`six_state`], which
/// leaves `x3` and `x4` unmatched.
pub const SIX_STATE_MATCHING: [(usize, usize); 4] = [(0, 1), (1, 2), (4, 4), (5, 5)];

/// Five states where `{x1, x3, x5}` all feed `{x2, x4}`: exactly one of the
/// three stays unmatched and the single contraction is the whole group.
pub fn three_into_two() -> Digraph {
    Digraph::from_edges(
        5,
        [
            (0, 1),
            (0, 3),
            (2, 1),
            (2, 3),
            (4, 1),
            (4, 3),
            (1, 0),
            (1, 2),
            (3, 2),
            (3, 4),
        ],
    )
    .expect("fixture edges are in range")
}

/// Human labels `x1..xn` for fixture ids.
pub fn state_labels(n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("x{k}")).collect()
}
