//! Fixtures shared by the criterion benches.

use bmlp::benchgen::{gen_graph_matrix, GraphGenParams};
use bmlp::BitMatrix;

/// Seeded random `n x n` relation with edge probability `p`.
pub fn random_matrix(n: usize, p: f64, seed: u64) -> BitMatrix {
    let params = GraphGenParams::new(n, p, seed).expect("valid parameters");
    gen_graph_matrix(&params).0
}

/// Path graph `0 -> 1 -> ... -> n-1`, the worst case for iteration counts.
pub fn chain(n: usize) -> BitMatrix {
    BitMatrix::from_entries(n, n, (1..n).map(|i| (i - 1, i)))
}
