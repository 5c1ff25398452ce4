#![allow(dead_code)]

use walktensor::{augment_evaporation, Digraph64, Matrix64, TransitionMatrix64, TrustNetwork64};

pub const FOUR_NODE_PINV_X28: [[f64; 4]; 4] = [[8.0, -3.0, -3.0, -10.0], [0.0, 21.0, -7.0, -14.0], [-8.0, -11.0, 17.0, 10.0], [0.0, -7.0, -7.0, 14.0]];

/// Reference slices `𝐍(:,:,k)` of the four-node graph, `k = 1..4`.
pub const FOUR_NODE_SLICES: [[[f64; 4]; 4]; 4] = [
    [[0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0], [0.0, 0.0, 0.0, 1.0]],
    [[2.0, 0.0, 1.0, 1.0], [0.0, 0.0, 0.0, 0.0], [2.0, 0.0, 2.0, 2.0], [2.0, 0.0, 1.0, 2.0]],
    [[2.0, 1.0, 0.0, 0.0], [2.0, 2.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0], [2.0, 1.0, 0.0, 1.0]],
    [[2.0, 1.0, 1.0, 0.0], [2.0, 2.0, 1.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 0.0]],
];

pub const TRUST_AUGMENTED: [[f64; 6]; 6] = [
    [0.0, 0.340, 0.0, 0.510, 0.0, 0.150],
    [0.170, 0.0, 0.425, 0.255, 0.0, 0.150],
    [0.0, 0.0, 0.0, 0.0, 0.850, 0.150],
    [0.425, 0.0, 0.0, 0.0, 0.425, 0.150],
    [0.170, 0.0, 0.680, 0.0, 0.0, 0.150],
    [0.2, 0.2, 0.2, 0.2, 0.2, 0.0],
];
pub const PHT_FROM_4: [f64; 5] = [0.5962, 0.2913, 0.5332, 1.0, 0.6573];
pub const PHT_FROM_4_AVOIDING_2: [f64; 5] = [0.5962, 0.0, 0.3872, 1.0, 0.5426];

pub fn four_node() -> TransitionMatrix64 {
    TransitionMatrix64::from_probabilities(
        Matrix64::from_rows(&[
            vec![0.0, 0.5, 0.5, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
        ])
        .unwrap(),
    )
    .unwrap()
}

/// Base weights are the reference probabilities divided by the retained 0.85.
pub fn trust_base() -> Digraph64 {
    let w = [
        [0.0, 0.4, 0.0, 0.6, 0.0],
        [0.2, 0.0, 0.5, 0.3, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
        [0.5, 0.0, 0.0, 0.0, 0.5],
        [0.2, 0.0, 0.8, 0.0, 0.0],
    ];
    let rows: Vec<Vec<f64>> = w.iter().map(|r| r.to_vec()).collect();
    Digraph64::from_adjacency(Matrix64::from_rows(&rows).unwrap()).unwrap()
}

pub fn trust_network() -> TrustNetwork64 {
    augment_evaporation(&trust_base(), 0.15).unwrap()
}

pub fn max_abs_diff_rows<const N: usize>(m: &Matrix64, expected: &[[f64; N]; N], scale: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((m[(i, j)] - expected[i][j] * scale).abs());
        }
    }
    worst
}

/// `max|a − b| / max(1, max|b|)`.
pub fn rel_err(a: &Matrix64, b: &Matrix64) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(1.0)
}
