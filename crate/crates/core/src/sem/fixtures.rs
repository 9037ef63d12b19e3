//! Named example models used by the command-line presets and the test
//! benches.

use alloc::collections::BTreeSet;

use super::LinearSem;
use crate::numerics::Matrix;

/// The minimal hidden-confounding structure: anchor(0) -> T(2),
/// hidden U(1) -> T, U -> Y(3), T -> Y.
pub fn confounded_four() -> LinearSem {
    let mut b = Matrix::zeros(4, 4);
    b.set(0, 2, 0.95);
    b.set(1, 2, 0.6);
    b.set(1, 3, 1.0);
    b.set(2, 3, 0.8);
    let hidden: BTreeSet<usize> = [1usize].into_iter().collect();
    LinearSem::new(b, alloc::vec![1.0, 1.0, 1.0, 1.0], 2, 3, 0, hidden)
        .expect("fixture is valid")
}

/// Benchmark model for training experiments: one hidden confounder, a strong
/// treatment-only input whose use amplifies the hidden bias, outcome-only
/// inputs carrying the predictable signal, and a block of pure-noise
/// covariates that a good representation has to ignore.
///
/// Nodes: 0 anchor, 1 hidden confounder, 2 outcome input, 3 treatment-only
/// input, 4-5 outcome inputs, 6..20 noise covariates, 21 treatment,
/// 22 outcome.
pub fn confounded_benchmark() -> LinearSem {
    let p = 73;
    let (anchor, u, xc, xi, xo1, xo2) = (0, 1, 2, 3, 4, 5);
    let (t, y) = (p - 2, p - 1);
    let mut b = Matrix::zeros(p, p);
    b.set(anchor, t, 2.0);
    b.set(u, t, 0.7);
    b.set(u, y, -0.4);
    b.set(xc, y, 1.0);
    b.set(xi, t, 0.9);
    b.set(xo1, y, 1.0);
    b.set(xo2, y, -0.8);
    b.set(t, y, 1.0);
    let mut omega = alloc::vec![1.0; p];
    omega[t] = 0.15;
    let hidden: BTreeSet<usize> = [u].into_iter().collect();
    LinearSem::new(b, omega, t, y, anchor, hidden).expect("fixture is valid")
}
