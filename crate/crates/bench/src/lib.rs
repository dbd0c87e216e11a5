//! Fixtures shared by the benchmarks.

use gci_core::quantum::{CMatrix, C64};
use gci_core::{DensityMatrix, LevelSystem, ProbVector};

/// Evenly spaced levels 0, 1/n, 2/n, ….
pub fn ladder(n: usize) -> LevelSystem {
    LevelSystem::new((0..n).map(|j| j as f64 / n as f64).collect()).expect("finite levels")
}

/// A full-support distribution with weights ∝ 1 + j mod 3.
pub fn lopsided(n: usize) -> ProbVector {
    let w: Vec<f64> = (0..n).map(|j| 1.0 + (j % 3) as f64).collect();
    let s: f64 = w.iter().sum();
    ProbVector::new(w.into_iter().map(|x| x / s).collect()).expect("normalized")
}

/// Hermitian test matrix with entries 1/(1 + |i − j|) and phases e^{i(i−j)/n}.
pub fn hermitian(n: usize) -> CMatrix {
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let d = i as f64 - j as f64;
                    C64::from_polar(1.0 / (1.0 + d.abs()), d / n as f64)
                })
                .collect()
        })
        .collect();
    CMatrix::from_rows(rows).expect("square")
}

/// ρ ∝ H² + 1/n, a full-rank state with coherences.
pub fn coherent_state(n: usize) -> DensityMatrix {
    let h = hermitian(n);
    let m = h.matmul(&h).add(&CMatrix::identity(n).scale(C64::new(1.0 / n as f64, 0.0)));
    let tr = m.trace().re;
    DensityMatrix::new(m.scale(C64::new(1.0 / tr, 0.0))).expect("positive and unit trace")
}
