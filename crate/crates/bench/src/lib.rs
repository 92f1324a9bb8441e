//! Shared fixtures for the benchmark targets.

use qma_core::{
    Domain, DirichletProblem, GridFunction, HyperhermitianMatrix, QMatrix, Quaternion,
    RhsFunction,
};

/// Deterministic dense hyperhermitian test matrix with entries of
/// moderate size.
pub fn fixture_matrix(n: usize) -> HyperhermitianMatrix {
    let m = QMatrix::from_fn(n, n, |j, k| {
        let (a, b) = (j as f64 + 1.0, k as f64 + 1.0);
        if j == k {
            Quaternion::from_real(2.0 * n as f64 + a)
        } else if j < k {
            Quaternion::new((a + b) / 4.0, (a - b) / 8.0, a * b / 16.0, 1.0 / (a + b))
        } else {
            Quaternion::new((b + a) / 4.0, (b - a) / 8.0, b * a / 16.0, 1.0 / (b + a)).conj()
        }
    });
    HyperhermitianMatrix::from_qmatrix(&m).expect("fixture matrix is hyperhermitian")
}

pub fn fixture_problem() -> DirichletProblem {
    DirichletProblem::new(
        Domain::Ball { center: vec![0.0; 4], radius: 1.0 },
        |x: &[f64]| x.iter().map(|v| v * v).sum(),
        RhsFunction::constant(1, 8.0),
    )
    .expect("fixture problem is valid")
}

pub fn fixture_grid(points: usize) -> GridFunction {
    let domain = Domain::Ball { center: vec![0.0; 4], radius: 1.0 };
    GridFunction::from_domain(&domain, points, |x| x.iter().map(|v| v * v).sum())
        .expect("fixture grid is valid")
}
