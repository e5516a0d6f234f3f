use nalgebra::{DMatrix, Matrix5, Vector5};
use num_complex::Complex64 as C64;

use super::Hamiltonian;
use crate::error::{Error, Result};

/// Eigenvalues in ascending order with matching orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl EigenSystem {
    pub fn vector(&self, k: usize) -> nalgebra::DVector<C64> {
        self.vectors.column(k).into_owned()
    }
}

const HERMITIAN_TOL: f64 = 1e-12;

/// Diagonalizes a Hermitian matrix.
///
/// Each eigenvector is rotated so its largest-magnitude component is real and positive.
pub fn eigensystem(h: &Hamiltonian) -> Result<EigenSystem> {
    let dev = h.hermiticity_error();
    let scale = h.matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(dev));
    }
    let eig = h.matrix.clone().symmetric_eigen();
    let n = h.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let big = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        let phase = big.conj() / big.norm();
        for i in 0..n {
            vectors[(i, col)] = v[i] * phase;
        }
    }
    Ok(EigenSystem { values, vectors })
}

/// Ascending eigen-decomposition of a real symmetric 5×5 matrix.
///
/// Vectors are normalized with their largest-magnitude component positive.
pub(crate) fn eigh5(h: &Matrix5<f64>) -> (Vector5<f64>, Matrix5<f64>) {
    let eig = h.symmetric_eigen();
    let mut order = [0usize, 1, 2, 3, 4];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vector5::zeros();
    let mut vectors = Matrix5::zeros();
    for (col, &k) in order.iter().enumerate() {
        values[col] = eig.eigenvalues[k];
        let v = eig.eigenvectors.column(k);
        let big = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap();
        let s = big.signum();
        vectors.set_column(col, &(v * s));
    }
    (values, vectors)
}
