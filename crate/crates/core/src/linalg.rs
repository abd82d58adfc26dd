//! Complex matrix helpers and the block-diagonal Hermitian container used
//! for the stacked transmit covariance and all trace-form coefficients.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, Dyn, RowDVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type CRowVector = RowDVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `a b^H`
pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// `Re tr(A B)`. For Hermitian `A` this is the real trace inner product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc
}

/// `Re tr(A^H B)`
pub fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn real_trace(a: &CMatrix) -> f64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)].re).sum()
}

/// Largest entry of `|A - A^H|`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues (descending) and matching unit eigenvectors of a Hermitian
/// matrix. The input is symmetrized first.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    if n == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    hermitian_eigen(a).0.last().copied().unwrap_or(0.0)
}

/// Principal eigenpair of a Hermitian matrix.
pub fn principal_eigenpair(a: &CMatrix) -> (f64, CVector) {
    let (values, vectors) = hermitian_eigen(a);
    (values[0], vectors.column(0).into_owned())
}

/// Cholesky factor of a Hermitian positive definite matrix, or `None`.
///
/// The complex square root used by the generic factorization accepts
/// negative pivots, so every pivot of `L` is checked to be real positive.
pub fn hpd_cholesky(a: CMatrix) -> Option<Cholesky<C64, Dyn>> {
    let chol = Cholesky::new(a)?;
    let ok = chol
        .l_dirty()
        .diagonal()
        .iter()
        .all(|d| d.re > 0.0 && d.im.abs() <= 1e-8 * d.re);
    ok.then_some(chol)
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.adjoint() * a;
    principal_eigenpair(&gram).0.max(0.0).sqrt()
}

/// Orthonormal basis (as columns) of the subspace where the PSD matrix `s`
/// has eigenvalues at most `rel_tol * tr(s)`.
pub fn null_space_basis(s: &CMatrix, rel_tol: f64) -> CMatrix {
    let n = s.nrows();
    let tr = real_trace(s);
    if tr <= 0.0 {
        return CMatrix::identity(n, n);
    }
    let (values, vectors) = hermitian_eigen(s);
    let keep: Vec<usize> = (0..n).filter(|&i| values[i] <= rel_tol * tr).collect();
    CMatrix::from_fn(n, keep.len(), |r, c| vectors[(r, keep[c])])
}

/// Block-diagonal matrix stored block by block.
///
/// Blocks are square but need not share a size; the stacked transmit
/// covariance has `n_s` blocks of size `n_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDiag {
    blocks: Vec<CMatrix>,
}

impl BlockDiag {
    pub fn zeros(n_blocks: usize, size: usize) -> Self {
        Self {
            blocks: vec![CMatrix::zeros(size, size); n_blocks],
        }
    }

    pub fn from_blocks(blocks: Vec<CMatrix>) -> Self {
        debug_assert!(blocks.iter().all(|b| b.is_square()));
        Self { blocks }
    }

    /// `blkdiag(m_1 m_1^H, ..., m_N m_N^H)`
    pub fn from_vectors(vectors: &[CVector]) -> Self {
        Self {
            blocks: vectors.iter().map(|m| outer(m, m)).collect(),
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMatrix {
        &self.blocks[k]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut CMatrix {
        &mut self.blocks[k]
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    /// Total dimension of the dense matrix.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(real_trace).sum()
    }

    /// `Re tr(self * other)`
    pub fn trace_product(&self, other: &BlockDiag) -> f64 {
        debug_assert_eq!(self.n_blocks(), other.n_blocks());
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| trace_product(a, b))
            .sum()
    }

    /// `Re tr(self^H other)`
    pub fn inner(&self, other: &BlockDiag) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| inner(a, b))
            .sum()
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &BlockDiag) {
        let a = C64::new(alpha, 0.0);
        for (x, y) in self.blocks.iter_mut().zip(&other.blocks) {
            *x += y * a;
        }
    }

    pub fn scaled(&self, alpha: f64) -> BlockDiag {
        let a = C64::new(alpha, 0.0);
        BlockDiag {
            blocks: self.blocks.iter().map(|b| b * a).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|x| *x == ZERO))
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        let mut offset = 0;
        for b in &self.blocks {
            let d = b.nrows();
            out.view_mut((offset, offset), (d, d)).copy_from(b);
            offset += d;
        }
        out
    }

    /// Every block Hermitian with min eigenvalue at least `-tol * trace`
    /// (and Hermitian defect at most `tol * max(1, trace)`).
    pub fn is_hermitian_psd(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| {
            let scale = real_trace(b).abs().max(1.0);
            hermitian_defect(b) <= tol * scale
                && min_eigenvalue(b) >= -tol * real_trace(b).abs().max(f64::MIN_POSITIVE)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn trace_product_matches_dense() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(2.0, -1.0), c(3.0, 0.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let dense = (&a * &b).trace().re;
        assert!((trace_product(&a, &b) - dense).abs() < 1e-14);
        assert!((inner(&a, &b) - dense).abs() < 1e-14);
    }

    #[test]
    fn eigen_is_sorted_and_orthonormal() {
        let a = CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&a);
        assert!((vals[0] - 3.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        let gram = vecs.adjoint() * &vecs;
        assert!((gram - CMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn null_space_is_orthogonal_to_range() {
        let h = CVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 2.0), c(0.0, 1.0)]);
        let s = outer(&h, &h);
        let basis = null_space_basis(&s, 1e-10);
        assert_eq!(basis.ncols(), 2);
        let proj = h.adjoint() * &basis;
        assert!(proj.norm() < 1e-12);
    }

    #[test]
    fn indefinite_matrix_has_no_factor() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        assert!(hpd_cholesky(a).is_none());
        assert!(hpd_cholesky(CMatrix::identity(3, 3)).is_some());
        assert!(hpd_cholesky(CMatrix::from_element(1, 1, c(-2.0, 0.0))).is_none());
    }

    #[test]
    fn block_diag_dense_layout() {
        let v = vec![
            CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 1.0)]),
            CVector::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]),
        ];
        let m = BlockDiag::from_vectors(&v);
        let d = m.to_dense();
        assert_eq!(d.nrows(), 4);
        assert_eq!(d[(2, 2)], c(4.0, 0.0));
        assert_eq!(d[(0, 2)], ZERO);
        assert!((m.trace() - 6.0).abs() < 1e-14);
        assert!(m.is_hermitian_psd(1e-9));
    }
}
