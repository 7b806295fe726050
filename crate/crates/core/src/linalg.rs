//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian part `(M + M†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in ascending order.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = hermitian_part(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Square root of a Hermitian matrix whose eigenvalues are `>= -tol`.
/// Returns the most negative eigenvalue on failure.
pub fn sqrtm_psd(m: &CMatrix, tol: f64) -> Result<CMatrix, f64> {
    let (vals, vecs) = eigh(m);
    if let Some(&lo) = vals.first() {
        if lo < -tol {
            return Err(lo);
        }
    }
    let roots = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| Complex64::new(v.max(0.0).sqrt(), 0.0)),
    );
    Ok(&vecs * CMatrix::from_diagonal(&roots) * vecs.adjoint())
}

/// `½ ‖A − B‖₁` for Hermitian arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * eigvalsh(&(a - b)).iter().map(|v| v.abs()).sum::<f64>()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// True when `m + shift·I` admits a Cholesky factorization, i.e. every
/// eigenvalue of `m` exceeds `-shift` (up to rounding).
pub fn is_psd_within(m: &CMatrix, shift: f64) -> bool {
    let n = m.nrows();
    let mut a = hermitian_part(m) + CMatrix::identity(n, n) * Complex64::new(shift, 0.0);
    // Explicit pivots: a complex square root never fails, so the library
    // factorization cannot flag an indefinite matrix.
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= a[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) {
            return false;
        }
        let d = pivot.sqrt();
        a[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * a[(j, k)].conj();
            }
            a[(i, j)] = v / d;
        }
    }
    true
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn sqrt_of_diagonal() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![c(4.0), c(9.0), c(0.0)]));
        let s = sqrtm_psd(&m, 1e-12).unwrap();
        assert!((s[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((s[(1, 1)].re - 3.0).abs() < 1e-12);
        assert!(s[(2, 2)].norm() < 1e-12);
    }

    #[test]
    fn negative_matrix_rejected() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-0.1)]));
        assert!(sqrtm_psd(&m, 1e-8).is_err());
        assert!(!is_psd_within(&m, 1e-6));
        assert!(is_psd_within(&m, 0.2));
    }

    #[test]
    fn trace_distance_of_orthogonal_projectors() {
        let a = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(0.0)]));
        let b = CMatrix::from_diagonal(&DVector::from_vec(vec![c(0.0), c(1.0)]));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-12);
    }
}
