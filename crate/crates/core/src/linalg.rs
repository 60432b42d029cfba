//! Dense symmetric eigen-solves and the small counting helpers built on them.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::{max_abs, Real};

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Clone, Debug)]
pub struct SortedEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: DMatrix<T>,
}

fn check_finite<T: Real>(m: &DMatrix<T>) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    Ok(())
}

pub fn symmetric_eigen<T: Real>(m: &DMatrix<T>) -> Result<SortedEigen<T>> {
    check_finite(m)?;
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).expect("finite"));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SortedEigen { values, vectors })
}

pub fn sorted_eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<T>> {
    check_finite(m)?;
    let mut v: Vec<T> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(v)
}

/// Scale-aware zero threshold `tol * max(1, max |e|)`.
#[inline]
pub fn zero_threshold<T: Real>(values: &[T], tol: T) -> T {
    let s = max_abs(values.iter().copied());
    tol * if s > T::one() { s } else { T::one() }
}

/// Number of eigenvalues below `-tol * max(1, max |e|)`.
pub fn count_negative<T: Real>(values: &[T], tol: T) -> usize {
    let thr = zero_threshold(values, tol);
    values.iter().filter(|&&e| e < -thr).count()
}

/// Morse index of a symmetric matrix.
pub fn morse_index<T: Real>(m: &DMatrix<T>, tol: T) -> Result<usize> {
    Ok(count_negative(&sorted_eigenvalues(m)?, tol))
}

pub fn min_abs<T: Real>(values: &[T]) -> T {
    values
        .iter()
        .fold(T::max_value().expect("bounded"), |acc, &e| if e.abs() < acc { e.abs() } else { acc })
}

/// Number of singular values below `tol * max(1, sigma_max)`.
pub fn kernel_dim_by_singular_values<T: Real>(m: &DMatrix<T>, tol: T) -> Result<usize> {
    check_finite(m)?;
    let sv = m.clone().singular_values();
    let smax = max_abs(sv.iter().copied());
    let thr = tol * if smax > T::one() { smax } else { T::one() };
    Ok(sv.iter().filter(|&&s| s < thr).count())
}

pub fn max_asymmetry<T: Real>(m: &DMatrix<T>) -> T {
    let mut worst = T::zero();
    for r in 0..m.nrows() {
        for c in (r + 1)..m.ncols() {
            let d = (m[(r, c)] - m[(c, r)]).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Sign of the determinant from an LU factorization (`0` when singular).
pub fn det_sign<T: Real>(m: &DMatrix<T>) -> Result<i8> {
    check_finite(m)?;
    let lu = m.clone().lu();
    let u = lu.u();
    let mut sign: i8 = if lu.p().determinant::<T>() < T::zero() { -1 } else { 1 };
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d == T::zero() {
            return Ok(0);
        }
        if d < T::zero() {
            sign = -sign;
        }
    }
    Ok(sign)
}

/// Eigenvalues of `m` with real part below `-1` and (numerically) zero
/// imaginary part, counted with algebraic multiplicity.
pub fn count_real_eigenvalues_below_minus_one<T: Real>(m: &DMatrix<T>) -> Result<usize> {
    check_finite(m)?;
    let eigs = m.clone().complex_eigenvalues();
    let scale = max_abs(m.iter().copied());
    let imag_tol = T::floor_tol(1e-12) * if scale > T::one() { scale } else { T::one() };
    Ok(eigs
        .iter()
        .filter(|z| z.im.abs() <= imag_tol && z.re < -T::one())
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn morse_index_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -1.0, -3.0]));
        assert_eq!(morse_index(&d, 1e-8).unwrap(), 2);
        assert_eq!(morse_index(&DMatrix::<f64>::identity(4, 4), 1e-8).unwrap(), 0);
    }

    #[test]
    fn non_finite_entries_fail() {
        let mut m = DMatrix::<f64>::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(morse_index(&m, 1e-8), Err(Error::NonFinite(_))));
    }

    #[test]
    fn det_sign_tracks_permutations() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(det_sign(&m).unwrap(), -1);
        let m = DMatrix::from_row_slice(3, 3, &[2.0f64, 1.0, 0.0, 1.0, -3.0, 0.5, 0.0, 0.5, 4.0]);
        assert_eq!(det_sign(&m).unwrap(), m.determinant().signum() as i8);
    }

    #[test]
    fn eigen_is_sorted_with_matching_vectors() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, -3.0, 0.5, 0.0, 0.5, 4.0]);
        let e = symmetric_eigen(&m).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        for (i, &l) in e.values.iter().enumerate() {
            let v = e.vectors.column(i);
            assert!((&m * v - v * l).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_has_no_real_eigenvalues() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -3.0, 3.0, 0.0]);
        assert_eq!(count_real_eigenvalues_below_minus_one(&m).unwrap(), 0);
        let m = DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -0.5]);
        assert_eq!(count_real_eigenvalues_below_minus_one(&m).unwrap(), 1);
    }
}
