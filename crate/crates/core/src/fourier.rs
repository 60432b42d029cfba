//! Truncated Fourier loops `u(t) = c0 + sum_k (a_k sin kt + b_k cos kt)` in
//! `R^{2n}`, their `H^{1/2}` geometry and uniform time grids.
//!
//! Every matrix in the crate uses one coordinate layout: the `2n` constant
//! coefficients first, then for each mode `k = 1..=K` the `a_k` block followed
//! by the `b_k` block. Operator matrices are written in the orthonormalized
//! basis, where mode-`k` basis loops are scaled by `1/sqrt(k)` so that the
//! `H^{1/2}` Gram matrix is the identity.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shape of a truncated loop space: half-dimension `n` and truncation `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Layout {
    pub n: usize,
    pub k: usize,
}

impl Layout {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("half-dimension n must be at least 1".into()));
        }
        Ok(Self { n, k })
    }

    /// Dimension of the phase space, `2n`.
    #[inline]
    pub fn phase_dim(&self) -> usize {
        2 * self.n
    }

    /// Number of scalar basis functions: the constant plus `sin kt`, `cos kt`.
    #[inline]
    pub fn scalar_modes(&self) -> usize {
        2 * self.k + 1
    }

    /// Total number of real coordinates, `2n(2K+1)`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.phase_dim() * self.scalar_modes()
    }

    #[inline]
    pub fn sin_offset(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.k);
        self.phase_dim() * (2 * k - 1)
    }

    #[inline]
    pub fn cos_offset(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.k);
        self.phase_dim() * (2 * k)
    }

    /// Frequency carried by scalar mode `m` (0 for the constant).
    #[inline]
    pub fn frequency(&self, m: usize) -> usize {
        (m + 1) / 2
    }

    /// Value at `t` of the orthonormalized scalar basis function `m`.
    pub fn basis_value<T: Real>(&self, m: usize, t: T) -> T {
        if m == 0 {
            return T::one();
        }
        let k = self.frequency(m);
        let kt = T::from_count(k) * t;
        let scale = T::one() / T::from_count(k).sqrt();
        if m % 2 == 1 {
            kt.sin() * scale
        } else {
            kt.cos() * scale
        }
    }

    /// `H^{1/2}` weight of a raw coefficient at `index` (1 for constants, `k` otherwise).
    #[inline]
    pub fn weight(&self, index: usize) -> usize {
        self.frequency(index / self.phase_dim()).max(1)
    }
}

/// The standard symplectic matrix `J = [[0, -I], [I, 0]]` of size `2n`.
pub fn symplectic_matrix<T: Real>(n: usize) -> DMatrix<T> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -T::one();
        j[(n + i, i)] = T::one();
    }
    j
}

/// Applies `J` to a vector of `R^{2n}` without forming the matrix.
pub fn apply_symplectic<T: Real>(x: DVectorView<'_, T>) -> DVector<T> {
    let n = x.len() / 2;
    DVector::from_fn(2 * n, |i, _| if i < n { -x[n + i] } else { x[i - n] })
}

/// A loop truncated at mode `K`, stored by its raw Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierVector<T: Real> {
    layout: Layout,
    coeffs: DVector<T>,
}

impl<T: Real> FourierVector<T> {
    pub fn zeros(layout: Layout) -> Self {
        Self { layout, coeffs: DVector::zeros(layout.dim()) }
    }

    /// Builds a loop from raw coefficients in layout order.
    pub fn from_coefficients(layout: Layout, coeffs: DVector<T>) -> Result<Self> {
        if coeffs.len() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients for n = {}, K = {}, got {}",
                layout.dim(),
                layout.n,
                layout.k,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Fourier coefficient".into()));
        }
        Ok(Self { layout, coeffs })
    }

    /// Builds a loop from coordinates in the orthonormalized basis.
    pub fn from_orthonormal(layout: Layout, x: &DVector<T>) -> Result<Self> {
        if x.len() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coordinates, got {}",
                layout.dim(),
                x.len()
            )));
        }
        let coeffs = DVector::from_fn(x.len(), |i, _| {
            x[i] / T::from_count(layout.weight(i)).sqrt()
        });
        Self::from_coefficients(layout, coeffs)
    }

    /// Coordinates in the orthonormalized basis (`sqrt(k)` times the raw coefficients).
    pub fn to_orthonormal(&self) -> DVector<T> {
        DVector::from_fn(self.coeffs.len(), |i, _| {
            self.coeffs[i] * T::from_count(self.layout.weight(i)).sqrt()
        })
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    #[inline]
    pub fn coefficients(&self) -> &DVector<T> {
        &self.coeffs
    }

    pub fn c0(&self) -> DVectorView<'_, T> {
        self.coeffs.rows(0, self.layout.phase_dim())
    }

    /// Sine coefficient `a_k`.
    pub fn a(&self, k: usize) -> DVectorView<'_, T> {
        self.coeffs.rows(self.layout.sin_offset(k), self.layout.phase_dim())
    }

    /// Cosine coefficient `b_k`.
    pub fn b(&self, k: usize) -> DVectorView<'_, T> {
        self.coeffs.rows(self.layout.cos_offset(k), self.layout.phase_dim())
    }

    pub fn set_c0(&mut self, v: &[T]) {
        let d = self.layout.phase_dim();
        self.coeffs.rows_mut(0, d).copy_from_slice(&v[..d]);
    }

    pub fn set_a(&mut self, k: usize, v: &[T]) {
        let (o, d) = (self.layout.sin_offset(k), self.layout.phase_dim());
        self.coeffs.rows_mut(o, d).copy_from_slice(&v[..d]);
    }

    pub fn set_b(&mut self, k: usize, v: &[T]) {
        let (o, d) = (self.layout.cos_offset(k), self.layout.phase_dim());
        self.coeffs.rows_mut(o, d).copy_from_slice(&v[..d]);
    }

    /// Value of the loop at time `t`.
    pub fn eval(&self, t: T) -> DVector<T> {
        let mut out = self.c0().into_owned();
        for k in 1..=self.layout.k {
            let kt = T::from_count(k) * t;
            out += self.a(k) * kt.sin() + self.b(k) * kt.cos();
        }
        out
    }

    /// `L^2(0, 2pi)` norm of the loop.
    pub fn l2_norm(&self) -> T {
        let pi = T::pi();
        let mut acc = self.c0().norm_squared() * (pi + pi);
        for k in 1..=self.layout.k {
            acc += (self.a(k).norm_squared() + self.b(k).norm_squared()) * pi;
        }
        acc.sqrt()
    }

    pub fn h_half_norm(&self) -> T {
        h_half_inner(self, self).expect("same layout").sqrt()
    }
}

fn check_same_layout<T: Real>(u: &FourierVector<T>, v: &FourierVector<T>) -> Result<()> {
    if u.layout != v.layout {
        return Err(Error::DimensionMismatch(format!(
            "loops have layouts (n = {}, K = {}) and (n = {}, K = {})",
            u.layout.n, u.layout.k, v.layout.n, v.layout.k
        )));
    }
    Ok(())
}

/// `H^{1/2}` scalar product `<c0, c0~> + sum_k k (<a_k, a_k~> + <b_k, b_k~>)`.
pub fn h_half_inner<T: Real>(u: &FourierVector<T>, v: &FourierVector<T>) -> Result<T> {
    check_same_layout(u, v)?;
    let mut acc = T::zero();
    for (i, (x, y)) in u.coeffs.iter().zip(v.coeffs.iter()).enumerate() {
        acc += T::from_count(u.layout.weight(i)) * *x * *y;
    }
    Ok(acc)
}

/// The form `Q(u, v) = int <J u', v> dt` on truncated loops:
/// `sum_k k pi (<J a_k, b_k~> - <J b_k, a_k~>)`.
pub fn q_form<T: Real>(u: &FourierVector<T>, v: &FourierVector<T>) -> Result<T> {
    check_same_layout(u, v)?;
    let mut acc = T::zero();
    for k in 1..=u.layout.k {
        let ja = apply_symplectic(u.a(k));
        let jb = apply_symplectic(u.b(k));
        acc += T::from_count(k) * (ja.dot(&v.b(k)) - jb.dot(&v.a(k)));
    }
    Ok(acc * T::pi())
}

/// Galerkin matrix of `Q` in the orthonormalized basis.
///
/// Each mode block is `pi [[0, J^T], [J, 0]]`; the constant block vanishes.
pub fn q_matrix<T: Real>(layout: Layout) -> DMatrix<T> {
    let d = layout.phase_dim();
    let j = symplectic_matrix::<T>(layout.n);
    let pi = T::pi();
    let mut m = DMatrix::zeros(layout.dim(), layout.dim());
    for k in 1..=layout.k {
        let (sa, sb) = (layout.sin_offset(k), layout.cos_offset(k));
        for r in 0..d {
            for c in 0..d {
                // (a_r, b_c) entry is pi J[c, r]; (b_c, a_r) mirrors it.
                let v = pi * j[(c, r)];
                m[(sa + r, sb + c)] = v;
                m[(sb + c, sa + r)] = v;
            }
        }
    }
    m
}

/// Uniform samples `t_j = 2 pi j / N_t` of `[0, 2 pi)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid<T: Real> {
    points: Vec<T>,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(n_t: usize) -> Result<Self> {
        if n_t == 0 {
            return Err(Error::InvalidArgument("time grid needs at least one sample".into()));
        }
        let two_pi = T::two_pi();
        let points = (0..n_t)
            .map(|j| two_pi * T::from_count(j) / T::from_count(n_t))
            .collect();
        Ok(Self { points })
    }

    /// Default linear-assembly grid: `max(64, 8K)` raised to the exactness bound
    /// `4K + 2 + 2M` when the coefficients carry harmonics up to `M`.
    pub fn for_assembly(k: usize, max_harmonic: usize) -> Self {
        let n_t = 64.max(8 * k).max(required_samples(k, max_harmonic));
        Self::new(n_t).expect("positive sample count")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Trapezoid weight `2 pi / N_t`.
    #[inline]
    pub fn weight(&self) -> T {
        T::two_pi() / T::from_count(self.points.len())
    }

    /// Trapezoid quadrature of a periodic function over `[0, 2 pi]`.
    pub fn integrate(&self, f: impl Fn(T) -> T) -> T {
        let sum = self.points.iter().fold(T::zero(), |acc, &t| acc + f(t));
        sum * self.weight()
    }
}

/// Smallest grid on which trapezoid quadrature is exact for the Hessian forms
/// of truncation `k` with coefficient harmonics up to `max_harmonic`.
#[inline]
pub fn required_samples(k: usize, max_harmonic: usize) -> usize {
    4 * k + 2 + 2 * max_harmonic
}

/// Samples of the loop at every grid node.
pub fn eval_on_grid<T: Real>(u: &FourierVector<T>, grid: &TimeGrid<T>) -> Vec<DVector<T>> {
    grid.points().iter().map(|&t| u.eval(t)).collect()
}

/// Discrete projection of grid samples onto modes `<= K`.
///
/// Exact for trigonometric polynomials of degree `<= K` when `N_t > 2K`.
pub fn project_onto_modes<T: Real>(
    samples: &[DVector<T>],
    layout: Layout,
    grid: &TimeGrid<T>,
) -> Result<FourierVector<T>> {
    if samples.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} samples for a grid of {} nodes",
            samples.len(),
            grid.len()
        )));
    }
    if let Some(s) = samples.iter().find(|s| s.len() != layout.phase_dim()) {
        return Err(Error::DimensionMismatch(format!(
            "sample of length {} in phase space of dimension {}",
            s.len(),
            layout.phase_dim()
        )));
    }
    let n_t = T::from_count(grid.len());
    let two = T::lit(2.0);
    let mut u = FourierVector::zeros(layout);
    let d = layout.phase_dim();
    let mut c0 = DVector::zeros(d);
    for s in samples {
        c0 += s;
    }
    u.set_c0((c0 / n_t).as_slice());
    for k in 1..=layout.k {
        let mut a = DVector::zeros(d);
        let mut b = DVector::zeros(d);
        for (s, &t) in samples.iter().zip(grid.points()) {
            let kt = T::from_count(k) * t;
            a += s * kt.sin();
            b += s * kt.cos();
        }
        u.set_a(k, (a * two / n_t).as_slice());
        u.set_b(k, (b * two / n_t).as_slice());
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit(layout: Layout, index: usize) -> FourierVector<f64> {
        let mut c = DVector::zeros(layout.dim());
        c[index] = 1.0;
        FourierVector::from_coefficients(layout, c).unwrap()
    }

    #[test]
    fn inner_product_examples() {
        let l = Layout::new(1, 3).unwrap();
        let c = unit(l, 0);
        assert_eq!(h_half_inner(&c, &c).unwrap(), 1.0);
        let a1 = unit(l, l.sin_offset(1));
        assert_eq!(h_half_inner(&a1, &a1).unwrap(), 1.0);
        let a2 = unit(l, l.sin_offset(2));
        let b2 = unit(l, l.cos_offset(2));
        assert_eq!(h_half_inner(&a2, &b2).unwrap(), 0.0);
        assert_eq!(h_half_inner(&a2, &a2).unwrap(), 2.0);
    }

    #[test]
    fn mismatched_layouts_are_rejected() {
        let u = FourierVector::<f64>::zeros(Layout::new(1, 2).unwrap());
        let v = FourierVector::<f64>::zeros(Layout::new(1, 3).unwrap());
        assert!(matches!(h_half_inner(&u, &v), Err(Error::DimensionMismatch(_))));
        assert!(matches!(q_form(&u, &v), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn q_form_examples() {
        let l = Layout::new(1, 2).unwrap();
        let c1 = unit(l, 0);
        let c2 = unit(l, 1);
        assert_eq!(q_form(&c1, &c2).unwrap(), 0.0);
        // u = e1 sin t, v = e2 cos t.
        let u = unit(l, l.sin_offset(1));
        let v = unit(l, l.cos_offset(1) + 1);
        assert_abs_diff_eq!(q_form(&u, &v).unwrap(), std::f64::consts::PI, epsilon = 1e-15);
    }

    #[test]
    fn q_matrix_matches_form_on_basis() {
        let l = Layout::new(2, 3).unwrap();
        let q = q_matrix::<f64>(l);
        for p in 0..l.dim() {
            for r in 0..l.dim() {
                let mut x = DVector::zeros(l.dim());
                x[p] = 1.0;
                let mut y = DVector::zeros(l.dim());
                y[r] = 1.0;
                let u = FourierVector::from_orthonormal(l, &x).unwrap();
                let v = FourierVector::from_orthonormal(l, &y).unwrap();
                assert_abs_diff_eq!(q[(p, r)], q_form(&u, &v).unwrap(), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn grid_evaluation_examples() {
        let l = Layout::new(1, 1).unwrap();
        let mut u = FourierVector::<f64>::zeros(l);
        u.set_c0(&[0.5, -2.0]);
        let g = TimeGrid::new(8).unwrap();
        for s in eval_on_grid(&u, &g) {
            assert_eq!(s.as_slice(), &[0.5, -2.0]);
        }
        let a1 = unit(l, l.sin_offset(1));
        let g4 = TimeGrid::new(4).unwrap();
        let s = eval_on_grid(&a1, &g4);
        let expected = [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [-1.0, 0.0]];
        for (got, want) in s.iter().zip(expected) {
            assert_abs_diff_eq!(got[0], want[0], epsilon = 1e-15);
            assert_abs_diff_eq!(got[1], want[1], epsilon = 1e-15);
        }
    }

    #[test]
    fn symplectic_matrix_squares_to_minus_identity() {
        let j = symplectic_matrix::<f64>(3);
        assert_eq!(&j * &j, -DMatrix::identity(6, 6));
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(apply_symplectic(x.rows(0, 6)), &j * &x);
    }

    #[test]
    fn default_grid_respects_exactness_bound() {
        let g = TimeGrid::<f64>::for_assembly(20, 3);
        assert!(g.len() >= required_samples(20, 3));
        assert_eq!(TimeGrid::<f64>::for_assembly(2, 0).len(), 64);
    }

    #[test]
    fn works_in_single_precision() {
        let l = Layout::new(1, 2).unwrap();
        let mut u = FourierVector::<f32>::zeros(l);
        u.set_a(1, &[1.0, 0.0]);
        let mut v = FourierVector::<f32>::zeros(l);
        v.set_b(1, &[0.0, 1.0]);
        assert!((q_form(&u, &v).unwrap() - std::f32::consts::PI).abs() < 1e-6);
    }
}
