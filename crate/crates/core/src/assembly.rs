//! Galerkin matrices of the Hessian forms `Q(u, v) + int <A(t) u, v> dt`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fourier::{q_matrix, required_samples, Layout, TimeGrid};
use crate::linalg::max_asymmetry;
use crate::scalar::{max_abs, Real};

/// A symmetric-matrix-valued trigonometric polynomial in `t`:
/// `A(t) = A_0 + sum_m (C_m cos mt + S_m sin mt)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigMatrix<T: Real> {
    pub constant: DMatrix<T>,
    pub cos: Vec<DMatrix<T>>,
    pub sin: Vec<DMatrix<T>>,
}

impl<T: Real> TrigMatrix<T> {
    pub fn autonomous(constant: DMatrix<T>) -> Self {
        Self { constant, cos: Vec::new(), sin: Vec::new() }
    }

    /// `c I_{2n}`.
    pub fn scalar(n: usize, c: T) -> Self {
        Self::autonomous(DMatrix::identity(2 * n, 2 * n) * c)
    }

    pub fn phase_dim(&self) -> usize {
        self.constant.nrows()
    }

    pub fn max_harmonic(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn eval(&self, t: T) -> DMatrix<T> {
        let mut a = self.constant.clone();
        for (m, c) in self.cos.iter().enumerate() {
            a += c * (T::from_count(m + 1) * t).cos();
        }
        for (m, s) in self.sin.iter().enumerate() {
            a += s * (T::from_count(m + 1) * t).sin();
        }
        a
    }

    /// `(1 - s) self + s other`, coefficient by coefficient.
    pub fn lerp(&self, other: &Self, s: T) -> Self {
        let w = T::one() - s;
        let mix = |x: Option<&DMatrix<T>>, y: Option<&DMatrix<T>>| {
            let d = self.phase_dim();
            let zero = DMatrix::zeros(d, d);
            x.unwrap_or(&zero) * w + y.unwrap_or(&zero) * s
        };
        let h = self.max_harmonic().max(other.max_harmonic());
        let pad = |v: &Vec<DMatrix<T>>, o: &Vec<DMatrix<T>>| {
            (0..h.min(v.len().max(o.len()))).map(|m| mix(v.get(m), o.get(m))).collect()
        };
        Self {
            constant: mix(Some(&self.constant), Some(&other.constant)),
            cos: pad(&self.cos, &other.cos),
            sin: pad(&self.sin, &other.sin),
        }
    }

    fn coefficient_matrices(&self) -> impl Iterator<Item = &DMatrix<T>> {
        std::iter::once(&self.constant).chain(self.cos.iter()).chain(self.sin.iter())
    }

    fn validate(&self) -> Result<()> {
        let d = self.phase_dim();
        if d == 0 || d % 2 != 0 {
            return Err(Error::DimensionMismatch(format!("coefficient matrices must be 2n x 2n, got {d}")));
        }
        for m in self.coefficient_matrices() {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient of shape {}x{} in a {d}x{d} family",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("coefficient matrix".into()));
            }
            let scale = T::one() + max_abs(m.iter().copied());
            let asym = max_asymmetry(m);
            if asym > T::floor_tol(1e-12) * scale {
                return Err(Error::NotSymmetric { asymmetry: asym.as_f64() });
            }
        }
        Ok(())
    }
}

/// Polynomial in `lambda` with matrix coefficients (`coeffs[p]` multiplies `lambda^p`).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPoly<T: Real> {
    pub coeffs: Vec<DMatrix<T>>,
}

impl<T: Real> MatrixPoly<T> {
    pub fn new(coeffs: Vec<DMatrix<T>>) -> Self {
        Self { coeffs }
    }

    pub fn eval(&self, lambda: T, d: usize) -> DMatrix<T> {
        // Horner.
        let mut acc = DMatrix::zeros(d, d);
        for c in self.coeffs.iter().rev() {
            acc = acc * lambda + c;
        }
        acc
    }

    pub fn derivative(&self, lambda: T, d: usize) -> DMatrix<T> {
        let mut acc = DMatrix::zeros(d, d);
        for (p, c) in self.coeffs.iter().enumerate().skip(1).rev() {
            acc = acc * lambda + c * T::from_count(p);
        }
        acc
    }
}

/// The family `lambda -> A_lambda(t)` of Hessian matrices, with every harmonic
/// coefficient polynomial in `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigMatrixPath<T: Real> {
    n: usize,
    pub constant: MatrixPoly<T>,
    pub cos: Vec<MatrixPoly<T>>,
    pub sin: Vec<MatrixPoly<T>>,
}

impl<T: Real> TrigMatrixPath<T> {
    pub fn new(n: usize, constant: MatrixPoly<T>, cos: Vec<MatrixPoly<T>>, sin: Vec<MatrixPoly<T>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("half-dimension n must be at least 1".into()));
        }
        let path = Self { n, constant, cos, sin };
        for poly in std::iter::once(&path.constant).chain(path.cos.iter()).chain(path.sin.iter()) {
            for c in &poly.coeffs {
                if c.nrows() != 2 * n || c.ncols() != 2 * n {
                    return Err(Error::DimensionMismatch(format!(
                        "coefficient of shape {}x{}, expected {2}x{2}",
                        c.nrows(),
                        c.ncols(),
                        2 * n
                    )));
                }
                TrigMatrix::autonomous(c.clone()).validate()?;
            }
        }
        Ok(path)
    }

    /// Autonomous family `A_lambda = A0 + lambda A1`.
    pub fn affine(n: usize, a0: DMatrix<T>, a1: DMatrix<T>) -> Result<Self> {
        Self::new(n, MatrixPoly::new(vec![a0, a1]), Vec::new(), Vec::new())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_harmonic(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    /// `A_lambda(.)` as a trig polynomial in `t`.
    pub fn at(&self, lambda: T) -> TrigMatrix<T> {
        let d = 2 * self.n;
        TrigMatrix {
            constant: self.constant.eval(lambda, d),
            cos: self.cos.iter().map(|p| p.eval(lambda, d)).collect(),
            sin: self.sin.iter().map(|p| p.eval(lambda, d)).collect(),
        }
    }

    /// `d/dlambda A_lambda(.)`.
    pub fn derivative_at(&self, lambda: T) -> TrigMatrix<T> {
        let d = 2 * self.n;
        TrigMatrix {
            constant: self.constant.derivative(lambda, d),
            cos: self.cos.iter().map(|p| p.derivative(lambda, d)).collect(),
            sin: self.sin.iter().map(|p| p.derivative(lambda, d)).collect(),
        }
    }

    pub fn eval(&self, lambda: T, t: T) -> DMatrix<T> {
        self.at(lambda).eval(t)
    }
}

/// Galerkin matrix of a Hessian form together with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricOperatorMatrix<T: Real> {
    pub layout: Layout,
    pub matrix: DMatrix<T>,
}

impl<T: Real> SymmetricOperatorMatrix<T> {
    pub fn new(layout: Layout, matrix: DMatrix<T>) -> Result<Self> {
        if matrix.nrows() != layout.dim() || matrix.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator of size {}x{} for layout dimension {}",
                matrix.nrows(),
                matrix.ncols(),
                layout.dim()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("operator entry".into()));
        }
        let scale = T::one() + max_abs(matrix.iter().copied());
        let asym = max_asymmetry(&matrix);
        if asym > T::floor_tol(1e-10) * scale {
            return Err(Error::NotSymmetric { asymmetry: asym.as_f64() });
        }
        Ok(Self { layout, matrix })
    }
}

/// Gram matrix `sum_j w <A_j phi_p(t_j), phi_q(t_j)>` of per-node symmetric
/// samples in the orthonormalized basis. No symmetry or grid checks.
pub(crate) fn gram_from_samples<T: Real>(layout: Layout, grid: &TimeGrid<T>, samples: &[DMatrix<T>]) -> DMatrix<T> {
    let d = layout.phase_dim();
    let modes = layout.scalar_modes();
    let w = grid.weight();
    let mut g = DMatrix::zeros(layout.dim(), layout.dim());
    let mut f = vec![T::zero(); modes];
    for (&t, a) in grid.points().iter().zip(samples) {
        for (m, fm) in f.iter_mut().enumerate() {
            *fm = layout.basis_value(m, t);
        }
        for m in 0..modes {
            for mp in m..modes {
                let c = w * f[m] * f[mp];
                for i in 0..d {
                    for ip in 0..d {
                        g[(m * d + i, mp * d + ip)] += c * a[(i, ip)];
                    }
                }
            }
        }
    }
    // Mirror the upper mode-triangle; samples are symmetric, so blocks are too.
    for m in 0..modes {
        for mp in (m + 1)..modes {
            for i in 0..d {
                for ip in 0..d {
                    g[(mp * d + ip, m * d + i)] = g[(m * d + i, mp * d + ip)];
                }
            }
        }
    }
    g
}

fn symmetrized_samples<T: Real>(a: &TrigMatrix<T>, grid: &TimeGrid<T>) -> Vec<DMatrix<T>> {
    let half = T::lit(0.5);
    grid.points()
        .iter()
        .map(|&t| {
            let s = a.eval(t);
            (&s + s.transpose()) * half
        })
        .collect()
}

pub(crate) fn check_grid<T: Real>(layout: Layout, max_harmonic: usize, grid: &TimeGrid<T>) -> Result<()> {
    let required = required_samples(layout.k, max_harmonic);
    if grid.len() < required {
        return Err(Error::GridTooCoarse { required, actual: grid.len() });
    }
    Ok(())
}

/// Assembles `Q + int <A(t) u, v>` (or only the integral when `include_q` is false).
pub fn assemble_form<T: Real>(
    a: &TrigMatrix<T>,
    layout: Layout,
    grid: &TimeGrid<T>,
    include_q: bool,
) -> Result<SymmetricOperatorMatrix<T>> {
    a.validate()?;
    if a.phase_dim() != layout.phase_dim() {
        return Err(Error::DimensionMismatch(format!(
            "coefficients act on R^{} but the layout is R^{}",
            a.phase_dim(),
            layout.phase_dim()
        )));
    }
    check_grid(layout, a.max_harmonic(), grid)?;
    Ok(SymmetricOperatorMatrix { layout, matrix: assemble_unchecked(a, layout, grid, include_q) })
}

pub(crate) fn assemble_unchecked<T: Real>(
    a: &TrigMatrix<T>,
    layout: Layout,
    grid: &TimeGrid<T>,
    include_q: bool,
) -> DMatrix<T> {
    let g = gram_from_samples(layout, grid, &symmetrized_samples(a, grid));
    if include_q {
        g + q_matrix::<T>(layout)
    } else {
        g
    }
}

/// Galerkin matrix of the Hessian `L_lambda` at truncation `k`.
pub fn assemble_hessian<T: Real>(
    fam: &TrigMatrixPath<T>,
    lambda: T,
    k: usize,
    grid: &TimeGrid<T>,
) -> Result<SymmetricOperatorMatrix<T>> {
    assemble_form(&fam.at(lambda), Layout::new(fam.n(), k)?, grid, true)
}

/// A straight scalar line `lambda -> (1 - s) start + s end`,
/// `s = (lambda - lambda_minus) / (lambda_plus - lambda_minus)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarLine<T: Real> {
    pub lambda_minus: T,
    pub lambda_plus: T,
    pub start: T,
    pub end: T,
}

impl<T: Real> ScalarLine<T> {
    pub fn new(lambda_minus: T, lambda_plus: T, start: T, end: T) -> Result<Self> {
        if !(lambda_minus < lambda_plus) {
            return Err(Error::InvalidArgument(format!(
                "lambda_minus = {lambda_minus} must be below lambda_plus = {lambda_plus}"
            )));
        }
        Ok(Self { lambda_minus, lambda_plus, start, end })
    }

    /// Value on the line; endpoints are reproduced exactly.
    pub fn value(&self, lambda: T) -> T {
        let s = (lambda - self.lambda_minus) / (self.lambda_plus - self.lambda_minus);
        (T::one() - s) * self.start + s * self.end
    }

    pub fn slope(&self) -> T {
        (self.end - self.start) / (self.lambda_plus - self.lambda_minus)
    }

    fn check(&self, lambda: T) -> Result<()> {
        if lambda < self.lambda_minus || lambda > self.lambda_plus {
            return Err(Error::OutOfRange {
                value: lambda.as_f64(),
                lo: self.lambda_minus.as_f64(),
                hi: self.lambda_plus.as_f64(),
            });
        }
        Ok(())
    }
}

/// The two comparison lines: `B` runs from `beta_-` to `alpha_+`, `C` from
/// `alpha_-` to `beta_+`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonLines<T: Real> {
    pub b: ScalarLine<T>,
    pub c: ScalarLine<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ComparisonKind {
    /// Path built on the line `B` (lower comparison path `M`).
    M,
    /// Path built on the line `C` (upper comparison path `N`).
    N,
}

impl<T: Real> ComparisonLines<T> {
    pub fn line(&self, kind: ComparisonKind) -> &ScalarLine<T> {
        match kind {
            ComparisonKind::M => &self.b,
            ComparisonKind::N => &self.c,
        }
    }
}

/// Galerkin matrix of `M_lambda` (kind `M`) or `N_lambda` (kind `N`).
pub fn assemble_comparison<T: Real>(
    kind: ComparisonKind,
    lines: &ComparisonLines<T>,
    lambda: T,
    layout: Layout,
    grid: &TimeGrid<T>,
) -> Result<SymmetricOperatorMatrix<T>> {
    let line = lines.line(kind);
    line.check(lambda)?;
    assemble_form(&TrigMatrix::scalar(layout.n, line.value(lambda)), layout, grid, true)
}

/// Coefficients of the homotopy `(1 - s) A_lambda + s X_lambda`, where `X` is
/// the comparison line of `kind`.
pub fn homotopy_coefficients<T: Real>(
    fam: &TrigMatrixPath<T>,
    s: T,
    lambda: T,
    kind: ComparisonKind,
    lines: &ComparisonLines<T>,
) -> Result<TrigMatrix<T>> {
    if s < T::zero() || s > T::one() {
        return Err(Error::OutOfRange { value: s.as_f64(), lo: 0.0, hi: 1.0 });
    }
    let line = lines.line(kind);
    line.check(lambda)?;
    let target = TrigMatrix::scalar(fam.n(), line.value(lambda));
    Ok(fam.at(lambda).lerp(&target, s))
}

/// Galerkin matrix of the homotopy operator `h(s, lambda)`.
pub fn homotopy_operator<T: Real>(
    fam: &TrigMatrixPath<T>,
    s: T,
    lambda: T,
    kind: ComparisonKind,
    lines: &ComparisonLines<T>,
    k: usize,
    grid: &TimeGrid<T>,
) -> Result<SymmetricOperatorMatrix<T>> {
    let coeffs = homotopy_coefficients(fam, s, lambda, kind, lines)?;
    assemble_form(&coeffs, Layout::new(fam.n(), k)?, grid, true)
}
