//! Galerkin operator paths: the Hessian path `L`, the comparison paths `M`
//! and `N`, and the sides of the homotopy rectangle between them.

use nalgebra::DMatrix;

use crate::assembly::{
    assemble_unchecked, check_grid, homotopy_coefficients, ComparisonKind, ComparisonLines, TrigMatrix,
    TrigMatrixPath,
};
use crate::error::{Error, Result};
use crate::fourier::{q_matrix, Layout, TimeGrid};
use crate::spectral_flow::OperatorPath;
use crate::scalar::Real;

fn check_interval<T: Real>(a: T, b: T) -> Result<()> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("empty parameter interval [{a}, {b}]")));
    }
    Ok(())
}

/// `lambda -> L_lambda` on `[lambda_minus, lambda_plus]`.
#[derive(Clone, Debug)]
pub struct HessianPath<T: Real> {
    fam: TrigMatrixPath<T>,
    layout: Layout,
    grid: TimeGrid<T>,
    a: T,
    b: T,
}

impl<T: Real> HessianPath<T> {
    pub fn new(fam: TrigMatrixPath<T>, k: usize, grid: TimeGrid<T>, a: T, b: T) -> Result<Self> {
        check_interval(a, b)?;
        let layout = Layout::new(fam.n(), k)?;
        check_grid(layout, fam.max_harmonic(), &grid)?;
        Ok(Self { fam, layout, grid, a, b })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }
}

impl<T: Real> OperatorPath<T> for HessianPath<T> {
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn dim(&self) -> usize {
        self.layout.dim()
    }
    fn eval(&self, lambda: T) -> Result<DMatrix<T>> {
        Ok(assemble_unchecked(&self.fam.at(lambda), self.layout, &self.grid, true))
    }
    fn derivative(&self, lambda: T) -> Option<Result<DMatrix<T>>> {
        Some(Ok(assemble_unchecked(&self.fam.derivative_at(lambda), self.layout, &self.grid, false)))
    }
}

/// `lambda -> M_lambda` or `N_lambda`: the form with the scalar coefficient
/// taken from a comparison line.
#[derive(Clone, Debug)]
pub struct ComparisonPath<T: Real> {
    kind: ComparisonKind,
    lines: ComparisonLines<T>,
    q: DMatrix<T>,
    gram: DMatrix<T>,
    layout: Layout,
}

impl<T: Real> ComparisonPath<T> {
    pub fn new(kind: ComparisonKind, lines: ComparisonLines<T>, n: usize, k: usize) -> Result<Self> {
        let layout = Layout::new(n, k)?;
        let grid = TimeGrid::for_assembly(k, 0);
        let gram = assemble_unchecked(&TrigMatrix::scalar(n, T::one()), layout, &grid, false);
        Ok(Self { kind, lines, q: q_matrix(layout), gram, layout })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }
}

impl<T: Real> OperatorPath<T> for ComparisonPath<T> {
    fn interval(&self) -> (T, T) {
        let l = self.lines.line(self.kind);
        (l.lambda_minus, l.lambda_plus)
    }
    fn dim(&self) -> usize {
        self.layout.dim()
    }
    fn eval(&self, lambda: T) -> Result<DMatrix<T>> {
        Ok(&self.q + &self.gram * self.lines.line(self.kind).value(lambda))
    }
    fn derivative(&self, _lambda: T) -> Option<Result<DMatrix<T>>> {
        Some(Ok(&self.gram * self.lines.line(self.kind).slope()))
    }
}

/// Which coordinate of the homotopy rectangle is held fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Side<T: Real> {
    /// `s -> h(s, lambda)` over `[s0, s1]`.
    FixedLambda { lambda: T, s0: T, s1: T },
    /// `lambda -> h(s, lambda)` over `[lambda0, lambda1]`.
    FixedS { s: T, lambda0: T, lambda1: T },
}

/// One side of the rectangle of `h(s, lambda) = (1 - s) A_lambda + s X_lambda`.
#[derive(Clone, Debug)]
pub struct HomotopyPath<T: Real> {
    fam: TrigMatrixPath<T>,
    lines: ComparisonLines<T>,
    kind: ComparisonKind,
    layout: Layout,
    grid: TimeGrid<T>,
    side: Side<T>,
}

impl<T: Real> HomotopyPath<T> {
    pub fn new(
        fam: TrigMatrixPath<T>,
        lines: ComparisonLines<T>,
        kind: ComparisonKind,
        k: usize,
        grid: TimeGrid<T>,
        side: Side<T>,
    ) -> Result<Self> {
        match side {
            Side::FixedLambda { s0, s1, .. } => check_interval(s0, s1)?,
            Side::FixedS { lambda0, lambda1, .. } => check_interval(lambda0, lambda1)?,
        }
        let layout = Layout::new(fam.n(), k)?;
        check_grid(layout, fam.max_harmonic(), &grid)?;
        Ok(Self { fam, lines, kind, layout, grid, side })
    }

    fn point(&self, p: T) -> (T, T) {
        match self.side {
            Side::FixedLambda { lambda, .. } => (p, lambda),
            Side::FixedS { s, .. } => (s, p),
        }
    }
}

impl<T: Real> OperatorPath<T> for HomotopyPath<T> {
    fn interval(&self) -> (T, T) {
        match self.side {
            Side::FixedLambda { s0, s1, .. } => (s0, s1),
            Side::FixedS { lambda0, lambda1, .. } => (lambda0, lambda1),
        }
    }
    fn dim(&self) -> usize {
        self.layout.dim()
    }
    fn eval(&self, p: T) -> Result<DMatrix<T>> {
        let (s, lambda) = self.point(p);
        let coeffs = homotopy_coefficients(&self.fam, s, lambda, self.kind, &self.lines)?;
        Ok(assemble_unchecked(&coeffs, self.layout, &self.grid, true))
    }
    fn derivative(&self, p: T) -> Option<Result<DMatrix<T>>> {
        let (s, lambda) = self.point(p);
        let line = self.lines.line(self.kind);
        let n = self.fam.n();
        let coeffs = match self.side {
            Side::FixedLambda { .. } => {
                // d/ds = X_lambda - A_lambda.
                let a = self.fam.at(lambda);
                TrigMatrix {
                    constant: DMatrix::identity(2 * n, 2 * n) * line.value(lambda) - &a.constant,
                    cos: a.cos.iter().map(|c| -c).collect(),
                    sin: a.sin.iter().map(|c| -c).collect(),
                }
            }
            Side::FixedS { .. } => {
                let da = self.fam.derivative_at(lambda);
                da.lerp(&TrigMatrix::scalar(n, line.slope()), s)
            }
        };
        Some(Ok(assemble_unchecked(&coeffs, self.layout, &self.grid, false)))
    }
}
