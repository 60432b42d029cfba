//! Harmonic balance for `J u' + grad_u H(lambda, t, u) = 0` and
//! pseudo-arclength continuation of nontrivial branches.
//!
//! Unknowns live in the orthonormalized coordinates of [`FourierVector`], so the
//! Euclidean norm of a coordinate vector is the `H^{1/2}` norm of the loop and
//! the arclength metric weights `lambda` and `u` alike.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_hessian, gram_from_samples};
use crate::error::{Error, Result};
use crate::family::{HamiltonianFamily, Nonlinearity};
use crate::fourier::{eval_on_grid, q_matrix, FourierVector, Layout, TimeGrid};
use crate::linalg::symmetric_eigen;
use crate::scalar::{tmax, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuationConfig {
    pub k: usize,
    /// Quadrature nodes for the nonlinear terms; `None` means `max(128, 16K)`.
    pub n_t: Option<usize>,
    pub tol_res: f64,
    pub max_newton: usize,
    /// Relative cut-off for singular values in the least-squares Newton step.
    pub svd_cutoff: f64,
    /// Eigenvalues of `L_lambda` below `kernel_tol * max(1, |L|)` span the kernel.
    pub kernel_tol: f64,
    pub seed_amp: f64,
    /// Stop once the `L^2` amplitude reaches this value.
    pub amp_max: f64,
    pub max_steps: usize,
    pub window: (f64, f64),
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            k: 8,
            n_t: None,
            tol_res: 1e-9,
            max_newton: 25,
            svd_cutoff: 1e-11,
            kernel_tol: 1e-8,
            seed_amp: 1e-2,
            amp_max: 6.0,
            max_steps: 500,
            window: (-10.0, 10.0),
            initial_step: 0.05,
            max_step: 0.2,
            min_step: 1e-6,
        }
    }
}

impl ContinuationConfig {
    pub fn grid<T: Real>(&self) -> Result<TimeGrid<T>> {
        TimeGrid::new(self.n_t.unwrap_or_else(|| 128.max(16 * self.k)))
    }

    pub fn layout(&self, n: usize) -> Result<Layout> {
        Layout::new(n, self.k)
    }
}

/// An accepted Galerkin solution on a branch.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchPoint<T: Real> {
    pub lambda: T,
    pub u: FourierVector<T>,
    /// `L^2` norm of the loop.
    pub amplitude: T,
    pub residual_norm: T,
    pub step: usize,
    /// Unit direction in `(u, lambda)` used by the predictor; empty for corrected
    /// points that were not predicted.
    pub tangent: DVector<T>,
    pub iterations: usize,
}

impl<T: Real> BranchPoint<T> {
    fn state(&self) -> DVector<T> {
        let x = self.u.to_orthonormal();
        let mut z = DVector::zeros(x.len() + 1);
        z.rows_mut(0, x.len()).copy_from(&x);
        z[x.len()] = self.lambda;
        z
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum StopReason {
    MaxSteps,
    UnboundedAmplitude { amplitude: f64 },
    LeftWindow { lambda: f64 },
    /// The branch came back to the trivial solution near `lambda_star`.
    Reconnected { lambda_star: f64 },
}

impl StopReason {
    pub fn label(&self) -> &'static str {
        match self {
            StopReason::MaxSteps => "max steps",
            StopReason::UnboundedAmplitude { .. } => "unbounded amplitude",
            StopReason::LeftWindow { .. } => "left window",
            StopReason::Reconnected { .. } => "reconnected",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch<T: Real> {
    pub lambda_star: T,
    pub points: Vec<BranchPoint<T>>,
    pub stop: StopReason,
}

/// Side condition closing the Newton system.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint<T: Real> {
    /// Solve `R(u, lambda) = 0` in `u` only.
    FixedLambda,
    /// `<tangent, z - predictor> = 0` with `z = (u, lambda)` in orthonormal coordinates.
    Arclength { tangent: DVector<T>, predictor: DVector<T> },
    /// `<direction, u> = value`, with `lambda` free.
    Projection { direction: DVector<T>, value: T },
}

fn nonlinearity<T: Real>(fam: &HamiltonianFamily<T>) -> Result<&Nonlinearity<T>> {
    fam.nonlinearity.as_ref().ok_or_else(|| Error::MissingNonlinearity(fam.name.clone()))
}

fn check_layout<T: Real>(fam: &HamiltonianFamily<T>, u: &FourierVector<T>) -> Result<()> {
    if u.layout().n != fam.n() {
        return Err(Error::DimensionMismatch(format!(
            "loop in R^{} for a family in R^{}",
            u.layout().phase_dim(),
            2 * fam.n()
        )));
    }
    Ok(())
}

/// Galerkin gradient of the action at `u`, in orthonormalized coordinates.
pub fn residual<T: Real>(
    fam: &HamiltonianFamily<T>,
    lambda: T,
    u: &FourierVector<T>,
    grid: &TimeGrid<T>,
) -> Result<DVector<T>> {
    let nl = nonlinearity(fam)?;
    check_layout(fam, u)?;
    let layout = u.layout();
    let d = layout.phase_dim();
    let w = grid.weight();
    let mut r = q_matrix::<T>(layout) * u.to_orthonormal();
    for (&t, ut) in grid.points().iter().zip(eval_on_grid(u, grid)) {
        let g = (nl.gradient)(lambda, t, &ut);
        if g.len() != d {
            return Err(Error::DimensionMismatch(format!("gradient has length {}, expected {d}", g.len())));
        }
        for m in 0..layout.scalar_modes() {
            let phi = w * layout.basis_value(m, t);
            for i in 0..d {
                r[m * d + i] += phi * g[i];
            }
        }
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residual".into()));
    }
    Ok(r)
}

/// Derivative of [`residual`] in `u`: the Galerkin Hessian of the action at `u`.
pub fn residual_jacobian<T: Real>(
    fam: &HamiltonianFamily<T>,
    lambda: T,
    u: &FourierVector<T>,
    grid: &TimeGrid<T>,
) -> Result<DMatrix<T>> {
    let nl = nonlinearity(fam)?;
    check_layout(fam, u)?;
    let half = T::lit(0.5);
    let samples: Vec<DMatrix<T>> = grid
        .points()
        .iter()
        .zip(eval_on_grid(u, grid))
        .map(|(&t, ut)| {
            let j = nl.jacobian_at(lambda, t, &ut);
            (&j + j.transpose()) * half
        })
        .collect();
    let layout = u.layout();
    Ok(q_matrix::<T>(layout) + gram_from_samples(layout, grid, &samples))
}

fn lambda_derivative<T: Real>(
    fam: &HamiltonianFamily<T>,
    lambda: T,
    u: &FourierVector<T>,
    grid: &TimeGrid<T>,
) -> Result<DVector<T>> {
    let h = T::eps().cbrt() * tmax(T::one(), lambda.abs());
    let up = residual(fam, lambda + h, u, grid)?;
    let dn = residual(fam, lambda - h, u, grid)?;
    Ok((up - dn) / (h + h))
}

/// Minimum-norm least-squares solution of `a x = b`.
fn min_norm_solve<T: Real>(a: DMatrix<T>, b: &DVector<T>, cutoff: f64) -> Result<DVector<T>> {
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |m, &s| tmax(m, s));
    let eps = tmax(smax, T::one()) * T::floor_tol(cutoff);
    svd.solve(b, eps).map_err(|e| Error::LinearAlgebra(e.to_string()))
}

struct System<T: Real> {
    value: DVector<T>,
    residual_norm: T,
    constraint: T,
}

fn split<T: Real>(z: &DVector<T>, layout: Layout) -> Result<(FourierVector<T>, T)> {
    let dim = layout.dim();
    let u = FourierVector::from_orthonormal(layout, &z.rows(0, dim).into_owned())?;
    Ok((u, z[dim]))
}

fn join<T: Real>(x: &DVector<T>, lambda: T) -> DVector<T> {
    let mut z = DVector::zeros(x.len() + 1);
    z.rows_mut(0, x.len()).copy_from(x);
    z[x.len()] = lambda;
    z
}

fn evaluate<T: Real>(
    fam: &HamiltonianFamily<T>,
    constraint: &Constraint<T>,
    z: &DVector<T>,
    layout: Layout,
    grid: &TimeGrid<T>,
) -> Result<System<T>> {
    let (u, lambda) = split(z, layout)?;
    let r = residual(fam, lambda, &u, grid)?;
    let residual_norm = r.norm();
    let dim = layout.dim();
    let c = match constraint {
        Constraint::FixedLambda => None,
        Constraint::Arclength { tangent, predictor } => Some(tangent.dot(&(z - predictor))),
        Constraint::Projection { direction, value } => Some(direction.dot(&z.rows(0, dim)) - *value),
    };
    let value = match c {
        None => r,
        Some(c) => join(&r, c),
    };
    Ok(System { value, residual_norm, constraint: c.unwrap_or_else(T::zero) })
}

fn jacobian<T: Real>(
    fam: &HamiltonianFamily<T>,
    constraint: &Constraint<T>,
    z: &DVector<T>,
    layout: Layout,
    grid: &TimeGrid<T>,
) -> Result<DMatrix<T>> {
    let (u, lambda) = split(z, layout)?;
    let dr = residual_jacobian(fam, lambda, &u, grid)?;
    let dim = layout.dim();
    let last_row = match constraint {
        Constraint::FixedLambda => return Ok(dr),
        Constraint::Arclength { tangent, .. } => tangent.clone(),
        Constraint::Projection { direction, .. } => join(direction, T::zero()),
    };
    let mut j = DMatrix::zeros(dim + 1, dim + 1);
    j.view_mut((0, 0), (dim, dim)).copy_from(&dr);
    j.view_mut((0, dim), (dim, 1)).copy_from(&lambda_derivative(fam, lambda, &u, grid)?);
    j.view_mut((dim, 0), (1, dim + 1)).copy_from(&last_row.transpose());
    Ok(j)
}

/// Damped Newton with minimum-norm steps.
///
/// In [`Constraint::FixedLambda`] mode a trivial start at a `lambda` where
/// `L_lambda` is singular is refused: that is a bifurcation point, and the
/// caller has to switch branches instead.
pub fn newton_correct<T: Real>(
    fam: &HamiltonianFamily<T>,
    constraint: &Constraint<T>,
    lambda0: T,
    u0: &FourierVector<T>,
    grid: &TimeGrid<T>,
    cfg: &ContinuationConfig,
) -> Result<BranchPoint<T>> {
    nonlinearity(fam)?;
    check_layout(fam, u0)?;
    let layout = u0.layout();
    let dim = layout.dim();
    if let Constraint::Arclength { tangent, predictor } = constraint {
        if tangent.len() != dim + 1 || predictor.len() != dim + 1 {
            return Err(Error::DimensionMismatch("arclength data must have length dim + 1".into()));
        }
    }
    if let Constraint::Projection { direction, .. } = constraint {
        if direction.len() != dim {
            return Err(Error::DimensionMismatch("projection direction must have length dim".into()));
        }
    }
    let tol = T::floor_tol(cfg.tol_res);
    let mut z = join(&u0.to_orthonormal(), lambda0);
    if matches!(constraint, Constraint::FixedLambda) && u0.coefficients().amax() == T::zero() {
        let l = assemble_hessian(&fam.hessian, lambda0, layout.k, grid)?.matrix;
        let eig = symmetric_eigen(&l)?;
        let scale = tmax(T::one(), l.amax());
        if eig.values.iter().any(|e| e.abs() <= T::floor_tol(cfg.kernel_tol) * scale) {
            return Err(Error::SingularJacobian { lambda: lambda0.as_f64() });
        }
    }
    let mut sys = evaluate(fam, constraint, &z, layout, grid)?;
    for it in 0..=cfg.max_newton {
        if sys.residual_norm <= tol && sys.constraint.abs() <= tol {
            let (u, lambda) = split(&z, layout)?;
            return Ok(BranchPoint {
                lambda,
                amplitude: u.l2_norm(),
                u,
                residual_norm: sys.residual_norm,
                step: 0,
                tangent: DVector::zeros(0),
                iterations: it,
            });
        }
        if it == cfg.max_newton {
            break;
        }
        let j = jacobian(fam, constraint, &z, layout, grid)?;
        let mut step = min_norm_solve(j, &sys.value, cfg.svd_cutoff)?;
        if step.len() == dim {
            step = join(&step, T::zero());
        }
        let merit = sys.value.norm();
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..12 {
            let trial = &z - &step * alpha;
            if let Ok(s) = evaluate(fam, constraint, &trial, layout, grid) {
                if s.value.norm() < merit {
                    accepted = Some((trial, s));
                    break;
                }
            }
            alpha *= T::lit(0.5);
        }
        match accepted {
            Some((trial, s)) => {
                z = trial;
                sys = s;
            }
            None => {
                return Err(Error::NewtonDiverged { iterations: it + 1, residual: sys.residual_norm.as_f64() })
            }
        }
    }
    Err(Error::NewtonDiverged { iterations: cfg.max_newton, residual: sys.residual_norm.as_f64() })
}

/// Orthonormal basis of `ker L_{lambda_star}` in orthonormalized coordinates
/// (unit `H^{1/2}` norm).
pub fn branch_tangent<T: Real>(
    fam: &HamiltonianFamily<T>,
    lambda_star: T,
    cfg: &ContinuationConfig,
) -> Result<Vec<DVector<T>>> {
    let layout = cfg.layout(fam.n())?;
    let grid = TimeGrid::for_assembly(layout.k, fam.hessian.max_harmonic());
    let l = assemble_hessian(&fam.hessian, lambda_star, layout.k, &grid)?.matrix;
    let scale = tmax(T::one(), l.amax());
    let eig = symmetric_eigen(&l)?;
    let thr = T::floor_tol(cfg.kernel_tol) * scale;
    let basis: Vec<DVector<T>> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, e)| e.abs() <= thr)
        .map(|(i, _)| eig.vectors.column(i).normalize())
        .collect();
    if basis.is_empty() {
        return Err(Error::TrivialKernel { lambda: lambda_star.as_f64() });
    }
    Ok(basis)
}

/// First nontrivial point off `(lambda_star, 0)` along a kernel direction,
/// then [`continue_branch`].
pub fn launch_branch<T: Real>(
    fam: &HamiltonianFamily<T>,
    lambda_star: T,
    direction: &DVector<T>,
    cfg: &ContinuationConfig,
) -> Result<Branch<T>> {
    let layout = cfg.layout(fam.n())?;
    if direction.len() != layout.dim() {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {}, expected {}",
            direction.len(),
            layout.dim()
        )));
    }
    let norm = direction.norm();
    if norm == T::zero() {
        return Err(Error::ZeroTangent);
    }
    let v = direction / norm;
    let grid = cfg.grid::<T>()?;
    let seed = T::lit(cfg.seed_amp);
    // `seed_amp` is an L^2 amplitude; rescale the H^{1/2} unit direction to it.
    let u_dir = FourierVector::from_orthonormal(layout, &v)?;
    let value = seed / u_dir.l2_norm();
    let u0 = FourierVector::from_orthonormal(layout, &(&v * value))?;
    let mut first = newton_correct(fam, &Constraint::Projection { direction: v, value }, lambda_star, &u0, &grid, cfg)?;
    let trivial = join(&DVector::zeros(layout.dim()), lambda_star);
    let secant = first.state() - trivial;
    first.tangent = secant.normalize();
    let tangent = first.tangent.clone();
    let mut branch = continue_branch(fam, first, &tangent, cfg)?;
    branch.lambda_star = lambda_star;
    Ok(branch)
}

/// Closest point of the segment `[a, b]` (in `u`) to the trivial branch.
fn closest_to_trivial<T: Real>(a: &DVector<T>, b: &DVector<T>, dim: usize) -> (T, T) {
    let xa = a.rows(0, dim);
    let xb = b.rows(0, dim);
    let d = &xb - &xa;
    let dd = d.norm_squared();
    let s = if dd == T::zero() {
        T::zero()
    } else {
        let s = -xa.dot(&d) / dd;
        if s < T::zero() {
            T::zero()
        } else if s > T::one() {
            T::one()
        } else {
            s
        }
    };
    let x = &xa + &d * s;
    (x.norm(), a[dim] + (b[dim] - a[dim]) * s)
}

/// Pseudo-arclength continuation from an accepted point: secant predictor,
/// arclength-constrained corrector, step halving down to `min_step`.
pub fn continue_branch<T: Real>(
    fam: &HamiltonianFamily<T>,
    start: BranchPoint<T>,
    direction: &DVector<T>,
    cfg: &ContinuationConfig,
) -> Result<Branch<T>> {
    let layout = start.u.layout();
    let dim = layout.dim();
    if direction.len() != dim + 1 {
        return Err(Error::DimensionMismatch(format!(
            "direction has length {}, expected {}",
            direction.len(),
            dim + 1
        )));
    }
    let dn = direction.norm();
    if dn == T::zero() || !dn.is_finite() {
        return Err(Error::ZeroTangent);
    }
    let grid = cfg.grid::<T>()?;
    let lambda_star = start.lambda;
    let mut tangent = direction / dn;
    let mut z = start.state();
    let mut points = vec![BranchPoint { tangent: tangent.clone(), ..start }];
    let mut h = T::lit(cfg.initial_step);
    let (max_step, min_step) = (T::lit(cfg.max_step), T::lit(cfg.min_step));
    let amp_max = T::lit(cfg.amp_max);
    let floor = T::lit(cfg.seed_amp / 10.0);
    let (w_lo, w_hi) = (T::lit(cfg.window.0), T::lit(cfg.window.1));
    let stop = loop {
        let last = points.last().expect("branch has a start point");
        if last.amplitude >= amp_max {
            break StopReason::UnboundedAmplitude { amplitude: last.amplitude.as_f64() };
        }
        if last.lambda < w_lo || last.lambda > w_hi {
            break StopReason::LeftWindow { lambda: last.lambda.as_f64() };
        }
        if points.len() > cfg.max_steps {
            break StopReason::MaxSteps;
        }
        let step = points.len();
        let predictor = &z + &tangent * h;
        let (u_pred, l_pred) = split(&predictor, layout)?;
        let constraint = Constraint::Arclength { tangent: tangent.clone(), predictor: predictor.clone() };
        let corrected = newton_correct(fam, &constraint, l_pred, &u_pred, &grid, cfg)
            .ok()
            .filter(|p| (p.state() - &predictor).norm() <= h);
        let Some(mut p) = corrected else {
            h *= T::lit(0.5);
            if h < min_step {
                return Err(Error::CorrectorFailed { step, min_step: cfg.min_step });
            }
            continue;
        };
        let zn = p.state();
        let (closest, lambda_at) = closest_to_trivial(&z, &zn, dim);
        let crossed = zn.rows(0, dim).dot(&z.rows(0, dim)) < T::zero();
        p.step = step;
        p.tangent = tangent.clone();
        tangent = (&zn - &z).normalize();
        z = zn;
        if p.iterations <= 3 {
            h = if h * T::lit(1.5) < max_step { h * T::lit(1.5) } else { max_step };
        }
        let reconnected = p.amplitude < floor || crossed || closest < floor;
        let lambda_p = p.lambda;
        points.push(p);
        if reconnected {
            let lambda_star = if crossed || closest < floor { lambda_at } else { lambda_p };
            break StopReason::Reconnected { lambda_star: lambda_star.as_f64() };
        }
    };
    Ok(Branch { lambda_star, points, stop })
}

/// Residual of a branch point after embedding it at truncation `k_check`
/// (on the default grid for `k_check`): a check on aliasing and truncation.
pub fn residual_at_truncation<T: Real>(
    fam: &HamiltonianFamily<T>,
    point: &BranchPoint<T>,
    k_check: usize,
) -> Result<T> {
    let src = point.u.layout();
    let dst = Layout::new(src.n, k_check)?;
    let mut coeffs = DVector::zeros(dst.dim());
    let copy = src.dim().min(dst.dim());
    coeffs.rows_mut(0, copy).copy_from(&point.u.coefficients().rows(0, copy));
    let u = FourierVector::from_coefficients(dst, coeffs)?;
    let grid = ContinuationConfig { k: k_check, ..ContinuationConfig::default() }.grid::<T>()?;
    Ok(residual(fam, point.lambda, &u, &grid)?.norm())
}
