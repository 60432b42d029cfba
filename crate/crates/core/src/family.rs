//! Hamiltonian problem instances, eigenvalue envelopes and the counting
//! function `Delta`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{ComparisonLines, MatrixPoly, ScalarLine, TrigMatrixPath};
use crate::error::{Error, Result};
use crate::fourier::TimeGrid;
use crate::linalg::{max_asymmetry, sorted_eigenvalues};
use crate::scalar::{max_abs, tmax, Real};

pub type GradientFn<T> = Arc<dyn Fn(T, T, &DVector<T>) -> DVector<T> + Send + Sync>;
pub type JacobianFn<T> = Arc<dyn Fn(T, T, &DVector<T>) -> DMatrix<T> + Send + Sync>;

/// Full gradient `grad_u H(lambda, t, u)` of the Hamiltonian, with an
/// optional exact Jacobian in `u`.
#[derive(Clone)]
pub struct Nonlinearity<T: Real> {
    pub gradient: GradientFn<T>,
    pub jacobian: Option<JacobianFn<T>>,
}

impl<T: Real> Nonlinearity<T> {
    /// `D_u grad_u H`, by central differences when no exact Jacobian is given.
    pub fn jacobian_at(&self, lambda: T, t: T, u: &DVector<T>) -> DMatrix<T> {
        if let Some(j) = &self.jacobian {
            return j(lambda, t, u);
        }
        let d = u.len();
        let h = T::eps().cbrt() * tmax(T::one(), u.amax());
        let two_h = h + h;
        let mut jac = DMatrix::zeros(d, d);
        for c in 0..d {
            let mut up = u.clone();
            up[c] += h;
            let mut dn = u.clone();
            dn[c] -= h;
            let col = ((self.gradient)(lambda, t, &up) - (self.gradient)(lambda, t, &dn)) / two_h;
            jac.set_column(c, &col);
        }
        jac
    }
}

/// A parametrized Hamiltonian system `J u' + grad_u H(lambda, t, u) = 0`
/// linearized at `u = 0` by `A_lambda(t)`.
#[derive(Clone)]
pub struct HamiltonianFamily<T: Real> {
    pub name: String,
    pub hessian: TrigMatrixPath<T>,
    pub nonlinearity: Option<Nonlinearity<T>>,
}

impl<T: Real> fmt::Debug for HamiltonianFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianFamily")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("hessian", &self.hessian)
            .field("nonlinear", &self.nonlinearity.is_some())
            .finish()
    }
}

impl<T: Real> HamiltonianFamily<T> {
    pub fn linear(name: impl Into<String>, hessian: TrigMatrixPath<T>) -> Self {
        Self { name: name.into(), hessian, nonlinearity: None }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.hessian.n()
    }

    /// Checks `grad_u H(lambda, t, 0) = 0` and that the Jacobian at `u = 0`
    /// reproduces `A_lambda(t)` to `1e-4` relative, at the given samples.
    pub fn check_consistency(&self, lambdas: &[T], times: &[T]) -> Result<()> {
        let Some(nl) = &self.nonlinearity else {
            return Ok(());
        };
        let d = 2 * self.n();
        let zero = DVector::zeros(d);
        for &lambda in lambdas {
            for &t in times {
                let g = (nl.gradient)(lambda, t, &zero);
                if g.len() != d {
                    return Err(Error::DimensionMismatch(format!("gradient has length {}, expected {d}", g.len())));
                }
                if g.amax() > T::floor_tol(1e-12) {
                    return Err(Error::InvalidArgument(format!(
                        "gradient does not vanish at u = 0 (lambda = {lambda}, t = {t})"
                    )));
                }
                let a = self.hessian.eval(lambda, t);
                let fd = nl.jacobian_at(lambda, t, &zero);
                let scale = tmax(T::one(), a.amax());
                if (fd - &a).amax() > T::floor_tol(1e-4) * scale {
                    return Err(Error::InvalidArgument(format!(
                        "Jacobian of the gradient at u = 0 differs from the Hessian at lambda = {lambda}, t = {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Extreme eigenvalues of `A_lambda(t)` over `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope<T: Real> {
    pub lambda: T,
    /// Minimum over `t` of the smallest eigenvalue.
    pub alpha: T,
    /// Maximum over `t` of the largest eigenvalue.
    pub beta: T,
    /// Size of the time grid the extremes were taken on.
    pub n_t: usize,
    pub t_alpha: T,
    pub t_beta: T,
}

fn envelope_on<T: Real>(fam: &TrigMatrixPath<T>, lambda: T, n_t: usize) -> Result<Envelope<T>> {
    let grid = TimeGrid::new(n_t)?;
    let mut env = Envelope {
        lambda,
        alpha: T::zero(),
        beta: T::zero(),
        n_t,
        t_alpha: T::zero(),
        t_beta: T::zero(),
    };
    for (j, &t) in grid.points().iter().enumerate() {
        let a = fam.eval(lambda, t);
        let asym = max_asymmetry(&a);
        if asym > T::floor_tol(1e-12) * (T::one() + max_abs(a.iter().copied())) {
            return Err(Error::NotSymmetric { asymmetry: asym.as_f64() });
        }
        let e = sorted_eigenvalues(&a)?;
        let (lo, hi) = (e[0], e[e.len() - 1]);
        if j == 0 || lo < env.alpha {
            env.alpha = lo;
            env.t_alpha = t;
        }
        if j == 0 || hi > env.beta {
            env.beta = hi;
            env.t_beta = t;
        }
    }
    Ok(env)
}

/// Envelope on a grid of `n_t >= 32` nodes, doubled until the extremes move by less than `1e-9`.
pub fn eigen_envelope<T: Real>(fam: &TrigMatrixPath<T>, lambda: T, n_t: usize) -> Result<Envelope<T>> {
    if n_t < 32 {
        return Err(Error::InvalidArgument(format!("envelope grid needs at least 32 nodes, got {n_t}")));
    }
    let tol = T::floor_tol(1e-9);
    let mut env = envelope_on(fam, lambda, n_t)?;
    let mut change = T::zero();
    for _ in 0..12 {
        let finer = envelope_on(fam, lambda, 2 * env.n_t)?;
        change = tmax((finer.alpha - env.alpha).abs(), (finer.beta - env.beta).abs());
        env = finer;
        if change < tol {
            return Ok(env);
        }
    }
    Err(Error::EnvelopeNotConverged { change: change.as_f64() })
}

const SNAP: f64 = 1e-12;

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP {
        r
    } else {
        x
    }
}

/// Signed count of integers between `mu` and `nu`: `#{mu < i <= nu}` when
/// `mu <= nu`, and `-#{nu <= i < mu}` otherwise. Values within `1e-12` of an
/// integer are treated as that integer.
pub fn delta(mu: f64, nu: f64) -> i64 {
    let (mu, nu) = (snap(mu), snap(nu));
    if mu <= nu {
        (nu.floor() - mu.floor()) as i64
    } else {
        -((mu.ceil() - nu.ceil()) as i64)
    }
}

/// Whether `x` lies within `tol` of an integer.
pub fn near_integer(x: f64, tol: f64) -> bool {
    (x - x.round()).abs() <= tol
}

/// The lines `B: beta_- -> alpha_+` and `C: alpha_- -> beta_+` over `[lambda_-, lambda_+]`.
pub fn comparison_lines<T: Real>(
    alpha_minus: T,
    beta_minus: T,
    alpha_plus: T,
    beta_plus: T,
    lambda_minus: T,
    lambda_plus: T,
) -> Result<ComparisonLines<T>> {
    Ok(ComparisonLines {
        b: ScalarLine::new(lambda_minus, lambda_plus, beta_minus, alpha_plus)?,
        c: ScalarLine::new(lambda_minus, lambda_plus, alpha_minus, beta_plus)?,
    })
}

/// Names accepted by [`builtin`].
pub const CATALOG: [&str; 4] = ["scalar_ramp", "wiggle", "diag_split", "quartic"];

fn diag2<T: Real>(x: T, y: T) -> DMatrix<T> {
    DMatrix::from_row_slice(2, 2, &[x, T::zero(), T::zero(), y])
}

fn check_keys(params: &BTreeMap<String, f64>, allowed: &[&str], name: &str) -> Result<()> {
    match params.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(key) => Err(Error::InvalidArgument(format!(
            "family `{name}` has no parameter `{key}` (accepted: [{}])",
            allowed.join(", ")
        ))),
        None => Ok(()),
    }
}

fn lookup<T: Real>(params: &BTreeMap<String, f64>, key: &str, default: f64) -> Result<T> {
    let v = params.get(key).copied().unwrap_or(default);
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("parameter `{key}`")));
    }
    Ok(T::lit(v))
}

/// Catalog family with default parameters.
pub fn builtin<T: Real>(name: &str) -> Result<HamiltonianFamily<T>> {
    builtin_with_params(name, &BTreeMap::new())
}

/// Catalog family. `wiggle` accepts `amplitude` (0.05) and `split` (0.1);
/// `diag_split` accepts `split` (0.5).
pub fn builtin_with_params<T: Real>(name: &str, params: &BTreeMap<String, f64>) -> Result<HamiltonianFamily<T>> {
    let id = || DMatrix::<T>::identity(2, 2);
    let zero = || DMatrix::<T>::zeros(2, 2);
    match name {
        "scalar_ramp" => {
            check_keys(params, &[], name)?;
            Ok(HamiltonianFamily::linear(name, TrigMatrixPath::affine(1, zero(), id())?))
        }
        "wiggle" => {
            check_keys(params, &["amplitude", "split"], name)?;
            let amp: T = lookup(params, "amplitude", 0.05)?;
            let split: T = lookup(params, "split", 0.1)?;
            let path = TrigMatrixPath::new(
                1,
                MatrixPoly::new(vec![diag2(-split, split), id()]),
                Vec::new(),
                vec![MatrixPoly::new(vec![zero(), id() * amp])],
            )?;
            Ok(HamiltonianFamily::linear(name, path))
        }
        "diag_split" => {
            check_keys(params, &["split"], name)?;
            let split: T = lookup(params, "split", 0.5)?;
            Ok(HamiltonianFamily::linear(name, TrigMatrixPath::affine(1, diag2(-split, split), id())?))
        }
        "quartic" => {
            check_keys(params, &[], name)?;
            let gradient: GradientFn<T> = Arc::new(|lambda: T, _t: T, u: &DVector<T>| u * (lambda + u.norm_squared()));
            let jacobian: JacobianFn<T> = Arc::new(|lambda: T, _t: T, u: &DVector<T>| {
                DMatrix::identity(u.len(), u.len()) * (lambda + u.norm_squared()) + u * u.transpose() * T::lit(2.0)
            });
            Ok(HamiltonianFamily {
                name: name.into(),
                hessian: TrigMatrixPath::affine(1, zero(), id())?,
                nonlinearity: Some(Nonlinearity { gradient, jacobian: Some(jacobian) }),
            })
        }
        _ => Err(Error::UnknownFamily { name: name.into(), available: CATALOG.join(", ") }),
    }
}
