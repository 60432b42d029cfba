//! Fundamental solutions of `u' = J A_lambda(t) u` over one period and the
//! kernel test `dim ker(Phi(2 pi) - I)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assembly::TrigMatrixPath;
use crate::error::{Error, Result};
use crate::fourier::symplectic_matrix;
use crate::scalar::{max_abs, tmax, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonodromyConfig {
    pub steps: usize,
    /// Largest change of `Phi(2 pi)` allowed when the step count doubles.
    pub doubling_tol: f64,
    /// Singular values of `Phi - I` below `kernel_tol * max(1, |Phi|)` span the kernel.
    pub kernel_tol: f64,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        Self { steps: 4096, doubling_tol: 1e-8, kernel_tol: 1e-7 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonodromyResult<T: Real> {
    pub lambda: T,
    /// `Phi(2 pi)` from the finer of the two integrations.
    pub phi: DMatrix<T>,
    pub kernel_dim: usize,
    /// `max |Phi^T J Phi - J|`.
    pub symplectic_defect: T,
    /// Smallest singular value of `Phi - I`.
    pub sigma_min: T,
    /// Change of `Phi` under step doubling.
    pub doubling_change: T,
    pub steps: usize,
}

fn integrate<T: Real>(fam: &TrigMatrixPath<T>, lambda: T, steps: usize) -> DMatrix<T> {
    let a = fam.at(lambda);
    let d = 2 * fam.n();
    let j = symplectic_matrix::<T>(fam.n());
    let rhs = |t: T| &j * a.eval(t);
    let h = T::two_pi() / T::from_count(steps);
    let half = h / T::lit(2.0);
    let sixth = h / T::lit(6.0);
    let mut phi = DMatrix::<T>::identity(d, d);
    for i in 0..steps {
        let t = h * T::from_count(i);
        let (f0, fm, f1) = (rhs(t), rhs(t + half), rhs(t + h));
        let k1 = &f0 * &phi;
        let k2 = &fm * (&phi + &k1 * half);
        let k3 = &fm * (&phi + &k2 * half);
        let k4 = &f1 * (&phi + &k3 * h);
        phi += (k1 + (k2 + k3) * T::lit(2.0) + k4) * sixth;
    }
    phi
}

fn singular_values<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    m.clone().singular_values().iter().copied().collect()
}

/// Integrates `Phi' = J A_lambda(t) Phi`, `Phi(0) = I`, with the classical
/// fourth-order Runge-Kutta scheme at `steps` and `2 steps` fixed steps.
pub fn fundamental_solution<T: Real>(
    fam: &TrigMatrixPath<T>,
    lambda: T,
    cfg: &MonodromyConfig,
) -> Result<MonodromyResult<T>> {
    if cfg.steps < 256 {
        return Err(Error::InvalidArgument(format!("at least 256 integration steps required, got {}", cfg.steps)));
    }
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda".into()));
    }
    let coarse = integrate(fam, lambda, cfg.steps);
    let phi = integrate(fam, lambda, 2 * cfg.steps);
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(Error::IntegrationNotConverged { change: f64::INFINITY });
    }
    let change = max_abs((&phi - &coarse).iter().copied());
    if change > T::floor_tol(cfg.doubling_tol) * tmax(T::one(), max_abs(phi.iter().copied())) {
        return Err(Error::IntegrationNotConverged { change: change.as_f64() });
    }
    let d = phi.nrows();
    let j = symplectic_matrix::<T>(fam.n());
    let symplectic_defect = max_abs((phi.transpose() * &j * &phi - &j).iter().copied());
    let sv = singular_values(&(&phi - DMatrix::identity(d, d)));
    let norm = singular_values(&phi).into_iter().fold(T::zero(), tmax);
    let thr = T::floor_tol(cfg.kernel_tol) * tmax(T::one(), norm);
    let kernel_dim = sv.iter().filter(|&&s| s < thr).count();
    let sigma_min = sv.iter().copied().fold(T::max_value().expect("bounded"), |a, b| if b < a { b } else { a });
    Ok(MonodromyResult {
        lambda,
        phi,
        kernel_dim,
        symplectic_defect,
        sigma_min,
        doubling_change: change,
        steps: 2 * cfg.steps,
    })
}

/// Dimension of the space of `2 pi`-periodic solutions of the linearized system.
pub fn periodic_kernel_dim<T: Real>(fam: &TrigMatrixPath<T>, lambda: T, cfg: &MonodromyConfig) -> Result<usize> {
    Ok(fundamental_solution(fam, lambda, cfg)?.kernel_dim)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointViolation {
    /// `"lambda_minus"` or `"lambda_plus"`.
    pub endpoint: String,
    pub lambda: f64,
    pub kernel_dim: usize,
}

/// Whether the linearization has only the trivial periodic solution at both endpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub kernel_dim_minus: usize,
    pub kernel_dim_plus: usize,
    pub violations: Vec<EndpointViolation>,
}

pub fn endpoint_admissibility<T: Real>(
    fam: &TrigMatrixPath<T>,
    lambda_minus: T,
    lambda_plus: T,
    cfg: &MonodromyConfig,
) -> Result<Admissibility> {
    let kernel_dim_minus = periodic_kernel_dim(fam, lambda_minus, cfg)?;
    let kernel_dim_plus = periodic_kernel_dim(fam, lambda_plus, cfg)?;
    let violations: Vec<_> = [("lambda_minus", lambda_minus, kernel_dim_minus), ("lambda_plus", lambda_plus, kernel_dim_plus)]
        .into_iter()
        .filter(|&(_, _, k)| k > 0)
        .map(|(name, lambda, kernel_dim)| EndpointViolation { endpoint: name.into(), lambda: lambda.as_f64(), kernel_dim })
        .collect();
    Ok(Admissibility { admissible: violations.is_empty(), kernel_dim_minus, kernel_dim_plus, violations })
}

/// A parameter where the linearization has nontrivial periodic solutions.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate<T: Real> {
    pub lambda: T,
    pub kernel_dim: usize,
    pub sigma_min: T,
}

/// Scans `points` uniform parameters of `[lo, hi]` for local minima of the
/// smallest singular value of `Phi - I`, refines each by golden-section
/// search and keeps those with a nontrivial kernel.
pub fn bifurcation_candidates<T: Real>(
    fam: &TrigMatrixPath<T>,
    lo: T,
    hi: T,
    points: usize,
    cfg: &MonodromyConfig,
) -> Result<Vec<Candidate<T>>> {
    if !(lo < hi) || points < 3 {
        return Err(Error::InvalidArgument("scan needs lo < hi and at least 3 points".into()));
    }
    let grid: Vec<T> = (0..points)
        .map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * T::from_count(i) / T::from_count(points - 1) })
        .collect();
    let sigma = |lambda: T| fundamental_solution(fam, lambda, cfg).map(|r| r.sigma_min);
    let values = grid.iter().map(|&l| sigma(l)).collect::<Result<Vec<_>>>()?;
    let mut out: Vec<Candidate<T>> = Vec::new();
    for i in 0..points {
        let left = if i == 0 { T::max_value().expect("bounded") } else { values[i - 1] };
        let right = if i + 1 == points { T::max_value().expect("bounded") } else { values[i + 1] };
        if !(values[i] <= left && values[i] < right) {
            continue;
        }
        let (mut a, mut b) = (grid[i.saturating_sub(1)], grid[(i + 1).min(points - 1)]);
        let g = T::lit(0.618_033_988_749_894_9);
        let tol = T::floor_tol(1e-12) * tmax(T::one(), tmax(a.abs(), b.abs()));
        let (mut c, mut d) = (b - (b - a) * g, a + (b - a) * g);
        let (mut fc, mut fd) = (sigma(c)?, sigma(d)?);
        for _ in 0..200 {
            if b - a <= tol {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - (b - a) * g;
                fc = sigma(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + (b - a) * g;
                fd = sigma(d)?;
            }
        }
        let r = fundamental_solution(fam, (a + b) / T::lit(2.0), cfg)?;
        if r.kernel_dim > 0 && out.last().is_none_or(|p| (p.lambda - r.lambda).abs() > tol) {
            out.push(Candidate { lambda: r.lambda, kernel_dim: r.kernel_dim, sigma_min: r.sigma_min });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::builtin;
    use std::f64::consts::PI;

    fn scalar(c: f64) -> TrigMatrixPath<f64> {
        TrigMatrixPath::affine(1, DMatrix::identity(2, 2) * c, DMatrix::zeros(2, 2)).unwrap()
    }

    #[test]
    fn rotation_examples() {
        let cfg = MonodromyConfig::default();
        let r = fundamental_solution(&scalar(1.0), 0.0, &cfg).unwrap();
        assert!((&r.phi - DMatrix::identity(2, 2)).amax() < 1e-9);
        assert_eq!(r.kernel_dim, 2);
        let r = fundamental_solution(&scalar(0.5), 0.0, &cfg).unwrap();
        assert!((&r.phi + DMatrix::identity(2, 2)).amax() < 1e-9);
        assert_eq!(r.kernel_dim, 0);
        assert_eq!(periodic_kernel_dim(&scalar(0.0), 0.0, &cfg).unwrap(), 2);
    }

    #[test]
    fn planar_rotation_closed_form() {
        // exp(theta J) = cos(theta) I + sin(theta) J.
        let c = 0.3;
        let r = fundamental_solution(&scalar(c), 0.0, &MonodromyConfig::default()).unwrap();
        let theta = 2.0 * PI * c;
        let expected = DMatrix::identity(2, 2) * theta.cos() + symplectic_matrix::<f64>(1) * theta.sin();
        assert!((r.phi - expected).amax() < 1e-10);
        assert!(r.symplectic_defect < 1e-10);
    }

    #[test]
    fn catalog_kernels() {
        let cfg = MonodromyConfig::default();
        let split = builtin::<f64>("diag_split").unwrap();
        assert_eq!(periodic_kernel_dim(&split.hessian, 0.5, &cfg).unwrap(), 1);
        let ramp = builtin::<f64>("scalar_ramp").unwrap();
        assert_eq!(periodic_kernel_dim(&ramp.hessian, 1.0, &cfg).unwrap(), 2);
        assert_eq!(periodic_kernel_dim(&ramp.hessian, 0.3, &cfg).unwrap(), 0);
    }

    #[test]
    fn admissibility_examples() {
        let cfg = MonodromyConfig::default();
        let ramp = builtin::<f64>("scalar_ramp").unwrap();
        assert!(endpoint_admissibility(&ramp.hessian, 0.3, 1.5, &cfg).unwrap().admissible);
        let bad = endpoint_admissibility(&ramp.hessian, 0.3, 1.0, &cfg).unwrap();
        assert!(!bad.admissible);
        assert_eq!(bad.violations.len(), 1);
        assert_eq!(bad.violations[0].endpoint, "lambda_plus");
        assert_eq!(bad.violations[0].kernel_dim, 2);
        let w = builtin::<f64>("wiggle").unwrap();
        assert!(endpoint_admissibility(&w.hessian, 0.0, 0.5, &cfg).unwrap().admissible);
    }

    #[test]
    fn too_few_steps_rejected() {
        let cfg = MonodromyConfig { steps: 100, ..MonodromyConfig::default() };
        assert!(matches!(fundamental_solution(&scalar(1.0), 0.0, &cfg), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn stiff_coefficients_fail_the_doubling_check() {
        let cfg = MonodromyConfig { steps: 256, ..MonodromyConfig::default() };
        assert!(matches!(
            fundamental_solution(&scalar(60.0), 0.0, &cfg),
            Err(Error::IntegrationNotConverged { .. })
        ));
    }

    #[test]
    fn ramp_candidates_at_integers() {
        let cfg = MonodromyConfig::default();
        let ramp = builtin::<f64>("scalar_ramp").unwrap();
        let found = bifurcation_candidates(&ramp.hessian, 0.3, 2.4, 22, &cfg).unwrap();
        let lambdas: Vec<f64> = found.iter().map(|c| c.lambda).collect();
        assert_eq!(found.len(), 2, "{lambdas:?}");
        assert!((lambdas[0] - 1.0).abs() < 1e-6 && (lambdas[1] - 2.0).abs() < 1e-6);
    }
}
