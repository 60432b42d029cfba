//! Spectral flow of paths of symmetric matrices.
//!
//! Two independent routes are provided. [`sfl_partition`] counts eigenvalues
//! in `[0, a_i]` at the ends of an adaptive partition on which each level
//! `a_i` stays out of the spectrum. [`sfl_crossing`] locates the crossings and
//! sums the signatures of the crossing forms, with the endpoint corrections
//! that match the partition count (a zero eigenvalue counts as nonnegative).

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    count_real_eigenvalues_below_minus_one, min_abs, sorted_eigenvalues, symmetric_eigen, zero_threshold,
};
use crate::scalar::{max_abs, tmax, tmin, Real};

/// A continuous path `lambda -> L_lambda` of symmetric matrices on `[a, b]`.
///
/// Evaluation must be deterministic: equal parameters give identical matrices.
pub trait OperatorPath<T: Real>: Sync {
    fn interval(&self) -> (T, T);

    fn dim(&self) -> usize;

    fn eval(&self, lambda: T) -> Result<DMatrix<T>>;

    /// `d/dlambda L_lambda`, when the path provides it.
    fn derivative(&self, _lambda: T) -> Option<Result<DMatrix<T>>> {
        None
    }
}

impl<T: Real, P: OperatorPath<T> + ?Sized> OperatorPath<T> for &P {
    fn interval(&self) -> (T, T) {
        (**self).interval()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, lambda: T) -> Result<DMatrix<T>> {
        (**self).eval(lambda)
    }
    fn derivative(&self, lambda: T) -> Option<Result<DMatrix<T>>> {
        (**self).derivative(lambda)
    }
}

type MatrixFn<T> = Box<dyn Fn(T) -> DMatrix<T> + Send + Sync>;

/// Path given by closures.
pub struct FnPath<T: Real> {
    a: T,
    b: T,
    dim: usize,
    eval: MatrixFn<T>,
    derivative: Option<MatrixFn<T>>,
}

fn check_interval<T: Real>(a: T, b: T) -> Result<()> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("path interval [{a}, {b}] is empty or not finite")));
    }
    Ok(())
}

impl<T: Real> FnPath<T> {
    pub fn new(a: T, b: T, eval: impl Fn(T) -> DMatrix<T> + Send + Sync + 'static) -> Result<Self> {
        check_interval(a, b)?;
        let dim = eval(a).nrows();
        Ok(Self { a, b, dim, eval: Box::new(eval), derivative: None })
    }

    pub fn with_derivative(mut self, d: impl Fn(T) -> DMatrix<T> + Send + Sync + 'static) -> Self {
        self.derivative = Some(Box::new(d));
        self
    }
}

fn checked<T: Real>(m: DMatrix<T>, dim: usize) -> Result<DMatrix<T>> {
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "path evaluated to a {}x{} matrix, expected {dim}x{dim}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

impl<T: Real> OperatorPath<T> for FnPath<T> {
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, lambda: T) -> Result<DMatrix<T>> {
        checked((self.eval)(lambda), self.dim)
    }
    fn derivative(&self, lambda: T) -> Option<Result<DMatrix<T>>> {
        self.derivative.as_ref().map(|d| checked(d(lambda), self.dim))
    }
}

/// Matrix polynomial path `sum_p lambda^p C_p`.
#[derive(Clone, Debug)]
pub struct PolynomialPath<T: Real> {
    a: T,
    b: T,
    coeffs: Vec<DMatrix<T>>,
}

impl<T: Real> PolynomialPath<T> {
    pub fn new(a: T, b: T, coeffs: Vec<DMatrix<T>>) -> Result<Self> {
        check_interval(a, b)?;
        let d = coeffs.first().map(|c| c.nrows()).ok_or_else(|| {
            Error::InvalidArgument("polynomial path needs at least one coefficient".into())
        })?;
        for c in &coeffs {
            checked(c.clone(), d)?;
        }
        Ok(Self { a, b, coeffs })
    }
}

impl<T: Real> OperatorPath<T> for PolynomialPath<T> {
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }
    fn eval(&self, lambda: T) -> Result<DMatrix<T>> {
        let d = self.dim();
        Ok(self.coeffs.iter().rev().fold(DMatrix::zeros(d, d), |acc, c| acc * lambda + c))
    }
    fn derivative(&self, lambda: T) -> Option<Result<DMatrix<T>>> {
        let d = self.dim();
        let out = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(DMatrix::zeros(d, d), |acc, (p, c)| acc * lambda + c * T::from_count(p));
        Some(Ok(out))
    }
}

/// `L_lambda + delta I`.
pub struct ShiftedPath<P> {
    inner: P,
    delta: f64,
}

impl<P> ShiftedPath<P> {
    pub fn new(inner: P, delta: f64) -> Self {
        Self { inner, delta }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl<T: Real, P: OperatorPath<T>> OperatorPath<T> for ShiftedPath<P> {
    fn interval(&self) -> (T, T) {
        self.inner.interval()
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, lambda: T) -> Result<DMatrix<T>> {
        let d = self.dim();
        Ok(self.inner.eval(lambda)? + DMatrix::identity(d, d) * T::lit(self.delta))
    }
    fn derivative(&self, lambda: T) -> Option<Result<DMatrix<T>>> {
        self.inner.derivative(lambda)
    }
}

/// Restriction of a path to `[a, b]`.
pub struct SubPath<T, P> {
    inner: P,
    a: T,
    b: T,
}

impl<T: Real, P: OperatorPath<T>> SubPath<T, P> {
    pub fn new(inner: P, a: T, b: T) -> Result<Self> {
        check_interval(a, b)?;
        let (lo, hi) = inner.interval();
        if a < lo || b > hi {
            return Err(Error::OutOfRange { value: if a < lo { a.as_f64() } else { b.as_f64() }, lo: lo.as_f64(), hi: hi.as_f64() });
        }
        Ok(Self { inner, a, b })
    }
}

impl<T: Real, P: OperatorPath<T>> OperatorPath<T> for SubPath<T, P> {
    fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, lambda: T) -> Result<DMatrix<T>> {
        self.inner.eval(lambda)
    }
    fn derivative(&self, lambda: T) -> Option<Result<DMatrix<T>>> {
        self.inner.derivative(lambda)
    }
}

/// Settings for [`sfl_partition`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SflConfig {
    /// Relative zero threshold, scaled by `max(1, max |eigenvalue|)`.
    pub tol_zero: f64,
    pub initial_intervals: usize,
    pub max_depth: usize,
    pub require_invertible_endpoints: bool,
}

impl Default for SflConfig {
    fn default() -> Self {
        Self { tol_zero: 1e-8, initial_intervals: 32, max_depth: 50, require_invertible_endpoints: true }
    }
}

struct EigenCache<'p, T: Real, P: ?Sized> {
    path: &'p P,
    values: HashMap<u64, Vec<T>>,
}

impl<'p, T: Real, P: OperatorPath<T> + ?Sized> EigenCache<'p, T, P> {
    fn new(path: &'p P) -> Self {
        Self { path, values: HashMap::new() }
    }

    fn get(&mut self, lambda: T) -> Result<&[T]> {
        let key = lambda.as_f64().to_bits();
        if !self.values.contains_key(&key) {
            let m = self.path.eval(lambda)?;
            if m.nrows() != self.path.dim() {
                return Err(Error::DimensionMismatch("path changed dimension".into()));
            }
            self.values.insert(key, sorted_eigenvalues(&m)?);
        }
        Ok(&self.values[&key])
    }
}

fn check_endpoint<T: Real>(values: &[T], lambda: T, tol: T) -> Result<()> {
    let m = min_abs(values);
    if m <= zero_threshold(values, tol) {
        return Err(Error::EndpointNotInvertible { lambda: lambda.as_f64(), min_abs: m.as_f64() });
    }
    Ok(())
}

/// Eigenvalues in `[0, level]`, with numerical zeros counted as nonnegative.
fn count_in_window<T: Real>(values: &[T], level: T, tol: T) -> i64 {
    let thr = zero_threshold(values, tol);
    values.iter().filter(|&&e| e >= -thr && e <= level).count() as i64
}

/// Picks a level `a > 0` that the sorted eigenvalues of the three samples
/// stay clear of, or `None` when the interval must be bisected.
fn choose_level<T: Real>(l: &[T], m: &[T], r: &[T]) -> Option<T> {
    let mut motion = T::zero();
    for k in 0..l.len() {
        motion = tmax(motion, tmax((l[k] - m[k]).abs(), (m[k] - r[k]).abs()));
    }
    let two = T::lit(2.0);
    let mut top = T::zero();
    let mut bounded = false;
    for k in 0..l.len() {
        let lo = tmin(l[k], tmin(m[k], r[k]));
        let hi = tmax(l[k], tmax(m[k], r[k]));
        if hi <= T::zero() {
            continue;
        }
        let lo = tmax(lo, T::zero());
        if lo > top {
            bounded = true;
            let clearance = (lo - top) / two;
            if motion < clearance / two {
                return Some(top + clearance);
            }
        }
        top = tmax(top, hi);
    }
    if bounded {
        None
    } else {
        Some(top + tmax(T::one(), motion * T::lit(4.0)))
    }
}

/// Spectral flow by adaptive partition counting.
pub fn sfl_partition<T: Real, P: OperatorPath<T> + ?Sized>(path: &P, cfg: &SflConfig) -> Result<i64> {
    let (a, b) = path.interval();
    check_interval(a, b)?;
    let tol = T::floor_tol(cfg.tol_zero);
    let mut cache = EigenCache::new(path);
    if cfg.require_invertible_endpoints {
        check_endpoint(cache.get(a)?, a, tol)?;
        check_endpoint(cache.get(b)?, b, tol)?;
    }
    let n0 = cfg.initial_intervals.max(1);
    let node = |i: usize| if i == n0 { b } else { a + (b - a) * T::from_count(i) / T::from_count(n0) };
    let mut stack: Vec<(T, T, usize)> = (0..n0).rev().map(|i| (node(i), node(i + 1), 0)).collect();
    let mut total = 0i64;
    while let Some((l, r, depth)) = stack.pop() {
        let mid = l + (r - l) / T::lit(2.0);
        let el = cache.get(l)?.to_vec();
        let em = cache.get(mid)?.to_vec();
        let er = cache.get(r)?.to_vec();
        match choose_level(&el, &em, &er) {
            Some(level) => total += count_in_window(&er, level, tol) - count_in_window(&el, level, tol),
            None => {
                if depth >= cfg.max_depth || !(l < mid && mid < r) {
                    return Err(Error::RefinementDepth { depth, lambda: mid.as_f64() });
                }
                stack.push((mid, r, depth + 1));
                stack.push((l, mid, depth + 1));
            }
        }
    }
    Ok(total)
}

/// Settings for [`sfl_crossing`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossingConfig {
    pub coarse_cells: usize,
    /// Crossing resolution relative to the interval length.
    pub tol_lambda: f64,
    /// Relative floor of the kernel threshold.
    pub kernel_tol: f64,
    /// Crossing forms with an eigenvalue below `regular_tol * max(1, |L'|)` are degenerate.
    pub regular_tol: f64,
    /// Maximum number of path evaluations.
    pub budget: usize,
}

impl Default for CrossingConfig {
    fn default() -> Self {
        Self { coarse_cells: 64, tol_lambda: 1e-10, kernel_tol: 1e-10, regular_tol: 1e-8, budget: 50_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrossingLocation {
    Start,
    Interior,
    End,
}

/// One crossing `lambda*` with its kernel and crossing form.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingRecord<T: Real> {
    pub lambda: T,
    pub location: CrossingLocation,
    pub kernel_dim: usize,
    /// Orthonormal kernel basis, one column per kernel vector.
    pub kernel_basis: DMatrix<T>,
    pub crossing_form: DMatrix<T>,
    pub signature: i64,
    pub negative_index: usize,
    pub regular: bool,
    /// Contribution of this crossing to the spectral flow.
    pub contribution: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossingFlow<T: Real> {
    pub sfl: i64,
    pub crossings: Vec<CrossingRecord<T>>,
}

#[derive(Clone)]
struct Node<T: Real> {
    lambda: T,
    values: Vec<T>,
    lip: T,
}

impl<T: Real> Node<T> {
    fn min_abs(&self) -> T {
        min_abs(&self.values)
    }

    fn count_below(&self, thr: T) -> i64 {
        self.values.iter().filter(|&&e| e < -thr).count() as i64
    }

    fn noise(&self) -> T {
        T::eps() * T::lit(64.0) * tmax(T::one(), max_abs(self.values.iter().copied()))
    }
}

fn inf_norm<T: Real>(m: &DMatrix<T>) -> T {
    m.row_iter()
        .map(|r| r.iter().fold(T::zero(), |acc, x| acc + x.abs()))
        .fold(T::zero(), tmax)
}

fn derivative_of<T: Real, P: OperatorPath<T> + ?Sized>(path: &P, lambda: T) -> Result<DMatrix<T>> {
    path.derivative(lambda).ok_or(Error::MissingDerivative)?
}

struct NodeSource<'p, T: Real, P: ?Sized> {
    path: &'p P,
    evaluations: usize,
    budget: usize,
    _t: std::marker::PhantomData<T>,
}

impl<'p, T: Real, P: OperatorPath<T> + ?Sized> NodeSource<'p, T, P> {
    fn node(&mut self, lambda: T) -> Result<Node<T>> {
        self.evaluations += 1;
        if self.evaluations > self.budget {
            return Err(Error::CrossingSearchExhausted { budget: self.budget });
        }
        let values = sorted_eigenvalues(&checked(self.path.eval(lambda)?, self.path.dim())?)?;
        let lip = inf_norm(&derivative_of(self.path, lambda)?);
        Ok(Node { lambda, values, lip })
    }
}

fn flagged<T: Real>(l: &Node<T>, r: &Node<T>) -> bool {
    let width = r.lambda - l.lambda;
    let moved = l.count_below(l.noise()) != r.count_below(r.noise());
    let reach = T::lit(2.0) * tmax(l.lip, r.lip) * width;
    moved || tmin(l.min_abs(), r.min_abs()) <= reach
}

/// Spectral flow as a sum over crossings of crossing-form signatures.
///
/// Fails with [`Error::IrregularCrossing`] when a crossing form is degenerate;
/// [`delta_regularize`] then finds a shift with only regular crossings.
pub fn sfl_crossing<T: Real, P: OperatorPath<T> + ?Sized>(path: &P, cfg: &CrossingConfig) -> Result<CrossingFlow<T>> {
    let (a, b) = path.interval();
    check_interval(a, b)?;
    if path.derivative(a).is_none() {
        return Err(Error::MissingDerivative);
    }
    let mut src = NodeSource { path, evaluations: 0, budget: cfg.budget, _t: std::marker::PhantomData };
    let tol_lambda = T::lit(cfg.tol_lambda) * (b - a);
    let n0 = cfg.coarse_cells.max(1);
    let mut nodes = Vec::with_capacity(n0 + 1);
    for i in 0..=n0 {
        let lambda = if i == n0 { b } else { a + (b - a) * T::from_count(i) / T::from_count(n0) };
        nodes.push(src.node(lambda)?);
    }
    // Breadth-first refinement of flagged cells down to the resolution.
    let mut cells: Vec<(Node<T>, Node<T>)> = nodes.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
    let mut finest: Vec<(Node<T>, Node<T>)> = Vec::new();
    while !cells.is_empty() {
        let mut next = Vec::new();
        for (l, r) in cells {
            if !flagged(&l, &r) {
                continue;
            }
            let mid = l.lambda + (r.lambda - l.lambda) / T::lit(2.0);
            if r.lambda - l.lambda <= tol_lambda || !(l.lambda < mid && mid < r.lambda) {
                finest.push((l, r));
                continue;
            }
            let m = src.node(mid)?;
            next.push((l, m.clone()));
            next.push((m, r));
        }
        cells = next;
    }
    finest.sort_by(|x, y| x.0.lambda.partial_cmp(&y.0.lambda).expect("finite"));

    let mut clusters: Vec<Vec<Node<T>>> = Vec::new();
    for (l, r) in finest {
        match clusters.last_mut() {
            Some(c) if c.last().map(|n| n.lambda) == Some(l.lambda) => c.push(r),
            _ => clusters.push(vec![l, r]),
        }
    }

    let mut crossings = Vec::new();
    for cluster in clusters {
        if let Some(rec) = resolve_cluster(path, &cluster, a, b, cfg)? {
            crossings.push(rec);
        }
    }
    let sfl = crossings.iter().map(|c| c.contribution).sum();
    Ok(CrossingFlow { sfl, crossings })
}

fn resolve_cluster<T: Real, P: OperatorPath<T> + ?Sized>(
    path: &P,
    cluster: &[Node<T>],
    a: T,
    b: T,
    cfg: &CrossingConfig,
) -> Result<Option<CrossingRecord<T>>> {
    let first = &cluster[0];
    let last = &cluster[cluster.len() - 1];
    let location = match (first.lambda == a, last.lambda == b) {
        (true, true) => return Err(Error::CrossingsTooClose { lambda: a.as_f64() }),
        (true, false) => CrossingLocation::Start,
        (false, true) => CrossingLocation::End,
        (false, false) => CrossingLocation::Interior,
    };
    let star = match location {
        CrossingLocation::Start => first,
        CrossingLocation::End => last,
        CrossingLocation::Interior => cluster
            .iter()
            .min_by(|x, y| x.min_abs().partial_cmp(&y.min_abs()).expect("finite"))
            .expect("nonempty cluster"),
    };
    let lambda = star.lambda;
    let width = last.lambda - first.lambda;
    let lip = cluster.iter().map(|n| n.lip).fold(T::zero(), tmax);
    let scale = tmax(T::one(), max_abs(star.values.iter().copied()));
    let thr = T::floor_tol(cfg.kernel_tol) * scale + T::lit(4.0) * lip * width;

    let eig = symmetric_eigen(&path.eval(lambda)?)?;
    let cols: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i].abs() <= thr).collect();
    let outer_left = if location == CrossingLocation::Start { first.count_below(thr) } else { first.count_below(first.noise()) };
    let outer_right = if location == CrossingLocation::End { last.count_below(thr) } else { last.count_below(last.noise()) };
    let observed = outer_left - outer_right;
    if cols.is_empty() {
        if observed != 0 {
            return Err(Error::CrossingsTooClose { lambda: lambda.as_f64() });
        }
        return Ok(None);
    }
    let basis = DMatrix::from_fn(eig.vectors.nrows(), cols.len(), |r, c| eig.vectors[(r, cols[c])]);
    let ldot = derivative_of(path, lambda)?;
    let gamma = {
        let g = basis.transpose() * &ldot * &basis;
        (&g + g.transpose()) * T::lit(0.5)
    };
    let gvals = sorted_eigenvalues(&gamma)?;
    let reg_tol = T::floor_tol(cfg.regular_tol) * tmax(T::one(), inf_norm(&ldot));
    let gmin = min_abs(&gvals);
    if gmin <= reg_tol {
        return Err(Error::IrregularCrossing { lambda: lambda.as_f64(), min_abs: gmin.as_f64() });
    }
    let negative_index = gvals.iter().filter(|&&g| g < T::zero()).count();
    let positive_index = gvals.len() - negative_index;
    let signature = positive_index as i64 - negative_index as i64;
    let contribution = match location {
        CrossingLocation::Start => -(negative_index as i64),
        CrossingLocation::Interior => signature,
        CrossingLocation::End => positive_index as i64,
    };
    if contribution != observed {
        return Err(Error::CrossingsTooClose { lambda: lambda.as_f64() });
    }
    Ok(Some(CrossingRecord {
        lambda,
        location,
        kernel_dim: cols.len(),
        kernel_basis: basis,
        crossing_form: gamma,
        signature,
        negative_index,
        regular: true,
        contribution,
    }))
}

/// Outcome of [`delta_regularize`]: the accepted shift and the crossing data
/// of `L_lambda + delta I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Regularized<T: Real> {
    pub delta: f64,
    pub flow: CrossingFlow<T>,
}

/// Finds `delta` in `{0} U {eps 2^-j : j = 1..=40}` such that `L + delta I`
/// has only regular crossings. `delta = 0` is tried only for invertible endpoints.
pub fn delta_regularize<T: Real, P: OperatorPath<T> + ?Sized>(
    path: &P,
    eps: f64,
    cfg: &CrossingConfig,
) -> Result<Regularized<T>> {
    let (a, b) = path.interval();
    let tol = T::floor_tol(SflConfig::default().tol_zero);
    let mut gap = f64::INFINITY;
    let mut endpoints_invertible = true;
    for lambda in [a, b] {
        let values = sorted_eigenvalues(&path.eval(lambda)?)?;
        let thr = zero_threshold(&values, tol);
        for e in values {
            if e.abs() > thr {
                gap = gap.min(e.abs().as_f64());
            } else {
                endpoints_invertible = false;
            }
        }
    }
    if !(eps > 0.0) || eps >= gap / 2.0 {
        return Err(Error::InvalidArgument(format!(
            "shift bound {eps} must be positive and below half the smallest nonzero endpoint eigenvalue ({})",
            gap / 2.0
        )));
    }
    let candidates = endpoints_invertible
        .then_some(0.0)
        .into_iter()
        .chain((1..=40).map(|j| eps * 0.5f64.powi(j)));
    let mut tried = Vec::new();
    for delta in candidates {
        tried.push(delta);
        match sfl_crossing(&ShiftedPath::new(path, delta), cfg) {
            Ok(flow) => return Ok(Regularized { delta, flow }),
            Err(
                Error::IrregularCrossing { .. }
                | Error::CrossingsTooClose { .. }
                | Error::CrossingSearchExhausted { .. },
            ) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RegularizationExhausted { tried })
}

/// Mod-two spectral flow computed two ways.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Parity {
    /// Additive value in `{0, 1}`.
    pub parity: u8,
    /// Multiplicative form `(-1)^parity`.
    pub sign: i8,
    /// Leray-Schauder degree of `M L_a`.
    pub degree_a: i8,
    /// Leray-Schauder degree of `M L_b`.
    pub degree_b: i8,
    pub sfl: i64,
}

/// Degree of `x -> M x` for invertible `M` close to a compact perturbation of
/// the identity: `(-1)^(#real eigenvalues of M - I below -1)`.
pub fn degree<T: Real>(m: &DMatrix<T>) -> Result<i8> {
    let k = m - DMatrix::identity(m.nrows(), m.ncols());
    Ok(if count_real_eigenvalues_below_minus_one(&k)? % 2 == 0 { 1 } else { -1 })
}

/// Degrees of `M L_a` and `M L_b` for the parametrix `M`.
pub fn parametrix_degrees<T: Real, P: OperatorPath<T> + ?Sized>(path: &P, parametrix: &DMatrix<T>) -> Result<(i8, i8)> {
    let (a, b) = path.interval();
    if parametrix.nrows() != path.dim() || parametrix.ncols() != path.dim() {
        return Err(Error::DimensionMismatch("parametrix size differs from the path".into()));
    }
    Ok((degree(&(parametrix * path.eval(a)?))?, degree(&(parametrix * path.eval(b)?))?))
}

/// Parity with the identity parametrix.
pub fn parity<T: Real, P: OperatorPath<T> + ?Sized>(path: &P, cfg: &SflConfig) -> Result<Parity> {
    parity_with_parametrix(path, &DMatrix::identity(path.dim(), path.dim()), cfg)
}

/// Parity from the degree route, cross-checked against the spectral flow mod 2.
pub fn parity_with_parametrix<T: Real, P: OperatorPath<T> + ?Sized>(
    path: &P,
    parametrix: &DMatrix<T>,
    cfg: &SflConfig,
) -> Result<Parity> {
    let (a, b) = path.interval();
    let tol = T::floor_tol(cfg.tol_zero);
    for lambda in [a, b] {
        check_endpoint(&sorted_eigenvalues(&path.eval(lambda)?)?, lambda, tol)?;
    }
    let (degree_a, degree_b) = parametrix_degrees(path, parametrix)?;
    let parity = u8::from(degree_a != degree_b);
    let sfl = sfl_partition(path, &SflConfig { require_invertible_endpoints: true, ..*cfg })?;
    let sfl_mod_two = sfl.rem_euclid(2) as u8;
    if parity != sfl_mod_two {
        return Err(Error::ParityDisagreement { degree: parity, sfl_mod_two });
    }
    Ok(Parity { parity, sign: if parity == 0 { 1 } else { -1 }, degree_a, degree_b, sfl })
}

/// Verifies the endpoint ordering `L_a >= M_a`, `L_b <= M_b` and returns
/// `(sfl(L), sfl(M))` after checking `sfl(L) <= sfl(M)`.
pub fn check_comparison<T: Real, P: OperatorPath<T> + ?Sized, Q: OperatorPath<T> + ?Sized>(
    l: &P,
    m: &Q,
    cfg: &SflConfig,
) -> Result<(i64, i64)> {
    if l.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!("paths of dimension {} and {}", l.dim(), m.dim())));
    }
    let (a, b) = l.interval();
    if m.interval() != (a, b) {
        return Err(Error::InvalidArgument("paths must share their parameter interval".into()));
    }
    let tol = T::floor_tol(cfg.tol_zero);
    for (name, lambda, diff) in [("a", a, l.eval(a)? - m.eval(a)?), ("b", b, m.eval(b)? - l.eval(b)?)] {
        let values = sorted_eigenvalues(&diff)?;
        let lowest = values.first().copied().unwrap_or_else(T::zero);
        let scale = tmax(T::one(), max_abs(l.eval(lambda)?.iter().copied()));
        if lowest < -tol * scale {
            return Err(Error::ComparisonOrdering { endpoint: name, min_eigenvalue: lowest.as_f64() });
        }
    }
    let sfl_l = sfl_partition(l, cfg)?;
    let sfl_m = sfl_partition(m, cfg)?;
    if sfl_l > sfl_m {
        return Err(Error::ComparisonFailed { sfl_l, sfl_m });
    }
    Ok((sfl_l, sfl_m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, f: fn(f64) -> f64, d: fn(f64) -> f64) -> FnPath<f64> {
        FnPath::new(a, b, move |l| DMatrix::from_element(1, 1, f(l)))
            .unwrap()
            .with_derivative(move |l| DMatrix::from_element(1, 1, d(l)))
    }

    fn diag(values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
    }

    #[test]
    fn partition_examples() {
        let cfg = SflConfig::default();
        let constant = FnPath::new(0.0, 1.0, |_| diag(&[2.0, -1.0])).unwrap();
        assert_eq!(sfl_partition(&constant, &cfg).unwrap(), 0);
        let up = scalar(-1.0, 1.0, |l| l, |_| 1.0);
        assert_eq!(sfl_partition(&up, &cfg).unwrap(), 1);
        let down = scalar(-1.0, 1.0, |l| -l, |_| -1.0);
        assert_eq!(sfl_partition(&down, &cfg).unwrap(), -1);
    }

    #[test]
    fn partition_rejects_singular_endpoints() {
        let p = scalar(0.0, 1.0, |l| l, |_| 1.0);
        assert!(matches!(
            sfl_partition(&p, &SflConfig::default()),
            Err(Error::EndpointNotInvertible { .. })
        ));
    }

    #[test]
    fn partition_equals_morse_difference() {
        let p = PolynomialPath::new(
            -1.0,
            2.0,
            vec![
                DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, -2.0, 0.1, 0.0, 0.1, 0.5]),
                DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.3, 0.0, 2.0, 0.0, 0.3, 0.0, -0.7]),
            ],
        )
        .unwrap();
        let ma = crate::linalg::morse_index(&p.eval(-1.0).unwrap(), 1e-8).unwrap() as i64;
        let mb = crate::linalg::morse_index(&p.eval(2.0).unwrap(), 1e-8).unwrap() as i64;
        assert_eq!(sfl_partition(&p, &SflConfig::default()).unwrap(), ma - mb);
    }

    #[test]
    fn crossing_examples() {
        let cfg = CrossingConfig::default();
        let up = sfl_crossing(&scalar(-1.0, 1.0, |l| l, |_| 1.0), &cfg).unwrap();
        assert_eq!(up.sfl, 1);
        assert_eq!(up.crossings.len(), 1);
        let c = &up.crossings[0];
        assert!(c.lambda.abs() < 1e-9);
        assert_eq!(c.crossing_form[(0, 0)], 1.0);
        assert_eq!(c.signature, 1);
        let down = sfl_crossing(&scalar(-1.0, 1.0, |l| -l, |_| -1.0), &cfg).unwrap();
        assert_eq!(down.sfl, -1);
        assert_eq!(down.crossings[0].signature, -1);
    }

    #[test]
    fn endpoint_crossings_follow_the_counting_convention() {
        let cfg = CrossingConfig::default();
        let loose = SflConfig { require_invertible_endpoints: false, ..SflConfig::default() };
        let cases: [(f64, f64, fn(f64) -> f64, fn(f64) -> f64); 4] = [
            (0.5, 2.0, |l| l - 0.5, |_| 1.0),
            (0.5, 2.0, |l| 0.5 - l, |_| -1.0),
            (-2.0, 0.5, |l| l - 0.5, |_| 1.0),
            (-2.0, 0.5, |l| 0.5 - l, |_| -1.0),
        ];
        let expected = [0, -1, 1, 0];
        for ((a, b, f, d), want) in cases.into_iter().zip(expected) {
            let p = scalar(a, b, f, d);
            let flow = sfl_crossing(&p, &cfg).unwrap();
            assert_eq!(flow.sfl, want, "[{a}, {b}]");
            assert_eq!(sfl_partition(&p, &loose).unwrap(), want);
            assert_eq!(flow.crossings.len(), 1);
            assert_ne!(flow.crossings[0].location, CrossingLocation::Interior);
        }
    }

    #[test]
    fn touching_crossing_is_irregular_and_regularizes() {
        let p = scalar(-1.0, 1.0, |l| l * l, |l| 2.0 * l);
        let cfg = CrossingConfig::default();
        assert!(matches!(sfl_crossing(&p, &cfg), Err(Error::IrregularCrossing { .. })));
        let reg = delta_regularize(&p, 0.25, &cfg).unwrap();
        assert!(reg.delta > 0.0);
        assert_eq!(reg.flow.sfl, 0);
        assert!(reg.flow.crossings.is_empty());
    }

    #[test]
    fn regular_path_keeps_zero_shift() {
        let reg = delta_regularize(&scalar(-1.0, 1.0, |l| l, |_| 1.0), 0.25, &CrossingConfig::default()).unwrap();
        assert_eq!(reg.delta, 0.0);
        assert_eq!(reg.flow.sfl, 1);
    }

    #[test]
    fn constant_kernel_is_shifted_away() {
        let p = FnPath::new(-1.0, 1.0, |l| diag(&[l, 0.0])).unwrap().with_derivative(|_| diag(&[1.0, 0.0]));
        let cfg = CrossingConfig { budget: 5_000, ..CrossingConfig::default() };
        let reg = delta_regularize(&p, 0.25, &cfg).unwrap();
        assert!(reg.delta > 0.0);
        let shifted = ShiftedPath::new(&p, reg.delta);
        assert_eq!(reg.flow.sfl, sfl_partition(&shifted, &SflConfig::default()).unwrap());
        assert_eq!(reg.flow.sfl, 1);
    }

    #[test]
    fn shift_bound_is_checked() {
        let p = scalar(-1.0, 1.0, |l| l, |_| 1.0);
        assert!(matches!(
            delta_regularize(&p, 0.6, &CrossingConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn crossing_needs_derivative() {
        let p = FnPath::new(-1.0, 1.0, |l| DMatrix::from_element(1, 1, l)).unwrap();
        assert!(matches!(sfl_crossing(&p, &CrossingConfig::default()), Err(Error::MissingDerivative)));
    }

    #[test]
    fn parity_examples() {
        let cfg = SflConfig::default();
        let constant = FnPath::new(-1.0, 1.0, |_| diag(&[1.0, -2.0])).unwrap();
        assert_eq!(parity(&constant, &cfg).unwrap().parity, 0);
        let p = FnPath::new(-1.0, 1.0, |l| diag(&[l, 1.0])).unwrap();
        let par = parity(&p, &cfg).unwrap();
        assert_eq!(par.parity, 1);
        assert_eq!(par.sign, -1);
        assert_eq!((par.degree_a, par.degree_b), (-1, 1));
    }

    #[test]
    fn projection_model_degrees() {
        // P+ - P- + lambda P0 with ranks 3, 3, 1.
        let p = FnPath::new(-1.0, 1.0, |l| diag(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0, l])).unwrap();
        let parametrix = p.eval(1.0).unwrap();
        let par = parity_with_parametrix(&p, &parametrix, &SflConfig::default()).unwrap();
        assert_eq!((par.degree_b, par.degree_a), (1, -1));
        assert_eq!(par.parity, 1);
        assert_eq!(par.sign, -1);
    }

    #[test]
    fn comparison_examples() {
        let cfg = SflConfig::default();
        let l = scalar(-1.0, 1.0, |_| -0.5, |_| 0.0);
        let m = scalar(-1.0, 1.0, |x| x, |_| 1.0);
        assert_eq!(check_comparison(&l, &m, &cfg).unwrap(), (0, 1));
        assert_eq!(check_comparison(&m, &m, &cfg).unwrap(), (1, 1));
        let bad_l = scalar(-1.0, 1.0, |x| x + 0.5, |_| 1.0);
        let bad_m = scalar(-1.0, 1.0, |x| x - 0.5, |_| 1.0);
        assert!(matches!(
            check_comparison(&bad_l, &bad_m, &cfg),
            Err(Error::ComparisonOrdering { endpoint: "b", .. })
        ));
    }

    #[test]
    fn sub_and_shifted_paths() {
        let p = scalar(-1.0, 1.0, |l| l, |_| 1.0);
        let cfg = SflConfig::default();
        assert_eq!(sfl_partition(&SubPath::new(&p, -1.0, -0.5).unwrap(), &cfg).unwrap(), 0);
        assert_eq!(sfl_partition(&SubPath::new(&p, -0.5, 1.0).unwrap(), &cfg).unwrap(), 1);
        assert_eq!(sfl_partition(&ShiftedPath::new(&p, 0.25), &cfg).unwrap(), 1);
        assert!(SubPath::new(&p, -2.0, 0.0).is_err());
    }
}
