//! Hermitian matrix families `t -> A(t)`.
//!
//! These are the finite-dimensional stand-ins for self-adjoint families with
//! a fixed domain: every member has the same dimension and the map is at
//! least continuously differentiable in `t`.

mod eigh;

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

pub use eigh::{
    eigh, eigvalsh, extreme_eigenpair, tridiagonal_eigenvalues, Eigh, EighError, SpectrumEnd,
};

use crate::spectrum_core::{canonical_window, SpectrumWindow};

/// Relative tolerance for the Hermitian check.
pub const HERMITIAN_RTOL: f64 = 1e-12;

/// A dense complex Hermitian matrix. Real symmetric matrices are stored with
/// zero imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    /// Validates `m` against its conjugate transpose and stores the exactly
    /// Hermitian part `(m + m^*) / 2`.
    pub fn new(m: DMatrix<Complex64>) -> Result<Self, EighError> {
        let (r, c) = m.shape();
        if r != c {
            return Err(EighError::NotSquare(r, c));
        }
        let mut scale = 0.0f64;
        for i in 0..r {
            for j in 0..c {
                let x = m[(i, j)];
                if !x.re.is_finite() || !x.im.is_finite() {
                    return Err(EighError::NonFinite(i, j));
                }
                scale = scale.max(x.norm());
            }
        }
        let tol = HERMITIAN_RTOL * scale.max(f64::MIN_POSITIVE);
        for i in 0..r {
            for j in i..c {
                let gap = (m[(i, j)] - m[(j, i)].conj()).norm();
                if gap > tol {
                    return Err(EighError::NotHermitian(i, j, gap));
                }
            }
        }
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Self(h))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self, EighError> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(if i == j { d[i] } else { 0.0 }, 0.0)
        }))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|x| x.im == 0.0)
    }

    /// `a * self + b * other`; real combinations of Hermitian matrices stay Hermitian.
    pub fn combine(&self, a: f64, other: &HermitianMatrix, b: f64) -> HermitianMatrix {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        HermitianMatrix(self.0.map(|x| x * a) + other.0.map(|x| x * b))
    }

    pub fn scale(&self, a: f64) -> HermitianMatrix {
        HermitianMatrix(self.0.map(|x| x * a))
    }

    /// `self * self`, which is Hermitian and positive semidefinite.
    pub fn square(&self) -> HermitianMatrix {
        let m = &self.0 * &self.0;
        HermitianMatrix((&m + m.adjoint()) * Complex64::new(0.5, 0.0))
    }

    /// Spectral norm, the largest eigenvalue magnitude.
    pub fn spectral_norm(&self) -> Result<f64, EighError> {
        let v = eigvalsh(self)?;
        Ok(v[0].abs().max(v[v.len() - 1].abs()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("parameter {t} outside [{lo}, {hi}]")]
    OutOfInterval { t: f64, lo: f64, hi: f64 },
    #[error("invalid interval [{0}, {1}]")]
    BadInterval(f64, f64),
    #[error("a family needs at least one matrix")]
    Empty,
    #[error(transparent)]
    Eigh(#[from] EighError),
}

/// A continuously differentiable Hermitian family on a closed interval.
///
/// Implementations must be reentrant; samples may be evaluated from several
/// threads at once.
pub trait OperatorFamily: Send + Sync {
    fn interval(&self) -> (f64, f64);

    fn dim(&self) -> usize;

    /// `A(t)`. Callers stay inside [`interval`](Self::interval).
    fn eval(&self, t: f64) -> HermitianMatrix;

    /// `A'(t)`. Defaults to a central difference with step `1e-6 (1 + |t|)`,
    /// falling back to one-sided differences at the interval ends.
    fn derivative(&self, t: f64) -> HermitianMatrix {
        finite_difference(self, t, 1e-6 * (1.0 + t.abs()))
    }
}

/// Difference quotient of `family` at `t` with step `h`, staying inside the interval.
pub fn finite_difference<F: OperatorFamily + ?Sized>(
    family: &F,
    t: f64,
    h: f64,
) -> HermitianMatrix {
    let (lo, hi) = family.interval();
    let a = (t - h).max(lo);
    let b = (t + h).min(hi);
    if b <= a {
        return HermitianMatrix::zeros(family.dim());
    }
    family
        .eval(b)
        .combine(1.0 / (b - a), &family.eval(a), -1.0 / (b - a))
}

fn check_t<F: OperatorFamily + ?Sized>(family: &F, t: f64) -> Result<(), FamilyError> {
    let (lo, hi) = family.interval();
    if t.is_finite() && t >= lo && t <= hi {
        Ok(())
    } else {
        Err(FamilyError::OutOfInterval { t, lo, hi })
    }
}

/// Canonical spectrum window of `A(t)`.
pub fn sample_spectrum<F: OperatorFamily + ?Sized>(
    family: &F,
    t: f64,
) -> Result<SpectrumWindow, FamilyError> {
    check_t(family, t)?;
    let eigs = eigvalsh(&family.eval(t))?;
    Ok(canonical_window(&eigs).expect("a nonempty matrix has eigenvalues"))
}

/// `t -> (1 - t) A0 + t A1` on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LinearFamily {
    a0: HermitianMatrix,
    a1: HermitianMatrix,
    slope: HermitianMatrix,
}

impl LinearFamily {
    pub fn new(a0: HermitianMatrix, a1: HermitianMatrix) -> Result<Self, FamilyError> {
        if a0.dim() != a1.dim() {
            return Err(FamilyError::DimensionMismatch(a0.dim(), a1.dim()));
        }
        if a0.dim() == 0 {
            return Err(FamilyError::Empty);
        }
        let slope = a1.combine(1.0, &a0, -1.0);
        Ok(Self { a0, a1, slope })
    }

    pub fn start(&self) -> &HermitianMatrix {
        &self.a0
    }

    pub fn end(&self) -> &HermitianMatrix {
        &self.a1
    }
}

pub fn linear_family(
    a0: HermitianMatrix,
    a1: HermitianMatrix,
) -> Result<LinearFamily, FamilyError> {
    LinearFamily::new(a0, a1)
}

impl OperatorFamily for LinearFamily {
    fn interval(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn dim(&self) -> usize {
        self.a0.dim()
    }

    fn eval(&self, t: f64) -> HermitianMatrix {
        self.a0.combine(1.0 - t, &self.a1, t)
    }

    fn derivative(&self, _t: f64) -> HermitianMatrix {
        self.slope.clone()
    }
}

/// Piecewise linear interpolation through `nodes` at `t = 0, 1, ..., m - 1`.
/// A single node gives the constant family on `[0, 0]`.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearFamily {
    nodes: Vec<HermitianMatrix>,
}

impl PiecewiseLinearFamily {
    pub fn new(nodes: Vec<HermitianMatrix>) -> Result<Self, FamilyError> {
        let first = nodes.first().ok_or(FamilyError::Empty)?;
        let n = first.dim();
        if n == 0 {
            return Err(FamilyError::Empty);
        }
        if let Some(bad) = nodes.iter().find(|m| m.dim() != n) {
            return Err(FamilyError::DimensionMismatch(n, bad.dim()));
        }
        Ok(Self { nodes })
    }

    fn segment(&self, t: f64) -> (usize, f64) {
        let last = self.nodes.len() - 1;
        if last == 0 {
            return (0, 0.0);
        }
        let i = (t.floor().max(0.0) as usize).min(last - 1);
        (i, t - i as f64)
    }
}

impl OperatorFamily for PiecewiseLinearFamily {
    fn interval(&self) -> (f64, f64) {
        (0.0, (self.nodes.len() - 1) as f64)
    }

    fn dim(&self) -> usize {
        self.nodes[0].dim()
    }

    fn eval(&self, t: f64) -> HermitianMatrix {
        let (i, s) = self.segment(t);
        if self.nodes.len() == 1 {
            return self.nodes[0].clone();
        }
        self.nodes[i].combine(1.0 - s, &self.nodes[i + 1], s)
    }

    /// Right derivative at the nodes.
    fn derivative(&self, t: f64) -> HermitianMatrix {
        if self.nodes.len() == 1 {
            return HermitianMatrix::zeros(self.dim());
        }
        let (i, _) = self.segment(t);
        self.nodes[i + 1].combine(1.0, &self.nodes[i], -1.0)
    }
}

type Evaluator = dyn Fn(f64) -> HermitianMatrix + Send + Sync;

/// A family given by closures. Without an explicit derivative the default
/// finite difference is used.
#[derive(Clone)]
pub struct FnFamily {
    interval: (f64, f64),
    dim: usize,
    eval: Arc<Evaluator>,
    derivative: Option<Arc<Evaluator>>,
}

impl FnFamily {
    pub fn new<F>(interval: (f64, f64), eval: F) -> Result<Self, FamilyError>
    where
        F: Fn(f64) -> HermitianMatrix + Send + Sync + 'static,
    {
        let (lo, hi) = interval;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(FamilyError::BadInterval(lo, hi));
        }
        let dim = eval(lo).dim();
        if dim == 0 {
            return Err(FamilyError::Empty);
        }
        Ok(Self {
            interval,
            dim,
            eval: Arc::new(eval),
            derivative: None,
        })
    }

    pub fn with_derivative<D>(mut self, derivative: D) -> Self
    where
        D: Fn(f64) -> HermitianMatrix + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }
}

impl std::fmt::Debug for FnFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnFamily")
            .field("interval", &self.interval)
            .field("dim", &self.dim)
            .field("exact_derivative", &self.derivative.is_some())
            .finish()
    }
}

impl OperatorFamily for FnFamily {
    fn interval(&self) -> (f64, f64) {
        self.interval
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64) -> HermitianMatrix {
        (self.eval)(t)
    }

    fn derivative(&self, t: f64) -> HermitianMatrix {
        match &self.derivative {
            Some(d) => d(t),
            None => finite_difference(self, t, 1e-6 * (1.0 + t.abs())),
        }
    }
}

/// The same family traversed backwards: `t -> A(lo + hi - t)`.
#[derive(Debug, Clone)]
pub struct Reversed<F>(pub F);

impl<F: OperatorFamily> OperatorFamily for Reversed<F> {
    fn interval(&self) -> (f64, f64) {
        self.0.interval()
    }

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval(&self, t: f64) -> HermitianMatrix {
        let (lo, hi) = self.0.interval();
        self.0.eval(lo + hi - t)
    }

    fn derivative(&self, t: f64) -> HermitianMatrix {
        let (lo, hi) = self.0.interval();
        self.0.derivative(lo + hi - t).scale(-1.0)
    }
}

/// The family restricted to a sub-interval.
#[derive(Debug, Clone)]
pub struct Restricted<F> {
    inner: F,
    interval: (f64, f64),
}

impl<F: OperatorFamily> Restricted<F> {
    pub fn new(inner: F, lo: f64, hi: f64) -> Result<Self, FamilyError> {
        let (a, b) = inner.interval();
        if !(lo <= hi && lo >= a && hi <= b) {
            return Err(FamilyError::BadInterval(lo, hi));
        }
        Ok(Self {
            inner,
            interval: (lo, hi),
        })
    }
}

impl<F: OperatorFamily> OperatorFamily for Restricted<F> {
    fn interval(&self) -> (f64, f64) {
        self.interval
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, t: f64) -> HermitianMatrix {
        self.inner.eval(t)
    }

    fn derivative(&self, t: f64) -> HermitianMatrix {
        self.inner.derivative(t)
    }
}

/// `t -> A(lo + (hi - lo) phi(s))` with `s = (t - lo) / (hi - lo)`, where
/// `phi` is an increasing bijection of `[0, 1]` given with its derivative.
#[derive(Clone)]
pub struct Reparametrized<F> {
    inner: F,
    phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    dphi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl<F: OperatorFamily> Reparametrized<F> {
    pub fn new<P, D>(inner: F, phi: P, dphi: D) -> Self
    where
        P: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            inner,
            phi: Arc::new(phi),
            dphi: Arc::new(dphi),
        }
    }

    fn map(&self, t: f64) -> (f64, f64) {
        let (lo, hi) = self.inner.interval();
        let len = hi - lo;
        if len == 0.0 {
            return (lo, 0.0);
        }
        let s = ((t - lo) / len).clamp(0.0, 1.0);
        (lo + len * (self.phi)(s), (self.dphi)(s))
    }
}

impl<F: OperatorFamily> OperatorFamily for Reparametrized<F> {
    fn interval(&self) -> (f64, f64) {
        self.inner.interval()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, t: f64) -> HermitianMatrix {
        self.inner.eval(self.map(t).0)
    }

    fn derivative(&self, t: f64) -> HermitianMatrix {
        let (u, du) = self.map(t);
        self.inner.derivative(u).scale(du)
    }
}

impl<T: OperatorFamily + ?Sized> OperatorFamily for Box<T> {
    fn interval(&self) -> (f64, f64) {
        (**self).interval()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, t: f64) -> HermitianMatrix {
        (**self).eval(t)
    }

    fn derivative(&self, t: f64) -> HermitianMatrix {
        (**self).derivative(t)
    }
}

impl<T: OperatorFamily + ?Sized> OperatorFamily for &T {
    fn interval(&self) -> (f64, f64) {
        (**self).interval()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn eval(&self, t: f64) -> HermitianMatrix {
        (**self).eval(t)
    }

    fn derivative(&self, t: f64) -> HermitianMatrix {
        (**self).derivative(t)
    }
}
