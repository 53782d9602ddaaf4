//! Growth constants for Hermitian families and the eigenvalue-growth envelope.
//!
//! With the graph norm `|u|_Z = |u| + |A(t_lo) u|` anchored at the left end of
//! the interval,
//!
//! ```text
//! alpha = inf_t inf_{|u|_Z = 1} |u| + |A(t) u|
//! beta  = sup_t sup_{|u|_Z = 1} |A'(t) u|
//! C     = beta / alpha
//! ```
//!
//! and every eigenvalue branch obeys
//! `|lambda(t) - lambda(t0)| <= (1 + |lambda(t0)|) (exp(C |t - t0|) - 1)`.
//!
//! Both inner extrema are ratios of sums of norms. For a unit vector `u` they
//! only depend on the pair `(u* P u, u* Q u)` for two positive semidefinite
//! matrices `P`, `Q`, and the set of such pairs is convex (the numerical range
//! of `P + iQ`). The extrema are therefore found on its boundary, which is
//! traced by support points: extreme eigenvectors of `cos(theta) Q - sin(theta) P`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::operator_families::{
    extreme_eigenpair, EighError, HermitianMatrix, OperatorFamily, SpectrumEnd,
};

/// `sup_t (1 + |t|) / sqrt(1 + t^2)`, attained at `|t| = 1`.
pub const C0: f64 = std::f64::consts::SQRT_2;
/// Bound on `exp(C |t - t0|) - 1` inside one safe step.
pub const C1: f64 = 0.25;
/// Radius beyond which `|eta| / (1 + |eta|) > 1/2`; any value above 1 works.
pub const R: f64 = 2.0;
/// `min(1 / (R + 1), 1 / (2 C0))`.
pub const C2: f64 = 1.0 / 3.0;

/// Default number of grid points for [`family_constants`].
pub const DEFAULT_GRID_POINTS: usize = 64;

/// Boundary samples per numerical-range sweep.
const SWEEP_ANGLES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("interval [{0}, {1}] is degenerate or outside the family's domain")]
    BadInterval(f64, f64),
    #[error("need at least 2 grid points, got {0}")]
    TooFewGridPoints(usize),
    #[error("coercivity estimate {0} is not positive")]
    NonPositiveAlpha(f64),
    #[error(transparent)]
    Eigh(#[from] EighError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyConstants {
    pub alpha: f64,
    pub beta: f64,
    /// `beta / alpha`.
    pub c: f64,
    pub interval: (f64, f64),
    pub grid_points: usize,
}

/// Grid estimate of the family constants on `interval`.
pub fn family_constants<F: OperatorFamily + ?Sized>(
    family: &F,
    interval: (f64, f64),
    grid_points: usize,
) -> Result<FamilyConstants, GrowthError> {
    let (lo, hi) = interval;
    let (dlo, dhi) = family.interval();
    if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= dlo && hi <= dhi) {
        return Err(GrowthError::BadInterval(lo, hi));
    }
    if grid_points < 2 {
        return Err(GrowthError::TooFewGridPoints(grid_points));
    }
    let anchor_sq = family.eval(lo).square();
    let step = (hi - lo) / (grid_points - 1) as f64;
    let per_point: Vec<(f64, f64)> = (0..grid_points)
        .into_par_iter()
        .map(|i| {
            let t = if i + 1 == grid_points {
                hi
            } else {
                lo + step * i as f64
            };
            let a_sq = family.eval(t).square();
            let d_sq = family.derivative(t).square();
            let alpha = sweep(&anchor_sq, &a_sq, Extremum::Min, |x, y| {
                (1.0 + y.sqrt()) / (1.0 + x.sqrt())
            })?;
            let beta = sweep(&anchor_sq, &d_sq, Extremum::Max, |x, y| {
                y.sqrt() / (1.0 + x.sqrt())
            })?;
            Ok((alpha, beta))
        })
        .collect::<Result<_, EighError>>()?;

    let alpha = per_point.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let beta = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    if !(alpha > 0.0) {
        return Err(GrowthError::NonPositiveAlpha(alpha));
    }
    Ok(FamilyConstants {
        alpha,
        beta,
        c: beta / alpha,
        interval,
        grid_points,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Extremum {
    Min,
    Max,
}

/// Extremum of `objective(u* P u, u* Q u)` over unit vectors, for an
/// objective that decreases in the first argument and increases in the second.
///
/// The joint numerical range of `(P, Q)` is convex, and the extremum lies on
/// the part of its boundary traced by extreme eigenvectors of
/// `cos(theta) Q - sin(theta) P`, `theta` in `[0, pi/2]`. That arc is sampled,
/// refined around the best sample, and chords between samples cover flat faces.
fn sweep<G>(
    p: &HermitianMatrix,
    q: &HermitianMatrix,
    which: Extremum,
    objective: G,
) -> Result<f64, EighError>
where
    G: Fn(f64, f64) -> f64,
{
    let end = match which {
        Extremum::Min => SpectrumEnd::Lowest,
        Extremum::Max => SpectrumEnd::Highest,
    };
    let support = |theta: f64| -> Result<(f64, f64), EighError> {
        let (_, u) = extreme_eigenpair(&q.combine(theta.cos(), p, -theta.sin()), end)?;
        let x = quadratic_form(p, &u);
        let y = quadratic_form(q, &u);
        Ok((x.max(0.0), y.max(0.0)))
    };
    // Work with a quantity to minimise in both cases.
    let sign = if which == Extremum::Min { 1.0 } else { -1.0 };
    let cost = |pt: (f64, f64)| sign * objective(pt.0, pt.1);

    let dtheta = std::f64::consts::FRAC_PI_2 / SWEEP_ANGLES as f64;
    let points = (0..=SWEEP_ANGLES)
        .map(|k| support(dtheta * k as f64))
        .collect::<Result<Vec<_>, _>>()?;
    let (k_best, mut best) = points
        .iter()
        .map(|&pt| cost(pt))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one angle");

    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let along = |s: f64| cost((a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1)));
        best = best.min(along(golden_section(along, 0.0, 1.0)));
    }

    let lo = dtheta * k_best.saturating_sub(1) as f64;
    let hi = dtheta * (k_best + 1).min(SWEEP_ANGLES) as f64;
    let refine = |theta: f64| support(theta).map(cost).unwrap_or(f64::INFINITY);
    let theta = golden_section(refine, lo, hi);
    best = best.min(cost(support(theta)?));
    Ok(sign * best)
}

fn quadratic_form(m: &HermitianMatrix, u: &[num_complex::Complex64]) -> f64 {
    let a = m.as_matrix();
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = num_complex::Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += a[(i, j)] * u[j];
        }
        acc += (u[i].conj() * row).re;
    }
    acc
}

/// Minimiser of a unimodal function on `[a, b]`.
fn golden_section<G: Fn(f64) -> f64>(f: G, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// `(1 + |lambda0|) (exp(C dt) - 1)`.
pub fn growth_envelope(lambda0: f64, c: f64, dt: f64) -> f64 {
    (1.0 + lambda0.abs()) * (c * dt).exp_m1()
}

/// `ln(min(C1, eps C2) + 1) / C`: a parameter step after which every
/// eigenvalue has moved by less than `eps` in arsinh scale.
pub fn safe_step(c: f64, eps: f64) -> f64 {
    debug_assert!(c > 0.0 && eps > 0.0);
    C1.min(eps * C2).ln_1p() / c
}
