//! Points of a shifted integer lattice inside an ellipsoid.

use nalgebra::{Cholesky, DMatrix, Dyn};

/// A point `xi = integer + shift` with its quadratic norm `sqrt(xi^T Q xi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub integer: Vec<i64>,
    pub point: Vec<f64>,
    pub norm: f64,
}

/// Relative slack on the enumeration bounds; the final filter uses the exact radius.
const BOUND_SLACK: f64 = 1e-9;

/// Every `xi` in `Z^n + shift` with `sqrt(xi^T Q xi) <= radius`, where `Q` is
/// `inverse_gram`, sorted by norm and then lexicographically by integer part.
///
/// Enumeration is depth-first over coordinates (Fincke-Pohst), using the
/// decomposition `xi^T Q xi = sum_i d_i (xi_i + sum_{j>i} m_ij xi_j)^2`.
///
/// # Panics
/// If `inverse_gram` is not square, does not match `shift`, or is not positive definite.
pub fn lattice_enumerate(
    inverse_gram: &DMatrix<f64>,
    shift: &[f64],
    radius: f64,
) -> Vec<LatticePoint> {
    let n = shift.len();
    assert_eq!(
        inverse_gram.shape(),
        (n, n),
        "quadratic form must be {n}x{n}"
    );
    if !(radius >= 0.0) || n == 0 {
        return Vec::new();
    }
    let chol = Cholesky::<f64, Dyn>::new(inverse_gram.clone())
        .expect("quadratic form must be positive definite");
    // Q = L L^T, so xi^T Q xi = |L^T xi|^2 with L^T upper triangular.
    let r = chol.l().transpose();
    let d: Vec<f64> = (0..n).map(|i| r[(i, i)] * r[(i, i)]).collect();
    let mu = DMatrix::from_fn(n, n, |i, j| if j > i { r[(i, j)] / r[(i, i)] } else { 0.0 });

    let budget = radius * radius * (1.0 + BOUND_SLACK) + BOUND_SLACK;
    let mut found = Vec::new();
    let mut xi = vec![0.0; n];
    let mut ints = vec![0i64; n];
    descend(
        n - 1,
        0.0,
        budget,
        &d,
        &mu,
        shift,
        &mut xi,
        &mut ints,
        &mut found,
    );

    let mut points: Vec<LatticePoint> = found
        .into_iter()
        .filter_map(|integer| {
            let point: Vec<f64> = integer
                .iter()
                .zip(shift)
                .map(|(&m, &s)| m as f64 + s)
                .collect();
            let norm = quadratic_norm(inverse_gram, &point);
            (norm <= radius).then_some(LatticePoint {
                integer,
                point,
                norm,
            })
        })
        .collect();
    points.sort_by(|a, b| {
        a.norm
            .total_cmp(&b.norm)
            .then_with(|| a.integer.cmp(&b.integer))
    });
    points
}

#[allow(clippy::too_many_arguments)]
fn descend(
    i: usize,
    used: f64,
    budget: f64,
    d: &[f64],
    mu: &DMatrix<f64>,
    shift: &[f64],
    xi: &mut [f64],
    ints: &mut [i64],
    out: &mut Vec<Vec<i64>>,
) {
    let n = d.len();
    let centre: f64 = -(i + 1..n).map(|j| mu[(i, j)] * xi[j]).sum::<f64>();
    let room = (budget - used).max(0.0);
    let half_width = (room / d[i]).sqrt();
    let lo = (centre - half_width - shift[i]).ceil() as i64;
    let hi = (centre + half_width - shift[i]).floor() as i64;
    for m in lo..=hi {
        let x = m as f64 + shift[i];
        let dev = x - centre;
        let next = used + d[i] * dev * dev;
        if next > budget {
            continue;
        }
        xi[i] = x;
        ints[i] = m;
        if i == 0 {
            out.push(ints.to_vec());
        } else {
            descend(i - 1, next, budget, d, mu, shift, xi, ints, out);
        }
    }
}

pub(crate) fn quadratic_norm(q: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += x[i] * q[(i, j)] * x[j];
        }
    }
    acc.max(0.0).sqrt()
}
