//! Dirac spectra of flat spin tori `R^n / Z^n`.
//!
//! A torus is a Gram matrix `G` for the metric on `R^n / Z^n` plus a spin
//! structure `delta` in `{0,1}^n`, where `delta_i = 1` makes spinors
//! antiperiodic around the i-th generator. Eigenvalues come from the shifted
//! dual lattice `Z^n + delta/2` measured with `G^{-1}`.

mod lattice;

pub use lattice::{lattice_enumerate, LatticePoint};

use std::f64::consts::{PI, TAU};

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectrum_core::{canonical_window, SpectrumWindow};

/// Relative tolerance on the symmetry of a Gram matrix.
pub const GRAM_SYMMETRY_RTOL: f64 = 1e-12;
/// Eigenvalues within this relative distance of the cutoff are kept, so that
/// a multiplicity block is never split by rounding.
const CUTOFF_RTOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("torus dimension must be at least 1")]
    ZeroDimension,
    #[error("gram matrix must be {n}x{n}, got {rows}x{cols}")]
    GramShape { n: usize, rows: usize, cols: usize },
    #[error("gram matrix has a non-finite entry")]
    NonFinite,
    #[error("gram matrix is not symmetric at ({0},{1})")]
    NotSymmetric(usize, usize),
    #[error("gram matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("spin structure must have {n} entries, got {got}")]
    DeltaLength { n: usize, got: usize },
    #[error("spin structure entries must be 0 or 1, got {0}")]
    BadDelta(u8),
    #[error("map must be {n}x{n}, got {rows}x{cols}")]
    MapShape { n: usize, rows: usize, cols: usize },
    #[error("map has determinant {0}, expected 1")]
    NotUnimodular(i128),
    #[error("count must be positive")]
    ZeroCount,
}

/// A flat torus with a spin structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TorusRepr", into = "TorusRepr")]
pub struct FlatTorus {
    gram: DMatrix<f64>,
    delta: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TorusRepr {
    n: usize,
    gram: Vec<Vec<f64>>,
    delta: Vec<u8>,
}

impl TryFrom<TorusRepr> for FlatTorus {
    type Error = TorusError;

    fn try_from(r: TorusRepr) -> Result<Self, TorusError> {
        let cols = r.gram.first().map_or(0, Vec::len);
        if r.gram.len() != r.n || r.gram.iter().any(|row| row.len() != r.n) {
            return Err(TorusError::GramShape {
                n: r.n,
                rows: r.gram.len(),
                cols,
            });
        }
        let gram = DMatrix::from_fn(r.n, r.n, |i, j| r.gram[i][j]);
        FlatTorus::new(gram, r.delta)
    }
}

impl From<FlatTorus> for TorusRepr {
    fn from(t: FlatTorus) -> Self {
        let n = t.dim();
        TorusRepr {
            n,
            gram: (0..n)
                .map(|i| (0..n).map(|j| t.gram[(i, j)]).collect())
                .collect(),
            delta: t.delta,
        }
    }
}

impl FlatTorus {
    pub fn new(gram: DMatrix<f64>, delta: Vec<u8>) -> Result<Self, TorusError> {
        let n = delta.len();
        if gram.nrows() == 0 && n == 0 {
            return Err(TorusError::ZeroDimension);
        }
        if gram.nrows() != gram.ncols() {
            return Err(TorusError::GramShape {
                n: gram.nrows(),
                rows: gram.nrows(),
                cols: gram.ncols(),
            });
        }
        if gram.nrows() != n {
            return Err(TorusError::DeltaLength {
                n: gram.nrows(),
                got: n,
            });
        }
        if let Some(&bad) = delta.iter().find(|&&d| d > 1) {
            return Err(TorusError::BadDelta(bad));
        }
        if gram.iter().any(|x| !x.is_finite()) {
            return Err(TorusError::NonFinite);
        }
        let scale = gram.amax();
        for i in 0..n {
            for j in i + 1..n {
                if (gram[(i, j)] - gram[(j, i)]).abs() > GRAM_SYMMETRY_RTOL * scale {
                    return Err(TorusError::NotSymmetric(i, j));
                }
            }
        }
        let gram = (&gram + gram.transpose()) * 0.5;
        if Cholesky::new(gram.clone()).is_none() {
            return Err(TorusError::NotPositiveDefinite);
        }
        Ok(FlatTorus { gram, delta })
    }

    /// The cube `R^n / Z^n` with the Euclidean metric.
    pub fn standard(delta: Vec<u8>) -> Result<Self, TorusError> {
        let n = delta.len();
        FlatTorus::new(DMatrix::identity(n, n), delta)
    }

    pub fn dim(&self) -> usize {
        self.delta.len()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn delta(&self) -> &[u8] {
        &self.delta
    }

    pub fn inverse_gram(&self) -> DMatrix<f64> {
        Cholesky::new(self.gram.clone())
            .expect("validated on construction")
            .inverse()
    }

    /// Spinor rank `2^{floor(n/2)}`.
    pub fn spinor_rank(&self) -> usize {
        1 << (self.dim() / 2)
    }

    fn shift(&self) -> Vec<f64> {
        self.delta.iter().map(|&d| f64::from(d) / 2.0).collect()
    }
}

/// Canonical window of the Dirac spectrum holding at least `count`
/// eigenvalues on each side of zero. Whole multiplicity blocks are kept, so
/// the window may hold a few more.
pub fn torus_spectrum(torus: &FlatTorus, count: usize) -> Result<SpectrumWindow, TorusError> {
    if count == 0 {
        return Err(TorusError::ZeroCount);
    }
    let n = torus.dim();
    let q = torus.inverse_gram();
    let shift = torus.shift();
    let per_point = if n == 1 { 1 } else { torus.spinor_rank() / 2 };

    // Points needed: count / per_point for n >= 2, about 2 count for n = 1.
    let wanted = if n == 1 {
        2 * count + 1
    } else {
        count.div_ceil(per_point) + 1
    } as f64;
    let density = unit_ball_volume(n) * torus.gram.determinant().sqrt();
    let mut radius = (wanted / density).powf(1.0 / n as f64).max(0.5);

    let cutoff = loop {
        let points = lattice_enumerate(&q, &shift, radius);
        let mut positives = 0;
        let hit = points.iter().find(|p| {
            positives += positive_count(p, n, per_point);
            positives >= count
        });
        if let Some(p) = hit {
            break p.norm;
        }
        radius *= 1.25;
    };

    let points = lattice_enumerate(&q, &shift, cutoff * (1.0 + CUTOFF_RTOL));
    let mut eigs = Vec::new();
    for p in &points {
        if n == 1 {
            eigs.push(TAU * p.point[0] * q[(0, 0)].sqrt());
        } else if p.point.iter().all(|&x| x == 0.0) {
            eigs.extend(std::iter::repeat(0.0).take(torus.spinor_rank()));
        } else {
            let lambda = TAU * p.norm;
            for _ in 0..per_point {
                eigs.push(lambda);
                eigs.push(-lambda);
            }
        }
    }
    Ok(canonical_window(&eigs).expect("spectrum window is never empty"))
}

fn positive_count(p: &LatticePoint, n: usize, per_point: usize) -> usize {
    if n == 1 {
        usize::from(p.point[0] > 0.0)
    } else if p.norm > 0.0 {
        per_point
    } else {
        0
    }
}

fn unit_ball_volume(n: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = 2 pi / n V_{n-2}.
    let (mut v, start) = if n % 2 == 0 { (1.0, 2) } else { (2.0, 3) };
    let mut k = start;
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Pulls the torus back along the lattice automorphism `f`: the Gram matrix
/// becomes `f^T G f` and the spin structure `f^T delta mod 2`.
pub fn pullback(torus: &FlatTorus, f: &DMatrix<i64>) -> Result<FlatTorus, TorusError> {
    let n = torus.dim();
    if f.nrows() != n || f.ncols() != n {
        return Err(TorusError::MapShape {
            n,
            rows: f.nrows(),
            cols: f.ncols(),
        });
    }
    let det = integer_determinant(f);
    if det != 1 {
        return Err(TorusError::NotUnimodular(det));
    }
    let ff = f.map(|x| x as f64);
    let gram = ff.transpose() * &torus.gram * &ff;
    let delta = (0..n)
        .map(|i| {
            let s: i64 = (0..n).map(|j| f[(j, i)] * i64::from(torus.delta[j])).sum();
            s.rem_euclid(2) as u8
        })
        .collect();
    FlatTorus::new(gram, delta)
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn integer_determinant(f: &DMatrix<i64>) -> i128 {
    let n = f.nrows();
    assert_eq!(n, f.ncols(), "determinant needs a square matrix");
    if n == 0 {
        return 1;
    }
    let mut a: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| i128::from(f[(i, j)])).collect())
        .collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&r| a[r][k] != 0) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}
