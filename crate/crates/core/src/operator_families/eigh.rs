//! Dense Hermitian eigensolver.
//!
//! Householder reduction to a real symmetric tridiagonal matrix (after a
//! diagonal phase change), followed by implicit-shift QL iteration.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use super::HermitianMatrix;

const MAX_QL_SWEEPS: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EighError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not Hermitian: entry ({0},{1}) differs from its mirror by {2:e}")]
    NotHermitian(usize, usize, f64),
    #[error("matrix has a non-finite entry at ({0},{1})")]
    NonFinite(usize, usize),
    #[error("QL iteration did not converge for eigenvalue {0}")]
    NoConvergence(usize),
    #[error("empty matrix")]
    Empty,
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eigh(a: &HermitianMatrix) -> Result<Eigh, EighError> {
    let n = a.dim();
    if n == 0 {
        return Err(EighError::Empty);
    }
    let tri = tridiagonalize(a.as_matrix());
    let mut e = tri.real_off_diagonal();
    e.push(0.0);
    let mut d = tri.diag.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    tql(&mut d, &mut e, Some(&mut z))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |r, c| Complex64::new(z[(r, order[c])], 0.0));
    for mut col in vectors.column_iter_mut() {
        let mut v: Vec<Complex64> = col.iter().copied().collect();
        tri.back_transform(&mut v);
        col.copy_from_slice(&v);
    }
    Ok(Eigh { values, vectors })
}

/// Which end of the spectrum [`extreme_eigenpair`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumEnd {
    Lowest,
    Highest,
}

/// Lowest or highest eigenvalue with a unit eigenvector.
///
/// Cheaper than [`eigh`] when only one vector is needed: the vector comes
/// from inverse iteration on the tridiagonal form, shifted just outside the
/// spectrum so the factorisation stays definite.
pub fn extreme_eigenpair(
    a: &HermitianMatrix,
    end: SpectrumEnd,
) -> Result<(f64, Vec<Complex64>), EighError> {
    let n = a.dim();
    if n == 0 {
        return Err(EighError::Empty);
    }
    let tri = tridiagonalize(a.as_matrix());
    let off = tri.real_off_diagonal();
    let mut d = tri.diag.clone();
    let mut e = off.clone();
    e.push(0.0);
    tql(&mut d, &mut e, None)?;
    let (lambda, sign) = match end {
        SpectrumEnd::Lowest => (d.iter().copied().fold(f64::INFINITY, f64::min), 1.0),
        SpectrumEnd::Highest => (d.iter().copied().fold(f64::NEG_INFINITY, f64::max), -1.0),
    };
    // sign * (T - lambda) + delta is positive definite.
    let scale = tri
        .diag
        .iter()
        .chain(&off)
        .map(|x| x.abs())
        .fold(1.0, f64::max);
    let delta = 1e-10 * scale;
    let diag: Vec<f64> = tri
        .diag
        .iter()
        .map(|&x| sign * (x - lambda) + delta)
        .collect();
    let sub: Vec<f64> = off.iter().map(|&x| sign * x).collect();
    let mut x: Vec<f64> = (0..n).map(|k| 1.0 + 0.5 * (k as f64 * 0.7).sin()).collect();
    for _ in 0..INVERSE_ITERATIONS {
        solve_definite_tridiagonal(&diag, &sub, &mut x);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    let mut v: Vec<Complex64> = x.into_iter().map(|r| Complex64::new(r, 0.0)).collect();
    tri.back_transform(&mut v);
    Ok((lambda, v))
}

const INVERSE_ITERATIONS: usize = 4;

/// Solves `T x = b` in place for a positive definite symmetric tridiagonal
/// `T` by an `L D L^T` factorisation.
fn solve_definite_tridiagonal(diag: &[f64], sub: &[f64], b: &mut [f64]) {
    let n = diag.len();
    let mut piv = vec![0.0; n];
    piv[0] = diag[0];
    for i in 1..n {
        let l = sub[i - 1] / piv[i - 1];
        piv[i] = diag[i] - l * sub[i - 1];
        b[i] -= l * b[i - 1];
    }
    b[n - 1] /= piv[n - 1];
    for i in (0..n - 1).rev() {
        b[i] = (b[i] - sub[i] * b[i + 1]) / piv[i];
    }
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigvalsh(a: &HermitianMatrix) -> Result<Vec<f64>, EighError> {
    let n = a.dim();
    if n == 0 {
        return Err(EighError::Empty);
    }
    let tri = tridiagonalize(a.as_matrix());
    let mut d = tri.diag.clone();
    let mut e = tri.real_off_diagonal();
    e.push(0.0);
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Ascending eigenvalues of the real symmetric tridiagonal matrix with the
/// given diagonal and off-diagonal (`off.len() == diag.len() - 1`).
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>, EighError> {
    let n = diag.len();
    if n == 0 {
        return Err(EighError::Empty);
    }
    assert_eq!(off.len() + 1, n, "off-diagonal must have n - 1 entries");
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// `I - beta v v^*` acting on indices `offset..`.
struct Reflector {
    offset: usize,
    v: Vec<Complex64>,
    beta: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [Complex64]) {
        let tail = &mut x[self.offset..];
        let s: Complex64 = self
            .v
            .iter()
            .zip(tail.iter())
            .map(|(v, x)| v.conj() * x)
            .sum::<Complex64>()
            * self.beta;
        for (x, v) in tail.iter_mut().zip(&self.v) {
            *x -= v * s;
        }
    }
}

/// `A = Q D T_r D^* Q^*` with `T_r` real symmetric tridiagonal, `D` a
/// diagonal of phases and `Q` a product of reflectors.
struct Tridiagonal {
    reflectors: Vec<Reflector>,
    diag: Vec<f64>,
    off: Vec<Complex64>,
}

impl Tridiagonal {
    fn real_off_diagonal(&self) -> Vec<f64> {
        self.off.iter().map(|x| x.norm()).collect()
    }

    /// Maps an eigenvector of `T_r` to one of `A`.
    fn back_transform(&self, x: &mut [Complex64]) {
        // Rotate the complex off-diagonal onto the positive real axis.
        let mut phase = Complex64::new(1.0, 0.0);
        for i in 1..x.len() {
            let r = self.off[i - 1].norm();
            if r > 0.0 {
                phase *= self.off[i - 1] / r;
            }
            x[i] *= phase;
        }
        for h in self.reflectors.iter().rev() {
            h.apply(x);
        }
    }
}

fn tridiagonalize(a: &DMatrix<Complex64>) -> Tridiagonal {
    let n = a.nrows();
    let mut t = a.clone();
    let mut reflectors = Vec::new();
    let zero = Complex64::new(0.0, 0.0);

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut v: Vec<Complex64> = (0..m).map(|i| t[(k + 1 + i, k)]).collect();
        let xnorm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let tail = v[1..].iter().map(|x| x.norm_sqr()).sum::<f64>();
        if xnorm == 0.0 || tail == 0.0 {
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        v[0] += phase * xnorm;
        let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        let beta = 2.0 / vnorm2;

        // Left: rows k+1.., T <- T - beta v (v^* T).
        for c in k..n {
            let mut s = zero;
            for i in 0..m {
                s += v[i].conj() * t[(k + 1 + i, c)];
            }
            s *= beta;
            for i in 0..m {
                t[(k + 1 + i, c)] -= v[i] * s;
            }
        }
        // Right: columns k+1.., T <- T - beta (T v) v^*.
        for r in k..n {
            let mut s = zero;
            for i in 0..m {
                s += t[(r, k + 1 + i)] * v[i];
            }
            s *= beta;
            for i in 0..m {
                t[(r, k + 1 + i)] -= s * v[i].conj();
            }
        }
        reflectors.push(Reflector {
            offset: k + 1,
            v,
            beta,
        });
    }
    let diag = (0..n).map(|i| t[(i, i)].re).collect();
    let off = (0..n.saturating_sub(1)).map(|i| t[(i + 1, i)]).collect();
    Tridiagonal {
        reflectors,
        diag,
        off,
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. `e[i]` couples `i`
/// and `i + 1`; `e[n - 1]` is scratch. Rotations are accumulated into `z`.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut DMatrix<f64>>) -> Result<(), EighError> {
    let n = d.len();
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(EighError::NoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = z[(k, i + 1)];
                        z[(k, i + 1)] = s * z[(k, i)] + c * f;
                        z[(k, i)] = c * z[(k, i)] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
