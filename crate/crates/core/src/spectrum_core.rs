//! Finite windows of ordered spectral functions.
//!
//! An ordered spectral function is a non-decreasing map `Z -> R` listing a
//! discrete spectrum with multiplicity. Such functions are bi-infinite; a
//! [`SpectrumWindow`] keeps a contiguous, index-anchored piece of one. The
//! integers act on spectra by relabelling, `(u.k)(j) = u(j + k)`, and two
//! metrics are provided: the sup-arsinh distance [`d_a`] between windows on the
//! same index range and its shift quotient [`quotient_distance`].

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used when grouping eigenvalues into multiplicity blocks.
pub const MULTIPLICITY_RTOL: f64 = 1e-9;

/// True when `a` and `b` are the same eigenvalue up to [`MULTIPLICITY_RTOL`].
pub fn same_eigenvalue(a: f64, b: f64) -> bool {
    (a - b).abs() <= MULTIPLICITY_RTOL * 1f64.max(a.abs()).max(b.abs())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("a spectrum window needs at least one value")]
    Empty,
    #[error("value at position {0} is not finite")]
    NonFinite(usize),
    #[error("values must be non-decreasing (position {0})")]
    NotSorted(usize),
    #[error("index ranges differ: {left:?} vs {right:?}")]
    RangeMismatch { left: (i64, i64), right: (i64, i64) },
}

/// A contiguous, non-decreasing piece of an ordered spectral function.
///
/// `values[p]` is the eigenvalue at index `index_lo + p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub struct SpectrumWindow {
    index_lo: i64,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindowRepr {
    index_lo: i64,
    values: Vec<f64>,
}

impl TryFrom<WindowRepr> for SpectrumWindow {
    type Error = SpectrumError;

    fn try_from(repr: WindowRepr) -> Result<Self, Self::Error> {
        SpectrumWindow::new(repr.index_lo, repr.values)
    }
}

impl From<SpectrumWindow> for WindowRepr {
    fn from(w: SpectrumWindow) -> Self {
        WindowRepr {
            index_lo: w.index_lo,
            values: w.values,
        }
    }
}

impl SpectrumWindow {
    pub fn new(index_lo: i64, values: Vec<f64>) -> Result<Self, SpectrumError> {
        if values.is_empty() {
            return Err(SpectrumError::Empty);
        }
        if let Some(p) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectrumError::NonFinite(p));
        }
        if let Some(p) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(SpectrumError::NotSorted(p + 1));
        }
        Ok(Self { index_lo, values })
    }

    pub fn index_lo(&self) -> i64 {
        self.index_lo
    }

    pub fn index_hi(&self) -> i64 {
        self.index_lo + self.values.len() as i64 - 1
    }

    pub fn indices(&self) -> RangeInclusive<i64> {
        self.index_lo..=self.index_hi()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; windows are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn contains_index(&self, j: i64) -> bool {
        self.indices().contains(&j)
    }

    /// The eigenvalue at index `j`, if `j` lies in the window.
    pub fn get(&self, j: i64) -> Option<f64> {
        if self.contains_index(j) {
            Some(self.values[(j - self.index_lo) as usize])
        } else {
            None
        }
    }

    /// Iterator over `(index, value)` pairs in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(p, &v)| (self.index_lo + p as i64, v))
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// The shift action `(u.k)(j) = u(j + k)`: the value at index `j` moves to `j - k`.
    pub fn shift(&self, k: i64) -> SpectrumWindow {
        SpectrumWindow {
            index_lo: self.index_lo - k,
            values: self.values.clone(),
        }
    }

    /// The sub-window on indices `lo..=hi`; both must lie in the window.
    pub fn restrict(&self, lo: i64, hi: i64) -> SpectrumWindow {
        assert!(self.contains_index(lo) && self.contains_index(hi) && lo <= hi);
        let start = (lo - self.index_lo) as usize;
        let end = (hi - self.index_lo) as usize;
        SpectrumWindow {
            index_lo: lo,
            values: self.values[start..=end].to_vec(),
        }
    }

    /// The contiguous run of values lying in `[a, b]`, in order and with multiplicity.
    pub fn spectral_part(&self, a: f64, b: f64) -> Vec<f64> {
        spectral_part(self, a, b)
    }
}

/// Sorts a finite multiset of eigenvalues and anchors index 0 at the smallest
/// element `>= 0`. With no nonnegative element the window ends at index -1.
pub fn canonical_window(eigs: &[f64]) -> Result<SpectrumWindow, SpectrumError> {
    if eigs.is_empty() {
        return Err(SpectrumError::Empty);
    }
    if let Some(p) = eigs.iter().position(|v| !v.is_finite()) {
        return Err(SpectrumError::NonFinite(p));
    }
    let mut values = eigs.to_vec();
    values.sort_by(f64::total_cmp);
    // `-0.0` counts as zero and therefore as nonnegative.
    let negatives = values.partition_point(|&v| v < 0.0);
    SpectrumWindow::new(-(negatives as i64), values)
}

pub fn shift(u: &SpectrumWindow, k: i64) -> SpectrumWindow {
    u.shift(k)
}

/// `sup_j |arsinh u(j) - arsinh v(j)|` over a common index range.
pub fn d_a(u: &SpectrumWindow, v: &SpectrumWindow) -> Result<f64, SpectrumError> {
    if u.index_lo != v.index_lo || u.len() != v.len() {
        return Err(SpectrumError::RangeMismatch {
            left: (u.index_lo, u.index_hi()),
            right: (v.index_lo, v.index_hi()),
        });
    }
    Ok(sup_arsinh_gap(&u.values, &v.values))
}

pub(crate) fn sup_arsinh_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.asinh() - y.asinh()).abs())
        .fold(0.0, f64::max)
}

/// Result of [`quotient_distance`].
///
/// `shift` is the relabelling `k` for which `u(j)` is compared with `v(j + k)`,
/// i.e. `u` is closest to `v.k`. `distance` is `f64::INFINITY` when no shift
/// leaves enough overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfDistance {
    pub shift: i64,
    pub distance: f64,
}

impl ConfDistance {
    pub fn is_finite(&self) -> bool {
        self.distance.is_finite()
    }
}

/// Indices `j` of `u` whose partner `j + k` lies in `v`.
pub(crate) fn overlap(u: &SpectrumWindow, v: &SpectrumWindow, k: i64) -> Option<(i64, i64)> {
    let lo = u.index_lo.max(v.index_lo - k);
    let hi = u.index_hi().min(v.index_hi() - k);
    (lo <= hi).then_some((lo, hi))
}

/// Default minimum overlap: half the shorter window, rounded up.
pub fn default_min_overlap(u: &SpectrumWindow, v: &SpectrumWindow) -> usize {
    u.len().min(v.len()).div_ceil(2)
}

/// Shift-quotient distance with the default minimum overlap.
pub fn quotient_distance(u: &SpectrumWindow, v: &SpectrumWindow, max_shift: u64) -> ConfDistance {
    quotient_distance_with(u, v, max_shift, default_min_overlap(u, v))
}

/// Minimises the restricted sup-arsinh distance between `u` and `v.k` over
/// `|k| <= max_shift`, counting only shifts whose overlap has at least
/// `min_overlap` indices. Ties go to the smallest `|k|`, then the smaller `k`.
pub fn quotient_distance_with(
    u: &SpectrumWindow,
    v: &SpectrumWindow,
    max_shift: u64,
    min_overlap: usize,
) -> ConfDistance {
    let max_shift = max_shift.min(i64::MAX as u64) as i64;
    let min_overlap = min_overlap.max(1) as i64;
    let mut best = ConfDistance {
        shift: 0,
        distance: f64::INFINITY,
    };
    for k in shift_order(max_shift) {
        let Some((lo, hi)) = overlap(u, v, k) else {
            continue;
        };
        if hi - lo + 1 < min_overlap {
            continue;
        }
        let a = &u.values[(lo - u.index_lo) as usize..=(hi - u.index_lo) as usize];
        let b = &v.values[(lo + k - v.index_lo) as usize..=(hi + k - v.index_lo) as usize];
        let dist = sup_arsinh_gap(a, b);
        if dist < best.distance {
            best = ConfDistance {
                shift: k,
                distance: dist,
            };
        }
    }
    best
}

/// 0, -1, 1, -2, 2, ... up to `max`.
pub(crate) fn shift_order(max: i64) -> impl Iterator<Item = i64> {
    std::iter::once(0).chain((1..=max).flat_map(|k| [-k, k]))
}

/// The contiguous subsequence of `u` lying in `[a, b]`.
pub fn spectral_part(u: &SpectrumWindow, a: f64, b: f64) -> Vec<f64> {
    let lo = u.values.partition_point(|&x| x < a);
    let hi = u.values.partition_point(|&x| x <= b);
    if lo >= hi {
        Vec::new()
    } else {
        u.values[lo..hi].to_vec()
    }
}
