//! Aligning nearby spectrum windows by an integer relabelling.
//!
//! Two spectra that are close in the quotient metric differ, index by index,
//! by a translation `j -> j + k` once `k` is chosen correctly. Below the
//! evenly-covered radius of a window that `k` is unique; above it several
//! translations can fit and the alignment is reported as ambiguous instead of
//! picking one.
//!
//! The shift convention matches [`quotient_distance`](crate::spectrum_core::quotient_distance):
//! a match with shift `k` pairs `u(j)` with `v(j + k)`.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::spectrum_core::{overlap, same_eigenvalue, shift_order, SpectrumWindow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchError {
    #[error("eps must be positive and finite, got {0}")]
    BadEps(f64),
    #[error("no shift within +/-{max_shift} keeps every matched eigenvalue within eps")]
    NoMatch { max_shift: i64 },
    #[error("shifts {0} and {1} both match; eps exceeds the evenly-covered radius")]
    Ambiguous(i64, i64),
    #[error("pairs do not form a bijection from a contiguous source block: {0}")]
    NotBijective(String),
    #[error("pair with source {0} is not flagged as within eps")]
    BandNotEstablished(i64),
    #[error("window must contain index 0 and a distinct eigenvalue on each side of it")]
    WindowTooSmall,
}

/// Outcome of a successful window alignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftMatch {
    pub shift: i64,
    /// `sup |arsinh u(j) - arsinh v(j + shift)|` over `matched_range`.
    pub certified_sup: f64,
    /// Indices of `u` that took part in the comparison.
    pub matched_range: (i64, i64),
}

impl ShiftMatch {
    pub fn matched_indices(&self) -> RangeInclusive<i64> {
        self.matched_range.0..=self.matched_range.1
    }
}

/// One assignment `source -> target` together with whether it respects the
/// arsinh eps-band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub source: i64,
    pub target: i64,
    pub within_eps: bool,
}

/// Replaces a bijection from a contiguous block onto a set of targets by the
/// unique increasing bijection onto the same image.
///
/// Every input pair must carry `within_eps`. If the bijection kept each pair of
/// two non-decreasing sequences within an arsinh eps-band, the increasing one
/// does too, since swapping an inverted pair never widens the larger of the two
/// gaps.
pub fn monotone_rearrange(pairs: &[Pair]) -> Result<Vec<(i64, i64)>, MatchError> {
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let mut sources: Vec<i64> = pairs.iter().map(|p| p.source).collect();
    let mut targets: Vec<i64> = pairs.iter().map(|p| p.target).collect();
    sources.sort_unstable();
    targets.sort_unstable();
    if let Some(w) = sources.windows(2).find(|w| w[1] != w[0] + 1) {
        let what = if w[0] == w[1] {
            format!("source {} appears twice", w[0])
        } else {
            format!("sources jump from {} to {}", w[0], w[1])
        };
        return Err(MatchError::NotBijective(what));
    }
    if let Some(w) = targets.windows(2).find(|w| w[0] == w[1]) {
        return Err(MatchError::NotBijective(format!(
            "target {} appears twice",
            w[0]
        )));
    }
    if let Some(p) = pairs.iter().find(|p| !p.within_eps) {
        return Err(MatchError::BandNotEstablished(p.source));
    }
    Ok(sources.into_iter().zip(targets).collect())
}

/// Indices whose arsinh value sits more than `eps` inside the window's arsinh range.
fn guarded_interior(w: &SpectrumWindow, eps: f64) -> Option<(i64, i64)> {
    let lo = w.first().asinh() + eps;
    let hi = w.last().asinh() - eps;
    let start = w.values().partition_point(|v| v.asinh() <= lo);
    let end = w.values().partition_point(|v| v.asinh() < hi);
    (start < end).then(|| (w.index_lo() + start as i64, w.index_lo() + end as i64 - 1))
}

fn check_eps(eps: f64) -> Result<(), MatchError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(MatchError::BadEps(eps))
    }
}

fn restricted_sup(u: &SpectrumWindow, v: &SpectrumWindow, k: i64, lo: i64, hi: i64) -> f64 {
    (lo..=hi)
        .map(|j| {
            let a = u.get(j).expect("index inside u");
            let b = v.get(j + k).expect("index inside v");
            (a.asinh() - b.asinh()).abs()
        })
        .fold(0.0, f64::max)
}

/// Aligns two truncated windows.
///
/// Only indices of `u` inside its eps guard band whose partners lie inside the
/// guard band of `v` are compared, and a candidate shift needs at least half
/// of the smaller guarded interior to overlap. Every `|k| <= max_shift` is
/// tried; exactly one may qualify.
pub fn match_windows(
    u: &SpectrumWindow,
    v: &SpectrumWindow,
    eps: f64,
    max_shift: u64,
) -> Result<ShiftMatch, MatchError> {
    check_eps(eps)?;
    let max_shift = max_shift.min(i64::MAX as u64) as i64;
    let none = MatchError::NoMatch { max_shift };
    let (Some(iu), Some(iv)) = (guarded_interior(u, eps), guarded_interior(v, eps)) else {
        return Err(none);
    };
    let gu = u.restrict(iu.0, iu.1);
    let gv = v.restrict(iv.0, iv.1);
    let min_overlap = gu.len().min(gv.len()).div_ceil(2) as i64;

    let candidates: Vec<i64> = shift_order(max_shift).collect();
    let mut hits: Vec<ShiftMatch> = candidates
        .par_iter()
        .filter_map(|&k| {
            let (lo, hi) = overlap(&gu, &gv, k)?;
            if hi - lo + 1 < min_overlap {
                return None;
            }
            let sup = restricted_sup(&gu, &gv, k, lo, hi);
            (sup < eps).then_some(ShiftMatch {
                shift: k,
                certified_sup: sup,
                matched_range: (lo, hi),
            })
        })
        .collect();
    hits.sort_by_key(|m| m.shift);
    match hits.len() {
        0 => Err(none),
        1 => Ok(hits.pop().unwrap()),
        _ => Err(MatchError::Ambiguous(hits[0].shift, hits[1].shift)),
    }
}

/// Aligns two windows that each hold an entire (finite) spectrum.
///
/// Nothing lies beyond either end, so every index must be matched and the only
/// admissible shift is `v.index_lo - u.index_lo`.
pub fn match_complete(
    u: &SpectrumWindow,
    v: &SpectrumWindow,
    eps: f64,
) -> Result<ShiftMatch, MatchError> {
    check_eps(eps)?;
    let k = v.index_lo() - u.index_lo();
    if u.len() != v.len() {
        return Err(MatchError::NoMatch { max_shift: k.abs() });
    }
    let sup = restricted_sup(u, v, k, u.index_lo(), u.index_hi());
    if sup < eps {
        Ok(ShiftMatch {
            shift: k,
            certified_sup: sup,
            matched_range: (u.index_lo(), u.index_hi()),
        })
    } else {
        Err(MatchError::NoMatch { max_shift: k.abs() })
    }
}

/// How window ends are interpreted during matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edges {
    /// The window holds the whole spectrum (finite matrices).
    #[default]
    Complete,
    /// The window cuts an infinite spectrum; ends are guarded.
    Truncated,
}

/// Half the smaller arsinh gap between the multiplicity block at index 0 and
/// its neighbouring blocks: the radius of an evenly covered ball around `u`.
pub fn even_cover_radius(u: &SpectrumWindow) -> Result<f64, MatchError> {
    let centre = u.get(0).ok_or(MatchError::WindowTooSmall)?;
    let mut below = None;
    let mut j = -1;
    while let Some(x) = u.get(j) {
        if !same_eigenvalue(x, centre) {
            below = Some(x);
            break;
        }
        j -= 1;
    }
    let mut above = None;
    let mut j = 1;
    while let Some(x) = u.get(j) {
        if !same_eigenvalue(x, centre) {
            above = Some(x);
            break;
        }
        j += 1;
    }
    let (Some(below), Some(above)) = (below, above) else {
        return Err(MatchError::WindowTooSmall);
    };
    let a = centre.asinh();
    Ok(0.5 * (a - below.asinh()).min(above.asinh() - a))
}

/// Brute-force check that `map` keeps every pair within the arsinh eps-band.
pub fn band_holds(
    source: &SpectrumWindow,
    target: &SpectrumWindow,
    map: &[(i64, i64)],
    eps: f64,
) -> bool {
    map.iter()
        .all(|&(s, t)| match (source.get(s), target.get(t)) {
            (Some(a), Some(b)) => (a.asinh() - b.asinh()).abs() < eps,
            _ => false,
        })
}
