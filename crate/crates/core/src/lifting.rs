//! Continuous enumeration of a spectrum along a parameter path, and spectral flow.
//!
//! Consecutive spectrum windows are aligned by an integer shift; the running
//! sum of those shifts turns the canonical windows `W_i` into a lifted
//! enumeration `lambda_j(t_i) = W_i(j + c_i)` with `c_0 = 0`, which moves
//! continuously with `t`. At the end of the path the total shift is the
//! spectral flow: the net number of eigenvalues that crossed zero upwards.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::growth_bounds::{family_constants, safe_step, GrowthError, DEFAULT_GRID_POINTS};
use crate::matching::{
    even_cover_radius, match_complete, match_windows, Edges, MatchError, ShiftMatch,
};
use crate::operator_families::{
    eigvalsh, sample_spectrum, EighError, FamilyError, HermitianMatrix, OperatorFamily,
};
use crate::spectrum_core::SpectrumWindow;

/// Adaptive steps never go below this fraction of the interval length.
pub const MIN_STEP_FRACTION: f64 = 1e-6;
/// Adaptive steps never exceed this fraction of the interval length.
pub const MAX_STEP_FRACTION: f64 = 0.25;
/// Bisections of a rejected adaptive step before giving up.
pub const MAX_BISECTIONS: u32 = 40;
/// Endpoints with an eigenvalue this close to zero are rejected by the oracle.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("eps must be positive and finite, got {0}")]
    BadEps(f64),
    #[error("fixed controller needs at least one step")]
    NoSteps,
    #[error("could not align spectra on [{from}, {to}]: {source}")]
    Step {
        from: f64,
        to: f64,
        #[source]
        source: MatchError,
    },
    #[error("eps {eps} is not below the evenly-covered radius {radius} at sample t = {t}")]
    EpsAboveCoverRadius { t: f64, eps: f64, radius: f64 },
    #[error("evenly-covered radius undefined at sample t = {t}: {source}")]
    CoverRadius {
        t: f64,
        #[source]
        source: MatchError,
    },
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
}

impl TrackError {
    /// Parameter interval on which the failure happened, when there is one.
    pub fn interval(&self) -> Option<(f64, f64)> {
        match self {
            TrackError::Step { from, to, .. } => Some((*from, *to)),
            TrackError::EpsAboveCoverRadius { t, .. } | TrackError::CoverRadius { t, .. } => {
                Some((*t, *t))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Controller {
    /// `steps` equal steps across the interval.
    Fixed { steps: usize },
    /// Steps of `safe_step(C, eps)` with `C` estimated on `grid_points`,
    /// bisected when an alignment fails.
    Adaptive { grid_points: usize },
}

impl Default for Controller {
    fn default() -> Self {
        Controller::Adaptive {
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOptions {
    pub eps: f64,
    pub controller: Controller,
    pub edges: Edges,
    /// Largest shift tried between truncated windows; defaults to the window length.
    pub max_shift: Option<u64>,
}

impl TrackOptions {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            controller: Controller::default(),
            edges: Edges::default(),
            max_shift: None,
        }
    }

    pub fn fixed(eps: f64, steps: usize) -> Self {
        Self {
            controller: Controller::Fixed { steps },
            ..Self::new(eps)
        }
    }
}

/// A sampled path with its lifted enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedPath {
    pub samples: Vec<f64>,
    /// Canonical window at each sample.
    pub windows: Vec<SpectrumWindow>,
    /// `step_shifts[i - 1]` aligns sample `i - 1` with sample `i`:
    /// `W_{i-1}(j)` is paired with `W_i(j + k_i)`.
    pub step_shifts: Vec<i64>,
    /// Sup-arsinh certificate of each step.
    pub certificates: Vec<f64>,
    pub eps: f64,
}

impl TrackedPath {
    pub fn steps(&self) -> usize {
        self.step_shifts.len()
    }

    pub fn cumulative_shift(&self) -> i64 {
        self.step_shifts.iter().sum()
    }

    /// Running shift `c_i` at each sample, starting at 0.
    pub fn cumulative_shifts(&self) -> Vec<i64> {
        std::iter::once(0)
            .chain(self.step_shifts.iter().scan(0i64, |acc, k| {
                *acc += k;
                Some(*acc)
            }))
            .collect()
    }

    /// `j -> lambda_j(t_i) = W_i(j + c_i)`.
    pub fn lifted_window(&self, i: usize) -> SpectrumWindow {
        let c = self.step_shifts[..i].iter().sum();
        self.windows[i].shift(c)
    }

    pub fn lifted_windows(&self) -> Vec<SpectrumWindow> {
        self.cumulative_shifts()
            .into_iter()
            .zip(&self.windows)
            .map(|(c, w)| w.shift(c))
            .collect()
    }

    /// `lambda_j(t_i)`, if index `j` is in the lifted window at sample `i`.
    pub fn lifted_value(&self, i: usize, j: i64) -> Option<f64> {
        self.lifted_window(i).get(j)
    }

    pub fn max_certificate(&self) -> f64 {
        self.certificates.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with header `t,j,lambda`, one row per sample and lifted index.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,j,lambda\n");
        for (t, w) in self.samples.iter().zip(self.lifted_windows()) {
            for (j, v) in w.iter() {
                out.push_str(&format!("{t},{j},{v}\n"));
            }
        }
        out
    }

    pub fn summary(&self) -> PathSummary {
        PathSummary {
            flow: spectral_flow(self),
            steps: self.steps(),
            eps: self.eps,
            t_start: self.samples[0],
            t_end: self.samples[self.samples.len() - 1],
            step_shifts: self.step_shifts.clone(),
            certificates: self.certificates.clone(),
            max_certificate: self.max_certificate(),
        }
    }
}

/// JSON-friendly digest of a [`TrackedPath`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub flow: i64,
    pub steps: usize,
    pub eps: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub step_shifts: Vec<i64>,
    pub certificates: Vec<f64>,
    pub max_certificate: f64,
}

/// The spectral flow of a tracked path: the total relabelling `s` with
/// `lambda_j(t_N) = W_N(j + s)`.
pub fn spectral_flow(path: &TrackedPath) -> i64 {
    path.cumulative_shift()
}

struct Tracker<'a, F: ?Sized> {
    family: &'a F,
    opts: TrackOptions,
}

impl<F: OperatorFamily + ?Sized> Tracker<'_, F> {
    fn window(&self, t: f64) -> Result<SpectrumWindow, TrackError> {
        let w = sample_spectrum(self.family, t)?;
        if self.opts.edges == Edges::Truncated {
            match even_cover_radius(&w) {
                Ok(radius) if self.opts.eps < radius => {}
                Ok(radius) => {
                    return Err(TrackError::EpsAboveCoverRadius {
                        t,
                        eps: self.opts.eps,
                        radius,
                    })
                }
                Err(source) => return Err(TrackError::CoverRadius { t, source }),
            }
        }
        Ok(w)
    }

    fn align(&self, u: &SpectrumWindow, v: &SpectrumWindow) -> Result<ShiftMatch, MatchError> {
        match self.opts.edges {
            Edges::Complete => match_complete(u, v, self.opts.eps),
            Edges::Truncated => {
                let max_shift = self.opts.max_shift.unwrap_or(u.len().max(v.len()) as u64);
                match_windows(u, v, self.opts.eps, max_shift)
            }
        }
    }
}

/// Samples `family` across its interval and lifts its spectrum.
///
/// The first window is the canonical one, so the lift agrees with the ordered
/// spectral function at the start.
pub fn track_path<F: OperatorFamily + ?Sized>(
    family: &F,
    opts: TrackOptions,
) -> Result<TrackedPath, TrackError> {
    if !(opts.eps > 0.0 && opts.eps.is_finite()) {
        return Err(TrackError::BadEps(opts.eps));
    }
    let tracker = Tracker { family, opts };
    match opts.controller {
        Controller::Fixed { steps } => track_fixed(&tracker, steps),
        Controller::Adaptive { grid_points } => track_adaptive(&tracker, grid_points),
    }
}

fn track_fixed<F: OperatorFamily + ?Sized>(
    tracker: &Tracker<'_, F>,
    steps: usize,
) -> Result<TrackedPath, TrackError> {
    if steps == 0 {
        return Err(TrackError::NoSteps);
    }
    let (lo, hi) = tracker.family.interval();
    let samples: Vec<f64> = (0..=steps)
        .map(|i| {
            if i == steps {
                hi
            } else {
                lo + (hi - lo) * i as f64 / steps as f64
            }
        })
        .collect();
    let windows = samples
        .par_iter()
        .map(|&t| tracker.window(t))
        .collect::<Result<Vec<_>, _>>()?;

    let mut step_shifts = Vec::with_capacity(steps);
    let mut certificates = Vec::with_capacity(steps);
    for i in 1..=steps {
        let m = tracker
            .align(&windows[i - 1], &windows[i])
            .map_err(|source| TrackError::Step {
                from: samples[i - 1],
                to: samples[i],
                source,
            })?;
        step_shifts.push(m.shift);
        certificates.push(m.certified_sup);
    }
    Ok(TrackedPath {
        samples,
        windows,
        step_shifts,
        certificates,
        eps: tracker.opts.eps,
    })
}

fn track_adaptive<F: OperatorFamily + ?Sized>(
    tracker: &Tracker<'_, F>,
    grid_points: usize,
) -> Result<TrackedPath, TrackError> {
    let (lo, hi) = tracker.family.interval();
    let len = hi - lo;
    let first = tracker.window(lo)?;
    let mut path = TrackedPath {
        samples: vec![lo],
        windows: vec![first],
        step_shifts: Vec::new(),
        certificates: Vec::new(),
        eps: tracker.opts.eps,
    };
    if len == 0.0 {
        return Ok(path);
    }
    let constants = family_constants(tracker.family, (lo, hi), grid_points)?;
    let base = if constants.c > 0.0 {
        safe_step(constants.c, tracker.opts.eps)
    } else {
        f64::INFINITY
    };
    let base = base.clamp(MIN_STEP_FRACTION * len, MAX_STEP_FRACTION * len);

    let mut t = lo;
    while t < hi {
        let mut step = base;
        let mut bisections = 0;
        loop {
            let next = if t + step >= hi { hi } else { t + step };
            let w = tracker.window(next)?;
            let prev = path.windows.last().expect("path has a first window");
            match tracker.align(prev, &w) {
                Ok(m) => {
                    path.samples.push(next);
                    path.windows.push(w);
                    path.step_shifts.push(m.shift);
                    path.certificates.push(m.certified_sup);
                    t = next;
                    break;
                }
                Err(source) => {
                    if bisections == MAX_BISECTIONS {
                        return Err(TrackError::Step {
                            from: t,
                            to: next,
                            source,
                        });
                    }
                    bisections += 1;
                    step *= 0.5;
                }
            }
        }
    }
    Ok(path)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("endpoint has eigenvalue {0:e}, too close to zero")]
    NotInvertible(f64),
    #[error(transparent)]
    Eigh(#[from] EighError),
}

/// `n_neg(start) - n_neg(end)`: for a Hermitian path with invertible ends,
/// the spectral flow of any path joining them.
pub fn negative_index_flow_oracle(
    start: &HermitianMatrix,
    end: &HermitianMatrix,
) -> Result<i64, OracleError> {
    let count = |m: &HermitianMatrix| -> Result<i64, OracleError> {
        let vals = eigvalsh(m)?;
        if let Some(&z) = vals.iter().find(|v| v.abs() <= ZERO_EIGENVALUE_TOL) {
            return Err(OracleError::NotInvertible(z));
        }
        Ok(vals.iter().filter(|&&v| v < 0.0).count() as i64)
    };
    Ok(count(start)? - count(end)?)
}
