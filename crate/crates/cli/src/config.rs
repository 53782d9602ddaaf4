//! Run configurations. Each command reads one JSON document; unknown keys are
//! rejected and relative paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use specflow::lifting::Controller;
use specflow::matching::Edges;
use specflow::operator_families::{
    FnFamily, HermitianMatrix, LinearFamily, OperatorFamily, PiecewiseLinearFamily, Restricted,
};
use specflow::spectrum_core::SpectrumWindow;
use specflow::torus_dirac::FlatTorus;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl Entry {
    fn value(&self) -> Complex64 {
        match *self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex { re, im } => Complex64::new(re, im),
        }
    }
}

/// A Hermitian matrix given inline as rows, as a diagonal, or as a path to a
/// whitespace- or comma-separated text file of real entries.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<Entry>>),
    Diagonal(DiagonalSpec),
    File(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalSpec {
    diag: Vec<f64>,
}

impl MatrixSpec {
    pub fn build(&self, base: &Path) -> Result<HermitianMatrix> {
        let dense = match self {
            MatrixSpec::Rows(rows) => {
                let values: Vec<Vec<Complex64>> = rows
                    .iter()
                    .map(|r| r.iter().map(Entry::value).collect())
                    .collect();
                square(values)?
            }
            MatrixSpec::Diagonal(DiagonalSpec { diag }) => {
                if diag.is_empty() {
                    bail!("diagonal must not be empty");
                }
                return Ok(HermitianMatrix::from_diagonal(diag));
            }
            MatrixSpec::File(file) => {
                let path = resolve(base, file);
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("cannot read {}", path.display()))?;
                square(parse_matrix_text(&text).with_context(|| format!("in {}", path.display()))?)?
            }
        };
        if dense.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            bail!("matrix has a non-finite entry");
        }
        HermitianMatrix::new(dense).map_err(|e| anyhow!(e))
    }
}

fn square(rows: Vec<Vec<Complex64>>) -> Result<DMatrix<Complex64>> {
    let n = rows.len();
    if n == 0 {
        bail!("matrix must not be empty");
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        bail!(
            "matrix must be square: row {i} has {} entries, expected {n}",
            r.len()
        );
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Rows separated by newlines, entries by whitespace or commas; `#` starts a comment.
pub fn parse_matrix_text(text: &str) -> Result<Vec<Vec<Complex64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map(|x| Complex64::new(x, 0.0))
                    .with_context(|| format!("line {}: bad number {s:?}", lineno + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// A one-parameter Hermitian family.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FamilySpec {
    /// `(1 - t) start + t end` on `[0, 1]`.
    Linear { start: MatrixSpec, end: MatrixSpec },
    /// `constant + t slope` on `interval`.
    Affine {
        constant: MatrixSpec,
        slope: MatrixSpec,
        interval: [f64; 2],
    },
    /// Straight segments through `nodes`, with node `i` at `t = i`.
    Piecewise { nodes: Vec<MatrixSpec> },
}

impl FamilySpec {
    pub fn build(&self, base: &Path) -> Result<Box<dyn OperatorFamily>> {
        Ok(match self {
            FamilySpec::Linear { start, end } => Box::new(
                LinearFamily::new(start.build(base)?, end.build(base)?).map_err(|e| anyhow!(e))?,
            ),
            FamilySpec::Affine {
                constant,
                slope,
                interval,
            } => {
                let c = constant.build(base)?;
                let s = slope.build(base)?;
                if c.dim() != s.dim() {
                    bail!("constant is {0}x{0} but slope is {1}x{1}", c.dim(), s.dim());
                }
                let [lo, hi] = *interval;
                let slope = s.clone();
                let family = FnFamily::new((lo, hi), move |t| c.combine(1.0, &s, t))
                    .map_err(|e| anyhow!(e))?
                    .with_derivative(move |_| slope.clone());
                Box::new(family)
            }
            FamilySpec::Piecewise { nodes } => {
                let nodes = nodes
                    .iter()
                    .map(|m| m.build(base))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(PiecewiseLinearFamily::new(nodes).map_err(|e| anyhow!(e))?)
            }
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub torus: Option<FlatTorus>,
    pub count: Option<usize>,
    pub matrix: Option<MatrixSpec>,
}

/// What `spectrum` computes.
pub enum SpectrumSource {
    Torus(FlatTorus, usize),
    Matrix(HermitianMatrix),
}

impl SpectrumConfig {
    pub fn source(self, config_path: &Path) -> Result<SpectrumSource> {
        match (self.torus, self.matrix) {
            (Some(torus), None) => {
                let count = self
                    .count
                    .ok_or_else(|| anyhow!("torus spectrum needs \"count\""))?;
                if count == 0 {
                    bail!("\"count\" must be positive");
                }
                Ok(SpectrumSource::Torus(torus, count))
            }
            (None, Some(m)) => {
                if self.count.is_some() {
                    bail!("\"count\" applies only to a torus");
                }
                Ok(SpectrumSource::Matrix(m.build(&base_dir(config_path))?))
            }
            (Some(_), Some(_)) => bail!("give either \"torus\" or \"matrix\", not both"),
            (None, None) => bail!("config needs \"torus\" or \"matrix\""),
        }
    }
}

fn default_controller() -> Controller {
    Controller::default()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    pub family: FamilySpec,
    pub eps: f64,
    #[serde(default = "default_controller")]
    pub controller: Controller,
    #[serde(default)]
    pub edges: Edges,
    pub max_shift: Option<u64>,
    /// Sub-interval of the family's parameter range to track.
    pub interval: Option<[f64; 2]>,
}

impl TrackConfig {
    pub fn family(&self, config_path: &Path) -> Result<Box<dyn OperatorFamily>> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            bail!("\"eps\" must be positive and finite, got {}", self.eps);
        }
        match self.controller {
            Controller::Fixed { steps: 0 } => bail!("fixed controller needs at least one step"),
            Controller::Adaptive { grid_points } if grid_points < 2 => {
                bail!("adaptive controller needs grid_points >= 2")
            }
            _ => {}
        }
        let family = self.family.build(&base_dir(config_path))?;
        Ok(match self.interval {
            None => family,
            Some([lo, hi]) => Box::new(Restricted::new(family, lo, hi).map_err(|e| anyhow!(e))?),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub u: String,
    pub v: String,
    pub max_shift: Option<u64>,
    pub min_overlap: Option<usize>,
}

impl DistanceConfig {
    pub fn windows(&self, config_path: &Path) -> Result<(SpectrumWindow, SpectrumWindow)> {
        let base = base_dir(config_path);
        let u = load(&resolve(&base, &self.u))?;
        let v = load(&resolve(&base, &self.v))?;
        Ok((u, v))
    }
}
