//! `specflow` command-line front end.
//!
//! Exit codes: 0 success, 1 computation failed, 2 invalid input.

mod config;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;
use specflow::growth_bounds::{family_constants, safe_step, C0, C1, C2, DEFAULT_GRID_POINTS, R};
use specflow::lifting::{track_path, TrackOptions};
use specflow::operator_families::eigvalsh;
use specflow::spectrum_core::{
    canonical_window, d_a, default_min_overlap, quotient_distance_with, SpectrumWindow,
};
use specflow::torus_dirac::{pullback, torus_spectrum, FlatTorus};

use config::{load, DistanceConfig, FamilySpec, SpectrumConfig, SpectrumSource, TrackConfig};

#[derive(Parser)]
#[command(
    name = "specflow",
    version,
    about = "Spectra, spectral flow and arsinh distances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Also draw an SVG plot where the command supports one.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum window of a flat torus or a Hermitian matrix.
    Spectrum,
    /// Track the spectrum of a matrix family and report its spectral flow.
    Track,
    /// Arsinh distance and shift-quotient distance of two spectrum windows.
    Distance,
    /// Compare Dirac spectra of a flat 3-torus under two spin structures.
    Counterexample(CounterexampleArgs),
    /// Print the universal growth constants and a table of safe steps.
    Constants,
}

#[derive(Args)]
struct CounterexampleArgs {
    /// Spin structure on the base torus.
    #[arg(long, default_value = "1,1,0")]
    delta: String,
    /// Spin structure on the base torus to compare against.
    #[arg(long, default_value = "1,0,0")]
    compare: String,
    /// Integer map to pull back along, rows separated by ';'.
    #[arg(long, default_value = "1,1,0;0,1,0;0,0,1")]
    f: String,
    /// Eigenvalues compared on each side of zero.
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Largest eigenvalue difference still counted as equal.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

/// A failed run, classified by exit code.
enum Failure {
    Invalid(anyhow::Error),
    Compute(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

trait Classify<T> {
    fn invalid(self) -> Result<T, Failure>;
    fn compute(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for std::result::Result<T, E> {
    fn invalid(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Invalid(e.into()))
    }

    fn compute(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Compute(e.into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Spectrum => spectrum(&cli),
        Command::Track => track(&cli),
        Command::Distance => distance(&cli),
        Command::Counterexample(args) => counterexample(args),
        Command::Constants => constants(&cli),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            let (Failure::Invalid(e) | Failure::Compute(e)) = &failure;
            eprintln!("error: {e:#}");
            ExitCode::from(failure.code())
        }
    }
}

fn config_path(cli: &Cli) -> Result<&Path, Failure> {
    cli.config
        .as_deref()
        .ok_or_else(|| Failure::Invalid(anyhow!("this command needs --config")))
}

fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create {}", dir.display()))
        .compute()?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents)
            .with_context(|| format!("cannot write {}", path.display()))
            .compute()?;
    }
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn window_csv(w: &SpectrumWindow) -> String {
    let mut out = String::from("j,lambda\n");
    for (j, v) in w.iter() {
        out.push_str(&format!("{j},{v}\n"));
    }
    out
}

fn spectrum(cli: &Cli) -> Result<u8, Failure> {
    let path = config_path(cli)?;
    let cfg: SpectrumConfig = load(path).invalid()?;
    let window = match cfg.source(path).invalid()? {
        SpectrumSource::Torus(torus, count) => torus_spectrum(&torus, count).compute()?,
        SpectrumSource::Matrix(m) => {
            let eigs = eigvalsh(&m).compute()?;
            canonical_window(&eigs).compute()?
        }
    };
    write_outputs(
        &cli.out,
        &[
            ("spectrum.json", pretty(&window)),
            ("spectrum.csv", window_csv(&window)),
        ],
    )?;
    println!(
        "{} eigenvalues, indices {}..={}",
        window.len(),
        window.index_lo(),
        window.index_hi()
    );
    Ok(0)
}

fn track(cli: &Cli) -> Result<u8, Failure> {
    let path = config_path(cli)?;
    let cfg: TrackConfig = load(path).invalid()?;
    let family = cfg.family(path).invalid()?;
    let opts = TrackOptions {
        eps: cfg.eps,
        controller: cfg.controller,
        edges: cfg.edges,
        max_shift: cfg.max_shift,
    };
    match track_path(family.as_ref(), opts) {
        Ok(tracked) => {
            let summary = tracked.summary();
            let mut files = vec![
                ("track.csv", tracked.to_csv()),
                ("summary.json", pretty(&summary)),
            ];
            if cli.svg {
                files.push(("track.svg", svg::track_plot(&tracked)));
            }
            write_outputs(&cli.out, &files)?;
            println!("flow: {} ({} steps)", summary.flow, summary.steps);
            Ok(0)
        }
        Err(e) => {
            let report = json!({
                "error": e.to_string(),
                "interval": e.interval().map(|(a, b)| [a, b]),
            });
            write_outputs(&cli.out, &[("summary.json", pretty(&report))])?;
            Err(Failure::Compute(anyhow!(e)))
        }
    }
}

/// Largest shift that still leaves some overlap between the two windows.
fn full_reach(u: &SpectrumWindow, v: &SpectrumWindow) -> u64 {
    let a = v.index_lo() - u.index_hi();
    let b = v.index_hi() - u.index_lo();
    a.unsigned_abs().max(b.unsigned_abs())
}

fn distance(cli: &Cli) -> Result<u8, Failure> {
    let path = config_path(cli)?;
    let cfg: DistanceConfig = load(path).invalid()?;
    let (u, v) = cfg.windows(path).invalid()?;
    let direct = d_a(&u, &v).ok();
    let max_shift = cfg.max_shift.unwrap_or_else(|| full_reach(&u, &v));
    let min_overlap = cfg
        .min_overlap
        .unwrap_or_else(|| default_min_overlap(&u, &v));
    let q = quotient_distance_with(&u, &v, max_shift, min_overlap);
    let report = json!({
        "d_a": direct,
        "dbar": q.is_finite().then_some(q.distance),
        "shift": q.is_finite().then_some(q.shift),
    });
    println!("{report}");
    Ok(0)
}

fn parse_delta(s: &str) -> Result<Vec<u8>> {
    s.split(',')
        .map(|x| match x.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => bail!("spin structure entries must be 0 or 1, got {other:?}"),
        })
        .collect()
}

fn parse_integer_matrix(s: &str) -> Result<DMatrix<i64>> {
    let rows: Vec<Vec<i64>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<i64>()
                        .with_context(|| format!("bad integer {x:?}"))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        bail!("map must be square");
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn fmt_delta(d: &[u8]) -> String {
    let parts: Vec<String> = d.iter().map(u8::to_string).collect();
    format!("({})", parts.join(","))
}

fn counterexample(args: &CounterexampleArgs) -> Result<u8, Failure> {
    let delta = parse_delta(&args.delta).context("--delta").invalid()?;
    let compare = parse_delta(&args.compare).context("--compare").invalid()?;
    let f = parse_integer_matrix(&args.f).context("--f").invalid()?;
    if compare.len() != delta.len() {
        return Err(Failure::Invalid(anyhow!(
            "--delta and --compare must have the same length"
        )));
    }
    if args.count == 0 || !(args.tol >= 0.0) {
        return Err(Failure::Invalid(anyhow!(
            "--count must be positive and --tol nonnegative"
        )));
    }
    let base = FlatTorus::standard(delta.clone()).invalid()?;
    let other = FlatTorus::standard(compare.clone()).invalid()?;
    let pulled = pullback(&base, &f).invalid()?;

    let spec_base = torus_spectrum(&base, args.count).compute()?;
    let spec_pulled = torus_spectrum(&pulled, args.count).compute()?;
    let spec_other = torus_spectrum(&other, args.count).compute()?;
    let equal = |a: &SpectrumWindow, b: &SpectrumWindow| {
        a.indices() == b.indices()
            && a.values()
                .iter()
                .zip(b.values())
                .all(|(x, y)| (x - y).abs() <= args.tol)
    };
    let isospectral = equal(&spec_base, &spec_pulled);
    let distinct = !equal(&spec_base, &spec_other);
    let smallest = |w: &SpectrumWindow| {
        w.values()
            .iter()
            .copied()
            .find(|&x| x > 0.0)
            .unwrap_or(f64::NAN)
    };

    println!(
        "base:       standard metric, delta {}, smallest positive eigenvalue {}",
        fmt_delta(&delta),
        smallest(&spec_base)
    );
    println!(
        "pullback:   f^T f metric, delta {}, smallest positive eigenvalue {}",
        fmt_delta(pulled.delta()),
        smallest(&spec_pulled)
    );
    println!(
        "comparison: standard metric, delta {}, smallest positive eigenvalue {}",
        fmt_delta(&compare),
        smallest(&spec_other)
    );
    println!("isospectral: {isospectral}, distinct: {distinct}");
    Ok(if isospectral && distinct { 0 } else { 1 })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsConfig {
    family: FamilySpec,
    grid_points: Option<usize>,
}

fn constants(cli: &Cli) -> Result<u8, Failure> {
    const TABLE_C: [f64; 5] = [0.5, 1.0, 2.0, 5.0, 10.0];
    const TABLE_EPS: [f64; 5] = [0.01, 0.05, 0.1, 0.5, 1.0];
    let family = match cli.config.as_deref() {
        None => None,
        Some(path) => {
            let cfg: ConstantsConfig = load(path).invalid()?;
            let grid = cfg.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
            let family = cfg
                .family
                .build(path.parent().unwrap_or(Path::new("")))
                .invalid()?;
            Some(family_constants(family.as_ref(), family.interval(), grid).compute()?)
        }
    };
    let table: Vec<_> = TABLE_C
        .iter()
        .flat_map(|&c| {
            TABLE_EPS
                .iter()
                .map(move |&eps| json!({"C": c, "eps": eps, "step": safe_step(c, eps)}))
        })
        .collect();
    let mut report = json!({"C0": C0, "C1": C1, "C2": C2, "R": R, "safe_step": table});
    if let Some(k) = family {
        report["family"] = serde_json::to_value(k).expect("serialisable");
    }
    print!("{}", pretty(&report));
    Ok(0)
}
