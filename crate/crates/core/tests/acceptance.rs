//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specflow::growth_bounds::{family_constants, growth_envelope, safe_step};
use specflow::lifting::{
    negative_index_flow_oracle, spectral_flow, track_path, TrackOptions, TrackedPath,
};
use specflow::matching::{band_holds, monotone_rearrange, Edges, MatchError, Pair};
use specflow::operator_families::{
    eigvalsh, tridiagonal_eigenvalues, FnFamily, HermitianMatrix, LinearFamily, OperatorFamily,
    PiecewiseLinearFamily, Reparametrized, Restricted, Reversed,
};
use specflow::spectrum_core::{d_a, quotient_distance, SpectrumWindow};
use specflow::torus_dirac::{pullback, torus_spectrum, FlatTorus};

use common::{random_hermitian, random_linear_family, random_window};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 torus counterexample", torus_counterexample),
        ("2 flow oracle equivalence", oracle_equivalence),
        ("3 metric-space suite", metric_suite),
        ("4 growth envelope", growth_envelope_suite),
        ("5 lift properties", lift_properties),
        ("6 rearrangement", rearrangement),
        ("7 circle discretisation", circle_oracle),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

/// Smallest `2 pi |xi|` over `xi` in `Z^3 + delta/2`, by scanning a box.
fn smallest_cube_eigenvalue(delta: [u8; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for a in -3i32..=3 {
        for b in -3i32..=3 {
            for c in -3i32..=3 {
                let xi = [a, b, c]
                    .into_iter()
                    .zip(delta)
                    .map(|(m, d)| f64::from(m) + f64::from(d) / 2.0);
                let norm = xi.map(|x| x * x).sum::<f64>().sqrt();
                if norm > 0.0 {
                    best = best.min(TAU * norm);
                }
            }
        }
    }
    best
}

fn torus_counterexample() -> Outcome {
    let base = FlatTorus::standard(vec![1, 1, 0]).map_err(|e| e.to_string())?;
    let other = FlatTorus::standard(vec![1, 0, 0]).map_err(|e| e.to_string())?;
    let f = DMatrix::from_row_slice(3, 3, &[1, 1, 0, 0, 1, 0, 0, 0, 1]);
    let pulled = pullback(&base, &f).map_err(|e| e.to_string())?;
    if pulled.delta() != [1, 0, 0] {
        return Err(format!("pulled-back spin structure {:?}", pulled.delta()));
    }
    let a = torus_spectrum(&base, 200).map_err(|e| e.to_string())?;
    let b = torus_spectrum(&pulled, 200).map_err(|e| e.to_string())?;
    if a.indices() != b.indices() {
        return Err(format!(
            "window ranges differ: {:?} vs {:?}",
            a.indices(),
            b.indices()
        ));
    }
    let positives = a.values().iter().filter(|&&x| x > 0.0).count();
    let iso = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);

    let c = torus_spectrum(&other, 200).map_err(|e| e.to_string())?;
    let lam_a = a.get(0).unwrap();
    let lam_c = c.get(0).unwrap();
    let oracle_a = smallest_cube_eigenvalue([1, 1, 0]);
    let oracle_c = smallest_cube_eigenvalue([1, 0, 0]);
    let ok = positives >= 200
        && iso <= 1e-10
        && (lam_a - PI * 2f64.sqrt()).abs() <= 1e-10
        && (lam_a - oracle_a).abs() <= 1e-10
        && (lam_c - PI).abs() <= 1e-10
        && (lam_c - oracle_c).abs() <= 1e-10;
    check(
        ok,
        format!(
            "{positives} positive eigenvalues agree to {iso:.1e} after pullback; smallest positive {lam_a:.12} vs {lam_c:.12} (box oracle {oracle_a:.12}, {oracle_c:.12})"
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let eps = 0.05;
    let mut agree = 0;
    let mut total = 0;
    let mut worst = 0.0f64;
    let mut mismatches = Vec::new();
    while total < 100 {
        let n = rng.gen_range(2..=16);
        let complex = rng.gen_bool(0.5);
        let f = random_linear_family(&mut rng, n, complex);
        let gap = |m: &HermitianMatrix| {
            eigvalsh(m)
                .unwrap()
                .iter()
                .map(|x| x.abs())
                .fold(f64::INFINITY, f64::min)
        };
        if gap(f.start()) <= 1e-3 || gap(f.end()) <= 1e-3 {
            continue;
        }
        total += 1;
        let oracle = negative_index_flow_oracle(f.start(), f.end()).map_err(|e| e.to_string())?;
        match track_path(&f, TrackOptions::new(eps)) {
            Ok(path) => {
                worst = worst.max(path.max_certificate());
                if spectral_flow(&path) == oracle && path.max_certificate() < eps {
                    agree += 1;
                } else {
                    mismatches.push(format!("n={n}: {} vs {oracle}", spectral_flow(&path)));
                }
            }
            Err(e) => mismatches.push(format!("n={n}: {e}")),
        }
    }
    check(
        agree == 100,
        format!("{agree}/{total} flows equal n_neg(start) - n_neg(end); largest step certificate {worst:.4} < eps {eps}{}", if mismatches.is_empty() { String::new() } else { format!("; {mismatches:?}") }),
    )
}

fn metric_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = Vec::new();
    for trial in 0..1000 {
        let len = rng.gen_range(1..40);
        let lo = rng.gen_range(-20..20);
        let u = random_window(&mut rng, lo, len);
        let v = random_window(&mut rng, lo, len);
        let w = random_window(&mut rng, lo, len);
        let uv = d_a(&u, &v).unwrap();
        let vu = d_a(&v, &u).unwrap();
        let uw = d_a(&u, &w).unwrap();
        let vw = d_a(&v, &w).unwrap();
        if uv != vu {
            failures.push(format!("symmetry at triple {trial}"));
        }
        if uw > uv + vw + 1e-12 * (1.0 + uv + vw) {
            failures.push(format!("triangle at triple {trial}"));
        }
        if d_a(&u, &u).unwrap() != 0.0 || (uv == 0.0) != (u.values() == v.values()) {
            failures.push(format!("identity at triple {trial}"));
        }
        let q = quotient_distance(&u, &v, len as u64);
        if q.distance > uv {
            failures.push(format!("quotient above direct at triple {trial}"));
        }
    }
    for pair in 0..1000 {
        let len = rng.gen_range(1..40);
        let lo = rng.gen_range(-20..20);
        let u = random_window(&mut rng, lo, len);
        let v = random_window(&mut rng, lo, len);
        let k = rng.gen_range(-10_000..10_000);
        let before = d_a(&u, &v).unwrap();
        let after = d_a(&u.shift(k), &v.shift(k)).unwrap();
        if before.to_bits() != after.to_bits() {
            failures.push(format!("shift isometry at pair {pair}"));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "1000 triples satisfy symmetry, triangle, identity and quotient <= direct; 1000 shifts are isometries to 0 ulp".into()
        } else {
            format!(
                "{} violations: {:?}",
                failures.len(),
                &failures[..failures.len().min(5)]
            )
        },
    )
}

fn growth_envelope_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let eps = 0.05;
    let slack = 1e-6;
    let mut checked_pairs = 0usize;
    let mut envelope_failures = 0;
    let mut step_failures = 0;
    let mut worst_ratio = 0.0f64;
    let mut worst_step = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(2..=8);
        let complex = rng.gen_bool(0.5);
        let f = random_linear_family(&mut rng, n, complex);
        let dense = family_constants(&f, (0.0, 1.0), 256).map_err(|e| e.to_string())?;
        let c = dense.c;

        let path = track_path(&f, TrackOptions::new(eps)).map_err(|e| e.to_string())?;
        let lifted = path.lifted_windows();
        for i in 0..lifted.len() {
            for k in i + 1..lifted.len() {
                let dt = path.samples[k] - path.samples[i];
                for (j, l0) in lifted[i].iter() {
                    let Some(l1) = lifted[k].get(j) else { continue };
                    let bound = growth_envelope(l0, c, dt);
                    checked_pairs += 1;
                    if (l1 - l0).abs() > bound + slack {
                        envelope_failures += 1;
                    }
                    if bound > 0.0 {
                        worst_ratio = worst_ratio.max((l1 - l0).abs() / bound);
                    }
                }
            }
        }

        let h = safe_step(c, eps);
        let steps = (1.0 / h).ceil() as usize;
        let fixed = track_path(&f, TrackOptions::fixed(eps, steps)).map_err(|e| e.to_string())?;
        let disp = max_arsinh_displacement(&fixed);
        worst_step = worst_step.max(disp);
        if disp >= eps {
            step_failures += 1;
        }
    }
    check(
        envelope_failures == 0 && step_failures == 0,
        format!(
            "{checked_pairs} branch/sample pairs, {envelope_failures} envelope violations (largest |dlambda|/envelope {worst_ratio:.3}); {step_failures} safe-step violations (largest arsinh step {worst_step:.4} < {eps})"
        ),
    )
}

/// Largest `|arsinh lambda_j(t_i) - arsinh lambda_j(t_{i+1})|` along the path.
fn max_arsinh_displacement(path: &TrackedPath) -> f64 {
    let lifted = path.lifted_windows();
    lifted
        .windows(2)
        .flat_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.iter()
                .filter_map(|(j, x)| b.get(j).map(|y| (x.asinh() - y.asinh()).abs()))
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

/// `diag(k - 1/2 + speed t)`, `k` in `-m..=m`, plus `sin(pi t) coupling`.
fn ladder(m: i64, speed: f64, coupling: HermitianMatrix) -> FnFamily {
    FnFamily::new((0.0, 1.0), move |t| {
        let base: Vec<f64> = (-m..=m).map(|k| k as f64 - 0.5 + speed * t).collect();
        HermitianMatrix::from_diagonal(&base).combine(1.0, &coupling, (PI * t).sin())
    })
    .unwrap()
}

fn lift_properties() -> Outcome {
    let eps = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let diag = |d: &[f64]| HermitianMatrix::from_diagonal(d);
    let mut families: Vec<(String, Box<dyn OperatorFamily>, Option<i64>, Edges)> = vec![
        (
            "crossing up".into(),
            Box::new(LinearFamily::new(diag(&[-0.5, 2.0]), diag(&[0.5, 2.0])).unwrap()),
            Some(1),
            Edges::Complete,
        ),
        (
            "crossing down".into(),
            Box::new(LinearFamily::new(diag(&[0.5, 2.0]), diag(&[-0.5, 2.0])).unwrap()),
            Some(-1),
            Edges::Complete,
        ),
        (
            "constant".into(),
            Box::new(LinearFamily::new(diag(&[-1.0, 1.0]), diag(&[-1.0, 1.0])).unwrap()),
            Some(0),
            Edges::Complete,
        ),
        (
            "ladder x2".into(),
            Box::new(ladder(
                10,
                2.0,
                random_hermitian(&mut rng, 21, true).scale(0.05),
            )),
            Some(2),
            Edges::Truncated,
        ),
    ];
    for i in 0..6 {
        let n = rng.gen_range(2..=8);
        families.push((
            format!("random #{i}"),
            Box::new(random_linear_family(&mut rng, n, i % 2 == 0)),
            None,
            Edges::Complete,
        ));
    }
    for i in 0..3 {
        let n = rng.gen_range(2..=6);
        let a = random_hermitian(&mut rng, n, true);
        let nodes = vec![
            a.clone(),
            random_hermitian(&mut rng, n, true),
            random_hermitian(&mut rng, n, true),
            a,
        ];
        families.push((
            format!("loop #{i}"),
            Box::new(PiecewiseLinearFamily::new(nodes).unwrap()),
            Some(0),
            Edges::Complete,
        ));
    }

    let mut failures = Vec::new();
    for (name, f, expected, edges) in &families {
        let opts = TrackOptions {
            edges: *edges,
            ..TrackOptions::new(eps)
        };
        let flow_of =
            |g: &dyn OperatorFamily, o: TrackOptions| track_path(g, o).map(|p| spectral_flow(&p));
        let result = (|| -> Result<Vec<String>, String> {
            let mut bad = Vec::new();
            let path = track_path(f.as_ref(), opts).map_err(|e| e.to_string())?;
            let total = spectral_flow(&path);
            if let Some(e) = expected {
                if total != *e {
                    bad.push(format!("flow {total}, expected {e}"));
                }
            }
            let (lo, hi) = f.interval();
            for s in [0.5, 0.37] {
                let mid = lo + s * (hi - lo);
                let left = flow_of(&Restricted::new(f.as_ref(), lo, mid).unwrap(), opts)
                    .map_err(|e| e.to_string())?;
                let right = flow_of(&Restricted::new(f.as_ref(), mid, hi).unwrap(), opts)
                    .map_err(|e| e.to_string())?;
                if left + right != total {
                    bad.push(format!("additivity at {mid}: {left} + {right} != {total}"));
                }
            }
            let back = flow_of(&Reversed(f.as_ref()), opts).map_err(|e| e.to_string())?;
            if back != -total {
                bad.push(format!("reversal {back}"));
            }
            let warped = flow_of(
                &Reparametrized::new(f.as_ref(), |s| s * s, |s| 2.0 * s),
                opts,
            )
            .map_err(|e| e.to_string())?;
            if warped != total {
                bad.push(format!("reparametrised {warped}"));
            }
            let steps = 2 * path.steps();
            let coarse = flow_of(
                f.as_ref(),
                TrackOptions {
                    controller: specflow::Controller::Fixed { steps },
                    ..opts
                },
            )
            .map_err(|e| e.to_string())?;
            let fine = flow_of(
                f.as_ref(),
                TrackOptions {
                    controller: specflow::Controller::Fixed { steps: 2 * steps },
                    ..opts
                },
            )
            .map_err(|e| e.to_string())?;
            if coarse != total || fine != coarse {
                bad.push(format!("refinement {coarse} -> {fine}"));
            }
            Ok(bad)
        })();
        match result {
            Ok(bad) if bad.is_empty() => {}
            Ok(bad) => failures.push(format!("{name}: {}", bad.join(", "))),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} families: additivity (2 splits), reversal, loops, reparametrisation and step halving all exact", families.len())
        } else {
            failures.join("; ")
        },
    )
}

fn rearrangement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eps = 0.1;
    let mut perms = 0usize;
    let mut band_cases = 0usize;
    let mut failures = Vec::new();
    for n in 1..=8usize {
        // Clustered values so that many permutations keep the band.
        let trials = 3;
        for _ in 0..trials {
            let mut a: Vec<f64> = (0..n)
                .map(|i| (i / 3) as f64 * 2.0 + rng.gen_range(-0.02..0.02))
                .collect();
            a.sort_by(f64::total_cmp);
            let mut b: Vec<f64> = a.iter().map(|x| x + rng.gen_range(-0.03..0.03)).collect();
            b.sort_by(f64::total_cmp);
            let src_lo = rng.gen_range(-5..5);
            let tgt_lo = rng.gen_range(-5..5);
            let source = SpectrumWindow::new(src_lo, a).unwrap();
            let target = SpectrumWindow::new(tgt_lo, b).unwrap();
            for perm in (0..n).permutations(n) {
                perms += 1;
                let pairs: Vec<Pair> = perm
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| {
                        let (s, t) = (src_lo + i as i64, tgt_lo + p as i64);
                        let gap =
                            (source.get(s).unwrap().asinh() - target.get(t).unwrap().asinh()).abs();
                        Pair {
                            source: s,
                            target: t,
                            within_eps: gap < eps,
                        }
                    })
                    .collect();
                // Structure: always increasing and image-preserving.
                let unflagged: Vec<Pair> = pairs
                    .iter()
                    .map(|p| Pair {
                        within_eps: true,
                        ..*p
                    })
                    .collect();
                match monotone_rearrange(&unflagged) {
                    Ok(map) => {
                        let increasing = map.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
                        let mut image: Vec<i64> = map.iter().map(|m| m.1).collect();
                        image.sort_unstable();
                        let expected: Vec<i64> = (0..n as i64).map(|p| tgt_lo + p).collect();
                        if !increasing || image != expected {
                            failures.push(format!("structure n={n} {perm:?}"));
                        }
                    }
                    Err(e) => failures.push(format!("n={n} {perm:?}: {e}")),
                }
                // Band: holds after rearrangement whenever it held before.
                if pairs.iter().all(|p| p.within_eps) {
                    band_cases += 1;
                    match monotone_rearrange(&pairs) {
                        Ok(map) if band_holds(&source, &target, &map, eps) => {}
                        _ => failures.push(format!("band n={n} {perm:?}")),
                    }
                } else if !matches!(
                    monotone_rearrange(&pairs),
                    Err(MatchError::BandNotEstablished(_))
                ) {
                    failures.push(format!("unflagged pair accepted n={n} {perm:?}"));
                }
            }
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{perms} permutations (blocks 1..=8) rearranged monotonically onto the same image; band preserved in all {band_cases} banded inputs")
        } else {
            format!(
                "{} failures: {:?}",
                failures.len(),
                &failures[..failures.len().min(5)]
            )
        },
    )
}

/// Diagonal blocks of the twisted second-difference operator `-d^2/dx^2` on
/// `n` points of a circle of length `len`, split by the reflection
/// `x_j -> x_{n-1-j}` into even and odd parts. `antiperiodic` flips the sign
/// of the wrap-around coupling.
fn reflected_blocks(n: usize, len: f64, antiperiodic: bool) -> [Vec<f64>; 2] {
    let h2 = (len / n as f64).powi(2);
    let half = n / 2;
    let block = |first: f64, last: f64| {
        let mut d = vec![2.0 / h2; half];
        d[0] = first / h2;
        d[half - 1] = last / h2;
        d
    };
    if antiperiodic {
        [block(3.0, 1.0), block(1.0, 3.0)]
    } else {
        [block(1.0, 1.0), block(3.0, 3.0)]
    }
}

fn second_difference_eigenvalues(n: usize, len: f64, antiperiodic: bool) -> Vec<f64> {
    let h2 = (len / n as f64).powi(2);
    let mut all = Vec::with_capacity(n);
    for d in reflected_blocks(n, len, antiperiodic) {
        let off = vec![-1.0 / h2; d.len() - 1];
        all.extend(tridiagonal_eigenvalues(&d, &off).unwrap());
    }
    all.sort_by(f64::total_cmp);
    all
}

fn dense_twisted(n: usize, len: f64, antiperiodic: bool) -> Vec<f64> {
    let h2 = (len / n as f64).powi(2);
    let wrap = if antiperiodic { 1.0 } else { -1.0 };
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0 / h2
        } else if i.abs_diff(j) == 1 {
            -1.0 / h2
        } else if i.abs_diff(j) == n - 1 {
            wrap / h2
        } else {
            0.0
        }
    });
    eigvalsh(&HermitianMatrix::from_real(&m).unwrap()).unwrap()
}

fn circle_oracle() -> Outcome {
    let grid = 2048;
    let wanted = 20;
    let mut report = Vec::new();
    let mut ok = true;

    // The reflection split is exact; confirm it against the full matrix.
    for antiperiodic in [true, false] {
        let split = second_difference_eigenvalues(64, 1.3, antiperiodic);
        let dense = dense_twisted(64, 1.3, antiperiodic);
        let err = split
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let scale = dense.last().unwrap();
        if err > 1e-10 * scale {
            ok = false;
            report.push(format!("reflection split off by {err:e}"));
        }
    }

    for (gram, delta) in [(1.0, 1u8), (2.25, 1), (1.0, 0), (0.5, 0)] {
        let len = f64::sqrt(gram);
        let torus = FlatTorus::new(DMatrix::from_element(1, 1, gram), vec![delta])
            .map_err(|e| e.to_string())?;
        let window = torus_spectrum(&torus, wanted).map_err(|e| e.to_string())?;
        let mut closed: Vec<f64> = window.values().iter().map(|x| x.abs()).collect();
        closed.sort_by(f64::total_cmp);
        closed.truncate(wanted);
        let discrete: Vec<f64> = second_difference_eigenvalues(grid, len, delta == 1)
            .into_iter()
            .take(wanted)
            .map(|mu| mu.max(0.0).sqrt())
            .collect();
        let unit = TAU / len;
        let mut worst = 0.0f64;
        for (c, d) in closed.iter().zip(&discrete) {
            // A zero mode has no relative scale; measure it against 2 pi / length.
            let err = if *c == 0.0 {
                d / unit
            } else {
                (c - d).abs() / c
            };
            worst = worst.max(err);
        }
        if worst > 1e-4 {
            ok = false;
        }
        report.push(format!("g={gram} delta={delta}: rel err {worst:.2e}"));
    }
    check(
        ok,
        format!(
            "{wanted} lowest |lambda| vs {grid}-point operator; {}",
            report.join(", ")
        ),
    )
}
