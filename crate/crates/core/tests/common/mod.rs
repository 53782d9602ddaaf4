#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use specflow::spectrum_core::SpectrumWindow;
use specflow::{HermitianMatrix, LinearFamily};

pub fn random_hermitian<R: Rng>(rng: &mut R, n: usize, complex: bool) -> HermitianMatrix {
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if complex && i != j {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
            m[(i, j)] = Complex64::new(re, im);
            m[(j, i)] = Complex64::new(re, -im);
        }
    }
    HermitianMatrix::new(m).unwrap()
}

pub fn random_linear_family<R: Rng>(rng: &mut R, n: usize, complex: bool) -> LinearFamily {
    let a0 = random_hermitian(rng, n, complex);
    let a1 = random_hermitian(rng, n, complex);
    LinearFamily::new(a0, a1).unwrap()
}

/// Non-decreasing values with occasional repeats and a wide dynamic range.
pub fn random_sorted<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = Vec::with_capacity(len);
    for _ in 0..len {
        if !v.is_empty() && rng.gen_bool(0.1) {
            v.push(*v.last().unwrap());
            continue;
        }
        let mag = 10f64.powf(rng.gen_range(-2.0..4.0));
        v.push(if rng.gen_bool(0.5) { mag } else { -mag });
    }
    v.sort_by(f64::total_cmp);
    v
}

pub fn random_window<R: Rng>(rng: &mut R, index_lo: i64, len: usize) -> SpectrumWindow {
    SpectrumWindow::new(index_lo, random_sorted(rng, len)).unwrap()
}

/// Sup norm of a complex matrix entrywise difference.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
