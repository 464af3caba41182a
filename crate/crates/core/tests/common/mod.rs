//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use wvf_panel::rng::{substream, PolarNormal};

pub fn noise(seed: u64, n: usize) -> Vec<f64> {
    let mut g = PolarNormal::new(substream(seed, 7));
    (0..n).map(|_| g.sample()).collect()
}

/// Direct O(N^3) evaluation of the discrete array, no FFT.
pub fn brute_wvf(x: &[f64], y: &[f64]) -> Vec<Vec<Complex64>> {
    let n = x.len();
    let k_max = ((n - 1) / 2) as isize;
    (0..n)
        .map(|t| {
            (0..n)
                .map(|m| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in -k_max..=k_max {
                        let (a, b) = (t as isize - k, t as isize + k);
                        if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                            continue;
                        }
                        let phase = -2.0 * PI * (m as f64) * (k as f64) / n as f64;
                        acc += Complex64::from_polar(x[a as usize] * y[b as usize], phase);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// `N·|x[n]|²`.
pub fn time_marginal_oracle(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    x.iter().map(|v| n * v * v).collect()
}

/// Lag sums `R[k] = Σ_j x[j-k]·x[j+k]`, then a direct DFT over `k`.
pub fn periodogram_oracle(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    let k_max = ((n - 1) / 2) as isize;
    let r: Vec<(isize, f64)> = (-k_max..=k_max)
        .map(|k| {
            let s: f64 = (0..n as isize)
                .filter(|j| j - k >= 0 && j + k >= 0 && j - k < n as isize && j + k < n as isize)
                .map(|j| x[(j - k) as usize] * x[(j + k) as usize])
                .sum();
            (k, s)
        })
        .collect();
    (0..n)
        .map(|m| {
            r.iter()
                .map(|&(k, s)| {
                    Complex64::from_polar(
                        s,
                        -2.0 * PI * (m * k.rem_euclid(n as isize) as usize) as f64 / n as f64,
                    )
                })
                .sum()
        })
        .collect()
}

/// `max|a - b| / max|b|`.
pub fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let diff = a
        .iter()
        .zip(b)
        .fold(0.0_f64, |m, (p, q)| m.max((p - q).norm()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Trapezoid-free Wigner integral by composite Simpson on a fine `s` grid,
/// used as a second opinion on the production quadrature.
pub fn wigner_simpson(
    f: impl Fn(f64) -> f64,
    q: f64,
    p: f64,
    half_span: f64,
    intervals: usize,
) -> f64 {
    let h = 2.0 * half_span / intervals as f64;
    let g = |s: f64| f(q + s / 2.0) * f(q - s / 2.0) * (p * s).cos();
    let mut acc = g(-half_span) + g(half_span);
    for i in 1..intervals {
        let s = -half_span + h * i as f64;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(s);
    }
    acc * h / 3.0
}
