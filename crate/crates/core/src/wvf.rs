//! Discrete lag products and Wigner-Ville arrays.
//!
//! # Conventions
//!
//! For series `x`, `y` of length `N` and centre time `n`, the lag product at
//! half-lag `k` is `r_n[k] = x[n - k] * conj(y[n + k])`, taken as zero when
//! either index falls outside `0..N`. Using integer half-lags puts the
//! continuous shifts `t ∓ τ/2` on the sample grid with `τ = 2k`.
//!
//! The array is the length-`N` DFT of `r_n` over `k` with kernel `e^{-iωk}`:
//!
//! ```text
//! W[n, m] = Σ_k r_n[k] · exp(-2πi·m·k / N),   m = 0..N-1
//! ```
//!
//! Since `|k| ≤ (N-1)/2` the DFT never wraps. With these choices:
//!
//! * `Σ_m W[n, m] = N · x[n]·conj(y[n])` (time marginal, factor `N`);
//! * `Σ_n W[n, m] = Σ_k R[k] · exp(-2πi·m·k/N)` with
//!   `R[k] = Σ_j x[j - k]·conj(y[j + k])` (frequency marginal, factor 1);
//! * the grand total of an auto array is `N · Σ|x[n]|²`;
//! * auto arrays are real, and `W_yx = conj(W_xy)`;
//! * `W_{x1+x2} = W_{x1} + W_{x2} + 2·Re W_{x1,x2}` for real inputs.
//!
//! No analytic-signal step and no smoothing window are applied.

use std::borrow::Cow;
use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest half-lag with a non-empty product for a series of length `n`.
pub fn max_half_lag(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

/// Discretization metadata carried alongside every array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convention {
    /// Lag spacing in samples (products `x[n-k]·conj(y[n+k])` span `2k`).
    pub lag_step: usize,
    /// Sign of the DFT exponent.
    pub fft_sign: i8,
}

pub const CONVENTION: Convention = Convention {
    lag_step: 2,
    fft_sign: -1,
};

/// Lag products `x[t-k]·y[t+k]` indexed `[t][k + K]` with `K = (N-1)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagCovariance {
    pub values: Array2<f64>,
    pub n: usize,
}

impl LagCovariance {
    pub fn max_half_lag(&self) -> usize {
        max_half_lag(self.n)
    }

    /// Value at centre time `t` and half-lag `k` (lag `2k`).
    pub fn at(&self, t: usize, k: isize) -> f64 {
        let col = k + self.max_half_lag() as isize;
        self.values[[t, col as usize]]
    }

    /// Mean over centre times for each half-lag, dividing by `N`.
    pub fn time_average(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.values
            .columns()
            .into_iter()
            .map(|c| c.sum() / n)
            .collect()
    }
}

/// Lag-product matrix of two real series.
pub fn lag_covariance(x: &[f64], y: &[f64]) -> Result<LagCovariance> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            actual: n,
        });
    }
    let kmax = max_half_lag(n) as isize;
    let values = Array2::from_shape_fn((n, 2 * kmax as usize + 1), |(t, c)| {
        let k = c as isize - kmax;
        let (a, b) = (t as isize - k, t as isize + k);
        if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
            0.0
        } else {
            x[a as usize] * y[b as usize]
        }
    });
    Ok(LagCovariance { values, n })
}

/// A discrete Wigner-Ville array, indexed `[time][frequency bin]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WvfArray {
    pub values: Array2<Complex64>,
    pub convention: Convention,
}

impl WvfArray {
    pub fn n_time(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_freq(&self) -> usize {
        self.values.ncols()
    }

    pub fn modulus(&self) -> Array2<f64> {
        self.values.mapv(|z| z.norm())
    }

    pub fn real_part(&self) -> Array2<f64> {
        self.values.mapv(|z| z.re)
    }

    pub fn imag_part(&self) -> Array2<f64> {
        self.values.mapv(|z| z.im)
    }

    pub fn conj(&self) -> WvfArray {
        WvfArray {
            values: self.values.mapv(|z| z.conj()),
            convention: self.convention,
        }
    }

    /// Largest |Im| relative to the largest modulus (0 for a zero array).
    pub fn max_relative_imag(&self) -> f64 {
        let max_mod = self.values.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        if max_mod == 0.0 {
            return 0.0;
        }
        self.values.iter().fold(0.0_f64, |m, z| m.max(z.im.abs())) / max_mod
    }
}

fn to_complex<T: Copy + Into<Complex64>>(x: &[T]) -> Vec<Complex64> {
    x.iter().map(|&v| v.into()).collect()
}

fn bilinear(x: &[Complex64], y: &[Complex64]) -> WvfArray {
    let n = x.len();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut values = Array2::zeros((n, n));
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for (t, mut row) in values.rows_mut().into_iter().enumerate() {
        let mut buf = vec![Complex64::default(); n];
        let kmax = t.min(n - 1 - t);
        for k in 0..=kmax {
            buf[k] = x[t - k] * y[t + k].conj();
            if k > 0 {
                buf[n - k] = x[t + k] * y[t - k].conj();
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        row.iter_mut().zip(buf).for_each(|(dst, v)| *dst = v);
    }
    WvfArray {
        values,
        convention: CONVENTION,
    }
}

/// Auto array of a real or complex series.
pub fn auto_wvf<T: Copy + Into<Complex64>>(x: &[T]) -> Result<WvfArray> {
    if x.len() < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            actual: x.len(),
        });
    }
    let xs = to_complex(x);
    Ok(bilinear(&xs, &xs))
}

/// Cross array `W_xy`. `cross_wvf(x, x)` equals `auto_wvf(x)` exactly.
pub fn cross_wvf<T: Copy + Into<Complex64>>(x: &[T], y: &[T]) -> Result<WvfArray> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            actual: x.len(),
        });
    }
    Ok(bilinear(&to_complex(x), &to_complex(y)))
}

/// All pairwise arrays of a set of series, stored for `i <= k` only.
#[derive(Debug, Clone)]
pub struct MatrixWvf {
    pub size: usize,
    upper: BTreeMap<(usize, usize), WvfArray>,
}

impl MatrixWvf {
    /// `W_ik`; the lower triangle is the conjugate of the stored upper entry.
    pub fn get(&self, i: usize, k: usize) -> Cow<'_, WvfArray> {
        if i <= k {
            Cow::Borrowed(&self.upper[&(i, k)])
        } else {
            Cow::Owned(self.upper[&(k, i)].conj())
        }
    }

    pub fn upper(&self) -> impl Iterator<Item = (&(usize, usize), &WvfArray)> {
        self.upper.iter()
    }
}

/// Computes `W_ik` for every `i <= k`. Pairs run in parallel; each array is
/// produced by the same sequential routine as [`cross_wvf`].
pub fn matrix_wvf(series: &[Vec<f64>]) -> Result<MatrixWvf> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument(
            "matrix WVF needs at least 2 series".into(),
        ));
    }
    let n = series[0].len();
    if let Some(s) = series.iter().find(|s| s.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: s.len(),
        });
    }
    let pairs: Vec<(usize, usize)> = (0..series.len())
        .flat_map(|i| (i..series.len()).map(move |k| (i, k)))
        .collect();
    let arrays: Vec<WvfArray> = pairs
        .par_iter()
        .map(|&(i, k)| cross_wvf(&series[i], &series[k]))
        .collect::<Result<_>>()?;
    Ok(MatrixWvf {
        size: series.len(),
        upper: pairs.into_iter().zip(arrays).collect(),
    })
}

/// Sum over frequency bins for each time row.
pub fn time_marginal(w: &WvfArray) -> Vec<Complex64> {
    w.values.rows().into_iter().map(|r| r.sum()).collect()
}

/// Sum over time rows for each frequency bin.
pub fn freq_marginal(w: &WvfArray) -> Vec<Complex64> {
    w.values.columns().into_iter().map(|c| c.sum()).collect()
}
