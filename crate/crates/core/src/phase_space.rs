//! Continuous Wigner functions on a rectangular `(q, p)` grid.
//!
//! The transform is `W(p, q) = ∫ f(q + s/2)·f(q - s/2)·e^{-ips} ds` for real
//! `f`, evaluated by the trapezoid rule on a uniform `s` grid whose spacing
//! equals the `q` spacing and whose span is twice the `q` window.
//!
//! For `f(q) = exp(-q²/2σ²)` the transform is `2σ√π·exp(-(q²/σ² + σ²p²))`.
//! The `q` and `p` widths scale inversely; a symmetric `exp(-(p²+q²)/σ²)`
//! form is only correct at `σ = 1`.
//!
//! Hermite expansions use the orthonormal Hermite functions
//! `U_n(q) = (α/√π)^{1/2} (2ⁿ n!)^{-1/2} H_n(αq) e^{-(αq)²/2}`. Their
//! transforms are Laguerre forms
//! `V_n(p, q) = 2(-1)ⁿ L_n(2(α²q² + p²/α²))·e^{-(α²q² + p²/α²)}`,
//! which include the Gaussian envelope and use Laguerre (not Legendre)
//! polynomials.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Uniformly spaced coordinates `start + i·step`, `i = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    /// `len` points spanning `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, len: usize) -> Self {
        assert!(len >= 2, "axis needs at least two points");
        Self {
            start: -half_width,
            step: 2.0 * half_width / (len - 1) as f64,
            len,
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.start.abs().max(self.at(self.len - 1).abs())
    }
}

/// Phase-space grid; fields are stored `[p index][q index]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub q: Axis,
    pub p: Axis,
}

impl PhaseGrid {
    pub fn square(half_width: f64, len: usize) -> Self {
        Self {
            q: Axis::symmetric(half_width, len),
            p: Axis::symmetric(half_width, len),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub grid: PhaseGrid,
    /// `[p][q]`.
    pub values: Array2<f64>,
}

impl PhaseField {
    /// Largest absolute difference divided by the largest |value| of `reference`.
    pub fn max_relative_deviation(&self, reference: &PhaseField) -> f64 {
        let scale = reference.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let diff = self
            .values
            .iter()
            .zip(reference.values.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Trapezoid-rule Wigner transform of a real function.
pub fn wigner_quadrature<F: Fn(f64) -> f64>(f: F, grid: &PhaseGrid) -> PhaseField {
    let ds = grid.q.step;
    let half = 2 * ((grid.q.max_abs() / ds).ceil() as usize);
    let s: Vec<f64> = (0..=2 * half)
        .map(|j| (j as f64 - half as f64) * ds)
        .collect();
    let weight = |j: usize| {
        if j == 0 || j == 2 * half {
            0.5 * ds
        } else {
            ds
        }
    };
    // The integrand is even in s for real f, so only the cosine survives.
    let cos_table: Vec<Vec<f64>> = (0..grid.p.len)
        .map(|ip| {
            let p = grid.p.at(ip);
            s.iter()
                .enumerate()
                .map(|(j, s)| weight(j) * (p * s).cos())
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((grid.p.len, grid.q.len));
    for iq in 0..grid.q.len {
        let q = grid.q.at(iq);
        let product: Vec<f64> = s.iter().map(|s| f(q + s / 2.0) * f(q - s / 2.0)).collect();
        for ip in 0..grid.p.len {
            values[[ip, iq]] = product.iter().zip(&cos_table[ip]).map(|(a, b)| a * b).sum();
        }
    }
    PhaseField {
        grid: *grid,
        values,
    }
}

/// Quadrature and closed form of the transform of `exp(-q²/2σ²)`.
#[derive(Debug, Clone)]
pub struct GaussianWigner {
    pub sigma: f64,
    pub quadrature: PhaseField,
    pub closed_form: PhaseField,
}

impl GaussianWigner {
    pub fn max_relative_error(&self) -> f64 {
        self.quadrature.max_relative_deviation(&self.closed_form)
    }
}

/// `2σ√π·exp(-(q²/σ² + σ²p²))` on the grid.
pub fn gaussian_closed_form(sigma: f64, grid: &PhaseGrid) -> PhaseField {
    let norm = 2.0 * sigma * std::f64::consts::PI.sqrt();
    let values = Array2::from_shape_fn((grid.p.len, grid.q.len), |(ip, iq)| {
        let (q, p) = (grid.q.at(iq), grid.p.at(ip));
        norm * (-(q * q / (sigma * sigma) + sigma * sigma * p * p)).exp()
    });
    PhaseField {
        grid: *grid,
        values,
    }
}

/// Evaluates the Gaussian transform both ways. Requires at least six grid
/// points per width in each direction (`σ` in `q`, `1/σ` in `p`).
pub fn gaussian_wigner_closed_form(sigma: f64, grid: &PhaseGrid) -> Result<GaussianWigner> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma = {sigma}")));
    }
    if grid.q.step > sigma / 6.0 {
        return Err(Error::GridTooCoarse(format!(
            "q spacing {} exceeds sigma/6 = {}",
            grid.q.step,
            sigma / 6.0
        )));
    }
    if grid.p.step > 1.0 / (6.0 * sigma) {
        return Err(Error::GridTooCoarse(format!(
            "p spacing {} exceeds 1/(6 sigma) = {}",
            grid.p.step,
            1.0 / (6.0 * sigma)
        )));
    }
    check_nyquist(grid)?;
    let f = |q: f64| (-q * q / (2.0 * sigma * sigma)).exp();
    Ok(GaussianWigner {
        sigma,
        quadrature: wigner_quadrature(f, grid),
        closed_form: gaussian_closed_form(sigma, grid),
    })
}

/// The `s` spacing must resolve `e^{-ips}` at the largest `|p|`.
fn check_nyquist(grid: &PhaseGrid) -> Result<()> {
    let limit = std::f64::consts::FRAC_PI_2;
    if grid.q.step * grid.p.max_abs() > limit {
        return Err(Error::GridTooCoarse(format!(
            "q spacing {} does not resolve |p| up to {}",
            grid.q.step,
            grid.p.max_abs()
        )));
    }
    Ok(())
}

/// Orthonormal Hermite functions `U_0..=U_n_max` at `q`, by the stable
/// three-term recurrence.
pub fn hermite_functions(q: f64, alpha: f64, n_max: usize) -> Vec<f64> {
    let xi = alpha * q;
    let mut out = Vec::with_capacity(n_max + 1);
    let u0 = (alpha / std::f64::consts::PI.sqrt()).sqrt() * (-xi * xi / 2.0).exp();
    out.push(u0);
    if n_max >= 1 {
        out.push(std::f64::consts::SQRT_2 * xi * u0);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * xi * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Single orthonormal Hermite function `U_n`.
pub fn hermite_function(n: usize, alpha: f64, q: f64) -> f64 {
    hermite_functions(q, alpha, n)[n]
}

/// Laguerre polynomial `L_n(x)` by recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients of `f` in the Hermite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteExpansion {
    pub alpha: f64,
    pub coefficients: Vec<f64>,
    pub grid: Axis,
    /// Trapezoid `∫ f²`.
    pub norm_sq: f64,
    /// L² norm of `f - Σ c_n U_n` on the grid.
    pub reconstruction_error: f64,
}

impl HermiteExpansion {
    /// An expansion with given coefficients and no sampled source.
    pub fn from_coefficients(alpha: f64, coefficients: Vec<f64>) -> Self {
        let norm_sq = coefficients.iter().map(|c| c * c).sum();
        Self {
            alpha,
            coefficients,
            grid: Axis::symmetric(1.0, 2),
            norm_sq,
            reconstruction_error: 0.0,
        }
    }

    pub fn n_max(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    /// `Σ c_n U_n(q)`.
    pub fn evaluate(&self, q: f64) -> f64 {
        hermite_functions(q, self.alpha, self.n_max())
            .iter()
            .zip(&self.coefficients)
            .map(|(u, c)| u * c)
            .sum()
    }
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    step * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]))
}

/// Projects samples of `f` on `grid` onto `U_0..=U_n_max`.
///
/// The grid must resolve the highest mode: spacing at most
/// `π / (2α·√(2 n_max + 1))` and half-width at least `(√(2 n_max + 1) + 5)/α`.
pub fn hermite_expand(f: &[f64], grid: Axis, alpha: f64, n_max: usize) -> Result<HermiteExpansion> {
    if f.len() != grid.len {
        return Err(Error::LengthMismatch {
            expected: grid.len,
            actual: f.len(),
        });
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha}")));
    }
    let turning = (2.0 * n_max as f64 + 1.0).sqrt();
    let max_step = std::f64::consts::FRAC_PI_2 / (alpha * turning);
    if grid.step > max_step {
        return Err(Error::GridTooCoarse(format!(
            "spacing {} exceeds {max_step} for n_max = {n_max}",
            grid.step
        )));
    }
    let min_half = (turning + 5.0) / alpha;
    if grid.start > -min_half || grid.at(grid.len - 1) < min_half {
        return Err(Error::GridTooCoarse(format!(
            "grid must cover [-{min_half}, {min_half}] for n_max = {n_max}"
        )));
    }

    let basis: Vec<Vec<f64>> = (0..grid.len)
        .map(|i| hermite_functions(grid.at(i), alpha, n_max))
        .collect();
    let coefficients: Vec<f64> = (0..=n_max)
        .map(|n| {
            let prod: Vec<f64> = (0..grid.len).map(|i| f[i] * basis[i][n]).collect();
            trapezoid(&prod, grid.step)
        })
        .collect();
    let residual_sq: Vec<f64> = (0..grid.len)
        .map(|i| {
            let approx: f64 = basis[i].iter().zip(&coefficients).map(|(u, c)| u * c).sum();
            (f[i] - approx).powi(2)
        })
        .collect();
    let squares: Vec<f64> = f.iter().map(|v| v * v).collect();
    Ok(HermiteExpansion {
        alpha,
        coefficients,
        grid,
        norm_sq: trapezoid(&squares, grid.step),
        reconstruction_error: trapezoid(&residual_sq, grid.step).sqrt(),
    })
}

/// Transform of the `n`-th Hermite function at `(q, p)`.
pub fn hermite_wigner(n: usize, alpha: f64, q: f64, p: f64) -> f64 {
    let r = alpha * alpha * q * q + p * p / (alpha * alpha);
    let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
    sign * laguerre(n, 2.0 * r) * (-r).exp()
}

/// `Σ |c_n|² V_n(p, q)`: the mode-diagonal part of the transform of the
/// expanded function. Cross terms between modes are not included.
pub fn wigner_from_expansion(e: &HermiteExpansion, grid: &PhaseGrid) -> PhaseField {
    let weights: Vec<(usize, f64)> = e
        .coefficients
        .iter()
        .enumerate()
        .map(|(n, c)| (n, c * c))
        .filter(|(_, w)| *w != 0.0)
        .collect();
    let values = Array2::from_shape_fn((grid.p.len, grid.q.len), |(ip, iq)| {
        let (q, p) = (grid.q.at(iq), grid.p.at(ip));
        weights
            .iter()
            .map(|&(n, w)| w * hermite_wigner(n, e.alpha, q, p))
            .sum()
    });
    PhaseField {
        grid: *grid,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn hermite_poly(n: usize, x: f64) -> f64 {
        // Physicists' polynomials from the explicit low-order formulas.
        match n {
            0 => 1.0,
            1 => 2.0 * x,
            2 => 4.0 * x * x - 2.0,
            3 => 8.0 * x.powi(3) - 12.0 * x,
            4 => 16.0 * x.powi(4) - 48.0 * x * x + 12.0,
            _ => unreachable!(),
        }
    }

    #[test]
    fn hermite_recurrence_matches_explicit_formula() {
        let alpha = 1.3;
        for n in 0..=4 {
            for &q in &[-2.0, -0.3, 0.0, 0.7, 1.9] {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                let norm = (alpha / PI.sqrt()).sqrt() / (2f64.powi(n as i32) * fact).sqrt();
                let expected =
                    norm * hermite_poly(n, alpha * q) * (-(alpha * q).powi(2) / 2.0).exp();
                assert!((hermite_function(n, alpha, q) - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn laguerre_low_orders() {
        for &x in &[0.0, 0.5, 2.0, 7.5] {
            assert_eq!(laguerre(0, x), 1.0);
            assert!((laguerre(1, x) - (1.0 - x)).abs() < 1e-14);
            assert!((laguerre(2, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-13);
            let l3 = (-x.powi(3) + 9.0 * x * x - 18.0 * x + 6.0) / 6.0;
            assert!((laguerre(3, x) - l3).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_origin_is_max_and_positive() {
        let g = gaussian_wigner_closed_form(1.0, &PhaseGrid::square(6.0, 121)).unwrap();
        let c = &g.closed_form.values;
        let centre = c[[60, 60]];
        assert!(centre > 0.0);
        assert!(c.iter().all(|&v| v <= centre));
        assert!(g.max_relative_error() < 1e-6);
    }

    #[test]
    fn widths_scale_inversely() {
        let sigma = 2.0;
        let grid = PhaseGrid {
            q: Axis::symmetric(14.0, 201),
            p: Axis::symmetric(3.0, 121),
        };
        let g = gaussian_wigner_closed_form(sigma, &grid).unwrap();
        let v = |q: f64, p: f64| {
            let f = gaussian_closed_form(
                sigma,
                &PhaseGrid {
                    q: Axis {
                        start: q,
                        step: 1.0,
                        len: 1,
                    },
                    p: Axis {
                        start: p,
                        step: 1.0,
                        len: 1,
                    },
                },
            );
            f.values[[0, 0]]
        };
        // e-fold at q = σ and at p = 1/σ.
        let origin = v(0.0, 0.0);
        assert!((v(sigma, 0.0) / origin - (-1.0f64).exp()).abs() < 1e-14);
        assert!((v(0.0, 1.0 / sigma) / origin - (-1.0f64).exp()).abs() < 1e-14);
        assert!(g.max_relative_error() < 1e-6);
    }

    #[test]
    fn coarse_grid_rejected() {
        assert!(matches!(
            gaussian_wigner_closed_form(1.0, &PhaseGrid::square(6.0, 30)),
            Err(Error::GridTooCoarse(_))
        ));
        let grid = Axis::symmetric(10.0, 50);
        let f = vec![0.0; 50];
        assert!(matches!(
            hermite_expand(&f, grid, 1.0, 32),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn expansion_of_single_modes() {
        let grid = Axis::symmetric(14.0, 801);
        for n in [0usize, 3] {
            let f: Vec<f64> = grid
                .points()
                .iter()
                .map(|&q| hermite_function(n, 1.0, q))
                .collect();
            let e = hermite_expand(&f, grid, 1.0, 8).unwrap();
            for (m, c) in e.coefficients.iter().enumerate() {
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((c - expected).abs() < 1e-8, "n={n} m={m} c={c}");
            }
        }
    }

    #[test]
    fn dilated_gaussian_converges() {
        let grid = Axis::symmetric(16.0, 1601);
        let s = 1.2;
        let f: Vec<f64> = grid
            .points()
            .iter()
            .map(|q| (-q * q / (2.0 * s * s)).exp())
            .collect();
        let e = hermite_expand(&f, grid, 1.0, 32).unwrap();
        assert!(e.reconstruction_error < 1e-6, "{}", e.reconstruction_error);
        // Odd coefficients vanish by symmetry; even ones decay geometrically.
        for k in 0..16 {
            assert!(e.coefficients[2 * k + 1].abs() < 1e-12);
        }
        for k in 1..8 {
            let ratio = e.coefficients[2 * k + 2].abs() / e.coefficients[2 * k].abs();
            assert!(ratio < 0.3, "k={k} ratio={ratio}");
        }
        let bessel: f64 = e.coefficients.iter().map(|c| c * c).sum();
        assert!(bessel <= e.norm_sq * (1.0 + 1e-10));
    }

    #[test]
    fn ground_mode_reproduces_gaussian_closed_form() {
        let sigma = 1.5;
        let alpha = 1.0 / sigma;
        let grid = PhaseGrid {
            q: Axis::symmetric(10.0, 101),
            p: Axis::symmetric(4.0, 101),
        };
        let e = HermiteExpansion::from_coefficients(alpha, vec![1.0]);
        let w = wigner_from_expansion(&e, &grid);
        // Unit-norm Gaussian: divide the unnormalized closed form by ∫f² = σ√π.
        let mut reference = gaussian_closed_form(sigma, &grid);
        reference.values /= sigma * PI.sqrt();
        assert!(w.max_relative_deviation(&reference) < 1e-8);
    }

    #[test]
    fn mixed_expansion_is_weighted_sum() {
        let grid = PhaseGrid::square(4.0, 41);
        let e = HermiteExpansion::from_coefficients(0.8, vec![0.5, -0.3, 0.2]);
        let w = wigner_from_expansion(&e, &grid);
        let mut expected = Array2::<f64>::zeros((41, 41));
        for (n, c) in e.coefficients.iter().enumerate() {
            let single = HermiteExpansion::from_coefficients(
                0.8,
                (0..=n).map(|m| if m == n { 1.0 } else { 0.0 }).collect(),
            );
            expected = expected + c * c * &wigner_from_expansion(&single, &grid).values;
        }
        for (a, b) in w.values.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
