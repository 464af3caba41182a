//! Explicit solver for the second-order Wigner evolution of a diffusion
//! generator `L = a(x)∂²/∂x² + b(x)∂/∂x + c(x)`:
//!
//! ```text
//! ∂W/∂t = a ∂²W/∂x² − b′ ∂W/∂p + c W + ½ c″ ∂²W/∂p²
//! ```
//!
//! Forward Euler in time, centered differences in `x` and `p`, and zero
//! Dirichlet values on all four edges. The `c″` term uses the second
//! x-derivative of `c`.
//!
//! A step is accepted when
//! `dt ≤ 0.9·min(dx²/(2·max a), dp²/max|c″|)` and `dt·max|b′| ≤ dp`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{csv_grid, grayscale, pgm};
use crate::phase_space::Axis;

pub const SAFETY_FACTOR: f64 = 0.9;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A coefficient as a function of `x`, optionally with analytic derivatives.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    Function {
        f: ScalarFn,
        d1: Option<ScalarFn>,
        d2: Option<ScalarFn>,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(v) => write!(f, "Constant({v})"),
            Profile::Function { d1, d2, .. } => f
                .debug_struct("Function")
                .field("analytic_d1", &d1.is_some())
                .field("analytic_d2", &d2.is_some())
                .finish(),
        }
    }
}

impl Profile {
    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Function {
            f: Arc::new(f),
            d1: None,
            d2: None,
        }
    }

    pub fn with_derivatives(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Profile::Function {
            f: Arc::new(f),
            d1: Some(Arc::new(d1)),
            d2: Some(Arc::new(d2)),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_))
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(v) => *v,
            Profile::Function { f, .. } => f(x),
        }
    }

    /// First derivative; centered difference with step `h` if not analytic.
    pub fn first_derivative(&self, x: f64, h: f64) -> f64 {
        match self {
            Profile::Constant(_) => 0.0,
            Profile::Function { d1: Some(d), .. } => d(x),
            Profile::Function { f, .. } => (f(x + h) - f(x - h)) / (2.0 * h),
        }
    }

    /// Second derivative; centered difference with step `h` if not analytic.
    pub fn second_derivative(&self, x: f64, h: f64) -> f64 {
        match self {
            Profile::Constant(_) => 0.0,
            Profile::Function { d2: Some(d), .. } => d(x),
            Profile::Function { f, .. } => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        }
    }
}

/// Diffusion coefficient `a`, drift `b` and rate term `c`.
#[derive(Debug, Clone)]
pub struct DiffusionGenerator {
    pub a: Profile,
    pub b: Profile,
    pub c: Profile,
}

impl DiffusionGenerator {
    pub fn constant(a: f64, b: f64, c: f64) -> Self {
        Self {
            a: Profile::Constant(a),
            b: Profile::Constant(b),
            c: Profile::Constant(c),
        }
    }
}

/// Coefficients sampled on the `x` nodes.
#[derive(Debug, Clone)]
struct Sampled {
    a: Array1<f64>,
    db: Array1<f64>,
    c: Array1<f64>,
    d2c: Array1<f64>,
}

fn sample(gen: &DiffusionGenerator, x: &Axis) -> Result<Sampled> {
    let h = x.step;
    let xs = Array1::from(x.points());
    let a = xs.mapv(|v| gen.a.value(v));
    if let Some(bad) = a.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidSpec(format!(
            "diffusion coefficient a = {bad} on the grid"
        )));
    }
    let s = Sampled {
        a,
        db: xs.mapv(|v| gen.b.first_derivative(v, h)),
        c: xs.mapv(|v| gen.c.value(v)),
        d2c: xs.mapv(|v| gen.c.second_derivative(v, h)),
    };
    if s.db
        .iter()
        .chain(&s.c)
        .chain(&s.d2c)
        .any(|v| !v.is_finite())
    {
        return Err(Error::InvalidSpec(
            "non-finite coefficient on the grid".into(),
        ));
    }
    Ok(s)
}

fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Real Wigner field on an `(x, p)` grid, stored `[p][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerField {
    pub x: Axis,
    pub p: Axis,
    pub values: Array2<f64>,
    pub t: f64,
}

impl WignerField {
    pub fn new(x: Axis, p: Axis, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (p.len, x.len) {
            return Err(Error::ShapeMismatch {
                left: values.dim(),
                right: (p.len, x.len),
            });
        }
        if !(x.step > 0.0 && p.step > 0.0) {
            return Err(Error::InvalidArgument(
                "grid spacings must be positive".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field must be finite".into()));
        }
        Ok(Self {
            x,
            p,
            values,
            t: 0.0,
        })
    }

    /// `W[p, x] = fx(x)·fp(p)`.
    pub fn separable(
        x: Axis,
        p: Axis,
        fx: impl Fn(f64) -> f64,
        fp: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let xs: Vec<f64> = x.points().into_iter().map(fx).collect();
        let ps: Vec<f64> = p.points().into_iter().map(fp).collect();
        Self::new(x, p, outer(&ps, &xs))
    }

    pub fn zeros(x: Axis, p: Axis) -> Self {
        Self {
            x,
            p,
            values: Array2::zeros((p.len, x.len)),
            t: 0.0,
        }
    }

    /// Row of the field at p index `j`.
    pub fn x_profile(&self, j: usize) -> Vec<f64> {
        self.values.row(j).to_vec()
    }

    /// Sum over `p` times `dp`.
    pub fn x_marginal(&self) -> Vec<f64> {
        self.values
            .sum_axis(ndarray::Axis(0))
            .mapv(|v| v * self.p.step)
            .to_vec()
    }

    /// Ratio of the second to the first singular value of the value matrix.
    pub fn rank_one_ratio(&self) -> f64 {
        let (r, c) = self.values.dim();
        let m = DMatrix::from_fn(r, c, |i, j| self.values[[i, j]]);
        let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        if sv.is_empty() || sv[0] == 0.0 {
            return 0.0;
        }
        sv.get(1).copied().unwrap_or(0.0) / sv[0]
    }

    pub fn to_csv(&self) -> String {
        csv_grid(&self.values)
    }

    pub fn to_pgm(&self) -> String {
        pgm(&grayscale(&self.values))
    }
}

fn outer(rows: &[f64], cols: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), cols.len()), |(j, i)| rows[j] * cols[i])
}

/// Largest accepted time step for this grid and generator.
pub fn stability_limit(x: &Axis, p: &Axis, gen: &DiffusionGenerator) -> Result<f64> {
    let s = sample(gen, x)?;
    Ok(limit_from(&s, x, p))
}

fn limit_from(s: &Sampled, x: &Axis, p: &Axis) -> f64 {
    let mut limit = f64::INFINITY;
    let amax = max_abs(&s.a);
    if amax > 0.0 {
        limit = limit.min(SAFETY_FACTOR * x.step * x.step / (2.0 * amax));
    }
    let cmax = max_abs(&s.d2c);
    if cmax > 0.0 {
        limit = limit.min(SAFETY_FACTOR * p.step * p.step / cmax);
    }
    let bmax = max_abs(&s.db);
    if bmax > 0.0 {
        limit = limit.min(p.step / bmax);
    }
    limit
}

fn step(w: &Array2<f64>, s: &Sampled, dx: f64, dp: f64, dt: f64) -> Array2<f64> {
    let (np, nx) = w.dim();
    let mut out = Array2::zeros((np, nx));
    let (rx, rp) = (1.0 / (dx * dx), 1.0 / (dp * dp));
    let hp = 1.0 / (2.0 * dp);
    for j in 1..np.saturating_sub(1) {
        for i in 1..nx - 1 {
            let c0 = w[[j, i]];
            let dxx = (w[[j, i + 1]] - 2.0 * c0 + w[[j, i - 1]]) * rx;
            let dpp = (w[[j + 1, i]] - 2.0 * c0 + w[[j - 1, i]]) * rp;
            let dp1 = (w[[j + 1, i]] - w[[j - 1, i]]) * hp;
            let rhs = s.a[i] * dxx - s.db[i] * dp1 + s.c[i] * c0 + 0.5 * s.d2c[i] * dpp;
            out[[j, i]] = c0 + dt * rhs;
        }
    }
    out
}

/// Advances `field` by `n_steps` forward-Euler steps of size `dt`.
pub fn evolve(
    field: &WignerField,
    gen: &DiffusionGenerator,
    dt: f64,
    n_steps: usize,
) -> Result<WignerField> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt = {dt}")));
    }
    let s = sample(gen, &field.x)?;
    let limit = limit_from(&s, &field.x, &field.p);
    if dt > limit {
        return Err(Error::UnstableStep { dt, limit });
    }
    let mut values = field.values.clone();
    for _ in 0..n_steps {
        values = step(&values, &s, field.x.step, field.p.step, dt);
    }
    Ok(WignerField {
        x: field.x,
        p: field.p,
        values,
        t: field.t + dt * n_steps as f64,
    })
}

/// The reduced equation `∂X/∂t = a X″ + c X` on the `x` grid, same scheme.
pub fn evolve_profile(
    x: &Axis,
    profile: &[f64],
    gen: &DiffusionGenerator,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<f64>> {
    if profile.len() != x.len {
        return Err(Error::LengthMismatch {
            expected: x.len,
            actual: profile.len(),
        });
    }
    let s = sample(gen, x)?;
    let amax = max_abs(&s.a);
    if amax > 0.0 {
        let limit = SAFETY_FACTOR * x.step * x.step / (2.0 * amax);
        if dt > limit {
            return Err(Error::UnstableStep { dt, limit });
        }
    }
    let r = 1.0 / (x.step * x.step);
    let n = profile.len();
    let mut u = profile.to_vec();
    for _ in 0..n_steps {
        let mut next = vec![0.0; n];
        for i in 1..n - 1 {
            next[i] = u[i] + dt * (s.a[i] * (u[i + 1] - 2.0 * u[i] + u[i - 1]) * r + s.c[i] * u[i]);
        }
        u = next;
    }
    Ok(u)
}

/// Comparison of the 2-D field with the reduced 1-D equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub n_steps: usize,
    pub t: f64,
    /// Max |W − X·P| over the whole grid, divided by max |X·P|.
    pub max_relative_deviation: f64,
    /// Max |W₀ − X₀·P| / max |W₀| of the factorization.
    pub separability_residual: f64,
    pub growth_2d: f64,
    pub growth_1d: f64,
    pub analytic_growth: f64,
}

/// Splits a rank-one field into `(X over x, P over p)`, pivoting on the
/// largest entry.
pub fn factorize(field: &WignerField) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let w = &field.values;
    let ((jp, ip), &pivot) = w
        .indexed_iter()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .ok_or_else(|| Error::InvalidArgument("empty field".into()))?;
    if pivot == 0.0 {
        return Ok((vec![0.0; field.x.len], vec![0.0; field.p.len], 0.0));
    }
    let xf = w.row(jp).to_vec();
    let pf: Vec<f64> = w.column(ip).iter().map(|v| v / pivot).collect();
    let residual = outer(&pf, &xf)
        .iter()
        .zip(w.iter())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        / pivot.abs();
    Ok((xf, pf, residual))
}

/// Tolerance on the factorization residual of a "separable" field.
pub const SEPARABILITY_TOL: f64 = 1e-10;

/// Evolves the factorized field in 2-D and its `x` factor in 1-D, then
/// compares `W` with `X(t)·P` where `P` keeps its zero Dirichlet ends.
pub fn diffusion_reduction_check(
    field: &WignerField,
    gen: &DiffusionGenerator,
    dt: f64,
    n_steps: usize,
) -> Result<ReductionReport> {
    if !gen.b.is_constant() || !gen.c.is_constant() {
        return Err(Error::InvalidSpec(
            "reduction check needs constant b and c".into(),
        ));
    }
    let (xf, mut pf, residual) = factorize(field)?;
    if residual > SEPARABILITY_TOL {
        return Err(Error::NotSeparable(residual));
    }
    let start = WignerField {
        values: outer(&pf, &xf),
        ..field.clone()
    };
    let full = evolve(&start, gen, dt, n_steps)?;
    let reduced = evolve_profile(&field.x, &xf, gen, dt, n_steps)?;
    if n_steps > 0 {
        let last = pf.len() - 1;
        pf[0] = 0.0;
        pf[last] = 0.0;
    }
    let reference = outer(&pf, &reduced);
    let scale = reference.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diff = reference
        .iter()
        .zip(full.values.iter())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let ratio = |num: f64, den: f64| if den == 0.0 { 1.0 } else { num / den };
    Ok(ReductionReport {
        n_steps,
        t: full.t - field.t,
        max_relative_deviation: if scale == 0.0 { diff } else { diff / scale },
        separability_residual: residual,
        growth_2d: ratio(full.values.sum(), start.values.sum()),
        growth_1d: ratio(reduced.iter().sum(), xf.iter().sum()),
        analytic_growth: (gen.c.value(0.0) * (full.t - field.t)).exp(),
    })
}

/// `exp(-x²/2σ²)`.
pub fn gaussian_profile(x: f64, sigma: f64) -> f64 {
    (-x * x / (2.0 * sigma * sigma)).exp()
}

/// Free-space solution of `u_t = a u_xx` from a unit-peak Gaussian.
pub fn heat_kernel_profile(x: f64, sigma0: f64, a: f64, t: f64) -> f64 {
    let s2 = sigma0 * sigma0 + 2.0 * a * t;
    sigma0 / s2.sqrt() * (-x * x / (2.0 * s2)).exp()
}

/// Variance of a non-negative profile on `x`.
pub fn profile_variance(x: &Axis, u: &[f64]) -> f64 {
    let xs = x.points();
    let mass: f64 = u.iter().sum();
    let mean = xs.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / mass;
    xs.iter()
        .zip(u)
        .map(|(a, b)| (a - mean).powi(2) * b)
        .sum::<f64>()
        / mass
}
