//! Cross-entity correlation of aliased arrays and null calibration.
//!
//! Each entity contributes one array built from its own residual series:
//! the modulus of its auto-WVF, or its auto lag-product matrix. Arrays are
//! aliased at `threshold_sigmas`, densified with zeros, and compared with a
//! Pearson correlation over all elements (or over the union of the two
//! supports).

use std::fmt::Write as _;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alias::{threshold_alias, AliasedMap, DEFAULT_THRESHOLD_SIGMAS};
use crate::error::{Error, Result};
use crate::fixing::{gaussian_increments, gaussian_walk, levy_flight, levy_increments};
use crate::rng::derive_seed;
use crate::wvf::{auto_wvf, lag_covariance};

/// Which per-entity array is aliased and correlated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Substrate {
    #[default]
    WvfModulus,
    AliasedCovariance,
}

impl Substrate {
    pub fn as_str(self) -> &'static str {
        match self {
            Substrate::WvfModulus => "wvf_modulus",
            Substrate::AliasedCovariance => "aliased_covariance",
        }
    }
}

impl std::str::FromStr for Substrate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wvf_modulus" => Ok(Self::WvfModulus),
            "aliased_covariance" => Ok(Self::AliasedCovariance),
            other => Err(Error::InvalidArgument(format!(
                "unknown substrate {other:?}"
            ))),
        }
    }
}

/// Elements entering the Pearson sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportMode {
    #[default]
    All,
    Union,
}

impl std::str::FromStr for SupportMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "union" => Ok(Self::Union),
            other => Err(Error::InvalidArgument(format!(
                "unknown support mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub substrate: Substrate,
    pub threshold_sigmas: f64,
    pub support: SupportMode,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            substrate: Substrate::WvfModulus,
            threshold_sigmas: DEFAULT_THRESHOLD_SIGMAS,
            support: SupportMode::All,
        }
    }
}

/// Symmetric matrix of pairwise array correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub labels: Vec<String>,
    pub values: Array2<f64>,
    pub config: DetectorConfig,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[[i, k]]
    }

    /// Off-diagonal entries `(i, k, ρ)` with `i < k`.
    pub fn pairs(&self) -> Vec<(usize, usize, f64)> {
        let n = self.labels.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |k| (i, k)))
            .map(|(i, k)| (i, k, self.values[[i, k]]))
            .collect()
    }

    /// Reorders rows and columns so that new index `j` is old `order[j]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let n = order.len();
        Self {
            labels: order.iter().map(|&i| self.labels[i].clone()).collect(),
            values: Array2::from_shape_fn((n, n), |(a, b)| self.values[[order[a], order[b]]]),
            config: self.config,
        }
    }

    /// Upper-triangular labeled table: header of labels, one row per entity
    /// except the last, blanks below the diagonal, `1` on it.
    pub fn to_csv(&self) -> String {
        let n = self.labels.len();
        let mut out = String::new();
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for i in 0..n.saturating_sub(1) {
            out.push_str(&self.labels[i]);
            for k in 0..n {
                out.push(',');
                if k == i {
                    out.push('1');
                } else if k > i {
                    write!(out, "{:.3}", self.values[[i, k]]).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

fn check_shape(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

fn pearson<'a>(pairs: impl Iterator<Item = (&'a f64, &'a f64)> + Clone) -> Result<f64> {
    let (mut n, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for (a, b) in pairs.clone() {
        n += 1.0;
        sa += a;
        sb += b;
    }
    let (ma, mb) = (sa / n, sb / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        let (da, db) = (a - ma, b - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation over all flattened elements.
pub fn array_correlation(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    check_shape(a, b)?;
    pearson(a.iter().zip(b.iter()))
}

/// Pearson correlation restricted to the union of two supports.
pub fn support_union_correlation(a: &AliasedMap, b: &AliasedMap) -> Result<f64> {
    let (da, db) = (a.to_dense(), b.to_dense());
    check_shape(&da, &db)?;
    let mut mask = Array2::from_elem(da.dim(), false);
    for &(r, c) in a.support.iter().chain(&b.support) {
        mask[[r, c]] = true;
    }
    pearson(
        da.iter()
            .zip(db.iter())
            .zip(mask.iter())
            .filter(|(_, m)| **m)
            .map(|(p, _)| p),
    )
}

/// The array an entity contributes before aliasing.
pub fn entity_array(series: &[f64], substrate: Substrate) -> Result<Array2<f64>> {
    match substrate {
        Substrate::WvfModulus => Ok(auto_wvf(series)?.modulus()),
        Substrate::AliasedCovariance => Ok(lag_covariance(series, series)?.values),
    }
}

/// Pairwise correlations of aliased per-entity arrays.
pub fn detector(
    residuals: &[Vec<f64>],
    labels: &[String],
    config: &DetectorConfig,
) -> Result<CorrelationMatrix> {
    if residuals.len() < 2 {
        return Err(Error::InvalidArgument(
            "detector needs at least two series".into(),
        ));
    }
    if labels.len() != residuals.len() {
        return Err(Error::LengthMismatch {
            expected: residuals.len(),
            actual: labels.len(),
        });
    }
    let n = residuals[0].len();
    if let Some(bad) = residuals.iter().find(|r| r.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: bad.len(),
        });
    }
    let maps = residuals
        .par_iter()
        .map(|r| threshold_alias(&entity_array(r, config.substrate)?, config.threshold_sigmas))
        .collect::<Result<Vec<_>>>()?;
    let dense: Vec<Array2<f64>> = maps.par_iter().map(AliasedMap::to_dense).collect();

    let m = residuals.len();
    let index: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |k| (i, k)))
        .collect();
    let rhos = index
        .par_iter()
        .map(|&(i, k)| match config.support {
            SupportMode::All => array_correlation(&dense[i], &dense[k]),
            SupportMode::Union => support_union_correlation(&maps[i], &maps[k]),
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut values = Array2::eye(m);
    for (&(i, k), rho) in index.iter().zip(rhos) {
        values[[i, k]] = rho;
        values[[k, i]] = rho;
    }
    Ok(CorrelationMatrix {
        labels: labels.to_vec(),
        values,
        config: *config,
    })
}

/// Generator for independent null series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullModel {
    Gaussian,
    Levy { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullSpec {
    pub n_series: usize,
    pub n_days: usize,
    pub model: NullModel,
    pub trials: usize,
    pub seed: u64,
    /// Feed the detector walk increments instead of walk levels.
    pub differenced: bool,
    pub detector: DetectorConfig,
}

impl Default for NullSpec {
    fn default() -> Self {
        Self {
            n_series: 18,
            n_days: 313,
            model: NullModel::Gaussian,
            trials: 100,
            seed: 0,
            differenced: true,
            detector: DetectorConfig::default(),
        }
    }
}

/// Empirical distribution of null pairwise `|ρ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    pub spec: NullSpec,
    pub n_values: usize,
    pub mean: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub q99: f64,
    pub max: f64,
}

impl NullSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// One null series. Gaussian steps have unit std; Lévy scale is `1/√2` so
/// that `alpha = 2` matches.
pub fn null_series(
    model: NullModel,
    n_days: usize,
    differenced: bool,
    seed: u64,
) -> Result<Vec<f64>> {
    match (model, differenced) {
        (NullModel::Gaussian, true) => gaussian_increments(n_days, 1.0, seed),
        (NullModel::Gaussian, false) => gaussian_walk(n_days, 1.0, seed),
        (NullModel::Levy { alpha }, true) => {
            levy_increments(n_days, alpha, std::f64::consts::FRAC_1_SQRT_2, seed)
        }
        (NullModel::Levy { alpha }, false) => {
            levy_flight(n_days, alpha, std::f64::consts::FRAC_1_SQRT_2, seed)
        }
    }
}

/// Pairwise `|ρ|` for every trial, in trial order.
pub fn null_trials(spec: &NullSpec) -> Result<Vec<Vec<f64>>> {
    if spec.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if spec.n_series < 2 {
        return Err(Error::InvalidArgument("n_series must be at least 2".into()));
    }
    let labels: Vec<String> = (0..spec.n_series).map(|i| format!("null{i:02}")).collect();
    (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(spec.seed, t as u64);
            let series = (0..spec.n_series)
                .map(|i| {
                    null_series(
                        spec.model,
                        spec.n_days,
                        spec.differenced,
                        derive_seed(trial_seed, i as u64),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let m = detector(&series, &labels, &spec.detector)?;
            Ok(m.pairs().into_iter().map(|(_, _, r)| r.abs()).collect())
        })
        .collect()
}

/// Runs the detector on independent null panels and summarizes `|ρ|`.
pub fn null_calibration(spec: &NullSpec) -> Result<NullSummary> {
    let mut all: Vec<f64> = null_trials(spec)?.into_iter().flatten().collect();
    all.sort_by(f64::total_cmp);
    Ok(NullSummary {
        spec: *spec,
        n_values: all.len(),
        mean: all.iter().sum::<f64>() / all.len() as f64,
        q25: quantile_sorted(&all, 0.25),
        median: quantile_sorted(&all, 0.5),
        q75: quantile_sorted(&all, 0.75),
        q95: quantile_sorted(&all, 0.95),
        q99: quantile_sorted(&all, 0.99),
        max: *all.last().unwrap(),
    })
}
