//! OLS detrending against the benchmark, optionally with a credit control.
//!
//! The plain fit is `quote = alpha + beta * benchmark + e`. The
//! credit-controlled fit adds the CDS spread predicted from the domicile short
//! rate as a second regressor: `quote = alpha + beta * benchmark + theta *
//! cds_hat + eps`, where `cds_hat = alpha_credit + beta_credit * short_rate`.
//! The proxy enters in basis points while rates stay in percent; no rescaling
//! is applied, so `theta` is in percent per bp.
//!
//! Fits solve the normal equations on centered data and report homoskedastic
//! standard errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::panel::{CdsPanel, PanelSeries};

/// Designs whose column-scaled condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Raw least-squares output for an intercept plus `k` regressors.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Intercept first, then one slope per regressor.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    /// Condition number of the design with columns scaled to unit norm.
    pub condition: f64,
    pub residual_variance: f64,
}

/// Ordinary least squares with intercept.
pub fn ols_fit(y: &[f64], regressors: &[&[f64]]) -> Result<OlsFit> {
    let n = y.len();
    let k = regressors.len();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "at least one regressor required".into(),
        ));
    }
    for x in regressors {
        if x.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: x.len(),
            });
        }
    }
    if n < k + 2 {
        return Err(Error::TooFewObservations {
            required: k + 2,
            actual: n,
        });
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let x_means: Vec<f64> = regressors.iter().map(|x| mean(x)).collect();
    let y_mean = mean(y);

    // A zero-variance regressor duplicates the intercept.
    for (x, m) in regressors.iter().zip(&x_means) {
        if x.iter().all(|v| v == m) || x.iter().all(|v| *v == x[0]) {
            return Err(Error::SingularDesign {
                condition: f64::INFINITY,
            });
        }
    }

    let condition = design_condition(regressors);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularDesign { condition });
    }

    let centered = DMatrix::from_fn(n, k, |i, j| regressors[j][i] - x_means[j]);
    let yc = DVector::from_fn(n, |i, _| y[i] - y_mean);
    let sxx = centered.transpose() * &centered;
    let sxy = centered.transpose() * &yc;
    let chol = sxx
        .clone()
        .cholesky()
        .ok_or(Error::SingularDesign { condition })?;
    let slopes = chol.solve(&sxy);
    let intercept = y_mean - (0..k).map(|j| slopes[j] * x_means[j]).sum::<f64>();

    let residuals: Vec<f64> = (0..n)
        .map(|i| {
            let fitted = intercept + (0..k).map(|j| slopes[j] * regressors[j][i]).sum::<f64>();
            y[i] - fitted
        })
        .collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let r_squared = if tss > 0.0 {
        (1.0 - rss / tss).clamp(0.0, 1.0)
    } else {
        // Constant response: the intercept explains everything.
        1.0
    };

    let dof = (n - k - 1) as f64;
    let sigma2 = rss / dof;
    let sxx_inv = chol.inverse();
    let mean_vec = DVector::from_column_slice(&x_means);
    let var_intercept =
        sigma2 * (1.0 / n as f64 + (mean_vec.transpose() * &sxx_inv * &mean_vec)[0]);
    let mut std_errors = vec![var_intercept.max(0.0).sqrt()];
    std_errors.extend((0..k).map(|j| (sigma2 * sxx_inv[(j, j)]).max(0.0).sqrt()));

    let mut coefficients = vec![intercept];
    coefficients.extend(slopes.iter().copied());
    Ok(OlsFit {
        coefficients,
        std_errors,
        r_squared,
        residuals,
        condition,
        residual_variance: sigma2,
    })
}

/// Ratio of extreme singular values of `[1, x_1, .., x_k]` with each column
/// scaled to unit Euclidean norm.
fn design_condition(regressors: &[&[f64]]) -> f64 {
    let n = regressors[0].len();
    let k = regressors.len();
    let mut design = DMatrix::from_element(n, k + 1, 1.0 / (n as f64).sqrt());
    for (j, x) in regressors.iter().enumerate() {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return f64::INFINITY;
        }
        for i in 0..n {
            design[(i, j + 1)] = x[i] / norm;
        }
    }
    let sv = design.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// One entity's detrending regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub entity: String,
    /// Mean of the raw quotes (percent).
    pub mean_rate: f64,
    /// Sample variance of the raw quotes.
    pub rate_variance: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Loading on the credit proxy; `None` for benchmark-only fits.
    pub theta: Option<f64>,
    pub se_alpha: f64,
    pub se_beta: f64,
    pub se_theta: Option<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    fn from_fit(entity: &str, y: &[f64], fit: OlsFit) -> Self {
        let n = y.len() as f64;
        let mean_rate = y.iter().sum::<f64>() / n;
        let rate_variance = y.iter().map(|v| (v - mean_rate).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            entity: entity.to_string(),
            mean_rate,
            rate_variance,
            alpha: fit.coefficients[0],
            beta: fit.coefficients[1],
            theta: fit.coefficients.get(2).copied(),
            se_alpha: fit.std_errors[0],
            se_beta: fit.std_errors[1],
            se_theta: fit.std_errors.get(2).copied(),
            r_squared: fit.r_squared,
            residuals: fit.residuals,
        }
    }
}

/// Regresses `y` on the benchmark series and labels the result.
pub fn fit_against(entity: &str, y: &[f64], benchmark: &[f64]) -> Result<RegressionResult> {
    let fit = ols_fit(y, &[benchmark])?;
    Ok(RegressionResult::from_fit(entity, y, fit))
}

/// Benchmark-only detrending of every non-benchmark column, in panel order.
pub fn detrend_benchmark(panel: &PanelSeries) -> Result<Vec<RegressionResult>> {
    let bench = panel.benchmark();
    let cols: Vec<usize> = panel.entity_indices().collect();
    cols.par_iter()
        .map(|&j| fit_against(&panel.entities()[j].label, &panel.column(j), &bench))
        .collect()
}

/// CDS spread predicted from the domicile short rate.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditProxy {
    pub entity: String,
    /// Intercept in bp.
    pub alpha_credit: f64,
    /// Slope in bp per percent.
    pub beta_credit: f64,
    pub se_alpha_credit: f64,
    pub se_beta_credit: f64,
    pub r_squared: f64,
    pub dates: Vec<chrono::NaiveDate>,
    /// `alpha_credit + beta_credit * short_rate`, in bp.
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Regresses the CDS spread (bp) on the short rate (percent).
pub fn fit_credit_proxy(cds: &CdsPanel) -> Result<CreditProxy> {
    let rate = cds.short_rate_pct();
    let fit = ols_fit(cds.cds_spread_bp(), &[rate])?;
    let (a, b) = (fit.coefficients[0], fit.coefficients[1]);
    Ok(CreditProxy {
        entity: cds.entity.clone(),
        alpha_credit: a,
        beta_credit: b,
        se_alpha_credit: fit.std_errors[0],
        se_beta_credit: fit.std_errors[1],
        r_squared: fit.r_squared,
        dates: cds.dates().to_vec(),
        fitted: rate.iter().map(|r| a + b * r).collect(),
        residuals: fit.residuals,
    })
}

/// Credit-controlled detrending. Entities with a proxy get the two-regressor
/// fit; the rest fall back to the benchmark-only fit.
pub fn detrend_with_credit(
    panel: &PanelSeries,
    proxies: &BTreeMap<String, CreditProxy>,
) -> Result<Vec<RegressionResult>> {
    for proxy in proxies.values() {
        if proxy.dates.as_slice() != panel.dates() {
            return Err(Error::DateMismatch(proxy.entity.clone()));
        }
    }
    let bench = panel.benchmark();
    let cols: Vec<usize> = panel.entity_indices().collect();
    cols.par_iter()
        .map(|&j| {
            let label = &panel.entities()[j].label;
            let y = panel.column(j);
            match proxies.get(label) {
                Some(p) => {
                    let fit = ols_fit(&y, &[&bench, &p.fitted])?;
                    Ok(RegressionResult::from_fit(label, &y, fit))
                }
                None => fit_against(label, &y, &bench),
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Machine-readable report, one row per entity.
pub fn regression_csv(results: &[RegressionResult]) -> String {
    let mut out =
        String::from("entity,mean_rate,alpha,se_alpha,beta,se_beta,theta,se_theta,r_squared\n");
    for r in results {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.entity,
            r.mean_rate,
            r.alpha,
            r.se_alpha,
            r.beta,
            r.se_beta,
            opt(r.theta),
            opt(r.se_theta),
            r.r_squared
        )
        .unwrap();
    }
    out
}

/// Residual series as a CSV with a `date` column and one column per entity.
pub fn residuals_csv(dates: &[chrono::NaiveDate], results: &[RegressionResult]) -> String {
    let mut out = String::from("date");
    for r in results {
        out.push(',');
        out.push_str(&r.entity);
    }
    out.push('\n');
    for (i, d) in dates.iter().enumerate() {
        write!(out, "{}", d.format("%Y-%m-%d")).unwrap();
        for r in results {
            write!(out, ",{}", r.residuals[i]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`residuals_csv`]: dates, entity labels and one series per
/// entity.
pub fn parse_residuals_csv(
    text: &str,
) -> Result<(Vec<chrono::NaiveDate>, Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.get(0) != Some("date") || headers.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `date,<entity>,...`".into(),
        });
    }
    let labels: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut series = vec![Vec::new(); labels.len()];
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        let date =
            chrono::NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|e| Error::Parse {
                line,
                message: format!("bad date `{}`: {e}", &rec[0]),
            })?;
        dates.push(date);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad number `{cell}` in column `{}`", labels[j]),
            })?;
            series[j].push(v);
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptyEntity(labels[0].clone()));
    }
    Ok((dates, labels, series))
}

/// Human-readable table with standard errors in parentheses, numbered rows.
///
/// Without credit loadings the columns are `Bank No., Rate, α, β, R²`, with
/// the rate variance in parentheses after the mean. When any row carries a
/// loading a `θ` column is inserted before `R²`.
pub fn extensive_table(results: &[RegressionResult]) -> String {
    let with_theta = results.iter().any(|r| r.theta.is_some());
    let mut out = String::from("Bank No.,Entity,Rate,α,β,");
    if with_theta {
        out.push_str("θ,");
    }
    out.push_str("R²\n");
    for (i, r) in results.iter().enumerate() {
        write!(
            out,
            "{},{},{:.4} ({:.4}),{:.4} ({:.4}),{:.4} ({:.4}),",
            i + 1,
            r.entity,
            r.mean_rate,
            r.rate_variance,
            r.alpha,
            r.se_alpha,
            r.beta,
            r.se_beta
        )
        .unwrap();
        if with_theta {
            match (r.theta, r.se_theta) {
                (Some(t), Some(s)) => write!(out, "{t:.4} ({s:.4}),").unwrap(),
                _ => out.push(','),
            }
        }
        writeln!(out, "{:.3}", r.r_squared).unwrap();
    }
    out
}

/// Proxy coefficients, one row per entity.
pub fn credit_proxy_csv(proxies: &[CreditProxy]) -> String {
    let mut out = String::from(
        "entity,alpha_credit_bp,se_alpha_credit,beta_credit_bp_per_pct,se_beta_credit,r_squared\n",
    );
    for p in proxies {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.entity,
            p.alpha_credit,
            p.se_alpha_credit,
            p.beta_credit,
            p.se_beta_credit,
            p.r_squared
        )
        .unwrap();
    }
    out
}
