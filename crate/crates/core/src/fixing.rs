//! Trimmed-mean fixing and synthetic submission panels.
//!
//! The synthetic panel is a generative model of our own: on day `t` every
//! entity quotes the previous day's fix plus its own AR(1) shock, and the
//! designated colluders add one shared shock drawn for the day. The fix is
//! the trimmed mean of the day's quotes. With no colluders the deviations
//! from the benchmark are purely idiosyncratic, which is the null the
//! detector is calibrated against.
//!
//! Randomness: entity `i` draws its shocks from substream `i + 1` of the
//! spec seed and the shared shock from substream 0, so adding entities never
//! changes the draws of existing ones.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{business_days, Entity, PanelSeries};
use crate::rng::{substream, PolarNormal};

/// Quotes dropped from each end before averaging.
pub const TRIM_EACH_SIDE: usize = 4;

/// Sorts, drops the four lowest and four highest quotes, and averages the rest.
pub fn trimmed_mean_fix(quotes: &[f64]) -> Result<f64> {
    if quotes.len() < 2 * TRIM_EACH_SIDE + 1 {
        return Err(Error::TooFewQuotes(quotes.len()));
    }
    let mut sorted = quotes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let kept = &sorted[TRIM_EACH_SIDE..sorted.len() - TRIM_EACH_SIDE];
    // Averaging offsets from the first kept quote makes equal quotes exact.
    let base = kept[0];
    Ok(base + kept.iter().map(|q| q - base).sum::<f64>() / kept.len() as f64)
}

/// Parameters of a synthetic submission panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollusionSpec {
    /// Entity indices that receive the shared shock.
    pub colluders: BTreeSet<usize>,
    /// Daily std of the shared shock (percent).
    pub shared_factor_sigma: f64,
    /// Innovation std of each entity's idiosyncratic shock (percent).
    pub idio_sigma: f64,
    /// AR(1) persistence of the idiosyncratic shock.
    pub ar1_rho: f64,
    /// Fix on the day before the first simulated day (percent).
    pub initial_rate: f64,
    pub seed: u64,
}

impl Default for CollusionSpec {
    fn default() -> Self {
        Self {
            colluders: BTreeSet::new(),
            shared_factor_sigma: 0.0,
            idio_sigma: 0.01,
            ar1_rho: 0.5,
            initial_rate: 0.5,
            seed: 0,
        }
    }
}

impl CollusionSpec {
    pub fn validate(&self, n_entities: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !(self.shared_factor_sigma >= 0.0 && self.shared_factor_sigma.is_finite()) {
            return bad(format!(
                "shared_factor_sigma = {}",
                self.shared_factor_sigma
            ));
        }
        if !(self.idio_sigma >= 0.0 && self.idio_sigma.is_finite()) {
            return bad(format!("idio_sigma = {}", self.idio_sigma));
        }
        if !(0.0..1.0).contains(&self.ar1_rho) {
            return bad(format!("ar1_rho = {} not in [0, 1)", self.ar1_rho));
        }
        if !self.initial_rate.is_finite() {
            return bad(format!("initial_rate = {}", self.initial_rate));
        }
        if let Some(&c) = self.colluders.iter().find(|&&c| c >= n_entities) {
            return bad(format!(
                "colluder index {c} out of range for {n_entities} entities"
            ));
        }
        Ok(())
    }
}

/// Label of the synthetic benchmark column.
pub const SYNTHETIC_BENCHMARK: &str = "LIBOR";

/// First date of synthetic panels.
pub fn synthetic_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2011, 4, 18).expect("valid date")
}

/// Generates `n_entities` quote columns plus the trimmed-mean benchmark.
///
/// Entity columns are labelled `bank01`, `bank02`, ...; the benchmark is the
/// last column.
pub fn synthesize_panel(
    n_entities: usize,
    n_days: usize,
    spec: &CollusionSpec,
) -> Result<PanelSeries> {
    if n_entities < 2 * TRIM_EACH_SIDE + 1 {
        return Err(Error::InvalidSpec(format!(
            "need at least 9 entities, got {n_entities}"
        )));
    }
    if n_days < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 days, got {n_days}"
        )));
    }
    spec.validate(n_entities)?;

    let mut shared = PolarNormal::new(substream(spec.seed, 0));
    let mut idio: Vec<_> = (0..n_entities)
        .map(|i| PolarNormal::new(substream(spec.seed, i as u64 + 1)))
        .collect();

    let mut columns = vec![Vec::with_capacity(n_days); n_entities + 1];
    let mut shocks = vec![0.0; n_entities];
    let mut quotes = vec![0.0; n_entities];
    let mut fix = spec.initial_rate;
    for _ in 0..n_days {
        let common = spec.shared_factor_sigma * shared.sample();
        for i in 0..n_entities {
            shocks[i] = spec.ar1_rho * shocks[i] + spec.idio_sigma * idio[i].sample();
            let manip = if spec.colluders.contains(&i) {
                common
            } else {
                0.0
            };
            quotes[i] = fix + shocks[i] + manip;
            columns[i].push(quotes[i]);
        }
        fix = trimmed_mean_fix(&quotes)?;
        columns[n_entities].push(fix);
    }

    let mut entities: Vec<Entity> = (1..=n_entities)
        .map(|i| Entity::new(format!("bank{i:02}")))
        .collect();
    entities.push(Entity::new(SYNTHETIC_BENCHMARK));
    PanelSeries::from_columns(
        business_days(synthetic_start(), n_days),
        entities,
        columns,
        SYNTHETIC_BENCHMARK,
    )
}

/// Cumulative sum of `n` iid `N(0, sigma²)` steps.
pub fn gaussian_walk(n: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if n == 0 || !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gaussian_walk(n = {n}, sigma = {sigma})"
        )));
    }
    let mut g = PolarNormal::new(substream(seed, 0));
    let mut level = 0.0;
    Ok((0..n)
        .map(|_| {
            level += sigma * g.sample();
            level
        })
        .collect())
}

/// Iid `N(0, sigma²)` steps, i.e. the increments of [`gaussian_walk`].
pub fn gaussian_increments(n: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    let walk = gaussian_walk(n, sigma, seed)?;
    let mut prev = 0.0;
    Ok(walk
        .into_iter()
        .map(|w| {
            let d = w - prev;
            prev = w;
            d
        })
        .collect())
}

/// One symmetric alpha-stable variate by the Chambers–Mallows–Stuck transform.
///
/// `v` is uniform on `(-π/2, π/2)` and `w` standard exponential.
fn cms_symmetric(alpha: f64, v: f64, w: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let av = alpha * v;
    av.sin() / v.cos().powf(1.0 / alpha) * ((v - av).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Iid symmetric alpha-stable increments with the given scale.
///
/// At `alpha = 2` these are Gaussian with std `scale * √2`.
pub fn levy_increments(n: usize, alpha: f64, scale: f64, seed: u64) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale = {scale}")));
    }
    let mut rng = substream(seed, 0);
    Ok((0..n)
        .map(|_| {
            // Open intervals: u in (0, 1) for both draws.
            let u1 = open_unit(&mut rng);
            let u2 = open_unit(&mut rng);
            let v = FRAC_PI_2 * (2.0 * u1 - 1.0);
            let w = -u2.ln();
            scale * cms_symmetric(alpha, v, w)
        })
        .collect())
}

/// Cumulative sum of [`levy_increments`].
pub fn levy_flight(n: usize, alpha: f64, scale: f64, seed: u64) -> Result<Vec<f64>> {
    let mut level = 0.0;
    Ok(levy_increments(n, alpha, scale, seed)?
        .into_iter()
        .map(|d| {
            level += d;
            level
        })
        .collect())
}

fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_quotes() {
        assert_eq!(trimmed_mean_fix(&[0.37; 18]).unwrap(), 0.37);
    }

    #[test]
    fn one_through_eighteen() {
        let q: Vec<f64> = (1..=18).map(f64::from).collect();
        assert_eq!(trimmed_mean_fix(&q).unwrap(), 9.5);
    }

    #[test]
    fn outliers_rejected() {
        let mut q = vec![0.0; 4];
        q.extend([100.0; 4]);
        q.extend([0.5; 10]);
        assert_eq!(trimmed_mean_fix(&q).unwrap(), 0.5);
    }

    #[test]
    fn too_few_quotes() {
        assert!(matches!(
            trimmed_mean_fix(&[1.0; 8]),
            Err(Error::TooFewQuotes(8))
        ));
        assert_eq!(trimmed_mean_fix(&[2.0; 9]).unwrap(), 2.0);
    }

    #[test]
    fn zero_sigma_panel_is_flat() {
        let spec = CollusionSpec {
            idio_sigma: 0.0,
            shared_factor_sigma: 0.0,
            colluders: [0, 1].into(),
            initial_rate: 0.42,
            ..Default::default()
        };
        let p = synthesize_panel(18, 20, &spec).unwrap();
        assert_eq!(p.n_entities(), 19);
        for j in 0..19 {
            assert!(p.column(j).iter().all(|&v| v == 0.42));
        }
    }

    #[test]
    fn panel_is_deterministic() {
        let spec = CollusionSpec {
            colluders: [2].into(),
            shared_factor_sigma: 0.05,
            seed: 99,
            ..Default::default()
        };
        let a = synthesize_panel(12, 50, &spec).unwrap();
        let b = synthesize_panel(12, 50, &spec).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn entity_draws_do_not_depend_on_panel_size() {
        // Without colluders and with rho = 0 the first entity's deviation from
        // the previous fix is exactly its own shock stream.
        let spec = CollusionSpec {
            ar1_rho: 0.0,
            seed: 5,
            ..Default::default()
        };
        let dev = |p: &PanelSeries| {
            let q = p.column(0);
            let b = p.benchmark();
            let mut prev = spec.initial_rate;
            q.iter()
                .zip(&b)
                .map(|(q, b)| {
                    let d = q - prev;
                    prev = *b;
                    d
                })
                .collect::<Vec<f64>>()
        };
        let small = synthesize_panel(9, 30, &spec).unwrap();
        let large = synthesize_panel(18, 30, &spec).unwrap();
        let (a, b) = (dev(&small), dev(&large));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fix_column_is_trimmed_mean_of_quotes() {
        let spec = CollusionSpec {
            seed: 3,
            ..Default::default()
        };
        let p = synthesize_panel(10, 15, &spec).unwrap();
        for t in 0..15 {
            let quotes: Vec<f64> = (0..10).map(|j| p.value(t, j)).collect();
            assert_eq!(p.value(t, 10), trimmed_mean_fix(&quotes).unwrap());
        }
    }

    #[test]
    fn invalid_specs() {
        let base = CollusionSpec::default();
        let cases = [
            CollusionSpec {
                ar1_rho: 1.0,
                ..base.clone()
            },
            CollusionSpec {
                idio_sigma: -1.0,
                ..base.clone()
            },
            CollusionSpec {
                shared_factor_sigma: f64::NAN,
                ..base.clone()
            },
            CollusionSpec {
                colluders: [18].into(),
                ..base.clone()
            },
        ];
        for spec in cases {
            assert!(matches!(
                synthesize_panel(18, 10, &spec),
                Err(Error::InvalidSpec(_))
            ));
        }
        assert!(matches!(
            synthesize_panel(8, 10, &base),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            synthesize_panel(9, 1, &base),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn walk_basics() {
        assert!(gaussian_walk(10, 0.0, 1).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(
            gaussian_walk(25, 1.0, 8).unwrap(),
            gaussian_walk(25, 1.0, 8).unwrap()
        );
        assert_ne!(
            gaussian_walk(25, 1.0, 8).unwrap(),
            gaussian_walk(25, 1.0, 9).unwrap()
        );
        assert!(gaussian_walk(0, 1.0, 1).is_err());
    }

    #[test]
    fn levy_basics() {
        assert!(levy_increments(100, 1.3, 0.0, 4)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        assert!(matches!(
            levy_increments(5, 0.0, 1.0, 1),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            levy_increments(5, 2.5, 1.0, 1),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(levy_increments(1000, 1.0, 1.0, 4)
            .unwrap()
            .iter()
            .all(|v| v.is_finite()));
        let flight = levy_flight(50, 1.5, 1.0, 2).unwrap();
        let inc = levy_increments(50, 1.5, 1.0, 2).unwrap();
        assert!((flight[49] - inc.iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn cms_at_two_is_scaled_gaussian_transform() {
        // sin(2v)/sqrt(cos v) * (cos(-v)/w)^(-1/2) = 2 sin(v) sqrt(w)
        for &(v, w) in &[(0.3, 1.2), (-1.1, 0.4), (1.4, 3.0)] {
            let x = cms_symmetric(2.0, v, w);
            assert!((x - 2.0 * f64::sin(v) * f64::sqrt(w)).abs() < 1e-12);
        }
    }
}
