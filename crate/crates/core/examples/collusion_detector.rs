//! Detect a colluding pair in a synthetic panel.

use std::collections::BTreeSet;

use wvf_panel::detrend::detrend_benchmark;
use wvf_panel::fixing::{synthesize_panel, CollusionSpec};
use wvf_panel::pair::{detector, DetectorConfig, Substrate};

fn main() -> wvf_panel::Result<()> {
    let spec = CollusionSpec {
        colluders: BTreeSet::from([0, 1]),
        shared_factor_sigma: 0.2,
        seed: 21,
        ..Default::default()
    };
    let panel = synthesize_panel(18, 313, &spec)?;
    let results = detrend_benchmark(&panel)?;
    let labels: Vec<String> = results.iter().map(|r| r.entity.clone()).collect();
    let residuals: Vec<Vec<f64>> = results.into_iter().map(|r| r.residuals).collect();

    for substrate in [Substrate::WvfModulus, Substrate::AliasedCovariance] {
        let cfg = DetectorConfig {
            substrate,
            ..Default::default()
        };
        let m = detector(&residuals[..5], &labels[..5], &cfg)?;
        println!("{}:", substrate.as_str());
        print!("{}", m.to_csv());
    }
    Ok(())
}
