//! Two-stage detrending: fit a CDS proxy on the short rate, then regress
//! quotes on the benchmark and the fitted proxy.

use std::collections::BTreeMap;

use wvf_panel::detrend::{detrend_with_credit, fit_credit_proxy, regression_csv};
use wvf_panel::fixing::{synthesize_panel, CollusionSpec};
use wvf_panel::panel::{align, CdsPanel};

fn main() -> wvf_panel::Result<()> {
    let panel = synthesize_panel(
        18,
        313,
        &CollusionSpec {
            seed: 11,
            ..Default::default()
        },
    )?;

    // A 140-day CDS window with spread = 506.93 - 29.47 * rate exactly.
    let dates: Vec<_> = panel.dates()[120..260].to_vec();
    let rate: Vec<f64> = (0..140).map(|i| 0.1 + 0.002 * (i % 37) as f64).collect();
    let spread: Vec<f64> = rate.iter().map(|r| 506.93 - 29.47 * r).collect();
    let cds = CdsPanel::new("bank01", dates, spread, rate)?;

    let proxy = fit_credit_proxy(&cds)?;
    println!(
        "proxy: alpha = {:.2} bp, beta = {:.2} bp per pct, R2 = {:.3}",
        proxy.alpha_credit, proxy.beta_credit, proxy.r_squared
    );

    let (aligned, _) = align(&panel, &cds)?;
    let proxies = BTreeMap::from([(proxy.entity.clone(), proxy)]);
    let results = detrend_with_credit(&aligned, &proxies)?;
    for line in regression_csv(&results).lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
