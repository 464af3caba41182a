//! Generate a synthetic submission panel with two colluding entities.
//!
//! Usage: `cargo run --example synthetic_panel [seed]`

use std::collections::BTreeSet;

use wvf_panel::fixing::{synthesize_panel, CollusionSpec};

fn main() -> wvf_panel::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(7);
    let spec = CollusionSpec {
        colluders: BTreeSet::from([0, 1]),
        shared_factor_sigma: 0.2,
        seed,
        ..Default::default()
    };
    let panel = synthesize_panel(18, 313, &spec)?;
    let bench = panel.benchmark();
    let (lo, hi) = bench
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    println!(
        "{} days, benchmark range [{lo:.4}, {hi:.4}]",
        panel.n_dates()
    );
    for line in panel.to_csv().lines().take(4) {
        println!("{}", &line[..line.len().min(100)]);
    }
    Ok(())
}
