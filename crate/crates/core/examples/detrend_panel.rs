//! Regress every entity on the benchmark and print the extensive table.

use wvf_panel::detrend::{detrend_benchmark, extensive_table};
use wvf_panel::fixing::{synthesize_panel, CollusionSpec};

fn main() -> wvf_panel::Result<()> {
    let panel = synthesize_panel(
        18,
        313,
        &CollusionSpec {
            seed: 3,
            ..Default::default()
        },
    )?;
    let results = detrend_benchmark(&panel)?;
    print!("{}", extensive_table(&results));

    let worst = results
        .iter()
        .map(|r| r.residuals.iter().sum::<f64>().abs())
        .fold(0.0, f64::max);
    println!("largest |sum of residuals|: {worst:.2e}");
    Ok(())
}
