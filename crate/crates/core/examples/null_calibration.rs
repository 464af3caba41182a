//! Null distribution of pairwise correlations for Gaussian and Lévy panels.

use wvf_panel::pair::{null_calibration, NullModel, NullSpec};

fn main() -> wvf_panel::Result<()> {
    for model in [
        NullModel::Gaussian,
        NullModel::Levy { alpha: 2.0 },
        NullModel::Levy { alpha: 1.5 },
    ] {
        let spec = NullSpec {
            model,
            trials: 10,
            seed: 1,
            ..Default::default()
        };
        let s = null_calibration(&spec)?;
        println!(
            "{model:?}: median {:.3}, q95 {:.3}, q99 {:.3}, max {:.3} over {} pairs",
            s.median, s.q95, s.q99, s.max, s.n_values
        );
    }
    let levels = null_calibration(&NullSpec {
        trials: 5,
        differenced: false,
        ..Default::default()
    })?;
    println!(
        "walk levels instead of increments: median {:.3}, q95 {:.3}",
        levels.median, levels.q95
    );
    Ok(())
}
