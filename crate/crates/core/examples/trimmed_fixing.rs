//! The trimmed-mean fix and its insensitivity to the extreme quotes.

use wvf_panel::fixing::trimmed_mean_fix;

fn main() -> wvf_panel::Result<()> {
    let mut quotes: Vec<f64> = (0..18).map(|i| 0.25 + 0.005 * i as f64).collect();
    let fix = trimmed_mean_fix(&quotes)?;
    println!("fix of 18 quotes: {fix:.5}");

    // Pushing the top quote further out changes nothing.
    quotes[17] += 1.0;
    println!("top quote +100bp: {:.5}", trimmed_mean_fix(&quotes)?);

    // Moving a middle quote does.
    quotes[8] += 0.05;
    println!("middle quote +5bp: {:.5}", trimmed_mean_fix(&quotes)?);

    // Two submitters moving together into the kept band.
    let mut pair = (0..18).map(|i| 0.25 + 0.005 * i as f64).collect::<Vec<_>>();
    pair[7] -= 0.02;
    pair[8] -= 0.02;
    println!("two mid quotes -2bp: {:.5}", trimmed_mean_fix(&pair)?);

    match trimmed_mean_fix(&quotes[..8]) {
        Err(e) => println!("eight quotes: {e}"),
        Ok(v) => println!("unexpected fix {v}"),
    }
    Ok(())
}
