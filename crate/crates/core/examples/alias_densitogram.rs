//! Alias a WVF modulus at 2.03 sigma, smooth it, and write densitograms.
//!
//! Output goes to the directory given as the first argument (default: the
//! system temp directory).

use std::path::PathBuf;

use wvf_panel::alias::{densitogram, smooth_aliased, threshold_alias};
use wvf_panel::export::{grayscale, pgm};
use wvf_panel::fixing::gaussian_increments;
use wvf_panel::wvf::auto_wvf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(std::env::temp_dir);
    let x = gaussian_increments(313, 1.0, 2)?;
    let modulus = auto_wvf(&x)?.modulus();

    let aliased = threshold_alias(&modulus, 2.03)?;
    let rigid = threshold_alias(&modulus, 4.06)?;
    println!(
        "2.03 sigma keeps {} elements ({:.2}%), 4.06 sigma keeps {}",
        aliased.len(),
        100.0 * aliased.surviving_fraction(),
        rigid.len()
    );

    let smooth = smooth_aliased(&aliased, 1.5)?;
    let files = [
        ("aliased.pgm", densitogram(&aliased).to_pgm()),
        ("smoothed.pgm", pgm(&grayscale(&smooth))),
        ("densitogram.pgm", densitogram(&rigid).to_pgm()),
    ];
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
