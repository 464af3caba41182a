//! Auto and cross Wigner-Ville arrays of two series and their marginals.

use num_complex::Complex64;
use wvf_panel::wvf::{auto_wvf, cross_wvf, freq_marginal, matrix_wvf, time_marginal};

fn main() -> wvf_panel::Result<()> {
    let n = 64;
    let chirp: Vec<f64> = (0..n)
        .map(|t| (0.002 * (t * t) as f64 * std::f64::consts::PI).cos())
        .collect();
    let tone: Vec<f64> = (0..n).map(|t| (0.6 * t as f64).sin()).collect();

    let w = auto_wvf(&chirp)?;
    println!(
        "auto array {}x{}, max relative imaginary part {:.1e}",
        w.n_time(),
        w.n_freq(),
        w.max_relative_imag()
    );

    // Peak frequency bin per time row follows the chirp.
    for t in (4..n).step_by(12) {
        let row = w.values.row(t);
        let (bin, _) = row
            .iter()
            .take(n / 2)
            .enumerate()
            .max_by(|a, b| a.1.re.total_cmp(&b.1.re))
            .unwrap();
        println!("  t = {t:2}: peak bin {bin}");
    }

    let tm = time_marginal(&w);
    println!(
        "time marginal at t=10: {:.6} (N x^2 = {:.6})",
        tm[10].re,
        n as f64 * chirp[10].powi(2)
    );
    let total: Complex64 = freq_marginal(&w).iter().sum();
    println!(
        "total {:.6}, N sum x^2 = {:.6}",
        total.re,
        n as f64 * chirp.iter().map(|v| v * v).sum::<f64>()
    );

    let c = cross_wvf(&chirp, &tone)?;
    let m = matrix_wvf(&[chirp, tone])?;
    println!(
        "matrix entry (0,1) equals direct cross array: {}",
        *m.get(0, 1) == c
    );
    Ok(())
}
