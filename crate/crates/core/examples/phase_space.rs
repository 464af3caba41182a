//! Continuous Wigner functions: the Gaussian closed form and a Hermite
//! expansion of a dilated Gaussian.

use wvf_panel::phase_space::{
    gaussian_wigner_closed_form, hermite_expand, hermite_function, wigner_from_expansion,
    wigner_quadrature, Axis, HermiteExpansion, PhaseGrid,
};

fn main() -> wvf_panel::Result<()> {
    let grid = PhaseGrid::square(8.0, 256);
    let g = gaussian_wigner_closed_form(1.0, &grid)?;
    println!(
        "gaussian: quadrature vs closed form {:.2e}",
        g.max_relative_error()
    );

    let too_coarse = PhaseGrid::square(8.0, 20);
    if let Err(e) = gaussian_wigner_closed_form(1.0, &too_coarse) {
        println!("coarse grid: {e}");
    }

    let q = Axis::symmetric(16.0, 1601);
    let width = 1.4;
    let f: Vec<f64> = q
        .points()
        .iter()
        .map(|x| (-x * x / (2.0 * width * width)).exp())
        .collect();
    let e = hermite_expand(&f, q, 1.0, 32)?;
    println!(
        "expansion: reconstruction error {:.2e}, norm² {:.6}",
        e.reconstruction_error, e.norm_sq
    );
    for n in (0..=8).step_by(2) {
        println!("  c_{n} = {:+.6}", e.coefficients[n]);
    }

    let small = PhaseGrid::square(6.0, 121);
    for n in [0usize, 1, 3] {
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        let mode = HermiteExpansion::from_coefficients(1.0, c);
        let from_modes = wigner_from_expansion(&mode, &small);
        let direct = wigner_quadrature(|x| hermite_function(n, 1.0, x), &small);
        println!(
            "mode {n}: Laguerre form vs quadrature {:.2e}",
            from_modes.max_relative_deviation(&direct)
        );
    }

    // Σ|c_n|²V_n drops the c_n c_m interference terms, so for a superposition
    // it is the mode-diagonal part only, not the full transform.
    let diagonal = wigner_from_expansion(&e, &small);
    let direct = wigner_quadrature(|x| (-x * x / (2.0 * width * width)).exp(), &small);
    println!(
        "dilated gaussian: diagonal part differs from full transform by {:.2e} (interference terms)",
        diagonal.max_relative_deviation(&direct)
    );
    Ok(())
}
