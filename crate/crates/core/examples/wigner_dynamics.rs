//! Evolve a separable Wigner field under a constant diffusion generator and
//! compare it with the reduced one-dimensional equation.

use wvf_panel::dynamics::{
    diffusion_reduction_check, evolve, gaussian_profile, profile_variance, stability_limit,
    DiffusionGenerator, Profile, WignerField,
};
use wvf_panel::phase_space::Axis;

fn main() -> wvf_panel::Result<()> {
    let x = Axis::symmetric(8.0, 161);
    let p = Axis::symmetric(5.0, 81);
    let field = WignerField::separable(
        x,
        p,
        |v| gaussian_profile(v, 1.0),
        |q| gaussian_profile(q, 1.0),
    )?;

    let gen = DiffusionGenerator::constant(0.5, 0.1, 0.05);
    let dt = 0.5 * stability_limit(&x, &p, &gen)?;
    let out = evolve(&field, &gen, dt, 200)?;
    println!(
        "t = {:.3}: x variance {:.4} -> {:.4} (expected +{:.4}), rank-one ratio {:.1e}",
        out.t,
        profile_variance(&x, &field.x_profile(40)),
        profile_variance(&x, &out.x_profile(40)),
        2.0 * 0.5 * out.t,
        out.rank_one_ratio()
    );

    let r = diffusion_reduction_check(&field, &gen, dt, 200)?;
    println!(
        "reduction: deviation {:.1e}, growth 2d {:.5} 1d {:.5} exp(ct) {:.5}",
        r.max_relative_deviation, r.growth_2d, r.growth_1d, r.analytic_growth
    );

    // A curved rate term couples p; the step limit tightens accordingly.
    let curved = DiffusionGenerator {
        a: Profile::Constant(0.5),
        b: Profile::with_derivatives(|v| 0.1 * v, |_| 0.1, |_| 0.0),
        c: Profile::function(|v| 0.02 * v * v),
    };
    let limit = stability_limit(&x, &p, &curved)?;
    match evolve(&field, &curved, 2.0 * limit, 1) {
        Err(e) => println!("too large a step: {e}"),
        Ok(_) => println!("unexpected success"),
    }
    let w = evolve(&field, &curved, limit, 100)?;
    println!(
        "curved generator: rank-one ratio {:.2e} after t = {:.3}",
        w.rank_one_ratio(),
        w.t
    );
    Ok(())
}
