//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{noise, periodogram_oracle, rel_err, time_marginal_oracle, wigner_simpson};
use num_complex::Complex64;
use wvf_panel::alias::threshold_alias;
use wvf_panel::cli::Manifest;
use wvf_panel::detrend::{detrend_benchmark, fit_against};
use wvf_panel::dynamics::{
    diffusion_reduction_check, evolve, gaussian_profile, heat_kernel_profile, profile_variance,
    stability_limit, DiffusionGenerator, WignerField,
};
use wvf_panel::fixing::{synthesize_panel, CollusionSpec};
use wvf_panel::pair::{detector, null_calibration, DetectorConfig, NullModel, NullSpec};
use wvf_panel::phase_space::{
    gaussian_wigner_closed_form, hermite_function, wigner_from_expansion, wigner_quadrature, Axis,
    HermiteExpansion, PhaseGrid,
};
use wvf_panel::rng::{substream, PolarNormal};
use wvf_panel::wvf::{auto_wvf, cross_wvf, freq_marginal, time_marginal};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn self_regression() -> Outcome {
    let spec = CollusionSpec {
        idio_sigma: 0.02,
        seed: 19,
        ..Default::default()
    };
    let panel = synthesize_panel(18, 313, &spec).unwrap();
    let bench = panel.benchmark();
    let r = fit_against("LIBOR", &bench, &bench).unwrap();
    let worst = r
        .alpha
        .abs()
        .max((r.beta - 1.0).abs())
        .max((r.r_squared - 1.0).abs());
    outcome(
        worst < 1e-12,
        format!(
            "alpha={:e} beta-1={:e} R2-1={:e}",
            r.alpha,
            r.beta - 1.0,
            r.r_squared - 1.0
        ),
    )
}

fn marginals() -> Outcome {
    let mut worst_t = 0.0_f64;
    let mut worst_f = 0.0_f64;
    let mut worst_e = 0.0_f64;
    for &n in &[8usize, 64, 313] {
        for s in 0..50 {
            let x = noise(1_000 * n as u64 + s, n);
            let w = auto_wvf(&x).unwrap();
            let oracle_t: Vec<Complex64> = time_marginal_oracle(&x)
                .into_iter()
                .map(Complex64::from)
                .collect();
            worst_t = worst_t.max(rel_err(&time_marginal(&w), &oracle_t));
            worst_f = worst_f.max(rel_err(&freq_marginal(&w), &periodogram_oracle(&x)));
            let total: Complex64 = w.values.iter().sum();
            let energy = n as f64 * x.iter().map(|v| v * v).sum::<f64>();
            worst_e = worst_e.max((total - energy).norm() / energy);
        }
    }
    outcome(
        worst_t < 1e-9 && worst_f < 1e-9 && worst_e < 1e-9,
        format!("time {worst_t:.2e}, frequency {worst_f:.2e}, energy {worst_e:.2e} (max relative, 150 series)"),
    )
}

fn cross_terms() -> Outcome {
    let mut worst = 0.0_f64;
    for s in 0..50 {
        let n = if s % 2 == 0 { 313 } else { 64 };
        let (x1, x2) = (noise(5_000 + s, n), noise(6_000 + s, n));
        let sum: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| a + b).collect();
        let w = auto_wvf(&sum).unwrap();
        let w1 = auto_wvf(&x1).unwrap();
        let w2 = auto_wvf(&x2).unwrap();
        let w12 = cross_wvf(&x1, &x2).unwrap();
        for (((a, b), c), d) in w
            .values
            .iter()
            .zip(&w1.values)
            .zip(&w2.values)
            .zip(&w12.values)
        {
            worst = worst.max((a - (b + c + 2.0 * d.re)).norm());
        }
    }
    outcome(
        worst < 1e-10,
        format!("max abs deviation {worst:.2e} over 50 pairs"),
    )
}

fn gaussian_closed_form() -> Outcome {
    let grid = PhaseGrid::square(8.0, 256);
    let g = gaussian_wigner_closed_form(1.0, &grid).unwrap();
    let err = g.max_relative_error();
    outcome(
        err < 1e-6,
        format!("max relative error {err:.2e} on 256x256"),
    )
}

fn expansion_modes() -> Outcome {
    let grid = PhaseGrid::square(8.0, 256);
    let alpha = 1.0;
    let mut worst = 0.0_f64;
    let mut worst_simpson = 0.0_f64;
    for n in 0..=2 {
        let mut c = vec![0.0; 3];
        c[n] = 1.0;
        let analytic = wigner_from_expansion(&HermiteExpansion::from_coefficients(alpha, c), &grid);
        let quad = wigner_quadrature(|q| hermite_function(n, alpha, q), &grid);
        worst = worst.max(analytic.max_relative_deviation(&quad));
        // Spot check against an independent Simpson rule on a coarse subgrid.
        let scale = quad.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        for ip in (0..256).step_by(17) {
            for iq in (0..256).step_by(17) {
                let (q, p) = (grid.q.at(iq), grid.p.at(ip));
                let s = wigner_simpson(|v| hermite_function(n, alpha, v), q, p, 24.0, 4_000);
                worst_simpson = worst_simpson.max((analytic.values[[ip, iq]] - s).abs() / scale);
            }
        }
    }
    outcome(
        worst < 1e-6 && worst_simpson < 1e-6,
        format!("max relative error {worst:.2e} vs trapezoid, {worst_simpson:.2e} vs Simpson (n = 0, 1, 2)"),
    )
}

/// Surviving fraction of iid N(0,1) 313x313 matrices at 2.03 sigma.
///
/// The stated naive probability for this cut is 5.1%; the two-tailed normal
/// value at 2.03 sigma is 4.24% (5.1% would need about 1.95 sigma). The
/// criterion checks 4.2% +/- 0.5% for every seed.
fn aliasing_calibration() -> Outcome {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    let mut mean = 0.0;
    for s in 0..30 {
        let mut g = PolarNormal::new(substream(9_000 + s, 0));
        let m = ndarray::Array2::from_shape_simple_fn((313, 313), || g.sample());
        let f = threshold_alias(&m, 2.03).unwrap().surviving_fraction();
        lo = lo.min(f);
        hi = hi.max(f);
        mean += f / 30.0;
    }
    outcome(
        lo >= 0.037 && hi <= 0.047,
        format!(
            "surviving fraction mean {:.3}%, range [{:.3}%, {:.3}%] (naive figure 5.1%)",
            100.0 * mean,
            100.0 * lo,
            100.0 * hi
        ),
    )
}

fn null_band() -> Outcome {
    let base = NullSpec {
        n_series: 18,
        n_days: 313,
        model: NullModel::Gaussian,
        trials: 100,
        seed: 2_024,
        differenced: true,
        detector: DetectorConfig::default(),
    };
    let gauss = null_calibration(&base).unwrap();
    let levy = null_calibration(&NullSpec {
        model: NullModel::Levy { alpha: 2.0 },
        seed: 4_048,
        ..base
    })
    .unwrap();
    // Informational: the same detector on undifferenced walk levels.
    let levels = null_calibration(&NullSpec {
        differenced: false,
        trials: 20,
        ..base
    })
    .unwrap();
    let overlap = gauss.q25 <= levy.q75 && levy.q25 <= gauss.q75;
    outcome(
        gauss.q95 < 0.25 && overlap,
        format!(
            "gaussian q95={:.3} median={:.3}; levy(2) IQR [{:.3}, {:.3}] vs gaussian IQR [{:.3}, {:.3}]; undifferenced levels q95={:.3}",
            gauss.q95, gauss.median, levy.q25, levy.q75, gauss.q25, gauss.q75, levels.q95
        ),
    )
}

fn collusion_power() -> Outcome {
    let labels: Vec<String> = (1..=18).map(|i| format!("bank{i:02}")).collect();
    let mut hits = 0;
    let mut rho01 = Vec::new();
    let mut worst_honest = 0.0_f64;
    for s in 0..30u64 {
        let spec = CollusionSpec {
            colluders: BTreeSet::from([0, 1]),
            shared_factor_sigma: 0.2,
            idio_sigma: 0.01,
            ar1_rho: 0.5,
            initial_rate: 0.5,
            seed: 77_000 + s,
        };
        let panel = synthesize_panel(18, 313, &spec).unwrap();
        let residuals: Vec<Vec<f64>> = detrend_benchmark(&panel)
            .unwrap()
            .into_iter()
            .map(|r| r.residuals)
            .collect();
        let m = detector(&residuals, &labels, &DetectorConfig::default()).unwrap();
        let honest = m
            .pairs()
            .into_iter()
            .filter(|&(i, k, _)| (i, k) != (0, 1))
            .fold(0.0_f64, |a, (_, _, r)| a.max(r.abs()));
        worst_honest = worst_honest.max(honest);
        rho01.push(m.get(0, 1));
        if m.get(0, 1) > 0.8 && honest < 0.3 {
            hits += 1;
        }
    }
    let min01 = rho01.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        hits >= 27,
        format!("{hits}/30 seeds; min rho(0,1)={min01:.3}; max honest |rho|={worst_honest:.3}"),
    )
}

fn heat_run(dx: f64, dt: f64, t_end: f64, a: f64) -> (Axis, Vec<f64>) {
    let n = (16.0 / dx).round() as usize + 1;
    let x = Axis::symmetric(8.0, n);
    let p = Axis::symmetric(1.0, 5);
    let field = WignerField::separable(x, p, |v| gaussian_profile(v, 1.0), |_| 1.0).unwrap();
    let steps = (t_end / dt).round() as usize;
    let out = evolve(
        &field,
        &DiffusionGenerator::constant(a, 0.0, 0.0),
        dt,
        steps,
    )
    .unwrap();
    (x, out.x_profile(2))
}

fn dynamics() -> Outcome {
    let a = 0.5;
    let mut notes = Vec::new();
    let mut ok = true;

    // Heat kernel: variance grows by 2at.
    let (x, u) = heat_run(0.1, 0.004, 1.0, a);
    let var_growth = profile_variance(&x, &u) - 1.0;
    let e = (var_growth / (2.0 * a * 1.0) - 1.0).abs();
    ok &= e < 0.02;
    notes.push(format!("variance growth err {:.2e}", e));

    // Rank preservation with constant b, c.
    let xg = Axis::symmetric(8.0, 128);
    let pg = Axis::symmetric(6.0, 96);
    let field = WignerField::separable(
        xg,
        pg,
        |v| gaussian_profile(v, 1.0),
        |q| gaussian_profile(q, 1.5),
    )
    .unwrap();
    let gen = DiffusionGenerator::constant(0.5, 0.3, 0.2);
    let dt = 0.5 * stability_limit(&xg, &pg, &gen).unwrap();
    let mut w = field.clone();
    let mut worst_rank = 0.0_f64;
    for _ in 0..10 {
        w = evolve(&w, &gen, dt, 10).unwrap();
        worst_rank = worst_rank.max(w.rank_one_ratio());
    }
    ok &= worst_rank < 1e-6;
    notes.push(format!("rank ratio {:.1e}", worst_rank));

    // One-dimensional reduction, c = 0.
    let gen0 = DiffusionGenerator::constant(0.5, 0.0, 0.0);
    let r0 = diffusion_reduction_check(&field, &gen0, dt, 100).unwrap();
    ok &= r0.max_relative_deviation < 1e-6;
    notes.push(format!("reduction dev {:.1e}", r0.max_relative_deviation));

    // Growth with c > 0.
    let genc = DiffusionGenerator::constant(0.5, 0.0, 0.4);
    let dtc = 0.5 * stability_limit(&xg, &pg, &genc).unwrap();
    let rc = diffusion_reduction_check(&field, &genc, dtc, 400).unwrap();
    let g2 = (rc.growth_2d / rc.analytic_growth - 1.0).abs();
    let g1 = (rc.growth_1d / rc.analytic_growth - 1.0).abs();
    ok &= g1 < 0.01 && g2 < 0.01 && rc.max_relative_deviation < 1e-6;
    notes.push(format!("growth err 2d {:.1e} 1d {:.1e}", g2, g1));

    // Combined refinement against the heat kernel: dx/2, dt/4 gives 4x.
    let t_end = 0.5;
    let err = |dx: f64, dt: f64| {
        let (x, u) = heat_run(dx, dt, t_end, a);
        x.points().iter().zip(&u).fold(0.0_f64, |m, (xv, uv)| {
            m.max((uv - heat_kernel_profile(*xv, 1.0, a, t_end)).abs())
        })
    };
    let ratio_combined = err(0.2, 0.01) / err(0.1, 0.0025);
    ok &= (3.2..=4.8).contains(&ratio_combined);
    notes.push(format!("combined ratio {:.2}", ratio_combined));

    // Time order on a fixed grid: successive differences halve.
    let (_, u1) = heat_run(0.1, 0.004, t_end, a);
    let (_, u2) = heat_run(0.1, 0.002, t_end, a);
    let (_, u3) = heat_run(0.1, 0.001, t_end, a);
    let dmax = |p: &[f64], q: &[f64]| {
        p.iter()
            .zip(q)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    };
    let ratio_time = dmax(&u1, &u2) / dmax(&u2, &u3);
    ok &= (1.6..=2.4).contains(&ratio_time);
    notes.push(format!("time ratio {:.2}", ratio_time));

    // Space order at fixed small dt on nested grids.
    let dt_s = 0.0005;
    let (_, c1) = heat_run(0.2, dt_s, t_end, a);
    let (_, c2) = heat_run(0.1, dt_s, t_end, a);
    let (_, c3) = heat_run(0.05, dt_s, t_end, a);
    let on_coarse =
        |fine: &[f64], stride: usize| fine.iter().step_by(stride).copied().collect::<Vec<_>>();
    let ratio_space = dmax(&c1, &on_coarse(&c2, 2)) / dmax(&on_coarse(&c2, 2), &on_coarse(&c3, 4));
    ok &= (3.2..=4.8).contains(&ratio_space);
    notes.push(format!("space ratio {:.2}", ratio_space));

    outcome(ok, notes.join("; "))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wvf-panel"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn pipeline(root: &Path) -> Result<Vec<Manifest>, String> {
    let d = |s: &str| root.join(s).display().to_string();
    let seed = ["--seed", "11"];
    run_cli(&[
        "simulate",
        seed[0],
        seed[1],
        "--set",
        "sim.colluders=0,1",
        "--set",
        "sim.shared_sigma=0.2",
        "--out",
        &d("sim"),
    ])?;
    run_cli(&[
        "detrend",
        "--set",
        &format!("panel={}", d("sim/panel.csv")),
        "--out",
        &d("detrend"),
    ])?;
    let residuals = format!("residuals={}", d("detrend/residuals.csv"));
    run_cli(&["correlate", "--set", &residuals, "--out", &d("correlate")])?;
    run_cli(&[
        "wvf",
        "--set",
        &residuals,
        "--set",
        "wvf.entities=bank01,bank02",
        "--set",
        "wvf.cross=bank01:bank02",
        "--out",
        &d("wvf"),
    ])?;
    run_cli(&[
        "report",
        "--set",
        &format!("panel={}", d("sim/panel.csv")),
        "--out",
        &d("report"),
    ])?;
    run_cli(&[
        "calibrate",
        seed[0],
        seed[1],
        "--set",
        "null.trials=3",
        "--out",
        &d("calibrate"),
    ])?;
    run_cli(&["evolve", "--set", "evolve.steps=40", "--out", &d("evolve")])?;
    [
        "sim",
        "detrend",
        "correlate",
        "wvf",
        "report",
        "calibrate",
        "evolve",
    ]
    .iter()
    .map(|s| {
        let text = std::fs::read_to_string(root.join(s).join("manifest.json"))
            .map_err(|e| e.to_string())?;
        serde_json::from_str(&text).map_err(|e| e.to_string())
    })
    .collect()
}

fn determinism() -> Outcome {
    // Same paths both times: run, move the results aside, run again.
    let root = tempfile::tempdir().unwrap();
    let work = root.path().join("run");
    let first_dir = root.path().join("first");
    let first = pipeline(&work).and_then(|m| {
        std::fs::rename(&work, &first_dir)
            .map(|_| m)
            .map_err(|e| e.to_string())
    });
    let (ma, mb) = match (first, pipeline(&work)) {
        (Ok(x), Ok(y)) => (x, y),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let same_manifests = ma == mb;
    let files: usize = ma.iter().map(|m| m.outputs.len()).sum();
    let mut same_bytes = true;
    for m in &ma {
        let dir = match m.subcommand.as_str() {
            "simulate" => "sim",
            other => other,
        };
        for o in &m.outputs {
            let x = std::fs::read(first_dir.join(dir).join(&o.file)).unwrap();
            let y = std::fs::read(work.join(dir).join(&o.file)).unwrap();
            same_bytes &= x == y;
        }
    }
    outcome(
        same_manifests && same_bytes,
        format!(
            "{} subcommands, {files} artifacts and manifests identical",
            ma.len()
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Outcome)> = vec![
        (
            "1 self-regression identity",
            Duration::from_secs(1),
            self_regression,
        ),
        ("2 marginal identities", Duration::from_secs(30), marginals),
        (
            "3 cross-term identity",
            Duration::from_secs(30),
            cross_terms,
        ),
        (
            "4 gaussian closed form",
            Duration::from_secs(10),
            gaussian_closed_form,
        ),
        (
            "5 expansion consistency",
            Duration::from_secs(30),
            expansion_modes,
        ),
        (
            "6 aliasing calibration",
            Duration::from_secs(60),
            aliasing_calibration,
        ),
        ("7 null band", Duration::from_secs(600), null_band),
        (
            "8 collusion detection power",
            Duration::from_secs(600),
            collusion_power,
        ),
        ("9 wigner dynamics", Duration::from_secs(120), dynamics),
        ("10 determinism", Duration::from_secs(1200), determinism),
    ];
    let mut failures = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let passed = o.passed && elapsed <= budget;
        if !passed {
            failures += 1;
        }
        let tag = if passed { "PASS" } else { "FAIL" };
        let over = if elapsed > budget {
            format!(" over budget {budget:?}")
        } else {
            String::new()
        };
        println!("[{tag}] {name}: {} ({:.2?}{over})", o.detail, elapsed);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
