//! Parse a submission panel, carry missing quotes forward, and align it
//! with a CDS series on common dates.

use wvf_panel::panel::{align, parse_cds_csv, parse_panel_csv};

const PANEL: &str = "\
date,City|US,JPM|US,DB|DE,LIBOR
2011-04-18,0.27,0.26,0.30,0.2770
2011-04-19,0.27,,0.30,0.2765
2011-04-20,0.26,0.26,,0.2755
2011-04-21,0.26,0.25,0.29,0.2740
";

const CDS: &str = "\
date,cds_spread_bp,short_rate_pct
2011-04-19,95.0,0.10
2011-04-20,96.5,0.09
2011-04-21,97.0,0.09
2011-04-22,97.5,0.08
";

fn main() -> wvf_panel::Result<()> {
    let (panel, report) = parse_panel_csv(PANEL, "LIBOR")?;
    println!(
        "{} dates x {} columns, benchmark `{}`",
        panel.n_dates(),
        panel.n_entities(),
        panel.benchmark_label()
    );
    for (row, col) in &report.fills {
        println!(
            "  carried forward {} on {}",
            panel.entities()[*col].label,
            panel.dates()[*row]
        );
    }

    let cds = parse_cds_csv(CDS, "City")?;
    let (aligned, cds) = align(&panel, &cds)?;
    println!("aligned on {} common dates:", aligned.n_dates());
    print!("{}", aligned.to_csv());
    print!("{}", cds.to_csv());
    Ok(())
}
