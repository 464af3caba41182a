//! CSV grids, PGM images and JSON grid metadata.

use std::fmt::Write as _;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::wvf::{Convention, WvfArray};

/// One row per matrix row, comma-separated, shortest round-trip formatting.
pub fn csv_grid(m: &Array2<f64>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Real and imaginary parts as two CSV grids.
pub fn csv_complex_pair(m: &Array2<Complex64>) -> (String, String) {
    (csv_grid(&m.mapv(|z| z.re)), csv_grid(&m.mapv(|z| z.im)))
}

/// Plain (P2) PGM with maxval 255, one image row per line.
pub fn pgm(pixels: &Array2<u8>) -> String {
    let (rows, cols) = pixels.dim();
    let mut out = format!("P2\n{cols} {rows}\n255\n");
    for row in pixels.rows() {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Maps `|v|` linearly onto `0..=255` with the largest magnitude at 255.
pub fn grayscale(m: &Array2<f64>) -> Array2<u8> {
    let max = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        return Array2::zeros(m.dim());
    }
    m.mapv(|v| (255.0 * v.abs() / max).round() as u8)
}

/// Sidecar describing a serialized grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub kind: String,
    pub rows: usize,
    pub cols: usize,
    pub row_axis: String,
    pub col_axis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convention: Option<Convention>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_sigmas: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub array_std: Option<f64>,
}

impl GridMeta {
    pub fn for_wvf(w: &WvfArray, kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            rows: w.n_time(),
            cols: w.n_freq(),
            row_axis: "time index n".into(),
            col_axis: "frequency bin m (omega = 2*pi*m/N per half-lag)".into(),
            convention: Some(w.convention),
            threshold_sigmas: None,
            array_std: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}
