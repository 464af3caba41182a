//! Date-aligned panels of daily rates.
//!
//! A panel CSV has a `date` column followed by one column per entity. Empty
//! cells are carried forward from the previous business day; an empty cell on
//! the first date is an error. Dates are ISO-8601 (`YYYY-MM-DD`). A header
//! label may carry a domicile tag after a `|`, as in `Citibank|US`.
//!
//! Rates are kept in percent and CDS spreads in basis points.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::NaiveDate;

use crate::error::{Error, Result};

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub label: String,
    pub domicile: Option<String>,
}

impl Entity {
    pub fn new(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            domicile: None,
        }
    }

    pub fn with_domicile(mut self, domicile: impl Into<String>) -> Self {
        self.domicile = Some(domicile.into());
        self
    }

    fn parse_header(cell: &str) -> Self {
        match cell.split_once('|') {
            Some((label, dom)) if !dom.trim().is_empty() => {
                Entity::new(label.trim()).with_domicile(dom.trim())
            }
            Some((label, _)) => Entity::new(label.trim()),
            None => Entity::new(cell.trim()),
        }
    }

    fn header(&self) -> String {
        match &self.domicile {
            Some(d) => format!("{}|{}", self.label, d),
            None => self.label.clone(),
        }
    }
}

/// Daily rates, one column per entity, one of which is the benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelSeries {
    dates: Vec<NaiveDate>,
    entities: Vec<Entity>,
    /// Row-major `[date][entity]`.
    values: Vec<f64>,
    benchmark: usize,
}

/// What ingest had to repair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub filled_cells: usize,
    /// `(row, column)` of every carried-forward cell.
    pub fills: Vec<(usize, usize)>,
}

impl PanelSeries {
    /// Builds a panel from column vectors, validating every invariant.
    pub fn from_columns(
        dates: Vec<NaiveDate>,
        entities: Vec<Entity>,
        columns: Vec<Vec<f64>>,
        benchmark_label: &str,
    ) -> Result<Self> {
        if entities.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: entities.len(),
                actual: columns.len(),
            });
        }
        check_dates(&dates)?;
        for col in &columns {
            if col.len() != dates.len() {
                return Err(Error::LengthMismatch {
                    expected: dates.len(),
                    actual: col.len(),
                });
            }
        }
        for (e, col) in entities.iter().zip(&columns) {
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "non-finite value in column `{}`",
                    e.label
                )));
            }
        }
        let benchmark = entities
            .iter()
            .position(|e| e.label == benchmark_label)
            .ok_or_else(|| Error::MissingBenchmark(benchmark_label.to_string()))?;
        let n_rows = dates.len();
        let n_cols = entities.len();
        let mut values = vec![0.0; n_rows * n_cols];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                values[i * n_cols + j] = *v;
            }
        }
        Ok(Self {
            dates,
            entities,
            values,
            benchmark,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn benchmark_index(&self) -> usize {
        self.benchmark
    }

    pub fn benchmark_label(&self) -> &str {
        &self.entities[self.benchmark].label
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.entities.len() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        let n = self.entities.len();
        (0..self.dates.len())
            .map(|i| self.values[i * n + col])
            .collect()
    }

    pub fn column_by_label(&self, label: &str) -> Option<Vec<f64>> {
        self.entities
            .iter()
            .position(|e| e.label == label)
            .map(|j| self.column(j))
    }

    pub fn benchmark(&self) -> Vec<f64> {
        self.column(self.benchmark)
    }

    /// Indices of all non-benchmark columns, in panel order.
    pub fn entity_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.entities.len()).filter(move |&j| j != self.benchmark)
    }

    /// Keeps only the rows whose dates are in `keep`.
    fn restrict(&self, keep: &BTreeSet<NaiveDate>) -> Self {
        let n = self.entities.len();
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for (i, d) in self.dates.iter().enumerate() {
            if keep.contains(d) {
                dates.push(*d);
                values.extend_from_slice(&self.values[i * n..(i + 1) * n]);
            }
        }
        Self {
            dates,
            entities: self.entities.clone(),
            values,
            benchmark: self.benchmark,
        }
    }

    /// Serializes in the ingest CSV format. Values use the shortest
    /// representation that round-trips exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        for e in &self.entities {
            out.push(',');
            out.push_str(&e.header());
        }
        out.push('\n');
        let n = self.entities.len();
        for (i, d) in self.dates.iter().enumerate() {
            write!(out, "{}", d.format(DATE_FORMAT)).unwrap();
            for v in &self.values[i * n..(i + 1) * n] {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn check_dates(dates: &[NaiveDate]) -> Result<()> {
    for (i, w) in dates.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::Parse {
                line: i as u64 + 3,
                message: format!("date {} does not follow {}", w[1], w[0]),
            });
        }
    }
    Ok(())
}

fn parse_date(cell: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(cell.trim(), DATE_FORMAT).map_err(|e| Error::Parse {
        line,
        message: format!("bad date `{cell}`: {e}"),
    })
}

fn parse_rate(cell: &str, line: u64) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            line,
            message: format!("bad value `{cell}`"),
        }),
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Parses a panel CSV, carrying missing cells forward.
pub fn parse_panel_csv(text: &str, benchmark_label: &str) -> Result<(PanelSeries, IngestReport)> {
    let mut reader = csv_reader(text);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty input".into(),
            })
        }
    };
    if header.get(0).map(str::trim) != Some("date") {
        return Err(Error::Parse {
            line: 1,
            message: "first header cell must be `date`".into(),
        });
    }
    let entities: Vec<Entity> = header.iter().skip(1).map(Entity::parse_header).collect();
    if entities.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "no entity columns".into(),
        });
    }
    if !entities.iter().any(|e| e.label == benchmark_label) {
        return Err(Error::MissingBenchmark(benchmark_label.to_string()));
    }

    let mut dates = Vec::new();
    let mut raw: Vec<Vec<Option<f64>>> = vec![Vec::new(); entities.len()];
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        dates.push(parse_date(&rec[0], line)?);
        for (j, cell) in rec.iter().skip(1).enumerate() {
            raw[j].push(parse_rate(cell, line)?);
        }
        if let (Some(&last), Some(&prev)) = (dates.last(), dates.iter().rev().nth(1)) {
            if last <= prev {
                return Err(Error::Parse {
                    line,
                    message: format!("date {last} does not follow {prev}"),
                });
            }
        }
    }

    let mut report = IngestReport::default();
    let mut columns = Vec::with_capacity(entities.len());
    for (j, (entity, col)) in entities.iter().zip(raw).enumerate() {
        if col.iter().all(Option::is_none) {
            return Err(Error::EmptyEntity(entity.label.clone()));
        }
        let mut filled = Vec::with_capacity(col.len());
        let mut last: Option<f64> = None;
        for (i, cell) in col.into_iter().enumerate() {
            let v = match (cell, last) {
                (Some(v), _) => v,
                (None, Some(prev)) => {
                    report.fills.push((i, j));
                    prev
                }
                (None, None) => return Err(Error::MissingFirstValue(entity.label.clone())),
            };
            last = Some(v);
            filled.push(v);
        }
        columns.push(filled);
    }
    report.fills.sort_unstable();
    report.filled_cells = report.fills.len();
    let panel = PanelSeries::from_columns(dates, entities, columns, benchmark_label)?;
    Ok((panel, report))
}

/// Daily CDS spread (bp) and domicile short rate (percent) for one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct CdsPanel {
    pub entity: String,
    dates: Vec<NaiveDate>,
    cds_spread_bp: Vec<f64>,
    short_rate_pct: Vec<f64>,
}

impl CdsPanel {
    pub fn new(
        entity: impl Into<String>,
        dates: Vec<NaiveDate>,
        cds_spread_bp: Vec<f64>,
        short_rate_pct: Vec<f64>,
    ) -> Result<Self> {
        let entity = entity.into();
        check_dates(&dates)?;
        for len in [cds_spread_bp.len(), short_rate_pct.len()] {
            if len != dates.len() {
                return Err(Error::LengthMismatch {
                    expected: dates.len(),
                    actual: len,
                });
            }
        }
        if let Some(s) = cds_spread_bp
            .iter()
            .find(|s| !(s.is_finite() && **s >= 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "CDS spread {s} for `{entity}` must be finite and non-negative"
            )));
        }
        if short_rate_pct.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite short rate for `{entity}`"
            )));
        }
        Ok(Self {
            entity,
            dates,
            cds_spread_bp,
            short_rate_pct,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn cds_spread_bp(&self) -> &[f64] {
        &self.cds_spread_bp
    }

    pub fn short_rate_pct(&self) -> &[f64] {
        &self.short_rate_pct
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    fn restrict(&self, keep: &BTreeSet<NaiveDate>) -> Self {
        let idx: Vec<usize> = (0..self.dates.len())
            .filter(|&i| keep.contains(&self.dates[i]))
            .collect();
        Self {
            entity: self.entity.clone(),
            dates: idx.iter().map(|&i| self.dates[i]).collect(),
            cds_spread_bp: idx.iter().map(|&i| self.cds_spread_bp[i]).collect(),
            short_rate_pct: idx.iter().map(|&i| self.short_rate_pct[i]).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,cds_spread_bp,short_rate_pct\n");
        for i in 0..self.dates.len() {
            writeln!(
                out,
                "{},{},{}",
                self.dates[i].format(DATE_FORMAT),
                self.cds_spread_bp[i],
                self.short_rate_pct[i]
            )
            .unwrap();
        }
        out
    }
}

/// Parses `date,cds_spread_bp,short_rate_pct`. CDS files must be complete.
pub fn parse_cds_csv(text: &str, entity: &str) -> Result<CdsPanel> {
    let mut reader = csv_reader(text);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty input".into(),
            })
        }
    };
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols != ["date", "cds_spread_bp", "short_rate_pct"] {
        return Err(Error::Parse {
            line: 1,
            message: "header must be `date,cds_spread_bp,short_rate_pct`".into(),
        });
    }
    let (mut dates, mut spread, mut rate) = (Vec::new(), Vec::new(), Vec::new());
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        dates.push(parse_date(&rec[0], line)?);
        for (cell, out) in [(&rec[1], &mut spread), (&rec[2], &mut rate)] {
            match parse_rate(cell, line)? {
                Some(v) => out.push(v),
                None => {
                    return Err(Error::Parse {
                        line,
                        message: "missing value in CDS file".into(),
                    })
                }
            }
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptyEntity(entity.to_string()));
    }
    CdsPanel::new(entity, dates, spread, rate)
}

/// Restricts both inputs to their common dates.
pub fn align(panel: &PanelSeries, cds: &CdsPanel) -> Result<(PanelSeries, CdsPanel)> {
    let a: BTreeSet<NaiveDate> = panel.dates.iter().copied().collect();
    let b: BTreeSet<NaiveDate> = cds.dates.iter().copied().collect();
    let common: BTreeSet<NaiveDate> = a.intersection(&b).copied().collect();
    if common.is_empty() {
        return Err(Error::NoOverlap);
    }
    Ok((panel.restrict(&common), cds.restrict(&common)))
}

/// Restricts a panel and several CDS files to the dates shared by all.
pub fn align_many(panel: &PanelSeries, cds: &[CdsPanel]) -> Result<(PanelSeries, Vec<CdsPanel>)> {
    let mut common: BTreeSet<NaiveDate> = panel.dates.iter().copied().collect();
    for c in cds {
        let other: BTreeSet<NaiveDate> = c.dates.iter().copied().collect();
        common = common.intersection(&other).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::NoOverlap);
    }
    Ok((
        panel.restrict(&common),
        cds.iter().map(|c| c.restrict(&common)).collect(),
    ))
}

/// Weekday calendar of `n` business days starting at `start` (weekends skipped).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    use chrono::{Datelike, Weekday};
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date overflow");
    }
    out
}
