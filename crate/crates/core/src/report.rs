//! Per-series pipeline, parameter tables, group means and plot data.
//!
//! Table formatting follows the printed precision of the reference tables:
//! percentages with 2 decimals, kurtoses, α and σ with 3, R² with 4, counts
//! as integers. AVERAGE, MAX and MIN rows are computed from the rounded body
//! values, so recomputing them from an emitted table reproduces them exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::control::{classify, RegimeCriteria, RegimeVerdict, Thresholds};
use crate::critical::{find_critical, split_report, CriticalSplit, SweepPoint, DEFAULT_MIN_SEGMENT, DEFAULT_MIN_TAIL};
use crate::drawdown::{collect_depths, extract, rank_size_points, DepthUnit, DrawdownEvent, DrawdownSet, WindowSpec};
use crate::error::{Error, Result};
use crate::powerlaw::{bootstrap_pvalue, rank_size_regression, PowerLawFit, PowerRegression, DEFAULT_BOOTSTRAP_TRIALS};
use crate::series::{series_summary, PriceSeries, SeriesStats};

pub const DEFAULT_MASTER_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub window: WindowSpec,
    pub depth_unit: DepthUnit,
    pub include_incomplete: bool,
    pub min_segment: usize,
    pub min_tail: usize,
    /// 0 skips the bootstrap.
    pub bootstrap_trials: usize,
    pub master_seed: u64,
    pub thresholds: Thresholds,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window: WindowSpec::default(),
            depth_unit: DepthUnit::Relative,
            include_incomplete: false,
            min_segment: DEFAULT_MIN_SEGMENT,
            min_tail: DEFAULT_MIN_TAIL,
            bootstrap_trials: DEFAULT_BOOTSTRAP_TRIALS,
            master_seed: DEFAULT_MASTER_SEED,
            thresholds: Thresholds::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.min_segment < 4 {
            return Err(Error::InvalidArgument(format!("min_segment must be at least 4, got {}", self.min_segment)));
        }
        if self.min_tail < 2 {
            return Err(Error::InvalidArgument(format!("min_tail must be at least 2, got {}", self.min_tail)));
        }
        Ok(())
    }

    /// One-line description used in every output header.
    pub fn header(&self) -> String {
        let mode = match self.window.mode {
            crate::drawdown::WindowMode::CalendarMonths => "calendar_months",
            crate::drawdown::WindowMode::TradingDays => "trading_days",
        };
        let warmup = match self.window.warmup {
            crate::drawdown::Warmup::Expanding => "expanding",
            crate::drawdown::Warmup::Skip => "skip",
        };
        let unit = match self.depth_unit {
            DepthUnit::Relative => "relative",
            DepthUnit::Points => "points",
        };
        format!(
            "seed={} window={}:{}:{} depth_unit={} include_incomplete={} min_segment={} min_tail={} bootstrap={} \
             k_sup_min={} n_min={} p_min={} kurtosis=population_excess stddev=sample_n_minus_1",
            self.master_seed,
            mode,
            self.window.span,
            warmup,
            unit,
            self.include_incomplete,
            self.min_segment,
            self.min_tail,
            self.bootstrap_trials,
            self.thresholds.k_sup_min,
            self.thresholds.n_min,
            self.thresholds.p_min,
        )
    }
}

/// The twelve per-series parameters, columns a–l. Depths are signed (≤ 0)
/// and `pct_sup` is a fraction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsRow {
    pub symbol: String,
    pub n_tot: usize,
    pub n_sup: usize,
    pub n_inf: usize,
    pub pct_sup: f64,
    pub k_tot: f64,
    pub k_sup: f64,
    pub k_inf: f64,
    pub x_max: f64,
    pub x_min: f64,
    pub r_squared: f64,
    pub alpha: f64,
    pub sigma: f64,
}

/// Intermediate products kept for plot emission.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportDetail {
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
    pub ceiling: Vec<f64>,
    pub curve: Vec<f64>,
    pub events: Vec<DrawdownEvent>,
    pub set: DrawdownSet,
    pub sweep: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub symbol: String,
    pub config: AnalysisConfig,
    pub series_stats: SeriesStats,
    pub split: CriticalSplit,
    pub fit: PowerLawFit,
    pub regression: PowerRegression,
    pub verdict: RegimeVerdict,
    pub params: ParamsRow,
    #[serde(skip)]
    pub detail: ReportDetail,
}

pub fn analyze_index(series: &PriceSeries, config: &AnalysisConfig) -> Result<IndexReport> {
    config.validate()?;
    run_pipeline(series, config).map_err(|e| e.for_series(series.symbol()))
}

fn run_pipeline(series: &PriceSeries, config: &AnalysisConfig) -> Result<IndexReport> {
    let series_stats = series_summary(series);
    let extraction = extract(series, &config.window)?;
    let set = collect_depths(&extraction.events, config.depth_unit, config.include_incomplete);
    if set.is_empty() {
        return Err(Error::NoDrawdowns);
    }
    let (sweep, split) = find_critical(&set, config.min_segment, config.min_tail)?;

    let tail = split.tail(&set);
    let mut fit = PowerLawFit::fit(tail, split.x_min)?;
    if config.bootstrap_trials > 0 {
        fit.p_value = Some(bootstrap_pvalue(
            tail,
            split.body(&set),
            &fit,
            config.bootstrap_trials,
            config.master_seed,
        )?);
    }

    let ranks = rank_size_points(&set)?;
    let regression = rank_size_regression(&ranks[..split.n_sup])?;

    let verdict = classify(
        RegimeCriteria {
            k_sup: split.k_sup,
            ks_distance: fit.ks_distance,
            p_value: fit.p_value,
            n_sup: split.n_sup,
        },
        config.thresholds,
    );

    let cols = split_report(&split);
    let params = ParamsRow {
        symbol: series.symbol().to_string(),
        n_tot: cols.n_tot,
        n_sup: cols.n_sup,
        n_inf: cols.n_inf,
        pct_sup: cols.pct_sup,
        k_tot: cols.k_tot,
        k_sup: cols.k_sup,
        k_inf: cols.k_inf,
        x_max: cols.x_max,
        x_min: cols.x_min,
        r_squared: regression.r_squared,
        alpha: fit.alpha,
        sigma: fit.sigma,
    };

    Ok(IndexReport {
        symbol: series.symbol().to_string(),
        config: config.clone(),
        series_stats,
        split,
        fit,
        regression,
        verdict,
        params,
        detail: ReportDetail {
            dates: series.dates().to_vec(),
            closes: series.closes().to_vec(),
            ceiling: extraction.ceiling,
            curve: extraction.curve,
            events: extraction.events,
            set,
            sweep,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Params,
    SeriesStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Tsv,
    Json,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(TableFormat::Tsv),
            "json" => Ok(TableFormat::Json),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// One cell of a table: a number rounded to the column's precision, or text.
#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Text(String),
}

struct Column {
    name: &'static str,
    decimals: usize,
    percent: bool,
}

impl Column {
    const fn num(name: &'static str, decimals: usize) -> Self {
        Column { name, decimals, percent: false }
    }

    const fn pct(name: &'static str, decimals: usize) -> Self {
        Column { name, decimals, percent: true }
    }

    fn cell(&self, value: f64) -> Cell {
        let shown = if self.percent { value * 100.0 } else { value };
        Cell::Num(round_to(shown, self.decimals))
    }

    fn render(&self, cell: &Cell) -> String {
        match cell {
            Cell::Text(t) => t.clone(),
            Cell::Num(v) if v.is_nan() => "NaN".to_string(),
            Cell::Num(v) => {
                let s = format!("{:.*}", self.decimals, v);
                let s = if s.starts_with("-") && s.trim_start_matches(['-', '0', '.']).is_empty() {
                    s[1..].to_string()
                } else {
                    s
                };
                if self.percent {
                    format!("{s}%")
                } else {
                    s
                }
            }
        }
    }

    fn json(&self, cell: &Cell) -> Value {
        match cell {
            Cell::Text(t) => Value::String(t.clone()),
            Cell::Num(v) if v.is_nan() => Value::Null,
            Cell::Num(v) if self.decimals == 0 => json!(*v as i64),
            Cell::Num(v) => json!(v),
        }
    }
}

fn round_to(v: f64, decimals: usize) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{:.*}", decimals, v).parse().expect("formatted float parses")
}

const PARAM_COLUMNS: [Column; 12] = [
    Column::num("N_tot", 0),
    Column::num("N_sup", 0),
    Column::num("N_inf", 0),
    Column::pct("%Sup", 2),
    Column::num("K_tot", 3),
    Column::num("K_sup", 3),
    Column::num("K_inf", 3),
    Column::pct("x_Max", 2),
    Column::pct("x_min", 2),
    Column::num("R2", 4),
    Column::num("alpha", 3),
    Column::num("sigma", 3),
];

const STATS_COLUMNS: [Column; 5] = [
    Column::num("N_r", 0),
    Column::pct("S_r", 3),
    Column::num("K_r", 3),
    Column::num("first_date", 0),
    Column::num("last_date", 0),
];

/// A rendered table: header meta, column specs, labelled body rows and the
/// AVERAGE / MAX / MIN summary rows.
struct Table<'c> {
    kind: &'static str,
    meta: String,
    columns: &'c [Column],
    body: Vec<(String, Vec<Cell>)>,
}

impl Table<'_> {
    fn summary(&self) -> Vec<(String, Vec<Cell>)> {
        let stats: [(&str, fn(&[f64]) -> f64); 3] = [
            ("AVERAGE", |xs| xs.iter().sum::<f64>() / xs.len() as f64),
            ("MAX", |xs| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ("MIN", |xs| xs.iter().copied().fold(f64::INFINITY, f64::min)),
        ];
        stats
            .iter()
            .map(|(label, stat)| {
                let cells = self
                    .columns
                    .iter()
                    .enumerate()
                    .map(|(j, col)| {
                        let mut numeric = true;
                        let values: Vec<f64> = self
                            .body
                            .iter()
                            .filter_map(|(_, cells)| match &cells[j] {
                                Cell::Num(v) if !v.is_nan() => Some(*v),
                                Cell::Num(_) => None,
                                Cell::Text(_) => {
                                    numeric = false;
                                    None
                                }
                            })
                            .collect();
                        if !numeric {
                            Cell::Text(String::new())
                        } else if values.is_empty() {
                            Cell::Num(f64::NAN)
                        } else {
                            Cell::Num(round_to(stat(&values), col.decimals))
                        }
                    })
                    .collect();
                (label.to_string(), cells)
            })
            .collect()
    }

    fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# socdd table={} {}", self.kind, self.meta);
        let names: Vec<&str> = self.columns.iter().map(|c| c.name).collect();
        let _ = writeln!(out, "symbol\t{}", names.join("\t"));
        for (label, cells) in self.body.iter().chain(self.summary().iter()) {
            let rendered: Vec<String> = self.columns.iter().zip(cells).map(|(c, v)| c.render(v)).collect();
            let _ = writeln!(out, "{label}\t{}", rendered.join("\t"));
        }
        out
    }

    fn to_json(&self) -> String {
        let row = |(label, cells): &(String, Vec<Cell>)| {
            let mut m = Map::new();
            m.insert("symbol".into(), Value::String(label.clone()));
            for (c, v) in self.columns.iter().zip(cells) {
                m.insert(c.name.into(), c.json(v));
            }
            Value::Object(m)
        };
        let doc = json!({
            "table": self.kind,
            "meta": self.meta,
            "columns": self.columns.iter().map(|c| c.name).collect::<Vec<_>>(),
            "rows": self.body.iter().map(row).collect::<Vec<_>>(),
            "summary": self.summary().iter().map(row).collect::<Vec<_>>(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    fn emit(&self, format: TableFormat) -> String {
        match format {
            TableFormat::Tsv => self.to_tsv(),
            TableFormat::Json => self.to_json(),
        }
    }
}

fn param_cells(row: &ParamsRow, unit: DepthUnit) -> Vec<Cell> {
    let c = &PARAM_COLUMNS;
    let depth = |i: usize, v: f64| match unit {
        DepthUnit::Relative => c[i].cell(v),
        DepthUnit::Points => Cell::Num(round_to(v, c[i].decimals)),
    };
    vec![
        c[0].cell(row.n_tot as f64),
        c[1].cell(row.n_sup as f64),
        c[2].cell(row.n_inf as f64),
        c[3].cell(row.pct_sup),
        c[4].cell(row.k_tot),
        c[5].cell(row.k_sup),
        c[6].cell(row.k_inf),
        depth(7, row.x_max),
        depth(8, row.x_min),
        c[9].cell(row.r_squared),
        c[10].cell(row.alpha),
        c[11].cell(row.sigma),
    ]
}

/// Parameter table (columns a–l) for arbitrary rows.
///
/// With `DepthUnit::Points` the depth columns are printed in price points
/// without a percent sign.
pub fn emit_params_table(rows: &[ParamsRow], unit: DepthUnit, meta: &str, format: TableFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no rows to tabulate".into()));
    }
    let columns: Vec<Column> = PARAM_COLUMNS
        .iter()
        .enumerate()
        .map(|(i, c)| Column {
            name: c.name,
            decimals: c.decimals,
            percent: c.percent && !(unit == DepthUnit::Points && (i == 7 || i == 8)),
        })
        .collect();
    let table = Table {
        kind: "params",
        meta: meta.to_string(),
        columns: &columns,
        body: rows.iter().map(|r| (r.symbol.clone(), param_cells(r, unit))).collect(),
    };
    Ok(table.emit(format))
}

pub fn emit_table(reports: &[IndexReport], which: TableKind, format: TableFormat) -> Result<String> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidArgument("no reports to tabulate".into()))?;
    let meta = first.config.header();
    match which {
        TableKind::Params => {
            let rows: Vec<ParamsRow> = reports.iter().map(|r| r.params.clone()).collect();
            emit_params_table(&rows, first.config.depth_unit, &meta, format)
        }
        TableKind::SeriesStats => {
            let c = &STATS_COLUMNS;
            let body = reports
                .iter()
                .map(|r| {
                    let s = &r.series_stats;
                    let cells = vec![
                        c[0].cell(s.n_returns as f64),
                        c[1].cell(s.stddev),
                        c[2].cell(s.excess_kurtosis.unwrap_or(f64::NAN)),
                        Cell::Text(s.first_date.to_string()),
                        Cell::Text(s.last_date.to_string()),
                    ];
                    (r.symbol.clone(), cells)
                })
                .collect();
            let table = Table {
                kind: "series_stats",
                meta,
                columns: &STATS_COLUMNS,
                body,
            };
            Ok(table.emit(format))
        }
    }
}

/// Symbol → group name.
pub type GroupMap = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub members: Vec<String>,
    /// Arithmetic mean of the members' signed critical levels.
    pub mean_x_min: f64,
}

/// Per-group mean of x_min, groups in order of first appearance.
pub fn group_xmin<'a>(entries: impl IntoIterator<Item = (&'a str, f64)>, grouping: &GroupMap) -> Result<Vec<GroupSummary>> {
    let mut groups: Vec<(String, Vec<String>, Vec<f64>)> = Vec::new();
    for (symbol, x_min) in entries {
        let group = grouping
            .get(symbol)
            .ok_or_else(|| Error::UnmappedSymbol(symbol.to_string()))?;
        match groups.iter_mut().find(|g| &g.0 == group) {
            Some(g) => {
                g.1.push(symbol.to_string());
                g.2.push(x_min);
            }
            None => groups.push((group.clone(), vec![symbol.to_string()], vec![x_min])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(group, members, xs)| GroupSummary {
            group,
            members,
            mean_x_min: xs.iter().sum::<f64>() / xs.len() as f64,
        })
        .collect())
}

pub fn group_reports(reports: &[IndexReport], grouping: &GroupMap) -> Result<Vec<GroupSummary>> {
    group_xmin(reports.iter().map(|r| (r.symbol.as_str(), r.params.x_min)), grouping)
}

/// Reads `symbol<TAB>group` lines; blank lines and `#` comments are skipped.
pub fn parse_group_map(text: &str) -> Result<GroupMap> {
    let mut map = GroupMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (symbol, group) = line.split_once('\t').ok_or_else(|| Error::MalformedRow {
            line: i as u64 + 1,
            message: "expected `symbol<TAB>group`".into(),
        })?;
        map.insert(symbol.trim().to_string(), group.trim().to_string());
    }
    Ok(map)
}

pub fn emit_groups(groups: &[GroupSummary], unit: DepthUnit, meta: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# socdd groups {meta}");
    let _ = writeln!(out, "group\tn\tmean_x_min\tmembers");
    for g in groups {
        let mean = match unit {
            DepthUnit::Relative => format!("{:.3}%", g.mean_x_min * 100.0),
            DepthUnit::Points => format!("{:.3}", g.mean_x_min),
        };
        let _ = writeln!(out, "{}\t{}\t{}\t{}", g.group, g.members.len(), mean, g.members.join(","));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    CeilingCurves,
    DdCurve,
    RankScatter,
    TailFit,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::CeilingCurves, Figure::DdCurve, Figure::RankScatter, Figure::TailFit];

    pub fn id(&self) -> &'static str {
        match self {
            Figure::CeilingCurves => "ceiling_curves",
            Figure::DdCurve => "dd_curve",
            Figure::RankScatter => "rank_scatter",
            Figure::TailFit => "tail_fit",
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| Error::UnknownFigure(s.to_string()))
    }
}

/// Tab-separated plot data for one figure.
pub fn emit_plot_data(report: &IndexReport, figure: Figure) -> String {
    let d = &report.detail;
    let mut out = String::new();
    let _ = writeln!(out, "# socdd plot={} symbol={} {}", figure.id(), report.symbol, report.config.header());
    match figure {
        Figure::CeilingCurves => {
            let _ = writeln!(out, "date\tclose\tceiling");
            for ((date, c), m) in d.dates.iter().zip(&d.closes).zip(&d.ceiling) {
                let _ = writeln!(out, "{date}\t{c}\t{m}");
            }
        }
        Figure::DdCurve => {
            let _ = writeln!(out, "date\td");
            for (date, v) in d.dates.iter().zip(&d.curve) {
                let _ = writeln!(out, "{date}\t{v}");
            }
        }
        Figure::RankScatter => {
            let _ = writeln!(out, "rank\tmagnitude\tcritical");
            for (i, m) in d.set.magnitudes.iter().enumerate() {
                let critical = u8::from(i + 1 == report.split.n_sup);
                let _ = writeln!(out, "{}\t{m}\t{critical}", i + 1);
            }
        }
        Figure::TailFit => {
            let _ = writeln!(
                out,
                "# log10(magnitude) = {} + {} * log10(rank), R2 = {}",
                report.regression.intercept, report.regression.slope, report.regression.r_squared
            );
            let _ = writeln!(out, "rank\tmagnitude\tpredicted");
            for (i, m) in d.set.magnitudes[..report.split.n_sup].iter().enumerate() {
                let _ = writeln!(out, "{}\t{m}\t{}", i + 1, report.regression.predict(i + 1));
            }
        }
    }
    out
}

/// Full report as pretty JSON (without the per-day detail).
pub fn report_json(report: &IndexReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}
