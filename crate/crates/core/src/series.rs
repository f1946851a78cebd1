//! Validated daily price series and the raw-series statistics (N_r, S_r, K_r).
//!
//! Two moment conventions coexist here: [`excess_kurtosis`] uses population
//! moments (divide by N, biased standard deviation), while the return
//! standard deviation reported in [`SeriesStats`] uses the sample (N − 1)
//! denominator.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ISO_DATE: &str = "%Y-%m-%d";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceSeries {
    symbol: String,
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series, enforcing: equal lengths, at least two points,
    /// strictly positive finite closes and strictly increasing dates.
    pub fn new(symbol: impl Into<String>, dates: Vec<NaiveDate>, closes: Vec<f64>) -> Result<Self> {
        if dates.len() != closes.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: closes.len(),
            });
        }
        if closes.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: closes.len(),
            });
        }
        for (i, &c) in closes.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::NonPositivePrice {
                    line: i as u64 + 1,
                    value: c,
                });
            }
        }
        if let Some(i) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotonicDates { index: i + 1 });
        }
        Ok(PriceSeries {
            symbol: symbol.into(),
            dates,
            closes,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    pub fn with_symbol(mut self, symbol: impl Into<String>) -> Self {
        self.symbol = symbol.into();
        self
    }
}

/// Column mapping for delimiter-separated price files.
///
/// `date_format` is a chrono format string; `None` means ISO-8601
/// (`YYYY-MM-DD`). Month/day/year files must say so explicitly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriceSchema {
    pub date_column: String,
    pub close_column: String,
    pub date_format: Option<String>,
    pub delimiter: u8,
}

impl Default for PriceSchema {
    fn default() -> Self {
        PriceSchema {
            date_column: "date".to_string(),
            close_column: "close".to_string(),
            date_format: None,
            delimiter: b',',
        }
    }
}

/// Parses a headed, delimiter-separated price file.
///
/// Rows may appear in any order; they are sorted by date. Duplicate dates,
/// non-positive closes, unparsable rows and files with fewer than two rows
/// are rejected with the offending line number where one exists. Lines
/// starting with `#` are comments.
pub fn parse_price_file(symbol: &str, text: &str, schema: &PriceSchema) -> Result<PriceSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let date_col = column(&schema.date_column)?;
    let close_col = column(&schema.close_column)?;
    let format = schema.date_format.as_deref().unwrap_or(ISO_DATE);

    let mut rows: Vec<(NaiveDate, f64, u64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::MalformedRow {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let malformed = |message: String| Error::MalformedRow { line, message };

        let raw_date = record
            .get(date_col)
            .ok_or_else(|| malformed("missing date field".to_string()))?;
        let date = NaiveDate::parse_from_str(raw_date, format)
            .map_err(|e| malformed(format!("bad date `{raw_date}` for format `{format}`: {e}")))?;
        let raw_close = record
            .get(close_col)
            .ok_or_else(|| malformed("missing close field".to_string()))?;
        let close: f64 = raw_close
            .replace(',', "")
            .parse()
            .map_err(|_| malformed(format!("bad close `{raw_close}`")))?;
        if !(close > 0.0 && close.is_finite()) {
            return Err(Error::NonPositivePrice { line, value: close });
        }
        rows.push((date, close, line));
    }

    if rows.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: rows.len(),
        });
    }

    rows.sort_by_key(|r| r.0);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateDate {
            line: w[0].2.max(w[1].2),
            date: w[1].0.to_string(),
        });
    }

    let (dates, closes) = rows.into_iter().map(|(d, c, _)| (d, c)).unzip();
    PriceSeries::new(symbol, dates, closes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnSeries {
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn log_returns(series: &PriceSeries) -> ReturnSeries {
    let values = series
        .closes()
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    ReturnSeries { values }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (N − 1 denominator); 0 for fewer than two points.
pub fn sample_stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Excess kurtosis with population moments: (1/N) Σ ((x − x̄)/σ)⁴ − 3,
/// σ the biased standard deviation. Zero for a Gaussian.
pub fn excess_kurtosis(xs: &[f64]) -> Result<f64> {
    if xs.len() < 4 {
        return Err(Error::TooFewPoints {
            needed: 4,
            got: xs.len(),
        });
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::ZeroVariance);
    }
    let n = xs.len() as f64;
    let m = mean(xs);
    let (m2, m4) = xs.iter().fold((0.0, 0.0), |(s2, s4), &x| {
        let d2 = (x - m) * (x - m);
        (s2 + d2, s4 + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(m4 / (m2 * m2) - 3.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesStats {
    pub n_returns: usize,
    pub stddev: f64,
    /// `None` when the returns are too few or have zero variance.
    pub excess_kurtosis: Option<f64>,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
}

pub fn series_summary(series: &PriceSeries) -> SeriesStats {
    let returns = log_returns(series);
    SeriesStats {
        n_returns: returns.len(),
        stddev: sample_stddev(&returns.values),
        excess_kurtosis: excess_kurtosis(&returns.values).ok(),
        first_date: series.first_date(),
        last_date: series.last_date(),
    }
}
