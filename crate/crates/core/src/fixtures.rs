//! Transcriptions of the 30-index reference tables.
//!
//! The raw index data behind them is not available, so these are used to
//! check the tables' internal identities and the group summaries rather than
//! to reproduce the measurements end to end.

use chrono::NaiveDate;

use crate::report::{GroupMap, ParamsRow};

const TABLE_ONE: &str = include_str!("../data/table1.tsv");
const TABLE_TWO: &str = include_str!("../data/table2.tsv");

/// A value as printed: its numeric value (percent signs and thousands
/// separators stripped) and the number of decimals shown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Printed {
    pub value: f64,
    pub decimals: u32,
}

impl Printed {
    pub fn parse(text: &str) -> Printed {
        let clean: String = text.chars().filter(|c| *c != '%' && *c != ',').collect();
        let decimals = clean.split_once('.').map_or(0, |(_, frac)| frac.len() as u32);
        Printed {
            value: clean.parse().unwrap_or_else(|_| panic!("fixture value `{text}` is numeric")),
            decimals,
        }
    }

    /// One unit of the last printed decimal.
    pub fn unit(&self) -> f64 {
        10f64.powi(-(self.decimals as i32))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableOneRow {
    pub symbol: String,
    pub group: String,
    /// Columns a–l as printed; percentages are in percent.
    pub cols: [Printed; 12],
}

impl TableOneRow {
    /// The row in the library's units (fractions for percentages).
    pub fn params(&self) -> ParamsRow {
        let c = &self.cols;
        ParamsRow {
            symbol: self.symbol.clone(),
            n_tot: c[0].value as usize,
            n_sup: c[1].value as usize,
            n_inf: c[2].value as usize,
            pct_sup: c[3].value / 100.0,
            k_tot: c[4].value,
            k_sup: c[5].value,
            k_inf: c[6].value,
            x_max: c[7].value / 100.0,
            x_min: c[8].value / 100.0,
            r_squared: c[9].value,
            alpha: c[10].value,
            sigma: c[11].value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableOne {
    pub rows: Vec<TableOneRow>,
    pub average: [Printed; 12],
    pub max: [Printed; 12],
    pub min: [Printed; 12],
}

impl TableOne {
    pub fn grouping(&self) -> GroupMap {
        self.rows
            .iter()
            .map(|r| (r.symbol.clone(), r.group.clone()))
            .collect()
    }

    pub fn params(&self) -> Vec<ParamsRow> {
        self.rows.iter().map(TableOneRow::params).collect()
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| l.split('\t').collect())
}

pub fn table_one() -> TableOne {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for fields in data_lines(TABLE_ONE) {
        let cols: [Printed; 12] = std::array::from_fn(|i| Printed::parse(fields[i + 2]));
        if fields[1] == "-" {
            summary.push(cols);
        } else {
            rows.push(TableOneRow {
                symbol: fields[0].to_string(),
                group: fields[1].to_string(),
                cols,
            });
        }
    }
    let [average, max, min]: [[Printed; 12]; 3] = summary.try_into().expect("three summary rows");
    TableOne { rows, average, max, min }
}

/// Symbol → group for the 30 reference indices.
pub fn default_grouping() -> GroupMap {
    table_one().grouping()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableTwoRow {
    pub symbol: String,
    pub n_returns: usize,
    /// Percent.
    pub stddev: Printed,
    pub excess_kurtosis: Printed,
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableTwo {
    pub rows: Vec<TableTwoRow>,
    /// AVERAGE, MAX, MIN of (N_r, S_r, K_r).
    pub summary: [[Printed; 3]; 3],
}

pub fn table_two() -> TableTwo {
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for fields in data_lines(TABLE_TWO) {
        let nums: [Printed; 3] = std::array::from_fn(|i| Printed::parse(fields[i + 1]));
        if fields[4].is_empty() {
            summary.push(nums);
            continue;
        }
        let date = |s: &str| NaiveDate::parse_from_str(s, "%m/%d/%Y").expect("fixture date is month/day/year");
        rows.push(TableTwoRow {
            symbol: fields[0].to_string(),
            n_returns: nums[0].value as usize,
            stddev: nums[1],
            excess_kurtosis: nums[2],
            first_date: date(fields[4]),
            last_date: date(fields[5]),
        });
    }
    TableTwo {
        rows,
        summary: summary.try_into().expect("three summary rows"),
    }
}
