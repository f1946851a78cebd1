//! Trailing ceiling, difference curve and draw-down segmentation.
//!
//! The ceiling at day i is the highest close inside the window that ends at
//! and includes day i, so the difference curve `d = close − ceiling` never
//! exceeds zero and is exactly zero whenever the day's close is the window
//! maximum. A draw-down is a maximal run of strictly negative `d` between two
//! zeros; its depth is the most negative `d` in the run.

use std::collections::VecDeque;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PriceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Dates strictly after `date − span months`, up to and including `date`.
    CalendarMonths,
    /// The last `span` observations, including the current one.
    TradingDays,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warmup {
    /// Use all available history until the first full window.
    Expanding,
    /// Leave the ceiling undefined (NaN) until the first full window.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub mode: WindowMode,
    pub span: u32,
    pub warmup: Warmup,
}

impl WindowSpec {
    pub fn calendar_months(span: u32) -> Self {
        WindowSpec {
            mode: WindowMode::CalendarMonths,
            span,
            warmup: Warmup::Expanding,
        }
    }

    pub fn trading_days(span: u32) -> Self {
        WindowSpec {
            mode: WindowMode::TradingDays,
            span,
            warmup: Warmup::Expanding,
        }
    }

    pub fn with_warmup(mut self, warmup: Warmup) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.span == 0 {
            return Err(Error::InvalidArgument("window span must be at least 1".into()));
        }
        Ok(())
    }

    /// Index of the oldest observation inside the window ending at `i`, and
    /// whether that window is full (history reaches back a whole span).
    fn bounds(&self, dates: &[NaiveDate], i: usize) -> (usize, bool) {
        match self.mode {
            WindowMode::TradingDays => {
                let span = self.span as usize;
                ((i + 1).saturating_sub(span), i + 1 >= span)
            }
            WindowMode::CalendarMonths => match dates[i].checked_sub_months(Months::new(self.span)) {
                Some(cutoff) => {
                    let lo = dates[..=i].partition_point(|d| *d <= cutoff);
                    (lo, dates[0] <= cutoff)
                }
                None => (0, false),
            },
        }
    }
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec::calendar_months(6)
    }
}

/// Trailing window maximum of the closes, O(N) via a monotone deque.
///
/// With `Warmup::Skip` the entries before the first full window are NaN.
pub fn trailing_max(series: &PriceSeries, window: &WindowSpec) -> Vec<f64> {
    let closes = series.closes();
    let dates = series.dates();
    let mut out = Vec::with_capacity(closes.len());
    let mut deque: VecDeque<usize> = VecDeque::new();

    for i in 0..closes.len() {
        while deque.back().is_some_and(|&j| closes[j] <= closes[i]) {
            deque.pop_back();
        }
        deque.push_back(i);
        let (lo, full) = window.bounds(dates, i);
        while deque.front().is_some_and(|&j| j < lo) {
            deque.pop_front();
        }
        let max = closes[*deque.front().expect("window holds day i")];
        out.push(if full || window.warmup == Warmup::Expanding {
            max
        } else {
            f64::NAN
        });
    }
    out
}

pub fn drawdown_curve(series: &PriceSeries, ceiling: &[f64]) -> Result<Vec<f64>> {
    let closes = series.closes();
    if closes.len() != ceiling.len() {
        return Err(Error::LengthMismatch {
            left: closes.len(),
            right: ceiling.len(),
        });
    }
    Ok(closes.iter().zip(ceiling).map(|(c, m)| c - m).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawdownEvent {
    /// The zero of `d` that opens the event. For a run that begins before
    /// the ceiling is defined this is the run's first day instead.
    pub start_index: usize,
    pub trough_index: usize,
    /// The zero that closes the event, or the last day of an unfinished run.
    pub end_index: usize,
    /// Trough depth in price points (≤ 0).
    pub depth_points: f64,
    /// Trough depth as a fraction of the ceiling at the trough (≤ 0).
    pub depth_rel: f64,
    /// True when `d` is zero at both delimiters.
    pub complete: bool,
}

pub fn segment_drawdowns(d: &[f64], ceiling: &[f64]) -> Result<Vec<DrawdownEvent>> {
    if d.len() != ceiling.len() {
        return Err(Error::LengthMismatch {
            left: d.len(),
            right: ceiling.len(),
        });
    }

    struct Open {
        start: usize,
        opened_at_zero: bool,
        trough: usize,
    }

    let close = |open: Open, end: usize, closed_at_zero: bool| DrawdownEvent {
        start_index: open.start,
        trough_index: open.trough,
        end_index: end,
        depth_points: d[open.trough],
        depth_rel: d[open.trough] / ceiling[open.trough],
        complete: open.opened_at_zero && closed_at_zero,
    };

    let mut events = Vec::new();
    let mut open: Option<Open> = None;
    let mut prev_zero = false;

    for (i, &v) in d.iter().enumerate() {
        if v < 0.0 {
            match open.as_mut() {
                Some(run) => {
                    if v < d[run.trough] {
                        run.trough = i;
                    }
                }
                None => {
                    open = Some(Open {
                        start: if prev_zero { i - 1 } else { i },
                        opened_at_zero: prev_zero,
                        trough: i,
                    });
                }
            }
            prev_zero = false;
        } else if v >= 0.0 {
            if let Some(run) = open.take() {
                events.push(close(run, i, true));
            }
            prev_zero = true;
        } else {
            // undefined ceiling
            if let Some(run) = open.take() {
                events.push(close(run, i - 1, false));
            }
            prev_zero = false;
        }
    }
    if let Some(run) = open.take() {
        events.push(close(run, d.len() - 1, false));
    }
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthUnit {
    /// Fraction of the ceiling at the trough.
    Relative,
    /// Price points.
    Points,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawdownSet {
    /// Depth magnitudes, deepest first.
    pub magnitudes: Vec<f64>,
    pub n_total: usize,
    pub x_max: Option<f64>,
    pub unit: DepthUnit,
}

impl DrawdownSet {
    pub fn from_magnitudes(mut magnitudes: Vec<f64>, unit: DepthUnit) -> Self {
        magnitudes.sort_by(|a, b| b.total_cmp(a));
        DrawdownSet {
            n_total: magnitudes.len(),
            x_max: magnitudes.first().copied(),
            magnitudes,
            unit,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Magnitudes, shallowest first.
    pub fn ascending(&self) -> Vec<f64> {
        self.magnitudes.iter().rev().copied().collect()
    }
}

pub fn collect_depths(events: &[DrawdownEvent], unit: DepthUnit, include_incomplete: bool) -> DrawdownSet {
    let magnitudes = events
        .iter()
        .filter(|e| include_incomplete || e.complete)
        .map(|e| match unit {
            DepthUnit::Relative => e.depth_rel.abs(),
            DepthUnit::Points => e.depth_points.abs(),
        })
        .collect();
    DrawdownSet::from_magnitudes(magnitudes, unit)
}

/// (1-based rank, magnitude) pairs for the rank-size plot.
pub fn rank_size_points(set: &DrawdownSet) -> Result<Vec<(usize, f64)>> {
    if set.is_empty() {
        return Err(Error::NoDrawdowns);
    }
    Ok(set.magnitudes.iter().enumerate().map(|(i, &m)| (i + 1, m)).collect())
}

/// Everything the extraction stage produces for one series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction {
    pub ceiling: Vec<f64>,
    pub curve: Vec<f64>,
    pub events: Vec<DrawdownEvent>,
}

pub fn extract(series: &PriceSeries, window: &WindowSpec) -> Result<Extraction> {
    window.validate()?;
    let ceiling = trailing_max(series, window);
    let curve = drawdown_curve(series, &ceiling)?;
    let events = segment_drawdowns(&curve, &ceiling)?;
    Ok(Extraction { ceiling, curve, events })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weekday_series(closes: &[f64]) -> PriceSeries {
        let start = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
        let dates = (0..closes.len() as u64).map(|i| start + chrono::Days::new(i)).collect();
        PriceSeries::new("T", dates, closes.to_vec()).unwrap()
    }

    #[test]
    fn increasing_series_ceiling_is_the_close() {
        let s = weekday_series(&[1.0, 2.0, 3.0, 4.5, 9.0]);
        for w in [WindowSpec::trading_days(2), WindowSpec::calendar_months(6)] {
            assert_eq!(trailing_max(&s, &w), s.closes());
            assert!(drawdown_curve(&s, &trailing_max(&s, &w)).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hand_traced_trading_day_window() {
        let s = weekday_series(&[10.0, 9.0, 8.0, 7.0, 6.0, 5.0]);
        assert_eq!(trailing_max(&s, &WindowSpec::trading_days(3)), vec![10.0, 10.0, 10.0, 9.0, 8.0, 7.0]);
        let skip = trailing_max(&s, &WindowSpec::trading_days(3).with_warmup(Warmup::Skip));
        assert!(skip[0].is_nan() && skip[1].is_nan());
        assert_eq!(&skip[2..], &[10.0, 9.0, 8.0, 7.0]);
    }

    #[test]
    fn calendar_window_drops_old_peak() {
        let d = |y, m, day| NaiveDate::from_ymd_opt(y, m, day).unwrap();
        let s = PriceSeries::new(
            "T",
            vec![d(2020, 1, 15), d(2020, 3, 2), d(2020, 7, 15), d(2020, 7, 16)],
            vec![100.0, 90.0, 80.0, 85.0],
        )
        .unwrap();
        // 2020-07-15 minus six months is 2020-01-15, which falls outside the window.
        assert_eq!(trailing_max(&s, &WindowSpec::calendar_months(6)), vec![100.0, 100.0, 90.0, 90.0]);
        let skip = trailing_max(&s, &WindowSpec::calendar_months(6).with_warmup(Warmup::Skip));
        assert!(skip[0].is_nan() && skip[1].is_nan());
        assert_eq!(&skip[2..], &[90.0, 90.0]);
    }

    #[test]
    fn hand_traced_curve() {
        let s = weekday_series(&[100.0, 90.0, 95.0, 101.0]);
        let d = drawdown_curve(&s, &[100.0, 100.0, 100.0, 101.0]).unwrap();
        assert_eq!(d, vec![0.0, -10.0, -5.0, 0.0]);
        assert_eq!(
            drawdown_curve(&s, &[1.0, 2.0]),
            Err(Error::LengthMismatch { left: 4, right: 2 })
        );
    }

    #[test]
    fn hand_traced_segmentation() {
        let s = weekday_series(&[100.0, 90.0, 95.0, 101.0, 99.0, 101.0]);
        let ceiling = trailing_max(&s, &WindowSpec::trading_days(126));
        assert_eq!(ceiling, vec![100.0, 100.0, 100.0, 101.0, 101.0, 101.0]);
        let d = drawdown_curve(&s, &ceiling).unwrap();
        assert_eq!(d, vec![0.0, -10.0, -5.0, 0.0, -2.0, 0.0]);

        let events = segment_drawdowns(&d, &ceiling).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!((events[0].start_index, events[0].trough_index, events[0].end_index), (0, 1, 3));
        assert_eq!((events[1].start_index, events[1].trough_index, events[1].end_index), (3, 4, 5));
        assert!(events.iter().all(|e| e.complete));
        assert!((events[0].depth_rel + 0.10).abs() < 1e-15);
        assert!((events[1].depth_rel + 0.019_801_980_198_019_8).abs() < 1e-15);

        let set = collect_depths(&events, DepthUnit::Relative, false);
        assert_eq!(set.n_total, 2);
        assert!((set.magnitudes[0] - 0.1).abs() < 1e-15);
        assert!((set.magnitudes[1] - 0.019_802).abs() < 1e-6);
        assert_eq!(set.x_max, Some(set.magnitudes[0]));

        let points = collect_depths(&events, DepthUnit::Points, false);
        assert_eq!(points.magnitudes, vec![10.0, 2.0]);
    }

    #[test]
    fn all_zero_curve_has_no_events() {
        assert!(segment_drawdowns(&[0.0; 5], &[1.0; 5]).unwrap().is_empty());
    }

    #[test]
    fn trailing_negative_run_is_incomplete() {
        let d = [0.0, -1.0, 0.0, -2.0, -3.0];
        let events = segment_drawdowns(&d, &[10.0; 5]).unwrap();
        assert_eq!(events.len(), 2);
        assert!(events[0].complete);
        assert!(!events[1].complete);
        assert_eq!((events[1].start_index, events[1].trough_index, events[1].end_index), (2, 4, 4));

        assert_eq!(collect_depths(&events, DepthUnit::Points, false).n_total, 1);
        assert_eq!(collect_depths(&events, DepthUnit::Points, true).n_total, 2);
    }

    #[test]
    fn run_starting_in_skipped_warmup_is_incomplete() {
        let d = [f64::NAN, -1.0, -2.0, 0.0, -1.0, 0.0];
        let events = segment_drawdowns(&d, &[4.0; 6]).unwrap();
        assert_eq!(events.len(), 2);
        assert!(!events[0].complete);
        assert_eq!(events[0].start_index, 1);
        assert!(events[1].complete);
    }

    #[test]
    fn equal_troughs_keep_first_and_ties_are_kept() {
        let d = [0.0, -2.0, -1.0, -2.0, 0.0, -2.0, 0.0];
        let events = segment_drawdowns(&d, &[10.0; 7]).unwrap();
        assert_eq!(events[0].trough_index, 1);
        let set = collect_depths(&events, DepthUnit::Points, false);
        assert_eq!(set.magnitudes, vec![2.0, 2.0]);
        assert_eq!(rank_size_points(&set).unwrap(), vec![(1, 2.0), (2, 2.0)]);
    }

    #[test]
    fn rank_size_points_pairs_ranks() {
        let set = DrawdownSet::from_magnitudes(vec![0.1, 0.5, 0.2], DepthUnit::Relative);
        assert_eq!(rank_size_points(&set).unwrap(), vec![(1, 0.5), (2, 0.2), (3, 0.1)]);
        let empty = collect_depths(&[], DepthUnit::Relative, false);
        assert_eq!(empty.n_total, 0);
        assert_eq!(empty.x_max, None);
        assert_eq!(rank_size_points(&empty), Err(Error::NoDrawdowns));
    }

    #[test]
    fn zero_span_rejected() {
        let s = weekday_series(&[1.0, 2.0]);
        assert!(extract(&s, &WindowSpec::trading_days(0)).is_err());
    }
}
