//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use chrono::{Days, Months, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soc_drawdown::drawdown::{WindowMode, WindowSpec};
use soc_drawdown::series::PriceSeries;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ 0x7E57_0000_0000_0000)
}

/// Rescans the whole window at every index.
pub fn naive_trailing_max(dates: &[NaiveDate], closes: &[f64], window: &WindowSpec) -> Vec<f64> {
    (0..closes.len())
        .map(|i| {
            let inside = |j: usize| match window.mode {
                WindowMode::TradingDays => i - j < window.span as usize,
                WindowMode::CalendarMonths => dates[j] > dates[i] - Months::new(window.span),
            };
            (0..=i).filter(|&j| inside(j)).map(|j| closes[j]).fold(f64::MIN, f64::max)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefEvent {
    pub start: usize,
    pub trough: usize,
    pub end: usize,
    pub depth_points: f64,
    pub depth_rel: f64,
    pub complete: bool,
}

/// For every index with d < 0 that starts a run, walk right to the run's
/// end and rescan the run for its minimum.
pub fn naive_segments(d: &[f64], ceiling: &[f64]) -> Vec<RefEvent> {
    let n = d.len();
    let mut out = Vec::new();
    for i in 0..n {
        let starts_run = d[i] < 0.0 && (i == 0 || !(d[i - 1] < 0.0));
        if !starts_run {
            continue;
        }
        let mut j = i;
        while j + 1 < n && d[j + 1] < 0.0 {
            j += 1;
        }
        let run = i..=j;
        let min = run.clone().map(|k| d[k]).fold(f64::INFINITY, f64::min);
        let trough = run.clone().find(|&k| d[k] == min).unwrap();
        let opened = i > 0 && d[i - 1] == 0.0;
        let closed = j + 1 < n && d[j + 1] == 0.0;
        out.push(RefEvent {
            start: if opened { i - 1 } else { i },
            trough,
            end: if closed { j + 1 } else { j },
            depth_points: min,
            depth_rel: min / ceiling[trough],
            complete: opened && closed,
        });
    }
    out
}

/// Random walk of length `n` with irregular gaps between dates.
pub fn random_series(seed: u64, n: usize) -> PriceSeries {
    let mut r = rng(seed);
    let mut date = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap() + Days::new(r.random_range(0..400));
    let mut price: f64 = r.random_range(10.0..1000.0);
    let mut dates = Vec::with_capacity(n);
    let mut closes = Vec::with_capacity(n);
    for _ in 0..n {
        dates.push(date);
        closes.push(price);
        date = date + Days::new(r.random_range(1..25));
        // occasional exact repeats of a previous high exercise the zero detection
        price = if r.random::<f64>() < 0.05 {
            *closes.iter().rev().take(5).max_by(|a, b| a.total_cmp(b)).unwrap()
        } else {
            price * (r.random_range(-0.08..0.08) as f64).exp()
        };
    }
    PriceSeries::new(format!("R{seed}"), dates, closes).unwrap()
}

/// Inverse-CDF draws from a continuous power law with density ∝ x^-alpha above x_min.
pub fn pareto_draws(seed: u64, n: usize, alpha: f64, x_min: f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| x_min * (1.0 - r.random::<f64>()).powf(-1.0 / (alpha - 1.0)))
        .collect()
}

/// Standard normal draws via Box–Muller.
pub fn normal_draws(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let u1: f64 = 1.0 - r.random::<f64>();
        let u2: f64 = r.random();
        let rad = (-2.0 * u1.ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        out.push(rad * th.cos());
        out.push(rad * th.sin());
    }
    out.truncate(n);
    out
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}
