//! Synthetic controls and the self-organized / random-walk verdict.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::IndexReport;
use crate::rng::{self, Purpose};
use crate::series::{log_returns, mean, sample_stddev, PriceSeries};

/// First date attached to generated series (a Monday).
pub const SYNTHETIC_START: (i32, u32, u32) = (2000, 1, 3);

/// Quantile of the standard normal at 0.975, i.e. the 95th percentile of a
/// unit half-normal.
const HALF_NORMAL_P95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmSpec {
    pub n_days: usize,
    pub mu: f64,
    pub sigma: f64,
    pub seed: u64,
    pub start_price: f64,
}

impl GbmSpec {
    pub fn new(n_days: usize, mu: f64, sigma: f64, seed: u64) -> Self {
        GbmSpec {
            n_days,
            mu,
            sigma,
            seed,
            start_price: 100.0,
        }
    }

    /// A control with the length, mean return and return volatility of `series`.
    pub fn matched_to(series: &PriceSeries, seed: u64) -> Self {
        let r = log_returns(series).values;
        GbmSpec {
            n_days: series.len(),
            mu: mean(&r),
            sigma: sample_stddev(&r).max(f64::MIN_POSITIVE),
            seed,
            start_price: series.closes()[0],
        }
    }
}

/// Consecutive weekdays starting at [`SYNTHETIC_START`].
pub fn weekday_dates(n: usize) -> Vec<NaiveDate> {
    let (y, m, d) = SYNTHETIC_START;
    let mut day = NaiveDate::from_ymd_opt(y, m, d).expect("valid start date");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(day);
        }
        day = day + Days::new(1);
    }
    out
}

fn prices_from_returns(start: f64, returns: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut cum = 0.0;
    std::iter::once(start)
        .chain(returns.into_iter().map(|r| {
            cum += r;
            start * cum.exp()
        }))
        .collect()
}

/// Geometric Brownian motion with i.i.d. normal(mu, sigma) daily log-returns.
pub fn gen_gbm(spec: &GbmSpec) -> Result<PriceSeries> {
    if spec.n_days < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: spec.n_days,
        });
    }
    if !(spec.sigma > 0.0) || !(spec.start_price > 0.0) || !spec.mu.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gbm needs sigma > 0 and start_price > 0 (sigma = {}, start = {})",
            spec.sigma, spec.start_price
        )));
    }
    let mut rng = rng::stream(spec.seed, Purpose::Gbm, 0);
    let returns: Vec<f64> = (1..spec.n_days)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.mu + spec.sigma * z
        })
        .collect();
    let closes = prices_from_returns(spec.start_price, returns);
    PriceSeries::new(format!("GBM-{}", spec.seed), weekday_dates(spec.n_days), closes)
}

/// Same first price and dates, log-returns permuted by a seeded shuffle.
pub fn shuffle_returns(series: &PriceSeries, seed: u64) -> Result<PriceSeries> {
    let mut returns = log_returns(series).values;
    returns.shuffle(&mut rng::stream(seed, Purpose::Shuffle, 0));
    let closes = prices_from_returns(series.closes()[0], returns);
    PriceSeries::new(
        format!("{}-shuffled", series.symbol()),
        series.dates().to_vec(),
        closes,
    )
}

/// Draw-down depths drawn from a half-normal body with a Pareto tail grafted
/// above the body's 95th percentile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub n_body: usize,
    pub n_tail: usize,
    /// Scale of the half-normal body (relative depth).
    pub body_scale: f64,
    pub alpha: f64,
    /// Tail draws at or beyond this depth are redrawn.
    pub max_depth: f64,
    pub seed: u64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        MixtureSpec {
            n_body: 400,
            n_tail: 100,
            body_scale: 0.005,
            alpha: 2.3,
            max_depth: 0.9,
            seed: 0,
        }
    }
}

impl MixtureSpec {
    pub fn graft_point(&self) -> f64 {
        self.body_scale * HALF_NORMAL_P95
    }
}

/// Depth magnitudes of the mixture in random order.
pub fn mixture_depths(spec: &MixtureSpec) -> Result<Vec<f64>> {
    if !(spec.body_scale > 0.0 && spec.alpha > 1.0 && spec.max_depth > spec.graft_point()) {
        return Err(Error::InvalidArgument("mixture needs body_scale > 0, alpha > 1 and room above the graft".into()));
    }
    let mut rng = rng::stream(spec.seed, Purpose::Mixture, 0);
    let graft = spec.graft_point();
    let mut depths = Vec::with_capacity(spec.n_body + spec.n_tail);
    while depths.len() < spec.n_body {
        let z: f64 = StandardNormal.sample(&mut rng);
        let x = (z * spec.body_scale).abs();
        if x > 0.0 {
            depths.push(x);
        }
    }
    while depths.len() < spec.n_body + spec.n_tail {
        let u: f64 = rng.random();
        let x = graft * (1.0 - u).powf(-1.0 / (spec.alpha - 1.0));
        if x < spec.max_depth {
            depths.push(x);
        }
    }
    depths.shuffle(&mut rng);
    Ok(depths)
}

/// A price path whose complete draw-downs have exactly the mixture depths.
///
/// Each event is a four-day sawtooth: halfway down, the trough, halfway back,
/// then a new high 0.1% above the previous peak.
pub fn gen_drawdown_mixture(spec: &MixtureSpec) -> Result<PriceSeries> {
    let depths = mixture_depths(spec)?;
    let mut closes = Vec::with_capacity(4 * depths.len() + 1);
    let mut peak = 100.0;
    closes.push(peak);
    for x in depths {
        closes.push(peak * (1.0 - x / 2.0));
        closes.push(peak * (1.0 - x));
        closes.push(peak * (1.0 - x / 2.0));
        peak *= 1.001;
        closes.push(peak);
    }
    let n = closes.len();
    PriceSeries::new(format!("MIX-{}", spec.seed), weekday_dates(n), closes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub k_sup_min: f64,
    pub n_min: usize,
    pub p_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            k_sup_min: 1.0,
            n_min: 10,
            p_min: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    SelfOrganized,
    RandomWalkOnly,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::SelfOrganized => "SelfOrganized",
            Regime::RandomWalkOnly => "RandomWalkOnly",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCriteria {
    pub k_sup: f64,
    pub ks_distance: f64,
    pub p_value: Option<f64>,
    pub n_sup: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub label: Regime,
    pub criteria: RegimeCriteria,
    pub thresholds: Thresholds,
}

impl RegimeVerdict {
    pub fn rederive(&self) -> Regime {
        classify(self.criteria, self.thresholds).label
    }
}

/// Self-organized iff the tail is leptokurtic enough, large enough, and (when
/// a bootstrap ran) not rejected as a power law.
pub fn classify(criteria: RegimeCriteria, thresholds: Thresholds) -> RegimeVerdict {
    let self_organized = criteria.n_sup >= thresholds.n_min
        && criteria.k_sup >= thresholds.k_sup_min
        && criteria.p_value.is_none_or(|p| p >= thresholds.p_min);
    RegimeVerdict {
        label: if self_organized {
            Regime::SelfOrganized
        } else {
            Regime::RandomWalkOnly
        },
        criteria,
        thresholds,
    }
}

/// Re-classifies a finished report under different thresholds.
pub fn classify_regime(report: &IndexReport, thresholds: Thresholds) -> RegimeVerdict {
    classify(
        RegimeCriteria {
            k_sup: report.split.k_sup,
            ks_distance: report.fit.ks_distance,
            p_value: report.fit.p_value,
            n_sup: report.split.n_sup,
        },
        thresholds,
    )
}
