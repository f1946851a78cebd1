//! Continuous power-law tail fits.
//!
//! The exponent comes from the maximum-likelihood estimator
//! `α = 1 + n / Σ ln(x_i / x_min)` with standard error `(α − 1)/√n`. The
//! rank-size regression is kept only as a descriptive statistic; it is
//! biased as an exponent estimator and is never used for α.

use rand::Rng;
use rand_distr::{Distribution, Pareto};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const DEFAULT_BOOTSTRAP_TRIALS: usize = 1000;

pub fn mle_alpha(tail: &[f64], x_min: f64) -> Result<f64> {
    if tail.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if !(x_min > 0.0 && x_min.is_finite()) {
        return Err(Error::InvalidArgument(format!("x_min must be positive, got {x_min}")));
    }
    if let Some(&x) = tail.iter().find(|&&x| !(x >= x_min)) {
        return Err(Error::InvalidArgument(format!("tail value {x} is below x_min {x_min}")));
    }
    let log_sum: f64 = tail.iter().map(|x| (x / x_min).ln()).sum();
    if log_sum <= 0.0 {
        return Err(Error::InvalidArgument("every tail value equals x_min".into()));
    }
    Ok(1.0 + tail.len() as f64 / log_sum)
}

pub fn alpha_stderr(alpha: f64, n_tail: usize) -> Result<f64> {
    if !(alpha > 1.0 && alpha.is_finite()) || n_tail == 0 {
        return Err(Error::InvalidArgument(format!(
            "standard error needs alpha > 1 and a nonempty tail (alpha = {alpha}, n = {n_tail})"
        )));
    }
    Ok((alpha - 1.0) / (n_tail as f64).sqrt())
}

/// CDF of the continuous power law above `x_min`.
pub fn model_cdf(x: f64, alpha: f64, x_min: f64) -> f64 {
    if x <= x_min {
        0.0
    } else {
        1.0 - (x / x_min).powf(1.0 - alpha)
    }
}

/// Largest gap between the tail's empirical CDF and the fitted model CDF.
pub fn ks_distance(tail: &[f64], alpha: f64, x_min: f64) -> Result<f64> {
    if tail.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut sorted = tail.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = model_cdf(x, alpha, x_min);
            f64::max((i + 1) as f64 / n - f, f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Ok(d.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub sigma: f64,
    pub x_min: f64,
    pub n_tail: usize,
    pub ks_distance: f64,
    pub p_value: Option<f64>,
}

impl PowerLawFit {
    /// Fits α by maximum likelihood with `x_min` held fixed.
    pub fn fit(tail: &[f64], x_min: f64) -> Result<Self> {
        if tail.len() < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                got: tail.len(),
            });
        }
        let alpha = mle_alpha(tail, x_min)?;
        Ok(PowerLawFit {
            alpha,
            sigma: alpha_stderr(alpha, tail.len())?,
            x_min,
            n_tail: tail.len(),
            ks_distance: ks_distance(tail, alpha, x_min)?,
            p_value: None,
        })
    }
}

/// Semi-parametric bootstrap p-value for the fitted tail.
///
/// Each trial draws `tail.len() + body.len()` values: with probability
/// `tail.len() / total` from the fitted power law, otherwise uniformly from
/// `body`. The model draws form the synthetic tail (body values lie below
/// `x_min`), which is refit with `x_min` fixed. Since `x_min` is not
/// re-selected, only the number of body draws matters. The p-value is the
/// share of trials whose KS distance is at least the observed one. Trial `t`
/// uses its own stream derived from `(seed, t)`, so the result does not
/// depend on thread scheduling.
pub fn bootstrap_pvalue(tail: &[f64], body: &[f64], fit: &PowerLawFit, n_trials: usize, seed: u64) -> Result<f64> {
    if n_trials == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one trial".into()));
    }
    if tail.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let model = Pareto::new(fit.x_min, fit.alpha - 1.0)
        .map_err(|e| Error::InvalidArgument(format!("cannot sample fitted model: {e}")))?;
    let total = tail.len() + body.len();
    let p_tail = tail.len() as f64 / total as f64;

    let exceed = (0..n_trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng::stream(seed, Purpose::Bootstrap, trial);
            let mut synthetic: Vec<f64> = Vec::with_capacity(tail.len());
            for _ in 0..total {
                if rng.random::<f64>() < p_tail {
                    synthetic.push(model.sample(&mut rng));
                }
            }
            while synthetic.len() < 2 {
                synthetic.push(model.sample(&mut rng));
            }
            let alpha = mle_alpha(&synthetic, fit.x_min).unwrap_or(fit.alpha);
            let ks = ks_distance(&synthetic, alpha, fit.x_min).unwrap_or(1.0);
            ks >= fit.ks_distance
        })
        .filter(|&hit| hit)
        .count();
    Ok(exceed as f64 / n_trials as f64)
}

/// Alternative `x_min` chosen by minimizing the KS distance over the
/// observed magnitudes, with at least `min_tail` points in the tail. Offered
/// only as a cross-check on the kurtosis-selected level.
pub fn ks_min_xmin(magnitudes_desc: &[f64], min_tail: usize) -> Result<PowerLawFit> {
    let min_tail = min_tail.max(2);
    (min_tail..=magnitudes_desc.len())
        .filter(|&n| n == magnitudes_desc.len() || magnitudes_desc[n] < magnitudes_desc[n - 1])
        .filter_map(|n| PowerLawFit::fit(&magnitudes_desc[..n], magnitudes_desc[n - 1]).ok())
        .min_by(|a, b| a.ks_distance.total_cmp(&b.ks_distance).then(b.n_tail.cmp(&a.n_tail)))
        .ok_or(Error::TailTooSmall {
            min_tail,
            n_total: magnitudes_desc.len(),
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerRegression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Set when the magnitudes are all equal and R² is undefined.
    pub degenerate: bool,
}

impl PowerRegression {
    /// Fitted magnitude at `rank`.
    pub fn predict(&self, rank: usize) -> f64 {
        10f64.powf(self.intercept + self.slope * (rank as f64).log10())
    }
}

/// Least squares of log10(magnitude) on log10(rank).
pub fn rank_size_regression(points: &[(usize, f64)]) -> Result<PowerRegression> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: points.len(),
        });
    }
    if let Some(&(r, m)) = points.iter().find(|&&(r, m)| r == 0 || !(m > 0.0)) {
        return Err(Error::InvalidArgument(format!("rank {r} / magnitude {m} must be positive")));
    }
    let xs: Vec<f64> = points.iter().map(|&(r, _)| (r as f64).log10()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, m)| m.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("ranks must not all be equal".into()));
    }
    let degenerate = ys.iter().all(|&y| y == ys[0]);
    let slope = if degenerate { 0.0 } else { sxy / sxx };
    let r_squared = if degenerate {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(PowerRegression {
        slope,
        intercept: my - slope * mx,
        r_squared,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn alpha_exact_cases() {
        for n in [1, 7, 100] {
            assert_eq!(mle_alpha(&vec![E * 0.02; n], 0.02).unwrap(), 2.0);
            let a = mle_alpha(&vec![E.sqrt() * 0.02; n], 0.02).unwrap();
            assert!((a - 3.0).abs() < 1e-12, "{a}");
        }
    }

    #[test]
    fn alpha_error_paths() {
        assert!(mle_alpha(&[], 1.0).is_err());
        assert!(mle_alpha(&[0.5, 2.0], 1.0).is_err());
        assert!(mle_alpha(&[1.0, 1.0], 1.0).is_err());
        assert!(mle_alpha(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn stderr_printed_rows() {
        assert!((alpha_stderr(2.393, 170).unwrap() - 0.107).abs() <= 0.0005);
        assert!((alpha_stderr(2.147, 266).unwrap() - 0.070).abs() <= 0.0005);
        assert_eq!(alpha_stderr(2.0, 100).unwrap(), 0.1);
        assert!(alpha_stderr(1.0, 10).is_err());
        assert!(alpha_stderr(2.0, 0).is_err());
    }

    #[test]
    fn exact_power_data_regression() {
        let pts: Vec<(usize, f64)> = (1..=50).map(|r| (r, (r as f64).powf(-0.5))).collect();
        let reg = rank_size_regression(&pts).unwrap();
        assert!((reg.slope + 0.5).abs() < 1e-12);
        assert!(reg.intercept.abs() < 1e-12);
        assert!((reg.r_squared - 1.0).abs() < 1e-12);
        assert!(!reg.degenerate);
        assert!((reg.predict(4) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_magnitudes_are_degenerate() {
        let pts: Vec<(usize, f64)> = (1..=5).map(|r| (r, 0.03)).collect();
        let reg = rank_size_regression(&pts).unwrap();
        assert_eq!(reg.slope, 0.0);
        assert_eq!(reg.r_squared, 0.0);
        assert!(reg.degenerate);
    }

    #[test]
    fn regression_error_paths() {
        assert!(rank_size_regression(&[(1, 1.0), (2, 0.5)]).is_err());
        assert!(rank_size_regression(&[(1, 1.0), (2, 0.0), (3, 0.1)]).is_err());
    }

    #[test]
    fn ks_single_point_at_xmin() {
        let d = ks_distance(&[0.02], 2.5, 0.02).unwrap();
        assert_eq!(d, 1.0);
        assert!(ks_distance(&[], 2.5, 0.02).is_err());
    }

    #[test]
    fn fit_enforces_sigma_identity() {
        let tail = [0.05, 0.04, 0.1, 0.03, 0.2];
        let fit = PowerLawFit::fit(&tail, 0.03).unwrap();
        assert_eq!(fit.sigma, (fit.alpha - 1.0) / (fit.n_tail as f64).sqrt());
        assert!((0.0..=1.0).contains(&fit.ks_distance));
    }

    #[test]
    fn one_trial_gives_zero_or_one() {
        let tail = [0.05, 0.04, 0.1, 0.03, 0.2, 0.031, 0.07];
        let fit = PowerLawFit::fit(&tail, 0.03).unwrap();
        for seed in 0..10 {
            let p = bootstrap_pvalue(&tail, &[0.01, 0.02], &fit, 1, seed).unwrap();
            assert!(p == 0.0 || p == 1.0);
        }
        assert!(bootstrap_pvalue(&tail, &[], &fit, 0, 1).is_err());
    }
}
