//! Kurtosis sweep over growing inferior subsets and critical-level selection.
//!
//! Candidate cutoffs are the observed magnitudes. For a cutoff `v` the
//! inferior segment is every magnitude strictly below `v` and the superior
//! segment every magnitude at or above it, so the critical event itself is
//! the smallest member of the tail.

use std::cmp::Reverse;

use serde::Serialize;

use crate::drawdown::DrawdownSet;
use crate::error::{Error, Result};
use crate::series::excess_kurtosis;

pub const DEFAULT_MIN_SEGMENT: usize = 20;
pub const DEFAULT_MIN_TAIL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub cutoff_value: f64,
    pub n_inferior: usize,
    pub k_inferior: f64,
}

/// Excess kurtosis of the inferior segment at every distinct magnitude,
/// ascending. Cutoffs whose inferior segment is smaller than `min_segment`
/// or has zero variance are not evaluated.
pub fn kurtosis_sweep(set: &DrawdownSet, min_segment: usize) -> Result<Vec<SweepPoint>> {
    if min_segment < 4 {
        return Err(Error::InvalidArgument(format!(
            "min_segment must be at least 4, got {min_segment}"
        )));
    }
    let ascending = set.ascending();
    let points: Vec<SweepPoint> = (min_segment..ascending.len())
        .filter(|&i| ascending[i] != ascending[i - 1])
        .filter_map(|i| {
            excess_kurtosis(&ascending[..i]).ok().map(|k| SweepPoint {
                cutoff_value: ascending[i],
                n_inferior: i,
                k_inferior: k,
            })
        })
        .collect();
    if points.is_empty() {
        return Err(Error::TooFewPoints {
            needed: min_segment + 1,
            got: ascending.len(),
        });
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSplit {
    pub x_min: f64,
    pub x_max: f64,
    pub n_total: usize,
    pub n_sup: usize,
    pub n_inf: usize,
    pub k_tot: f64,
    /// NaN when the tail has zero variance or fewer than four points.
    pub k_sup: f64,
    pub k_inf: f64,
    pub pct_sup: f64,
}

impl CriticalSplit {
    /// Superior segment, deepest first.
    pub fn tail<'a>(&self, set: &'a DrawdownSet) -> &'a [f64] {
        &set.magnitudes[..self.n_sup]
    }

    /// Inferior segment, deepest first.
    pub fn body<'a>(&self, set: &'a DrawdownSet) -> &'a [f64] {
        &set.magnitudes[self.n_sup..]
    }
}

/// Picks the cutoff with inferior kurtosis closest to zero among those
/// leaving at least `min_tail` magnitudes in the superior segment.
/// Ties go to the larger inferior segment, then the smaller cutoff.
pub fn select_critical(sweep: &[SweepPoint], set: &DrawdownSet, min_tail: usize) -> Result<CriticalSplit> {
    let n_total = set.n_total;
    let min_tail = min_tail.max(1);
    let best = sweep
        .iter()
        .filter(|p| n_total.saturating_sub(p.n_inferior) >= min_tail)
        .min_by(|a, b| {
            a.k_inferior
                .abs()
                .total_cmp(&b.k_inferior.abs())
                .then_with(|| Reverse(a.n_inferior).cmp(&Reverse(b.n_inferior)))
                .then_with(|| a.cutoff_value.total_cmp(&b.cutoff_value))
        })
        .ok_or(Error::TailTooSmall { min_tail, n_total })?;

    let n_inf = best.n_inferior;
    let n_sup = n_total - n_inf;
    let tail = &set.magnitudes[..n_sup];
    Ok(CriticalSplit {
        x_min: best.cutoff_value,
        x_max: set.magnitudes[0],
        n_total,
        n_sup,
        n_inf,
        k_tot: excess_kurtosis(&set.magnitudes).unwrap_or(f64::NAN),
        k_sup: excess_kurtosis(tail).unwrap_or(f64::NAN),
        k_inf: best.k_inferior,
        pct_sup: n_sup as f64 / n_total as f64,
    })
}

pub fn find_critical(set: &DrawdownSet, min_segment: usize, min_tail: usize) -> Result<(Vec<SweepPoint>, CriticalSplit)> {
    let sweep = kurtosis_sweep(set, min_segment)?;
    let split = select_critical(&sweep, set, min_tail)?;
    Ok((sweep, split))
}

/// Columns a–i of the parameter table. Depths are signed (≤ 0), as printed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitColumns {
    pub n_tot: usize,
    pub n_sup: usize,
    pub n_inf: usize,
    pub pct_sup: f64,
    pub k_tot: f64,
    pub k_sup: f64,
    pub k_inf: f64,
    pub x_max: f64,
    pub x_min: f64,
}

pub fn split_report(split: &CriticalSplit) -> SplitColumns {
    let n_tot = split.n_sup + split.n_inf;
    SplitColumns {
        n_tot,
        n_sup: split.n_sup,
        n_inf: split.n_inf,
        pct_sup: split.n_sup as f64 / n_tot as f64,
        k_tot: split.k_tot,
        k_sup: split.k_sup,
        k_inf: split.k_inf,
        x_max: -split.x_max,
        x_min: -split.x_min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drawdown::DepthUnit;

    fn set(values: &[f64]) -> DrawdownSet {
        DrawdownSet::from_magnitudes(values.to_vec(), DepthUnit::Relative)
    }

    fn split(n_sup: usize, n_inf: usize) -> CriticalSplit {
        CriticalSplit {
            x_min: 0.0281,
            x_max: 0.4691,
            n_total: n_sup + n_inf,
            n_sup,
            n_inf,
            k_tot: 31.442,
            k_sup: 12.022,
            k_inf: -0.002,
            pct_sup: n_sup as f64 / (n_sup + n_inf) as f64,
        }
    }

    #[test]
    fn too_few_magnitudes() {
        assert!(matches!(
            kurtosis_sweep(&set(&[0.1, 0.2, 0.3]), 4),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(matches!(kurtosis_sweep(&set(&[0.1; 30]), 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sweep_skips_repeated_cutoffs() {
        let values: Vec<f64> = (1..=10).map(|i| (i / 2) as f64).collect();
        let sweep = kurtosis_sweep(&set(&values), 4).unwrap();
        let cutoffs: Vec<f64> = sweep.iter().map(|p| p.cutoff_value).collect();
        assert_eq!(cutoffs, vec![3.0, 4.0, 5.0]);
        assert_eq!(sweep.iter().map(|p| p.n_inferior).collect::<Vec<_>>(), vec![5, 7, 9]);
    }

    #[test]
    fn min_tail_larger_than_set() {
        let values: Vec<f64> = (1..=30).map(f64::from).collect();
        let s = set(&values);
        let sweep = kurtosis_sweep(&s, 4).unwrap();
        assert_eq!(
            select_critical(&sweep, &s, 31),
            Err(Error::TailTooSmall { min_tail: 31, n_total: 30 })
        );
    }

    #[test]
    fn tie_prefers_larger_inferior_set() {
        let sweep = [
            SweepPoint { cutoff_value: 3.0, n_inferior: 5, k_inferior: 0.1 },
            SweepPoint { cutoff_value: 4.0, n_inferior: 6, k_inferior: -0.1 },
            SweepPoint { cutoff_value: 5.0, n_inferior: 7, k_inferior: 0.5 },
        ];
        let s = set(&[1.0, 1.5, 2.0, 2.5, 2.8, 3.0, 4.0, 5.0, 6.0, 7.0]);
        let chosen = select_critical(&sweep, &s, 1).unwrap();
        assert_eq!(chosen.x_min, 4.0);
        assert_eq!(chosen.n_inf, 6);
        assert_eq!(chosen.n_sup, 4);
    }

    #[test]
    fn partition_and_critical_event_in_tail() {
        let values: Vec<f64> = (1..=60).map(|i| (i as f64).powf(1.7)).collect();
        let s = set(&values);
        let (_, split) = find_critical(&s, 20, 10).unwrap();
        assert_eq!(split.n_sup + split.n_inf, split.n_total);
        assert!(split.tail(&s).iter().all(|&m| m >= split.x_min));
        assert!(split.body(&s).iter().all(|&m| m < split.x_min));
        assert_eq!(*split.tail(&s).last().unwrap(), split.x_min);
    }

    #[test]
    fn split_columns_match_printed_rows() {
        let sp = split_report(&split(170, 526));
        assert_eq!(sp.n_tot, 696);
        assert!((sp.pct_sup * 100.0 - 24.43).abs() < 0.005);
        assert_eq!(sp.x_min, -0.0281);

        let dj = split_report(&split(266, 881));
        assert_eq!(dj.n_tot, 1147);
        assert!((dj.pct_sup * 100.0 - 23.19).abs() < 0.005);
    }

    #[test]
    fn minimal_split_echoes_inputs() {
        let s = split(1, 20);
        let cols = split_report(&s);
        assert_eq!((cols.n_sup, cols.n_inf, cols.n_tot), (1, 20, 21));
        assert_eq!(cols.k_tot, s.k_tot);
        assert_eq!(cols.k_sup, s.k_sup);
        assert_eq!(cols.k_inf, s.k_inf);
        assert_eq!(cols.x_max, -s.x_max);
    }
}
