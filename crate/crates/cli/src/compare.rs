//! Kinetic-versus-characteristics probe comparison.

use std::fmt;

use thiserror::Error;

use crate::simulate::ProbeSeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompareError {
    #[error("series at x = {0} m is empty")]
    Empty(f64),
    #[error("series do not overlap in time")]
    NoOverlap,
    #[error("probes sit at different abscissae: {0} m and {1} m")]
    ProbeMismatch(f64, f64),
}

/// Where the valve starts moving and where it has finished.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CompareWindow {
    /// Start of the search for the first head extremum.
    pub onset: f64,
    /// Start of the window used for the oscillation period.
    pub settled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub probe_x: f64,
    pub linf_head_error: f64,
    pub l2_head_error: f64,
    pub linf_discharge_error: f64,
    pub kinetic_period: Option<f64>,
    pub moc_period: Option<f64>,
    pub first_peak_kinetic: Option<f64>,
    pub first_peak_moc: Option<f64>,
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("absent".to_string(), |v| format!("{v:.6}"));
        writeln!(f, "probe_x_m = {}", self.probe_x)?;
        writeln!(f, "linf_head_error_m = {:.6}", self.linf_head_error)?;
        writeln!(f, "l2_head_error_m = {:.6}", self.l2_head_error)?;
        writeln!(f, "linf_discharge_error_m3s = {:.6}", self.linf_discharge_error)?;
        writeln!(f, "kinetic_period_s = {}", opt(self.kinetic_period))?;
        writeln!(f, "moc_period_s = {}", opt(self.moc_period))?;
        writeln!(f, "first_peak_kinetic_m = {}", opt(self.first_peak_kinetic))?;
        writeln!(f, "first_peak_moc_m = {}", opt(self.first_peak_moc))
    }
}

fn median_spacing(times: &[f64]) -> f64 {
    let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return 0.0;
    }
    gaps.sort_by(f64::total_cmp);
    gaps[gaps.len() / 2]
}

/// Linear interpolation of `(times, values)` at `t` inside the sampled range.
pub fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let k = times.partition_point(|&s| s <= t);
    if k == 0 {
        return values[0];
    }
    if k == times.len() {
        return values[k - 1];
    }
    let w = (t - times[k - 1]) / (times[k] - times[k - 1]);
    values[k - 1] + w * (values[k] - values[k - 1])
}

/// Median spacing of upward crossings of the mean over `t ≥ from`. Needs at
/// least two crossings, that is one full period inside the window.
pub fn oscillation_period(times: &[f64], values: &[f64], from: f64) -> Option<f64> {
    let start = times.partition_point(|&t| t < from);
    let (times, values) = (&times[start..], &values[start..]);
    if values.len() < 3 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let crossings: Vec<f64> = (1..values.len())
        .filter(|&k| values[k - 1] < mean && values[k] >= mean)
        .map(|k| times[k - 1] + (mean - values[k - 1]) / (values[k] - values[k - 1]) * (times[k] - times[k - 1]))
        .collect();
    if crossings.len() < 2 {
        return None;
    }
    Some(median_spacing(&crossings))
}

/// First extremum over `t ≥ from`. The signal must first leave its starting
/// value by 5% of its total range; the extremum is the running maximum (or
/// minimum) in that direction at the moment the signal retreats from it by
/// the same margin.
pub fn first_extremum(times: &[f64], values: &[f64], from: f64) -> Option<f64> {
    let start = times.partition_point(|&t| t < from);
    let values = &values[start..];
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let threshold = 0.05 * (hi - lo);
    if !(threshold > 0.0) {
        return None;
    }
    let origin = values[0];
    let departure = values.iter().position(|v| (v - origin).abs() > threshold)?;
    let sign = (values[departure] - origin).signum();
    let mut extreme = values[departure];
    for &v in &values[departure..] {
        if sign * (v - extreme) > 0.0 {
            extreme = v;
        } else if sign * (extreme - v) > threshold {
            return Some(extreme);
        }
    }
    None
}

/// Compares two probe histories on the coarser of the two time grids.
pub fn compare_series(
    kinetic: &ProbeSeries,
    moc: &ProbeSeries,
    window: CompareWindow,
) -> Result<ComparisonReport, CompareError> {
    for s in [kinetic, moc] {
        if s.times.is_empty() {
            return Err(CompareError::Empty(s.x));
        }
    }
    if kinetic.x != moc.x {
        return Err(CompareError::ProbeMismatch(kinetic.x, moc.x));
    }
    let t0 = kinetic.times[0].max(moc.times[0]);
    let t1 = kinetic.times[kinetic.times.len() - 1].min(moc.times[moc.times.len() - 1]);
    if t1 < t0 {
        return Err(CompareError::NoOverlap);
    }
    let (kh, kq, mh, mq) = (kinetic.heads(), kinetic.discharges(), moc.heads(), moc.discharges());
    let spacing = |s: &ProbeSeries| median_spacing(&s.times);
    let grid_source = if spacing(kinetic) >= spacing(moc) { kinetic } else { moc };
    let grid: Vec<f64> = grid_source.times.iter().copied().filter(|&t| t >= t0 && t <= t1).collect();
    let grid = if grid.is_empty() { vec![t0] } else { grid };

    let (mut linf_h, mut sum_h, mut linf_q) = (0.0f64, 0.0, 0.0f64);
    for &t in &grid {
        let dh = interpolate(&kinetic.times, &kh, t) - interpolate(&moc.times, &mh, t);
        let dq = interpolate(&kinetic.times, &kq, t) - interpolate(&moc.times, &mq, t);
        linf_h = linf_h.max(dh.abs());
        sum_h += dh * dh;
        linf_q = linf_q.max(dq.abs());
    }
    Ok(ComparisonReport {
        probe_x: kinetic.x,
        linf_head_error: linf_h,
        l2_head_error: (sum_h / grid.len() as f64).sqrt(),
        linf_discharge_error: linf_q,
        kinetic_period: oscillation_period(&kinetic.times, &kh, window.settled),
        moc_period: oscillation_period(&moc.times, &mh, window.settled),
        first_peak_kinetic: first_extremum(&kinetic.times, &kh, window.onset),
        first_peak_moc: first_extremum(&moc.times, &mh, window.onset),
    })
}
