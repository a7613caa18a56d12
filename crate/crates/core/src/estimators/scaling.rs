use serde::Serialize;

use crate::error::{Error, Result};

/// A linear growth rate fitted through the tail of a finite grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingEstimate {
    /// `(size, value)` with sizes strictly increasing.
    pub samples: Vec<(f64, f64)>,
    /// Least-squares slope of value against size over the tail half.
    pub fitted_rate: f64,
    pub intercept: f64,
    /// Root-mean-square relative deviation of the tail from the fitted line.
    pub residual: f64,
    /// Values are non-decreasing in size.
    pub monotone: bool,
}

impl ScalingEstimate {
    /// Fits `samples`. A single sample gives the ratio `value / size`.
    ///
    /// The tail is the second half of the grid, widened to three points when
    /// the grid has at least three, so that the residual is informative.
    pub fn fit(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("cannot fit an empty grid"));
        }
        if samples
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::domain("non-finite sample"));
        }
        if samples.windows(2).any(|p| p[1].0 <= p[0].0) {
            return Err(Error::domain("sample sizes must be strictly increasing"));
        }
        if samples[0].0 <= 0.0 {
            return Err(Error::domain("sample sizes must be positive"));
        }
        let monotone = samples.windows(2).all(|p| p[1].1 >= p[0].1);
        if samples.len() == 1 {
            let (x, y) = samples[0];
            return Ok(ScalingEstimate {
                samples,
                fitted_rate: y / x,
                intercept: 0.0,
                residual: 0.0,
                monotone,
            });
        }
        let len = samples.len();
        let start = (len / 2).min(len.saturating_sub(3));
        let tail = &samples[start..];
        let (slope, intercept) = least_squares(tail);
        let residual = (tail
            .iter()
            .map(|(x, y)| {
                let d = y - (slope * x + intercept);
                if y.abs() > 1e-12 {
                    (d / y).powi(2)
                } else {
                    d * d
                }
            })
            .sum::<f64>()
            / tail.len() as f64)
            .sqrt();
        Ok(ScalingEstimate {
            samples,
            fitted_rate: slope,
            intercept,
            residual,
            monotone,
        })
    }

    /// Value divided by size at the largest size.
    pub fn terminal_ratio(&self) -> f64 {
        let (x, y) = *self.samples.last().expect("non-empty");
        y / x
    }
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Mean and standard error of the mean.
pub fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `|a − b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_gap(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}
