use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("quantile of no values"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(sorted_quantile(&v, p))
}

fn sorted_quantile(v: &[f64], p: f64) -> f64 {
    let h = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub level: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Percentile bootstrap interval for the median.
pub fn bootstrap_median<R: Rng + ?Sized>(values: &[f64], resamples: usize, level: f64, rng: &mut R) -> Result<Interval> {
    if values.is_empty() {
        return Err(Error::Empty("bootstrap of no values"));
    }
    if !(0.0 < level && level < 1.0) || resamples == 0 {
        return Err(Error::Config(format!("bootstrap level {level}, {resamples} resamples")));
    }
    let n = values.len();
    let mut meds = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; n];
    for _ in 0..resamples {
        for b in buf.iter_mut() {
            *b = values[rng.gen_range(0..n)];
        }
        buf.sort_by(f64::total_cmp);
        meds.push(sorted_quantile(&buf, 0.5));
    }
    meds.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok(Interval { level, lo: sorted_quantile(&meds, tail), hi: sorted_quantile(&meds, 1.0 - tail) })
}

/// Least-squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the intercept from the residuals (0 for an exact fit).
    pub intercept_se: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain(format!("line fit through {} points", x.len().min(y.len()))));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("line fit with constant abscissa".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let intercept_se = if x.len() > 2 {
        (rss / (n - 2.0) * (1.0 / n + mx * mx / sxx)).sqrt()
    } else {
        0.0
    };
    Ok(LineFit { slope, intercept, intercept_se })
}
