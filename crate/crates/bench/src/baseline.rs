//! Seasonal-naive reference forecaster.

use gpfc_core::{Error as CoreError, Forecast, Standardizer, TimeSeries};

use crate::error::Result;

/// Smallest predictive variance, in standardized units.
const MIN_VARIANCE: f64 = 1e-12;

/// Repeats the last observed season. The one-season-ahead variance is the
/// mean squared in-sample seasonal difference; it grows linearly with the
/// number of seasons ahead. With exactly one season of data there are no
/// differences and the sample variance is used instead.
pub fn seasonal_naive(ts: &TimeSeries, horizon: usize) -> Result<Forecast> {
    if horizon == 0 {
        return Err(CoreError::EmptyHorizon.into());
    }
    ts.frequency.validate()?;
    let m = ts.frequency.season_length();
    if ts.len() < m {
        return Err(CoreError::TooFewPoints {
            required: m,
            got: ts.len(),
        }
        .into());
    }
    let standardizer = Standardizer::fit(&ts.values)?;
    let z = standardizer.transform_all(&ts.values);
    let n = z.len();

    let one_season = if n > m {
        (m..n).map(|t| (z[t] - z[t - m]).powi(2)).sum::<f64>() / (n - m) as f64
    } else {
        // population variance of standardized values
        1.0
    };
    let last_season = &z[n - m..];
    let mut mean = Vec::with_capacity(horizon);
    let mut variance = Vec::with_capacity(horizon);
    for h in 1..=horizon {
        mean.push(last_season[(h - 1) % m]);
        let seasons_ahead = ((h - 1) / m + 1) as f64;
        variance.push((one_season * seasons_ahead).max(MIN_VARIANCE));
    }
    Ok(Forecast::from_standardized(
        ts,
        standardizer,
        mean,
        variance,
    )?)
}
