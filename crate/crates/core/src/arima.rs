//! ARIMA(1, 0, 0): an AR(1) model with intercept fit by least squares on a
//! trailing window and iterated for multi-step forecasts.

use crate::error::{Error, Result};

/// Minimum history accepted by [`fit_ar1`].
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArModel {
    pub intercept: f64,
    pub coefficient: f64,
    /// Number of points the model was fit on.
    pub fit_window: usize,
}

/// Least-squares fit of `n[t] = c + phi * n[t-1]` over the whole slice.
///
/// A lagged series with zero variance has no slope to estimate; the fit then
/// falls back to `phi = 0` and `c = mean of the targets`.
pub fn fit_ar1(history: &[f64]) -> Result<ArModel> {
    if history.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            available: history.len(),
        });
    }
    if history.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("AR(1) history holds a non-finite value".into()));
    }
    let lagged = &history[..history.len() - 1];
    let target = &history[1..];
    let n = lagged.len() as f64;
    let mean_x = lagged.iter().sum::<f64>() / n;
    let mean_y = target.iter().sum::<f64>() / n;
    let sxx: f64 = lagged.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = lagged
        .iter()
        .zip(target)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();

    let scale = lagged.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let (intercept, coefficient) = if sxx <= f64::EPSILON * scale * scale * n {
        (mean_y, 0.0)
    } else {
        let phi = sxy / sxx;
        (mean_y - phi * mean_x, phi)
    };
    Ok(ArModel {
        intercept,
        coefficient,
        fit_window: history.len(),
    })
}

impl ArModel {
    /// Iterates the recursion `horizon` steps from `last_value`.
    pub fn forecast(&self, last_value: f64, horizon: usize) -> Vec<f64> {
        std::iter::successors(Some(last_value), |prev| Some(self.intercept + self.coefficient * prev))
            .skip(1)
            .take(horizon)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;

    fn ar_series(c: f64, phi: f64, start: f64, len: usize, noise: Option<(f64, u64)>) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.map_or(0, |n| n.1));
        let normal = Normal::new(0.0, noise.map_or(1.0, |n| n.0)).unwrap();
        let mut out = vec![start];
        while out.len() < len {
            let e = if noise.is_some() { normal.sample(&mut rng) } else { 0.0 };
            out.push(c + phi * out.last().unwrap() + e);
        }
        out
    }

    #[test]
    fn constant_series_uses_degenerate_branch() {
        let m = fit_ar1(&[42.0; 10]).unwrap();
        assert_eq!(m.coefficient, 0.0);
        assert_eq!(m.intercept, 42.0);
        assert_eq!(m.forecast(42.0, 1), vec![42.0]);
    }

    #[test]
    fn noiseless_recovery() {
        let m = fit_ar1(&ar_series(5.0, 0.8, 100.0, 200, None)).unwrap();
        assert!((m.intercept - 5.0).abs() < 1e-9, "{m:?}");
        assert!((m.coefficient - 0.8).abs() < 1e-9, "{m:?}");
        assert_eq!(m.fit_window, 200);
    }

    #[test]
    fn noisy_recovery() {
        let m = fit_ar1(&ar_series(5.0, 0.8, 100.0, 200, Some((2.0, 4)))).unwrap();
        assert!((m.coefficient - 0.8).abs() < 0.05, "{m:?}");
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            fit_ar1(&[1.0, 2.0]),
            Err(Error::InsufficientData { needed: 3, available: 2 })
        ));
    }

    #[test]
    fn forecast_cases() {
        let memoryless = ArModel {
            intercept: 3.0,
            coefficient: 0.0,
            fit_window: 30,
        };
        assert_eq!(memoryless.forecast(99.0, 4), vec![3.0; 4]);
        let walk = ArModel {
            intercept: 0.0,
            coefficient: 1.0,
            fit_window: 30,
        };
        assert_eq!(walk.forecast(7.0, 3), vec![7.0; 3]);
        let m = ArModel {
            intercept: 5.0,
            coefficient: 0.8,
            fit_window: 30,
        };
        let f = m.forecast(10.0, 2);
        assert_eq!(f[0], 13.0);
        assert!((f[1] - 15.4).abs() < 1e-12);
    }

    #[test]
    fn long_horizon_converges_to_stationary_mean() {
        let m = ArModel {
            intercept: 5.0,
            coefficient: 0.8,
            fit_window: 30,
        };
        let f = m.forecast(1000.0, 500);
        assert!((f[499] - 25.0).abs() < 1e-6);
    }

    #[test]
    fn residuals_are_orthogonal_to_lag() {
        let data = ar_series(12.0, 0.6, 300.0, 60, Some((5.0, 9)));
        let m = fit_ar1(&data).unwrap();
        let scale = data.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let dot: f64 = data
            .windows(2)
            .map(|w| (w[1] - m.intercept - m.coefficient * w[0]) * w[0])
            .sum();
        let resid_sum: f64 = data
            .windows(2)
            .map(|w| w[1] - m.intercept - m.coefficient * w[0])
            .sum();
        assert!(dot.abs() < 1e-8 * scale * scale, "{dot}");
        assert!(resid_sum.abs() < 1e-8 * scale);
    }

    #[test]
    fn fit_is_pure() {
        let data = ar_series(1.0, 0.3, 50.0, 30, Some((1.0, 2)));
        assert_eq!(fit_ar1(&data).unwrap(), fit_ar1(&data).unwrap());
    }
}
