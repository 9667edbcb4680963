//! Seasonal naive, autoregression and ARIMA(p, d, 0).

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ridge_least_squares;

pub const RIDGE_JITTER: f64 = 1e-8;

/// Forecast = the observation `m` steps back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalNaive {
    pub m: usize,
    /// The last `m` training observations.
    pub last_season: Vec<f64>,
}

impl SeasonalNaive {
    pub fn fit(m: usize, train: &[f64]) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("seasonal naive: season length must be at least 1".into()));
        }
        if train.len() < m {
            return Err(Error::too_short("seasonal naive training points", m, train.len()));
        }
        Ok(SeasonalNaive {
            m,
            last_season: train[train.len() - m..].to_vec(),
        })
    }

    pub fn predict(&self, context: &[f64]) -> f64 {
        context[context.len() - self.m]
    }
}

/// `ŷ_t = c + Σ φ_i y_{t−i}`, fitted by ordinary least squares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoRegression {
    pub p: usize,
    pub intercept: f64,
    /// `coefficients[i]` multiplies `y_{t−1−i}`.
    pub coefficients: Vec<f64>,
}

impl AutoRegression {
    pub fn fit(p: usize, fit_intercept: bool, series: &[f64]) -> Result<Self> {
        if p == 0 {
            return Err(Error::Config("autoregression: lag order must be at least 1".into()));
        }
        if series.len() < p + 2 {
            return Err(Error::too_short("autoregression training points", p + 2, series.len()));
        }
        let rows = series.len() - p;
        let offset = usize::from(fit_intercept);
        let cols = p + offset;
        let mut x = Array2::<f64>::zeros((rows, cols));
        let mut y = Array1::<f64>::zeros(rows);
        for r in 0..rows {
            let t = r + p;
            if fit_intercept {
                x[[r, 0]] = 1.0;
            }
            for i in 0..p {
                x[[r, offset + i]] = series[t - 1 - i];
            }
            y[r] = series[t];
        }
        let beta = ridge_least_squares(&x, &y, RIDGE_JITTER)?;
        Ok(AutoRegression {
            p,
            intercept: if fit_intercept { beta[0] } else { 0.0 },
            coefficients: beta.iter().skip(offset).copied().collect(),
        })
    }

    pub fn predict(&self, context: &[f64]) -> f64 {
        let n = context.len();
        self.intercept
            + self
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, c)| c * context[n - 1 - i])
                .sum::<f64>()
    }
}

/// AR(p) on the `d`-times differenced series, integrated back at prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arima {
    pub d: usize,
    pub ar: AutoRegression,
}

impl Arima {
    pub fn fit(p: usize, d: usize, q: usize, series: &[f64]) -> Result<Self> {
        if q > 0 {
            return Err(Error::Unsupported(format!(
                "ARIMA q = {q}: MA terms unsupported (only q = 0 is implemented)"
            )));
        }
        if d > 1 {
            return Err(Error::Unsupported(format!("ARIMA d = {d}: only d ∈ {{0, 1}} is supported")));
        }
        if series.len() < p + d + 2 {
            return Err(Error::too_short("ARIMA training points", p + d + 2, series.len()));
        }
        let diffed = difference(series, d);
        Ok(Arima {
            d,
            ar: AutoRegression::fit(p, true, &diffed)?,
        })
    }

    pub fn min_context(&self) -> usize {
        self.ar.p + self.d
    }

    pub fn predict(&self, context: &[f64]) -> f64 {
        let tail = &context[context.len() - self.min_context()..];
        let diffed = difference(tail, self.d);
        let step = self.ar.predict(&diffed);
        if self.d == 1 {
            context[context.len() - 1] + step
        } else {
            step
        }
    }
}

fn difference(series: &[f64], d: usize) -> Vec<f64> {
    let mut s = series.to_vec();
    for _ in 0..d {
        s = s.windows(2).map(|w| w[1] - w[0]).collect();
    }
    s
}
