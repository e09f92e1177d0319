//! Small summary-statistics helpers.

use serde::{Deserialize, Serialize};

/// Poissonian counting error `√N`.
pub fn poisson_sigma(count: f64) -> f64 {
    count.max(0.0).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); `None` below two samples.
pub fn std_dev(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Location and spread of one scalar quantity across measurement sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityStats {
    pub count: usize,
    pub mean: f64,
    /// Spread of the per-set values.
    pub std_dev: Option<f64>,
    /// `std_dev / √count`.
    pub std_error: Option<f64>,
    /// Inverse-variance weighted mean of the per-set values.
    pub weighted_mean: Option<f64>,
    pub weighted_error: Option<f64>,
    /// Mean of the per-set propagated uncertainties.
    pub mean_sigma: f64,
    /// `mean / std_error`.
    pub z_score: Option<f64>,
}

impl QuantityStats {
    pub fn from_values(values: &[f64], sigmas: &[f64]) -> QuantityStats {
        assert_eq!(values.len(), sigmas.len());
        assert!(!values.is_empty());
        let count = values.len();
        let m = mean(values);
        let sd = std_dev(values);
        let se = sd.map(|s| s / (count as f64).sqrt());
        let (weighted_mean, weighted_error) = if sigmas.iter().all(|s| *s > 0.0) {
            let w: Vec<f64> = sigmas.iter().map(|s| 1.0 / (s * s)).collect();
            let wsum: f64 = w.iter().sum();
            let wm = values.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / wsum;
            (Some(wm), Some(wsum.sqrt().recip()))
        } else {
            (None, None)
        };
        QuantityStats {
            count,
            mean: m,
            std_dev: sd,
            std_error: se,
            weighted_mean,
            weighted_error,
            mean_sigma: mean(sigmas),
            z_score: se.filter(|s| *s > 0.0).map(|s| m / s),
        }
    }
}
