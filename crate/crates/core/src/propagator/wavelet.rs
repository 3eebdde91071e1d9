use std::f64::consts::PI;

use crate::{Error, Result};

/// Sampled source signature.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceWavelet {
    pub samples: Vec<f64>,
    pub dt: f64,
    pub fpeak: f64,
    pub amplitude: f64,
}

impl SourceWavelet {
    /// Wraps samples read from a file; `fpeak` and `amplitude` are
    /// informational.
    pub fn from_samples(samples: Vec<f64>, dt: f64, fpeak: f64, amplitude: f64) -> Self {
        SourceWavelet {
            samples,
            dt,
            fpeak,
            amplitude,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample `n`, zero past the end.
    #[inline]
    pub fn sample(&self, n: usize) -> f64 {
        self.samples.get(n).copied().unwrap_or(0.0)
    }
}

/// Ricker wavelet delayed by `1/fpeak`:
/// `f(t) = A (1 - 2π²f²(t-t0)²) exp(-π²f²(t-t0)²)`.
pub fn ricker(ns: usize, dt: f64, fpeak: f64, amplitude: f64) -> Result<SourceWavelet> {
    if !(fpeak > 0.0 && fpeak.is_finite()) {
        return Err(Error::InvalidArgument(format!("fpeak must be positive, got {fpeak}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if fpeak * dt >= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "source undersampled: fpeak*dt = {} must stay below 0.5",
            fpeak * dt
        )));
    }
    let t0 = 1.0 / fpeak;
    let samples = (0..ns)
        .map(|n| {
            let a = (PI * fpeak * (n as f64 * dt - t0)).powi(2);
            amplitude * (1.0 - 2.0 * a) * (-a).exp()
        })
        .collect();
    Ok(SourceWavelet {
        samples,
        dt,
        fpeak,
        amplitude,
    })
}
