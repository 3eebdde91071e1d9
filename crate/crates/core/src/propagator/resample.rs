use std::f64::consts::PI;

use crate::{Error, Result};

/// Half-width, in input samples, of the windowed-sinc kernel.
pub const SINC_HALF_WIDTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Nearest,
    Sinc,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn hann(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * x).cos())
    }
}

/// Number of output samples covering the input span.
pub fn resampled_len(len: usize, dt_in: f64, dt_out: f64) -> usize {
    if len == 0 {
        return 0;
    }
    let span = (len - 1) as f64 * dt_in / dt_out;
    // tolerate round-off in ratios such as 0.002/0.001
    (span + 1e-9).floor() as usize + 1
}

/// Resamples a trace from `dt_in` to `dt_out`.
///
/// `Nearest` picks `x[round(t/dt_in)]`; `Sinc` reconstructs with a
/// Hann-windowed sinc of half-width [`SINC_HALF_WIDTH`], treating samples
/// beyond the ends as zero.
pub fn interpolate_trace(trace: &[f64], dt_in: f64, dt_out: f64, mode: Interpolation) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::InvalidArgument("cannot resample an empty trace".into()));
    }
    if !(dt_in > 0.0 && dt_out > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling intervals must be positive, got {dt_in} and {dt_out}"
        )));
    }
    let n_out = resampled_len(trace.len(), dt_in, dt_out);
    let ratio = dt_out / dt_in;
    let last = trace.len() - 1;
    let out = (0..n_out)
        .map(|j| {
            let u = j as f64 * ratio;
            let nearest = (u.round() as usize).min(last);
            match mode {
                Interpolation::Nearest => trace[nearest],
                Interpolation::Sinc if (u - u.round()).abs() < 1e-9 => trace[nearest],
                Interpolation::Sinc => {
                    let hw = SINC_HALF_WIDTH as f64;
                    let lo = (u - hw).ceil().max(0.0) as usize;
                    let hi = ((u + hw).floor() as usize).min(last);
                    (lo..=hi)
                        .map(|k| {
                            let x = u - k as f64;
                            trace[k] * sinc(x) * hann(x / hw)
                        })
                        .sum()
                }
            }
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_sampling_is_identity() {
        let x: Vec<f64> = (0..37).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        for mode in [Interpolation::Nearest, Interpolation::Sinc] {
            assert_eq!(interpolate_trace(&x, 0.004, 0.004, mode).unwrap(), x);
        }
    }

    #[test]
    fn nearest_decimation() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = interpolate_trace(&x, 0.001, 0.002, Interpolation::Nearest).unwrap();
        assert_eq!(y, vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert_eq!(resampled_len(10, 0.001, 0.002), 5);
    }

    #[test]
    fn sinc_upsampling_of_sine() {
        let dt = 1.0;
        let f = 0.1 / dt;
        let x: Vec<f64> = (0..200).map(|i| (2.0 * PI * f * i as f64).sin()).collect();
        let y = interpolate_trace(&x, dt, dt / 2.0, Interpolation::Sinc).unwrap();
        assert_eq!(y.len(), 399);
        let margin = 2 * SINC_HALF_WIDTH;
        let err = y[margin..y.len() - margin]
            .iter()
            .enumerate()
            .map(|(j, v)| (v - (2.0 * PI * f * (j + margin) as f64 * 0.5).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-2, "max error {err}");
    }

    #[test]
    fn empty_trace_rejected() {
        assert!(interpolate_trace(&[], 1.0, 1.0, Interpolation::Sinc).is_err());
    }
}
