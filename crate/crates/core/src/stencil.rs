//! Central finite-difference coefficients for the second derivative.

use crate::{Error, Result};

/// Largest supported stencil half-width.
pub const MAX_HALF_WIDTH: usize = 8;

/// Coefficients `c[0..=h]` of the order-`2h` central second-derivative
/// approximation `f''(x) ≈ (c0 f(x) + Σ c_k (f(x+kd) + f(x-kd))) / d²`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilCoefficients {
    coeffs: Vec<f64>,
}

impl StencilCoefficients {
    pub fn half_width(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `c[0]` is the centre weight, `c[k]` the weight at offset `±k`.
    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn center(&self) -> f64 {
        self.coeffs[0]
    }

    /// `|c0| + 2 Σ |c_k|`, the symbol bound used by the stability check.
    pub fn abs_sum(&self) -> f64 {
        self.coeffs[0].abs() + 2.0 * self.coeffs[1..].iter().map(|c| c.abs()).sum::<f64>()
    }

    /// Applies the stencil to a 1-D sample sequence at `index` (unit spacing).
    pub fn apply_1d(&self, samples: &[f64], index: usize) -> f64 {
        let h = self.half_width();
        assert!(index >= h && index + h < samples.len(), "stencil leaves the sequence");
        let mut acc = self.coeffs[0] * samples[index];
        for k in 1..=h {
            acc += self.coeffs[k] * (samples[index + k] + samples[index - k]);
        }
        acc
    }
}

/// Builds the central second-derivative stencil of order `2 * half_width`.
///
/// Uses the closed form `c_k = 2 (-1)^(k+1) (h!)² / (k² (h-k)! (h+k)!)` and
/// `c_0 = -2 Σ c_k`.
pub fn fd_coefficients(half_width: usize) -> Result<StencilCoefficients> {
    if !(1..=MAX_HALF_WIDTH).contains(&half_width) {
        return Err(Error::InvalidArgument(format!(
            "stencil half-width must be in 1..={MAX_HALF_WIDTH}, got {half_width}"
        )));
    }
    let h = half_width;
    let mut coeffs = vec![0.0; h + 1];
    for k in 1..=h {
        // (h!)² / ((h-k)! (h+k)!) = Π_{j=1..k} (h-k+j) / (h+j)
        let ratio: f64 = (1..=k).map(|j| (h - k + j) as f64 / (h + j) as f64).product();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        coeffs[k] = sign * 2.0 * ratio / (k * k) as f64;
    }
    coeffs[0] = -2.0 * coeffs[1..].iter().sum::<f64>();
    Ok(StencilCoefficients { coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_stencil() {
        let c = fd_coefficients(1).unwrap();
        assert_eq!(c.as_slice(), &[-2.0, 1.0]);
    }

    #[test]
    fn rejects_unsupported_width() {
        assert!(fd_coefficients(0).is_err());
        assert!(fd_coefficients(9).is_err());
    }

    #[test]
    fn exact_on_quadratic() {
        for h in 1..=MAX_HALF_WIDTH {
            let c = fd_coefficients(h).unwrap();
            let xs: Vec<f64> = (0..2 * h + 1).map(|i| (i as f64).powi(2)).collect();
            assert!((c.apply_1d(&xs, h) - 2.0).abs() < 1e-10, "h={h}");
            let ones = vec![1.0; 2 * h + 1];
            assert!(c.apply_1d(&ones, h).abs() < 1e-13);
        }
    }

    #[test]
    fn eighth_order_abs_sum() {
        let c = fd_coefficients(4).unwrap();
        let expected = 205.0 / 72.0 + 2.0 * (8.0 / 5.0 + 1.0 / 5.0 + 8.0 / 315.0 + 1.0 / 560.0);
        assert!((c.abs_sum() - expected).abs() < 1e-13);
        assert!((c.abs_sum() - 6.5016).abs() < 1e-4);
    }
}
