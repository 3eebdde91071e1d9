use crate::model::Grid;
use crate::stencil::StencilCoefficients;

/// Outcome of the stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CflReport {
    pub dt: f64,
    pub dt_max: f64,
    pub ok: bool,
}

/// Largest stable leapfrog step for the given stencil:
/// `dt_max = 2 / (vmax sqrt(S (1/dx² + 1/dy² + 1/dz²)))` with
/// `S = |c0| + 2 Σ |c_k|`.
pub fn check_cfl(grid: &Grid, dt: f64, vmax: f64, coeffs: &StencilCoefficients) -> CflReport {
    let inv2 = 1.0 / (grid.dx * grid.dx) + 1.0 / (grid.dy * grid.dy) + 1.0 / (grid.dz * grid.dz);
    let dt_max = 2.0 / (vmax * (coeffs.abs_sum() * inv2).sqrt());
    CflReport {
        dt,
        dt_max,
        ok: dt > 0.0 && dt <= dt_max,
    }
}
