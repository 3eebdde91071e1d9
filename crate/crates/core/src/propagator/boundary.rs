use crate::model::{Field3D, Grid, Shape, Unit};

use super::state::WaveState;

/// Exponent `(β·nb)²` reached at the outermost boundary point. The factor
/// is applied every step, so a gentle profile absorbs best.
pub const DEFAULT_EDGE_EXPONENT: f64 = 0.06;

/// Separable damping weights `w = wx[ix]·wy[iy]·wz[iz]` over the extended
/// grid. Each factor is `exp(-(β·e)²)`, with `e` the number of points into
/// the boundary layer and `β = sqrt(edge_exponent)/nb`.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingTaper {
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    pub wz: Vec<f64>,
}

fn profile(n: usize, lo: usize, hi: usize, nb: usize, edge_exponent: f64) -> Vec<f64> {
    let beta = if nb == 0 { 0.0 } else { edge_exponent.sqrt() / nb as f64 };
    (0..lo + n + hi)
        .map(|i| {
            let e = if i < lo {
                lo - i
            } else if i >= lo + n {
                i + 1 - (lo + n)
            } else {
                0
            };
            (-(beta * e as f64).powi(2)).exp()
        })
        .collect()
}

impl DampingTaper {
    pub fn new(grid: &Grid, edge_exponent: f64) -> Self {
        let nb = grid.nb;
        DampingTaper {
            wx: profile(grid.nx, nb, nb, nb, edge_exponent),
            wy: profile(grid.ny, nb, nb, nb, edge_exponent),
            wz: profile(grid.nz, grid.top_pad(), nb, nb, edge_exponent),
        }
    }

    /// A taper that leaves every point untouched.
    pub fn identity(shape: Shape) -> Self {
        DampingTaper {
            wx: vec![1.0; shape.nx],
            wy: vec![1.0; shape.ny],
            wz: vec![1.0; shape.nz],
        }
    }

    pub fn shape(&self) -> Shape {
        Shape::new(self.wx.len(), self.wy.len(), self.wz.len())
    }

    #[inline]
    pub fn at(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.wx[ix] * self.wy[iy] * self.wz[iz]
    }

    pub fn to_field(&self) -> Field3D {
        Field3D::from_fn(self.shape(), Unit::Dimensionless, |ix, iy, iz| self.at(ix, iy, iz))
    }
}

/// Default damping profile of a grid.
pub fn damping_taper(grid: &Grid) -> DampingTaper {
    DampingTaper::new(grid, DEFAULT_EDGE_EXPONENT)
}

/// Multiplies both time levels by the taper.
pub fn apply_damping(state: &mut WaveState, taper: &Field3D) {
    let layout = *state.layout();
    let ext = layout.extended();
    assert_eq!(taper.shape(), ext, "taper shape must match the extended grid");
    for ix in 0..ext.nx {
        for iy in 0..ext.ny {
            let row = layout.row_start(ix, iy);
            for iz in 0..ext.nz {
                let w = taper.get(ix, iy, iz);
                state.prev[row + iz] *= w;
                state.curr[row + iz] *= w;
            }
        }
    }
}

/// Zeroes the top plane of the current field and mirrors it with opposite
/// sign into the halo above.
pub fn apply_free_surface(state: &mut WaveState) {
    let layout = *state.layout();
    layout.mirror_top(&mut state.curr);
}
