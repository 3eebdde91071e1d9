use crate::model::{Field3D, Shape, Unit};

/// Maps the extended grid into arrays padded by a stencil halo on every side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    ext: Shape,
    halo: usize,
    padded: Shape,
}

impl Layout {
    pub fn new(ext: Shape, halo: usize) -> Self {
        Layout {
            ext,
            halo,
            padded: Shape::new(ext.nx + 2 * halo, ext.ny + 2 * halo, ext.nz + 2 * halo),
        }
    }

    pub fn extended(&self) -> Shape {
        self.ext
    }

    pub fn halo(&self) -> usize {
        self.halo
    }

    pub fn padded(&self) -> Shape {
        self.padded
    }

    /// Padded offset of extended node `(ix, iy, iz)`.
    #[inline]
    pub fn padded_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        self.padded.index(ix + self.halo, iy + self.halo, iz + self.halo)
    }

    /// Padded offset of the first interior sample of row `(ix, iy)`.
    #[inline]
    pub fn row_start(&self, ix: usize, iy: usize) -> usize {
        self.padded_index(ix, iy, 0)
    }

    /// Copies the extended part of a padded array into `out`.
    pub fn extract(&self, padded: &[f64], out: &mut [f64]) {
        let nz = self.ext.nz;
        for ix in 0..self.ext.nx {
            for iy in 0..self.ext.ny {
                let src = self.row_start(ix, iy);
                let dst = self.ext.index(ix, iy, 0);
                out[dst..dst + nz].copy_from_slice(&padded[src..src + nz]);
            }
        }
    }

    /// Writes an extended array into the interior of a padded array.
    pub fn insert(&self, src: &[f64], padded: &mut [f64]) {
        let nz = self.ext.nz;
        for ix in 0..self.ext.nx {
            for iy in 0..self.ext.ny {
                let dst = self.row_start(ix, iy);
                let s = self.ext.index(ix, iy, 0);
                padded[dst..dst + nz].copy_from_slice(&src[s..s + nz]);
            }
        }
    }

    /// Zeroes the top plane of one row and mirrors it antisymmetrically
    /// into the halo above.
    #[inline]
    pub(crate) fn mirror_row(&self, buf: &mut [f64], row: usize) {
        buf[row] = 0.0;
        for r in 1..=self.halo {
            buf[row - r] = -buf[row + r];
        }
    }

    pub(crate) fn mirror_top(&self, buf: &mut [f64]) {
        for ix in 0..self.ext.nx {
            for iy in 0..self.ext.ny {
                self.mirror_row(buf, self.row_start(ix, iy));
            }
        }
    }
}

/// Two consecutive time levels of the (possibly normalized) pressure.
///
/// After `step()` calls, `curr` holds the field after that many steps and
/// `prev` the one before. Both arrays use the padded [`Layout`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub(crate) layout: Layout,
    pub(crate) prev: Vec<f64>,
    pub(crate) curr: Vec<f64>,
    pub(crate) step: usize,
}

impl WaveState {
    pub fn zeros(layout: Layout) -> Self {
        let n = layout.padded().len();
        WaveState {
            layout,
            prev: vec![0.0; n],
            curr: vec![0.0; n],
            step: 0,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Number of steps taken.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn prev_padded(&self) -> &[f64] {
        &self.prev
    }

    pub fn curr_padded(&self) -> &[f64] {
        &self.curr
    }

    /// Value of the current field at an extended node.
    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.curr[self.layout.padded_index(ix, iy, iz)]
    }

    /// Value of the current field at a node that may lie in the halo.
    pub fn halo_value(&self, ix: isize, iy: isize, iz: isize) -> f64 {
        let h = self.layout.halo as isize;
        let p = self.layout.padded;
        let i = p.index((ix + h) as usize, (iy + h) as usize, (iz + h) as usize);
        self.curr[i]
    }

    pub fn copy_current(&self, out: &mut [f64]) {
        self.layout.extract(&self.curr, out);
    }

    pub fn copy_pair(&self, prev: &mut [f64], curr: &mut [f64]) {
        self.layout.extract(&self.prev, prev);
        self.layout.extract(&self.curr, curr);
    }

    /// Overwrites both levels from extended arrays and sets the step count.
    /// The halo is left untouched, so it must already be zero.
    pub fn load_pair(&mut self, prev: &[f64], curr: &[f64], step: usize) {
        self.layout.insert(prev, &mut self.prev);
        self.layout.insert(curr, &mut self.curr);
        self.step = step;
    }

    pub fn current_field(&self) -> Field3D {
        let mut data = vec![0.0; self.layout.ext.len()];
        self.copy_current(&mut data);
        Field3D::new(self.layout.ext, Unit::Dimensionless, data).expect("layout length")
    }

    pub fn previous_field(&self) -> Field3D {
        let mut data = vec![0.0; self.layout.ext.len()];
        self.layout.extract(&self.prev, &mut data);
        Field3D::new(self.layout.ext, Unit::Dimensionless, data).expect("layout length")
    }

    pub fn is_finite(&self) -> bool {
        self.curr.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.curr.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extract_insert_round_trip() {
        let layout = Layout::new(Shape::new(3, 4, 5), 2);
        let src: Vec<f64> = (0..60).map(|i| i as f64).collect();
        let mut padded = vec![0.0; layout.padded().len()];
        layout.insert(&src, &mut padded);
        assert_eq!(padded[layout.padded_index(1, 2, 3)], src[Shape::new(3, 4, 5).index(1, 2, 3)]);
        let mut out = vec![0.0; 60];
        layout.extract(&padded, &mut out);
        assert_eq!(out, src);
        assert_eq!(padded.iter().filter(|v| **v != 0.0).count(), 59);
    }
}
