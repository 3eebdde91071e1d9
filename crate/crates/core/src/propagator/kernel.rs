//! Row kernels of the time step. Each row is one z-column of the padded
//! array; x and y neighbours are found at fixed strides.

macro_rules! dispatch_h {
    ($s:expr, $r:expr, $f:ident) => {
        match $s.half_width() {
            1 => $f::<1>($s, $r),
            2 => $f::<2>($s, $r),
            3 => $f::<3>($s, $r),
            4 => $f::<4>($s, $r),
            5 => $f::<5>($s, $r),
            6 => $f::<6>($s, $r),
            7 => $f::<7>($s, $r),
            _ => $f::<8>($s, $r),
        }
    };
}

/// Stencil weights already divided by the squared spacings.
#[derive(Debug, Clone)]
pub(crate) struct Stencil {
    pub centre: f64,
    pub cx: Vec<f64>,
    pub cy: Vec<f64>,
    pub cz: Vec<f64>,
    /// Padded strides of x and y.
    pub plane: usize,
    pub pz: usize,
}

/// Inputs of one row update, all slices of length `n` except `u`.
pub(crate) struct Row<'a> {
    pub u: &'a [f64],
    pub row: usize,
    pub next: &'a mut [f64],
    pub vdt2: &'a [f64],
    pub m2: Option<&'a [f64]>,
    pub wxy: f64,
    pub wz: &'a [f64],
}

impl Stencil {
    pub fn half_width(&self) -> usize {
        self.cx.len()
    }

    /// `next = w·(2u − w·next + vdt2·(∇²u − m²u))` along one row.
    pub fn update_row(&self, r: Row<'_>) {
        #[cfg(target_arch = "x86_64")]
        {
            if std::is_x86_feature_detected!("avx2") {
                // SAFETY: the CPU supports the enabled feature.
                unsafe { self.update_row_avx2(r) };
                return;
            }
        }
        self.update_row_portable(r);
    }

    fn update_row_portable(&self, r: Row<'_>) {
        dispatch_h!(self, r, update_row_h)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn update_row_avx2(&self, r: Row<'_>) {
        dispatch_h!(self, r, update_row_h)
    }

    /// Laplacian along one row into `out`.
    pub fn laplacian_row(&self, u: &[f64], row: usize, out: &mut [f64]) {
        let n = out.len();
        self.check_bounds(u, row, n);
        for (z, o) in out.iter_mut().enumerate() {
            // SAFETY: bounds checked above for every z < n.
            *o = unsafe { self.lap_at_dyn(u, row + z) };
        }
    }

    fn check_bounds(&self, u: &[f64], row: usize, n: usize) {
        let h = self.half_width();
        assert!(
            row >= h * self.plane && row + h * self.plane + n <= u.len(),
            "stencil leaves the padded array"
        );
    }

    /// # Safety
    /// `i ± h·plane` must lie inside `u`.
    unsafe fn lap_at_dyn(&self, u: &[f64], i: usize) -> f64 {
        let at = |j: usize| *u.get_unchecked(j);
        let (mut ax, mut ay, mut az) = (0.0, 0.0, 0.0);
        for k in 0..self.half_width() {
            let (sx, sy, sz) = ((k + 1) * self.plane, (k + 1) * self.pz, k + 1);
            ax += self.cx[k] * (at(i + sx) + at(i - sx));
            ay += self.cy[k] * (at(i + sy) + at(i - sy));
            az += self.cz[k] * (at(i + sz) + at(i - sz));
        }
        self.centre * at(i) + (ax + (ay + az))
    }
}


#[inline(always)]
fn update_row_h<const H: usize>(s: &Stencil, r: Row<'_>) {
    let n = r.next.len();
    s.check_bounds(r.u, r.row, n);
    let cx: [f64; H] = std::array::from_fn(|k| s.cx[k]);
    let cy: [f64; H] = std::array::from_fn(|k| s.cy[k]);
    let cz: [f64; H] = std::array::from_fn(|k| s.cz[k]);
    let (plane, pz, centre, wxy) = (s.plane, s.pz, s.centre, r.wxy);
    let vdt2 = &r.vdt2[..n];
    let wz = &r.wz[..n];
    let base = r.u.as_ptr();
    let lap = |i: usize| {
        // SAFETY: check_bounds covers every offset `i ± k·plane` for the
        // row, and the y and z strides are smaller.
        unsafe {
            let at = |j: usize| *base.add(j);
            let (mut ax, mut ay, mut az) = (0.0, 0.0, 0.0);
            for k in 0..H {
                let (sx, sy, sz) = ((k + 1) * plane, (k + 1) * pz, k + 1);
                ax += cx[k] * (at(i + sx) + at(i - sx));
                ay += cy[k] * (at(i + sy) + at(i - sy));
                az += cz[k] * (at(i + sz) + at(i - sz));
            }
            (at(i), centre * at(i) + (ax + (ay + az)))
        }
    };
    match r.m2 {
        None => {
            for (z, a) in r.next.iter_mut().enumerate() {
                let (u, l) = lap(r.row + z);
                let w = wxy * wz[z];
                *a = w * (2.0 * u - w * *a + vdt2[z] * l);
            }
        }
        Some(m2) => {
            let m2 = &m2[..n];
            for (z, a) in r.next.iter_mut().enumerate() {
                let (u, l) = lap(r.row + z);
                let w = wxy * wz[z];
                *a = w * (2.0 * u - w * *a + vdt2[z] * (l - m2[z] * u));
            }
        }
    }
}
