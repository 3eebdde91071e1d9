use crate::config::Preconditioning;
use crate::model::{Field3D, Shape};
use crate::{Error, Result};

/// Relative residual the Bessel solve must reach.
pub const BESSEL_TOLERANCE: f64 = 1e-6;

/// Relative residual the Bessel solve aims for once the tolerance is met,
/// so that the filter is linear to near round-off.
const BESSEL_TARGET: f64 = 1e-13;

/// Iterations allowed past [`BESSEL_TOLERANCE`] while approaching the target.
const BESSEL_REFINE_ITERATIONS: usize = 200;

/// Smoothing lengths (m) and grid spacings (m) per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    pub lengths: [f64; 3],
    pub spacing: [f64; 3],
}

impl Smoothing {
    fn weights(&self) -> [f64; 3] {
        std::array::from_fn(|a| (self.lengths[a] / self.spacing[a]).powi(2))
    }
}

/// `Σ_a (L_a/d_a)² δ²_a f` with zero-flux ends (edge value mirrored).
fn weighted_second_difference(shape: Shape, wts: [f64; 3], f: &[f64], out: &mut [f64]) {
    let n = [shape.nx, shape.ny, shape.nz];
    let stride = [shape.ny * shape.nz, shape.nz, 1];
    for (i, o) in out.iter_mut().enumerate() {
        let (ix, iy, iz) = shape.coords(i);
        let pos = [ix, iy, iz];
        let mut acc = 0.0;
        for a in 0..3 {
            if wts[a] == 0.0 || n[a] < 2 {
                continue;
            }
            let lo = if pos[a] > 0 { f[i - stride[a]] } else { f[i] };
            let hi = if pos[a] + 1 < n[a] { f[i + stride[a]] } else { f[i] };
            acc += wts[a] * (lo - 2.0 * f[i] + hi);
        }
        *o = acc;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `(I − Σ L²∂²) s = g` by conjugate gradients.
pub fn bessel_filter(grad: &Field3D, smoothing: &Smoothing) -> Result<Field3D> {
    let shape = grad.shape();
    let wts = smoothing.weights();
    let g = grad.data();
    let g_norm = dot(g, g).sqrt();
    if g_norm == 0.0 || wts.iter().all(|&w| w == 0.0) {
        return Ok(grad.clone());
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        weighted_second_difference(shape, wts, x, out);
        out.iter_mut().zip(x).for_each(|(o, xi)| *o = xi - *o);
    };
    let len = g.len();
    let mut x = vec![0.0; len];
    let mut r = g.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; len];
    let mut rr = dot(&r, &r);
    let max_iter = 10 * len;
    let mut refine_left = BESSEL_REFINE_ITERATIONS;
    for _ in 0..max_iter {
        if rr.sqrt() <= BESSEL_TARGET * g_norm {
            return Field3D::new(shape, grad.unit(), x);
        }
        if rr.sqrt() <= BESSEL_TOLERANCE * g_norm {
            if refine_left == 0 {
                return Field3D::new(shape, grad.unit(), x);
            }
            refine_left -= 1;
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        p.iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    if rr.sqrt() <= BESSEL_TOLERANCE * g_norm {
        return Field3D::new(shape, grad.unit(), x);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rr.sqrt() / g_norm,
    })
}

/// Number of explicit passes that keep the smoother stable: each pass
/// applies `1/n` of the total weight.
pub fn laplace_passes(smoothing: &Smoothing) -> usize {
    let total: f64 = smoothing.weights().iter().sum();
    ((4.0 * total).ceil() as usize).max(1)
}

/// Explicit smoothing `s = g + Σ L²∂²g`, split into [`laplace_passes`]
/// sub-passes of weight `L²/n`.
pub fn laplace_filter(grad: &Field3D, smoothing: &Smoothing) -> Field3D {
    let shape = grad.shape();
    let n = laplace_passes(smoothing);
    let wts = smoothing.weights().map(|w| w / n as f64);
    let mut s = grad.data().to_vec();
    let mut d = vec![0.0; s.len()];
    for _ in 0..n {
        weighted_second_difference(shape, wts, &s, &mut d);
        s.iter_mut().zip(&d).for_each(|(si, di)| *si += di);
    }
    Field3D::new(shape, grad.unit(), s).expect("shape preserved")
}

pub fn precondition_gradient(grad: &Field3D, mode: Preconditioning, smoothing: &Smoothing) -> Result<Field3D> {
    if smoothing.lengths.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "smoothing lengths must be non-negative, got {:?}",
            smoothing.lengths
        )));
    }
    match mode {
        Preconditioning::None => Ok(grad.clone()),
        Preconditioning::Bessel => bessel_filter(grad, smoothing),
        Preconditioning::Laplace => Ok(laplace_filter(grad, smoothing)),
    }
}

/// Zeroes the top `nplanes` z-planes of an interior field.
pub fn zeroes_near_surface(grad: &mut Field3D, nplanes: usize) {
    let shape = grad.shape();
    let k = nplanes.min(shape.nz);
    for row in grad.data_mut().chunks_mut(shape.nz) {
        row[..k].fill(0.0);
    }
}
