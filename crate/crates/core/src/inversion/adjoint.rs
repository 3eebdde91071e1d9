use crate::model::{Field3D, Unit};
use crate::propagator::{Injection, Propagator, SourceWavelet};
use crate::seismic_io::ShotRecord;
use crate::store::WavefieldStore;
use crate::{Error, Result};

use super::misfit::{misfit, residual};

/// Cross-correlation of the adjoint field with the forward field's
/// discrete second time derivative, on the extended grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientKernel {
    pub kernel: Field3D,
    pub misfit: f64,
}

/// Forward sweep saving into `store`, then a backward sweep driven by the
/// residual `dmod − dobs`, accumulating `K = Σₙ λⁿ⁺¹ üⁿ dt`.
///
/// The backward sweep uses the same stepper as the forward one; the
/// residual enters at each receiver node scaled by `c²` (and by `√ρ` in
/// variable-density mode), which makes `(2/c³) K` the exact gradient of the
/// discrete misfit.
pub fn adjoint_shot(
    prop: &Propagator,
    shot: &ShotRecord,
    wavelet: &SourceWavelet,
    ns: usize,
    store: &mut dyn WavefieldStore,
) -> Result<GradientKernel> {
    let dobs = shot
        .data
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("shot {} has no observed data", shot.id)))?;
    let dmod = prop.forward_shot(shot, wavelet, ns, Some(&mut *store))?;
    let j = misfit(&dmod, dobs)?;
    let res = residual(&dmod, dobs)?;

    let ext = prop.extended_shape();
    let mut kernel = Field3D::zeros(ext, Unit::Dimensionless);
    if ns < 2 {
        store.end_shot()?;
        return Ok(GradientKernel { kernel, misfit: j });
    }

    let src = prop.locate(shot.source)?;
    let receivers = shot
        .receivers
        .iter()
        .map(|c| prop.locate(*c))
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<f64> = receivers
        .iter()
        .map(|&r| prop.velocity_squared(r) * prop.pressure_scale(r))
        .collect();

    let mut replay = prop.replay(src, wavelet);
    let mut next = vec![0.0; ext.len()];
    let mut curr = vec![0.0; ext.len()];
    let mut prev = vec![0.0; ext.len()];
    store.retrieve(ns - 1, &mut replay, &mut next)?;
    store.retrieve(ns - 2, &mut replay, &mut curr)?;

    let mut lambda = prop.new_state();
    let mut injections: Vec<Injection> = Vec::with_capacity(receivers.len());
    for n in (1..ns).rev() {
        injections.clear();
        injections.extend(receivers.iter().zip(&weights).enumerate().map(|(r, (&node, &w))| Injection {
            node,
            value: w * res[r * ns + n],
        }));
        prop.step(&mut lambda, &injections)?;

        if n >= 2 {
            store.retrieve(n - 2, &mut replay, &mut prev)?;
        } else {
            prev.fill(0.0);
        }
        accumulate(prop, &lambda.curr, &next, &curr, &prev, kernel.data_mut());
        let s = prop.source_injection(src, wavelet.sample(n)).value;
        kernel.data_mut()[src.offset] -= prop.dt() * lambda.curr[src.padded] * s;

        std::mem::swap(&mut next, &mut curr);
        std::mem::swap(&mut curr, &mut prev);
    }
    store.end_shot()?;
    Ok(GradientKernel { kernel, misfit: j })
}

/// `K += λ · (uⁿ⁺¹/w − 2uⁿ + w·uⁿ⁻¹) / dt`, with `λ` in the padded layout.
fn accumulate(prop: &Propagator, lambda: &[f64], next: &[f64], curr: &[f64], prev: &[f64], k: &mut [f64]) {
    let layout = prop.layout();
    let ext = layout.extended();
    let taper = prop.taper();
    let inv_dt = 1.0 / prop.dt();
    let nz = ext.nz;
    let wz = &taper.wz[..nz];
    for ix in 0..ext.nx {
        for iy in 0..ext.ny {
            let p = layout.row_start(ix, iy);
            let e = ext.index(ix, iy, 0);
            let wxy = taper.wx[ix] * taper.wy[iy];
            let lam = &lambda[p..p + nz];
            let (un, uc, up) = (&next[e..e + nz], &curr[e..e + nz], &prev[e..e + nz]);
            let kr = &mut k[e..e + nz];
            for z in 0..nz {
                let w = wxy * wz[z];
                kr[z] += lam[z] * (un[z] / w - 2.0 * uc[z] + w * up[z]) * inv_dt;
            }
        }
    }
}
