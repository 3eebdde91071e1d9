use crate::seismic_io::Seismogram;
use crate::{Error, Result};

fn check_dims(dmod: &Seismogram, dobs: &Seismogram) -> Result<()> {
    if dmod.n_receivers() != dobs.n_receivers() || dmod.ns() != dobs.ns() {
        return Err(Error::InvalidArgument(format!(
            "seismogram shapes differ: {}x{} modeled, {}x{} observed",
            dmod.n_receivers(),
            dmod.ns(),
            dobs.n_receivers(),
            dobs.ns()
        )));
    }
    Ok(())
}

/// `dmod − dobs`, trace-major.
pub fn residual(dmod: &Seismogram, dobs: &Seismogram) -> Result<Vec<f64>> {
    check_dims(dmod, dobs)?;
    Ok(dmod.data().iter().zip(dobs.data()).map(|(m, o)| m - o).collect())
}

/// Least-squares misfit `½ Σ (dmod − dobs)² dt`, with `dt` taken from the
/// modeled data.
pub fn misfit(dmod: &Seismogram, dobs: &Seismogram) -> Result<f64> {
    let r = residual(dmod, dobs)?;
    Ok(0.5 * dmod.dt * r.iter().map(|v| v * v).sum::<f64>())
}
