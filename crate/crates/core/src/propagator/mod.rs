//! Explicit finite-difference solver for the constant- and variable-density
//! acoustic wave equation.

pub mod boundary;
pub mod cfl;
mod kernel;
pub mod resample;
pub mod state;
pub mod wavelet;

use rayon::prelude::*;

use crate::config::BoundaryKind;
use crate::model::{Field3D, Grid, MassTerm, Shape};
use crate::seismic_io::{Coordinate3, Seismogram, ShotRecord};
use crate::stencil::{fd_coefficients, StencilCoefficients};
use crate::store::{Replay, WavefieldStore};
use crate::{Error, Result};

pub use boundary::{apply_damping, apply_free_surface, damping_taper, DampingTaper};
pub use cfl::{check_cfl, CflReport};
pub use resample::{interpolate_trace, Interpolation};
pub use state::{Layout, WaveState};
pub use wavelet::{ricker, SourceWavelet};

/// Steps between finiteness checks of the wavefield.
const FINITE_CHECK_INTERVAL: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorOptions {
    pub dt: f64,
    pub half_width: usize,
    pub boundary: BoundaryKind,
    /// Exponent of the damping factor at the outermost boundary point.
    pub edge_exponent: f64,
    /// Minimum number of x-planes per parallel task.
    pub chunk_hint: Option<usize>,
}

impl PropagatorOptions {
    pub fn new(dt: f64) -> Self {
        PropagatorOptions {
            dt,
            half_width: 4,
            boundary: BoundaryKind::Damping,
            edge_exponent: boundary::DEFAULT_EDGE_EXPONENT,
            chunk_hint: None,
        }
    }
}

/// A grid node resolved for injection or sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    /// Extended-grid indices.
    pub ext: (usize, usize, usize),
    /// Offset in extended arrays.
    pub offset: usize,
    /// Offset in padded arrays.
    pub padded: usize,
}

/// An additive source term: `value` enters the equation as `dt²·value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injection {
    pub node: Node,
    pub value: f64,
}

#[derive(Debug, Clone)]
struct Density {
    m2: Vec<f64>,
    sqrt_rho: Vec<f64>,
}

/// Time stepper bound to one velocity model (and optional density).
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    layout: Layout,
    dt: f64,
    coeffs: StencilCoefficients,
    stencil: kernel::Stencil,
    velocity: Field3D,
    vdt2: Vec<f64>,
    density: Option<Density>,
    taper: DampingTaper,
    chunk_hint: Option<usize>,
}

impl Propagator {
    /// `velocity` and `density` are given on the extended grid.
    pub fn new(grid: &Grid, velocity: &Field3D, density: Option<&Field3D>, opts: &PropagatorOptions) -> Result<Self> {
        if opts.boundary == BoundaryKind::Cpml {
            return Err(Error::NotImplemented("CPML absorbing boundary"));
        }
        if !(opts.dt > 0.0 && opts.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", opts.dt)));
        }
        let ext = grid.extended();
        if velocity.shape() != ext {
            return Err(Error::InvalidArgument(format!(
                "velocity shape {:?} does not match the extended grid {:?}",
                velocity.shape(),
                ext
            )));
        }
        if let Some(i) = velocity.data().iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "velocity must be positive, found {} at element {i}",
                velocity.data()[i]
            )));
        }
        let coeffs = fd_coefficients(opts.half_width)?;
        let h = coeffs.half_width();
        let (ix2, iy2, iz2) = (
            1.0 / (grid.dx * grid.dx),
            1.0 / (grid.dy * grid.dy),
            1.0 / (grid.dz * grid.dz),
        );
        let c = coeffs.as_slice();
        let dt2 = opts.dt * opts.dt;
        let density = match density {
            None => None,
            Some(rho) => {
                if rho.shape() != ext {
                    return Err(Error::InvalidArgument(format!(
                        "density shape {:?} does not match the extended grid {:?}",
                        rho.shape(),
                        ext
                    )));
                }
                let MassTerm(m2) = crate::model::mass_term(grid, rho, h)?;
                Some(Density {
                    m2: m2.into_data(),
                    sqrt_rho: rho.data().iter().map(|r| r.sqrt()).collect(),
                })
            }
        };
        let layout = Layout::new(ext, h);
        let pad = layout.padded();
        Ok(Propagator {
            grid: *grid,
            layout,
            dt: opts.dt,
            stencil: kernel::Stencil {
                centre: c[0] * (ix2 + iy2 + iz2),
                cx: c[1..].iter().map(|v| v * ix2).collect(),
                cy: c[1..].iter().map(|v| v * iy2).collect(),
                cz: c[1..].iter().map(|v| v * iz2).collect(),
                plane: pad.ny * pad.nz,
                pz: pad.nz,
            },
            coeffs,
            vdt2: velocity.data().iter().map(|v| v * v * dt2).collect(),
            velocity: velocity.clone(),
            density,
            taper: DampingTaper::new(grid, opts.edge_exponent),
            chunk_hint: opts.chunk_hint,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn coefficients(&self) -> &StencilCoefficients {
        &self.coeffs
    }

    pub fn velocity(&self) -> &Field3D {
        &self.velocity
    }

    pub fn taper(&self) -> &DampingTaper {
        &self.taper
    }

    pub fn variable_density(&self) -> bool {
        self.density.is_some()
    }

    pub fn cfl(&self) -> CflReport {
        check_cfl(&self.grid, self.dt, self.velocity.max(), &self.coeffs)
    }

    pub fn new_state(&self) -> WaveState {
        WaveState::zeros(self.layout)
    }

    /// Resolves an extended-grid index triple.
    pub fn node(&self, ix: usize, iy: usize, iz: usize) -> Node {
        let ext = self.layout.extended();
        assert!(ix < ext.nx && iy < ext.ny && iz < ext.nz, "node outside the extended grid");
        Node {
            ext: (ix, iy, iz),
            offset: ext.index(ix, iy, iz),
            padded: self.layout.padded_index(ix, iy, iz),
        }
    }

    /// Nearest interior node of a coordinate.
    pub fn locate(&self, c: Coordinate3) -> Result<Node> {
        let (ix, iy, iz) = self.grid.to_extended(self.grid.nearest_node(c)?);
        Ok(self.node(ix, iy, iz))
    }

    /// Point source of strength `sample` (a force density integrated over a
    /// cell), spread over the cell volume.
    pub fn source_injection(&self, node: Node, sample: f64) -> Injection {
        let mut value = sample / self.grid.cell_volume();
        if let Some(d) = &self.density {
            value /= d.sqrt_rho[node.offset];
        }
        Injection { node, value }
    }

    /// Factor converting the propagated field into pressure at a node.
    pub fn pressure_scale(&self, node: Node) -> f64 {
        self.density.as_ref().map_or(1.0, |d| d.sqrt_rho[node.offset])
    }

    /// Squared velocity at a node.
    pub fn velocity_squared(&self, node: Node) -> f64 {
        let v = self.velocity.data()[node.offset];
        v * v
    }

    /// Discrete Laplacian of an extended field, with zero values outside it.
    pub fn laplacian(&self, field: &[f64]) -> Vec<f64> {
        let ext = self.layout.extended();
        assert_eq!(field.len(), ext.len());
        let mut padded = vec![0.0; self.layout.padded().len()];
        self.layout.insert(field, &mut padded);
        let mut out = vec![0.0; ext.len()];
        for ix in 0..ext.nx {
            for iy in 0..ext.ny {
                let o = ext.index(ix, iy, 0);
                self.stencil.laplacian_row(&padded, self.layout.row_start(ix, iy), &mut out[o..o + ext.nz]);
            }
        }
        out
    }

    /// Advances `state` by one step:
    /// `u⁺ = w·(2u − w·u⁻ + c²dt²(∇²u − m²u) + dt²·s)`, followed by the
    /// free-surface condition when enabled.
    pub fn step(&self, state: &mut WaveState, injections: &[Injection]) -> Result<()> {
        assert_eq!(state.layout, self.layout, "state belongs to another grid");
        let ext = self.layout.extended();
        let h = self.layout.halo();
        let pad = self.layout.padded();
        let plane = pad.ny * pad.nz;
        let nz = ext.nz;
        let free_surface = self.grid.free_surface;
        let curr = &state.curr;
        let taper = &self.taper;
        let m2 = self.density.as_ref().map(|d| &d.m2[..]);

        let kernel = |(px, out): (usize, &mut [f64])| {
            if px < h || px >= h + ext.nx {
                return;
            }
            let ix = px - h;
            for iy in 0..ext.ny {
                let row = self.layout.row_start(ix, iy);
                let local = row - px * plane;
                let e = ext.index(ix, iy, 0);
                self.stencil.update_row(kernel::Row {
                    u: curr,
                    row,
                    next: &mut out[local..local + nz],
                    vdt2: &self.vdt2[e..e + nz],
                    m2: m2.map(|m| &m[e..e + nz]),
                    wxy: taper.wx[ix] * taper.wy[iy],
                    wz: &taper.wz,
                });
                if free_surface {
                    self.layout.mirror_row(out, local);
                }
            }
        };
        let chunks = state.prev.par_chunks_mut(plane).enumerate();
        match self.chunk_hint {
            Some(min) => chunks.with_min_len(min.max(1)).for_each(kernel),
            None => chunks.for_each(kernel),
        }

        let dt2 = self.dt * self.dt;
        for inj in injections {
            let (ix, iy, iz) = inj.node.ext;
            state.prev[inj.node.padded] += taper.at(ix, iy, iz) * dt2 * inj.value;
            if free_surface && iz <= h {
                let row = self.layout.row_start(ix, iy);
                self.layout.mirror_row(&mut state.prev, row);
            }
        }
        std::mem::swap(&mut state.prev, &mut state.curr);
        state.step += 1;
        if state.step % FINITE_CHECK_INTERVAL == 0 && !state.is_finite() {
            return Err(Error::Unstable { step: state.step });
        }
        Ok(())
    }

    /// Samples the current field (as pressure) at every receiver into
    /// sample `n` of the seismogram.
    pub fn record_receivers(&self, state: &WaveState, receivers: &[Node], out: &mut Seismogram, n: usize) {
        for (r, node) in receivers.iter().enumerate() {
            out.set_sample(r, n, state.curr[node.padded] * self.pressure_scale(*node));
        }
    }

    /// Runs `ns` steps from rest, recording the receivers after each step
    /// and offering each post-step state to `store`.
    pub fn forward_shot(
        &self,
        shot: &ShotRecord,
        wavelet: &SourceWavelet,
        ns: usize,
        mut store: Option<&mut dyn WavefieldStore>,
    ) -> Result<Seismogram> {
        let src = self.locate(shot.source)?;
        let receivers = shot
            .receivers
            .iter()
            .map(|c| self.locate(*c))
            .collect::<Result<Vec<_>>>()?;
        let mut seis = Seismogram::zeros(shot.id, receivers.len(), ns, self.dt);
        if let Some(s) = store.as_deref_mut() {
            s.begin_shot(shot.id, ns, self.layout.extended())?;
        }
        let mut state = self.new_state();
        for n in 0..ns {
            self.step(&mut state, &[self.source_injection(src, wavelet.sample(n))])?;
            self.record_receivers(&state, &receivers, &mut seis, n);
            if let Some(s) = store.as_deref_mut() {
                s.save(n, &state)?;
            }
        }
        if !state.is_finite() {
            return Err(Error::Unstable { step: state.step });
        }
        Ok(seis)
    }

    /// A stepper that re-runs the forward problem of one shot from stored
    /// states.
    pub fn replay<'a>(&'a self, source: Node, wavelet: &'a SourceWavelet) -> ShotReplay<'a> {
        ShotReplay {
            prop: self,
            source,
            wavelet,
            state: None,
        }
    }

    pub fn extended_shape(&self) -> Shape {
        self.layout.extended()
    }
}

/// Forward re-computation used by the checkpointing store.
pub struct ShotReplay<'a> {
    prop: &'a Propagator,
    source: Node,
    wavelet: &'a SourceWavelet,
    state: Option<WaveState>,
}

impl Replay for ShotReplay<'_> {
    fn load(&mut self, t: usize, prev: &[f64], curr: &[f64]) {
        let prop = self.prop;
        let state = self.state.get_or_insert_with(|| prop.new_state());
        state.load_pair(prev, curr, t + 1);
        if prop.grid.free_surface {
            prop.layout.mirror_top(&mut state.curr);
        }
    }

    fn advance(&mut self) -> Result<()> {
        let state = self
            .state
            .as_mut()
            .ok_or_else(|| Error::Store("replay advanced before any state was loaded".into()))?;
        let n = state.step;
        let inj = self.prop.source_injection(self.source, self.wavelet.sample(n));
        self.prop.step(state, &[inj])
    }

    fn position(&self) -> Option<usize> {
        self.state.as_ref().map(|s| s.step - 1)
    }

    fn copy_pair(&self, prev: &mut [f64], curr: &mut [f64]) {
        if let Some(s) = &self.state {
            s.copy_pair(prev, curr);
        }
    }

    fn copy_current(&self, out: &mut [f64]) {
        if let Some(s) = &self.state {
            s.copy_current(out);
        }
    }
}
