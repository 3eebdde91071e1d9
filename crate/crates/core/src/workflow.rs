//! Shared setup of modeling and inversion runs: input loading, propagator
//! options, store construction, and the modeling driver.

use std::path::PathBuf;
use std::time::Instant;

use crate::config::Config;
use crate::model::{extend_model, gardner_density, Field3D, Grid, Unit};
use crate::propagator::{CflReport, Propagator, PropagatorOptions, SourceWavelet};
use crate::scheduler::{run_pool, ScheduleMode};
use crate::seismic_io::{
    read_model, read_receiver_coords, read_seismogram, read_source_coords, read_wavelet, write_seismogram, Project,
    ShotRecord,
};
use crate::store::{slots_from_budget, CheckpointStore, DiskStore, MemoryStore, StoreKind, WavefieldStore};
use crate::{Error, Result};

/// Run-time choices that are not part of the parameter file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub workers: usize,
    pub store: StoreKind,
    pub free_surface: bool,
    pub variable_density: bool,
    /// Minimum x-planes per parallel task in the spatial loop.
    pub chunk_hint: Option<usize>,
    /// Directory for disk-store scratch files; defaults to `proj_dir/scratch`.
    pub scratch_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: default_workers(),
            store: StoreKind::Memory,
            free_surface: false,
            variable_density: false,
            chunk_hint: None,
            scratch_dir: None,
        }
    }
}

/// Available hardware parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Validated configuration with its inputs loaded.
#[derive(Debug, Clone)]
pub struct Setup {
    pub cfg: Config,
    pub opts: RunOptions,
    pub grid: Grid,
    pub project: Project,
    pub wavelet: SourceWavelet,
    pub shots: Vec<ShotRecord>,
    pub prop_opts: PropagatorOptions,
}

impl Setup {
    /// Checks the configuration and reads the wavelet and acquisition
    /// geometry. Observed seismograms are attached when `with_data` is set.
    pub fn load(cfg: &Config, opts: &RunOptions, with_data: bool) -> Result<Self> {
        let report = cfg.validate();
        if !report.is_empty() {
            return Err(Error::Validation(report.to_string()));
        }
        if opts.workers == 0 {
            return Err(Error::Validation("worker count must be at least 1".into()));
        }
        let project = Project::new(&cfg.proj_dir);
        let grid = Grid::from_config(cfg, opts.free_surface);
        let samples = read_wavelet(&project.source_wavelet(), cfg.ns)?;
        let wavelet = SourceWavelet::from_samples(samples, cfg.dt, cfg.fpeak, cfg.amplitude);
        let sources = read_source_coords(&project.source_coords(), cfg.n_src)?;
        let mut shots = Vec::with_capacity(sources.len());
        for (id, source) in sources.into_iter().enumerate() {
            let receivers = read_receiver_coords(&project.receiver_coords(id))?;
            let data = if with_data {
                let d = read_seismogram(&project.observed(id), cfg.ns, cfg.dt, id)?;
                if d.n_receivers() != receivers.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{} holds {} traces but shot {id} has {} receivers",
                        project.observed(id).display(),
                        d.n_receivers(),
                        receivers.len()
                    )));
                }
                Some(d)
            } else {
                None
            };
            shots.push(ShotRecord {
                id,
                source,
                receivers,
                data,
            });
        }
        for shot in &shots {
            grid.nearest_node(shot.source)?;
            for r in &shot.receivers {
                grid.nearest_node(*r)?;
            }
        }
        let mut prop_opts = PropagatorOptions::new(cfg.dt);
        prop_opts.half_width = cfg.stencil;
        prop_opts.boundary = cfg.boundary;
        prop_opts.chunk_hint = opts.chunk_hint;
        Ok(Setup {
            cfg: cfg.clone(),
            opts: opts.clone(),
            grid,
            project,
            wavelet,
            shots,
            prop_opts,
        })
    }

    pub fn schedule_mode(&self) -> ScheduleMode {
        ScheduleMode::from_ws_flag(self.cfg.ws_flag)
    }

    /// The interior model named by `vel`.
    pub fn read_velocity(&self) -> Result<Field3D> {
        let v = read_model(&self.project.file(&self.cfg.vel), &self.grid, Unit::MetersPerSecond)?;
        if let Some(i) = v.data().iter().position(|x| *x <= 0.0) {
            return Err(Error::Validation(format!(
                "velocity model has nonpositive value {} at element {i}",
                v.data()[i]
            )));
        }
        Ok(v)
    }

    /// Extended density for variable-density runs: the `density` file when
    /// configured, otherwise Gardner's relation applied to `velocity`.
    pub fn density(&self, velocity: &Field3D) -> Result<Option<Field3D>> {
        if !self.opts.variable_density {
            if self.cfg.density.is_some() {
                log::warn!("density file ignored: variable-density mode is off");
            }
            return Ok(None);
        }
        let rho = match &self.cfg.density {
            Some(name) => read_model(&self.project.file(name), &self.grid, Unit::KilogramsPerCubicMeter)?,
            None => gardner_density(velocity)?,
        };
        Ok(Some(extend_model(&self.grid, &rho)?))
    }

    /// Propagator for an interior velocity model.
    pub fn propagator(&self, velocity: &Field3D, density_ext: Option<&Field3D>) -> Result<Propagator> {
        let vel_ext = extend_model(&self.grid, velocity)?;
        Propagator::new(&self.grid, &vel_ext, density_ext, &self.prop_opts)
    }

    /// A fresh store of the configured kind.
    pub fn make_store(&self) -> Result<Box<dyn WavefieldStore>> {
        Ok(match self.opts.store {
            StoreKind::Memory => Box::new(MemoryStore::new()),
            StoreKind::Disk => {
                let dir = self.opts.scratch_dir.clone().unwrap_or_else(|| self.project.scratch_dir());
                Box::new(DiskStore::new(dir))
            }
            StoreKind::Checkpoint => {
                let pair_bytes = 2 * 8 * self.grid.extended().len() as u64;
                let budget = slots_from_budget(self.cfg.check_mem, self.cfg.mem_budget_bytes, pair_bytes);
                log::info!("checkpointing with {} slots", budget.slots);
                let store = CheckpointStore::new(budget.slots);
                if self.cfg.chk_verb {
                    Box::new(store.with_dump_dir(&self.cfg.proj_dir))
                } else {
                    Box::new(store)
                }
            }
        })
    }
}

/// Fails with a validation error when `dt` exceeds the stability limit.
pub fn require_cfl(report: &CflReport) -> Result<()> {
    if report.ok {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "dt = {} s exceeds the stability limit {:.6} s",
            report.dt, report.dt_max
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelingReport {
    pub cfl: CflReport,
    pub outputs: Vec<PathBuf>,
    pub seconds: f64,
}

/// Forward-models every shot of `cfg` and writes `dobs_<i>.bin`.
pub fn run_modeling(cfg: &Config, opts: &RunOptions) -> Result<ModelingReport> {
    let start = Instant::now();
    let setup = Setup::load(cfg, opts, false)?;
    let velocity = setup.read_velocity()?;
    let density = setup.density(&velocity)?;
    let prop = setup.propagator(&velocity, density.as_ref())?;
    let cfl = prop.cfl();
    log::info!("CFL: dt = {} s, dt_max = {:.6} s", cfl.dt, cfl.dt_max);
    require_cfl(&cfl)?;

    let out = run_pool(setup.shots.len(), opts.workers, setup.schedule_mode(), |i, worker| {
        let t = Instant::now();
        let shot = &setup.shots[i];
        let seis = prop.forward_shot(shot, &setup.wavelet, cfg.ns, None)?;
        let path = setup.project.observed(shot.id);
        write_seismogram(&path, &seis)?;
        log::info!("shot {i} on worker {worker}: {:.2} s", t.elapsed().as_secs_f64());
        Ok(path)
    })?;
    let seconds = start.elapsed().as_secs_f64();
    log::info!("modeled {} shots in {seconds:.2} s", out.results.len());
    Ok(ModelingReport {
        cfl,
        outputs: out.results,
        seconds,
    })
}
