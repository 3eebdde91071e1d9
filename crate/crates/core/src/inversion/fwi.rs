use std::sync::Mutex;
use std::time::Instant;

use crate::config::Config;
use crate::model::{extend_model, fold_to_interior, Field3D, Unit};
use crate::scheduler::run_pool;
use crate::seismic_io::write_model;
use crate::store::WavefieldStore;
use crate::workflow::{require_cfl, RunOptions, Setup};
use crate::{Error, Result};

use super::adjoint::adjoint_shot;
use super::lbfgs::{Bounds, Lbfgs, LbfgsOptions, Status, Task};
use super::precondition::{precondition_gradient, zeroes_near_surface, Smoothing};

/// Largest first-step model change as a fraction of `‖m₀‖∞`.
pub const DEFAULT_FIRST_STEP_FRACTION: f64 = 0.05;

/// `(2/c³)·K`, the velocity gradient from a cross-correlation kernel.
pub fn multiply_adjoint(kernel: &Field3D, velocity: &Field3D) -> Result<Field3D> {
    if kernel.shape() != velocity.shape() {
        return Err(Error::InvalidArgument(format!(
            "kernel shape {:?} differs from velocity shape {:?}",
            kernel.shape(),
            velocity.shape()
        )));
    }
    let data = kernel
        .data()
        .iter()
        .zip(velocity.data())
        .map(|(k, &c)| {
            if c > 0.0 {
                Ok(2.0 * k / (c * c * c))
            } else {
                Err(Error::InvalidArgument(format!("nonpositive velocity {c}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Field3D::new(kernel.shape(), Unit::Dimensionless, data)
}

/// Objective value and post-processed gradient at one model.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub misfit: f64,
    /// Interior gradient after preconditioning and surface zeroing.
    pub gradient: Field3D,
    /// Interior gradient before preconditioning.
    pub raw_gradient: Field3D,
}

/// Misfit and gradient over all shots of a configured survey.
pub struct FwiProblem {
    setup: Setup,
    density: Option<Field3D>,
    stores: Vec<Mutex<Box<dyn WavefieldStore>>>,
}

impl FwiProblem {
    /// Density, when enabled, is fixed from `initial`.
    pub fn new(setup: Setup, initial: &Field3D) -> Result<Self> {
        let density = setup.density(initial)?;
        let stores = (0..setup.opts.workers.max(1))
            .map(|_| setup.make_store().map(Mutex::new))
            .collect::<Result<Vec<_>>>()?;
        Ok(FwiProblem {
            setup,
            density,
            stores,
        })
    }

    pub fn setup(&self) -> &Setup {
        &self.setup
    }

    fn smoothing(&self) -> Smoothing {
        let cfg = &self.setup.cfg;
        Smoothing {
            lengths: [cfg.bessel_filter_lx, cfg.bessel_filter_ly, cfg.bessel_filter_lz],
            spacing: [cfg.dx, cfg.dy, cfg.dz],
        }
    }

    /// Runs every shot through the adjoint-state sweep and sums the shot
    /// contributions in shot order. A model violating the stability limit
    /// gets an infinite misfit.
    pub fn evaluate(&self, velocity: &Field3D) -> Result<Evaluation> {
        let setup = &self.setup;
        let prop = setup.propagator(velocity, self.density.as_ref())?;
        if !prop.cfl().ok {
            log::warn!("trial model violates the CFL limit (vmax {})", velocity.max());
            let zero = Field3D::zeros(setup.grid.interior(), Unit::Dimensionless);
            return Ok(Evaluation {
                misfit: f64::INFINITY,
                gradient: zero.clone(),
                raw_gradient: zero,
            });
        }
        let out = run_pool(setup.shots.len(), setup.opts.workers, setup.schedule_mode(), |i, worker| {
            let mut store = self.stores[worker].lock().expect("store lock");
            adjoint_shot(&prop, &setup.shots[i], &setup.wavelet, setup.cfg.ns, store.as_mut())
        })?;
        let ext = setup.grid.extended();
        let mut kernel = Field3D::zeros(ext, Unit::Dimensionless);
        let mut misfit = 0.0;
        for k in &out.results {
            misfit += k.misfit;
            kernel.data_mut().iter_mut().zip(k.kernel.data()).for_each(|(a, b)| *a += b);
        }
        let vel_ext = extend_model(&setup.grid, velocity)?;
        let raw = fold_to_interior(&setup.grid, &multiply_adjoint(&kernel, &vel_ext)?);
        let mut gradient = precondition_gradient(&raw, setup.cfg.gradient_preconditioning_mode, &self.smoothing())?;
        zeroes_near_surface(&mut gradient, setup.cfg.zeroes_nplanes_gradient);
        Ok(Evaluation {
            misfit,
            gradient,
            raw_gradient: raw,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwiOptions {
    pub run: RunOptions,
    /// Largest first-step change as a fraction of `‖m₀‖∞`.
    pub first_step_fraction: f64,
    /// Write `v-iter-k.bin` and `v-final.bin`.
    pub write_models: bool,
}

impl Default for FwiOptions {
    fn default() -> Self {
        FwiOptions {
            run: RunOptions::default(),
            first_step_fraction: DEFAULT_FIRST_STEP_FRACTION,
            write_models: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwiOutcome {
    pub model: Field3D,
    pub status: Status,
    /// Misfit of the initial model followed by each accepted model.
    pub misfits: Vec<f64>,
    pub evaluations: usize,
    pub updates: usize,
}

/// Bound-constrained L-BFGS inversion of the model named by `vel`.
pub fn fwi_run(cfg: &Config, opts: &FwiOptions) -> Result<FwiOutcome> {
    let start = Instant::now();
    let setup = Setup::load(cfg, &opts.run, true)?;
    let initial = setup.read_velocity()?;
    let bounds = Bounds::from_mode(cfg.lbfgsb, cfg.lbfgsb_lower_bound, cfg.lbfgsb_upper_bound)?;
    let grid = setup.grid;
    let project = setup.project.clone();
    let problem = FwiProblem::new(setup, &initial)?;
    let prop = problem.setup().propagator(&initial, problem.density.as_ref())?;
    let cfl = prop.cfl();
    log::info!("CFL: dt = {} s, dt_max = {:.6} s", cfl.dt, cfl.dt_max);
    require_cfl(&cfl)?;
    drop(prop);

    // The optimizer works on x = m/m_ref and J/J₀ so that its absolute
    // tolerances and first step are scale-free.
    let m_ref = initial.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scaled_bounds = Bounds::new(bounds.lower / m_ref, bounds.upper / m_ref)?;
    let lopts = LbfgsOptions {
        max_evaluations: cfg.n_iter,
        max_updates: cfg.max_viter,
        max_first_change: Some(opts.first_step_fraction),
        ..LbfgsOptions::default()
    };
    let x0: Vec<f64> = initial.data().iter().map(|v| v / m_ref).collect();
    let mut opt = Lbfgs::new(x0, scaled_bounds, lopts);
    let to_field = |x: &[f64]| {
        let m = x.iter().map(|v| bounds.project(v * m_ref)).collect();
        Field3D::new(grid.interior(), Unit::MetersPerSecond, m)
    };
    let mut misfits = Vec::new();
    let mut j_scale = 1.0;
    let mut last_misfit = f64::NAN;
    let mut task = opt.start();
    let status = loop {
        task = match task {
            Task::Evaluate => {
                let t = Instant::now();
                let eval = problem.evaluate(&to_field(opt.x())?)?;
                let gnorm = eval.gradient.data().iter().map(|g| g * g).sum::<f64>().sqrt();
                log::info!(
                    "iteration {}: J = {:.9e}, |g| = {gnorm:.6e}, viter = {}, {:.1} s",
                    opt.evaluations() + 1,
                    eval.misfit,
                    opt.updates(),
                    t.elapsed().as_secs_f64()
                );
                if misfits.is_empty() {
                    misfits.push(eval.misfit);
                    if eval.misfit > 0.0 && eval.misfit.is_finite() {
                        j_scale = 1.0 / eval.misfit;
                    }
                }
                last_misfit = eval.misfit;
                let g: Vec<f64> = eval.gradient.data().iter().map(|v| v * m_ref * j_scale).collect();
                opt.tell(eval.misfit * j_scale, &g)
            }
            Task::NewIterate => {
                misfits.push(last_misfit);
                log::info!("model update {}: J = {last_misfit:.9e}", opt.updates());
                if opts.write_models {
                    write_model(&project.iteration_model(opt.updates()), &to_field(opt.x())?)?;
                }
                opt.resume()
            }
            Task::Stop(status) => break status,
        };
    };
    let model = if opt.updates() == 0 {
        initial.map(Unit::MetersPerSecond, |v| bounds.project(v))
    } else {
        to_field(opt.x())?
    };
    if opts.write_models {
        write_model(&project.final_model(), &model)?;
    }
    log::info!(
        "inversion stopped ({status:?}) after {} evaluations and {} updates in {:.1} s",
        opt.evaluations(),
        opt.updates(),
        start.elapsed().as_secs_f64()
    );
    Ok(FwiOutcome {
        model,
        status,
        misfits,
        evaluations: opt.evaluations(),
        updates: opt.updates(),
    })
}
