//! Runs the 25³ example survey end to end and reports the inversion result.

use std::path::PathBuf;
use std::time::Instant;

use seiswave::config::parse_config;
use seiswave::inversion::{fwi_run, FwiOptions, DEFAULT_FIRST_STEP_FRACTION};
use seiswave::model::{gaussian_sphere_interior, Field3D, Grid, Unit};
use seiswave::seismic_io::write_model;
use seiswave::survey::{write_project, Survey};
use seiswave::workflow::{run_modeling, RunOptions};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dir = PathBuf::from(args.get(1).map_or("/tmp/seiswave-e2e", |s| s.as_str()));
    let frac: f64 = args.get(2).map_or(DEFAULT_FIRST_STEP_FRACTION, |s| s.parse().unwrap());
    let text = format!(
        "nx = 25\nny = 25\nnz = 25\nns = 500\nborder = 25\ndx = 10.0\ndy = 10.0\ndz = 10.0\n\
         vel = velocity_model.bin\nfpeak = 10\ndt = 0.001\namplitude = 100000\nn_src = 27\n\
         proj_dir = {}\nstencil = 4\nox = 0.0\noy = 0.0\noz = 0.0\nlbfgsb = 2\n\
         lbfgsb_lower_bound = 2000.0\nlbfgsb_upper_bound = 3500.0\nn_iter = 10\nmax_viter = 5\n\
         gradient_preconditioning_mode = 2\nzeroes_nplanes_gradient = 0\n",
        dir.display()
    );
    let cfg = parse_config(&text).unwrap().config;
    let grid = Grid::from_config(&cfg, false);
    let truth = gaussian_sphere_interior(&grid, 2500.0, 5.0).unwrap();
    let t = Instant::now();
    write_project(&cfg, &Survey::example(), &truth).unwrap();
    let opts = RunOptions { workers: 1, ..Default::default() };
    run_modeling(&cfg, &opts).unwrap();
    println!("modeling {:.1} s", t.elapsed().as_secs_f64());
    let initial = Field3D::filled(grid.interior(), Unit::MetersPerSecond, 2500.0);
    let mut inv = cfg.clone();
    inv.vel = "initial.bin".into();
    write_model(&cfg.project_path(&inv.vel), &initial).unwrap();
    let out = fwi_run(&inv, &FwiOptions { run: opts, first_step_fraction: frac, write_models: true }).unwrap();
    println!("fwi {:.1} s status {:?} evals {} updates {}", t.elapsed().as_secs_f64(), out.status, out.evaluations, out.updates);
    println!("misfits {:?}", out.misfits);
    let j0 = out.misfits[0];
    println!("ratio {}", out.misfits.last().unwrap() / j0);
    let (mut best, mut at) = (f64::MIN, 0);
    for (i, (a, b)) in out.model.data().iter().zip(initial.data()).enumerate() {
        if a - b > best {
            best = a - b;
            at = i;
        }
    }
    println!("max update {best} at {:?}; range [{}, {}]", grid.interior().coords(at), out.model.min(), out.model.max());
}
