//! Acceptance suite. Runs every criterion in turn and prints one
//! `[PASS]` or `[FAIL]` line each; the process fails if any criterion fails.
//! Arguments filter criteria by substring of their names.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use seiswave::config::Config;
use seiswave::inversion::{fwi_run, FwiOptions, FwiProblem, Status};
use seiswave::model::{build_constant_model, gaussian_sphere_interior, Field3D, Grid, Unit};
use seiswave::propagator::{check_cfl, ricker, Propagator, PropagatorOptions};
use seiswave::seismic_io::{read_f64s, read_model, write_model, Coordinate3, ShotRecord};
use seiswave::stencil::fd_coefficients;
use seiswave::store::StoreKind;
use seiswave::survey::{write_project, Survey};
use seiswave::workflow::{run_modeling, RunOptions, Setup};
use seiswave::Error;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn serial() -> RunOptions {
    RunOptions {
        workers: 1,
        ..RunOptions::default()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Configuration text of the 25³ example survey.
fn example_config(dir: &Path) -> Config {
    common::config(&format!(
        "nx = 25\nny = 25\nnz = 25\nns = 500\nborder = 25\ndx = 10.0\ndy = 10.0\ndz = 10.0\n\
         vel = velocity_model.bin\nfpeak = 10\ndt = 0.001\namplitude = 100000\nn_src = 27\n\
         proj_dir = {}\nstencil = 4\nox = 0.0\noy = 0.0\noz = 0.0\nlbfgsb = 2\n\
         lbfgsb_lower_bound = 2000.0\nlbfgsb_upper_bound = 3500.0\nn_iter = 10\nmax_viter = 5\n\
         gradient_preconditioning_mode = 2\nzeroes_nplanes_gradient = 0\n",
        dir.display()
    ))
}

/// The 15³ gradient-check setup: truth has a Gaussian anomaly, the start
/// model is a constant 2200 m/s.
fn gradient_setup(dir: &Path, extra: &str, opts: &RunOptions) -> (Config, Field3D) {
    let cfg = common::config(&common::config_text(dir, 15, 10, 200, 25.0, 4, extra));
    let grid = common::grid_of(&cfg);
    let truth = gaussian_sphere_interior(&grid, 2000.0, 3.0).unwrap();
    let initial = Field3D::filled(grid.interior(), Unit::MetersPerSecond, 2200.0);
    (common::prepare_inversion(&cfg, &common::small_survey(), &truth, &initial, opts), initial)
}

fn adjoint_correctness() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, initial) = gradient_setup(dir.path(), "", &serial());
    let problem = FwiProblem::new(Setup::load(&cfg, &serial(), true).unwrap(), &initial).unwrap();
    let base = problem.evaluate(&initial).unwrap();
    let scale = initial.max();
    let mut passed = 0;
    let mut detail = Vec::new();
    for seed in 0..3 {
        let d = common::smooth_direction(initial.shape(), seed);
        let predicted = common::dot(&base.gradient, &d);
        let best = (1..=6)
            .map(|k| {
                let eps = scale * 10f64.powi(-k);
                let jp = problem.evaluate(&common::axpy(eps, &d, &initial)).unwrap().misfit;
                let jm = problem.evaluate(&common::axpy(-eps, &d, &initial)).unwrap().misfit;
                let fd = (jp - jm) / (2.0 * eps);
                (fd - predicted).abs() / fd.abs().max(predicted.abs())
            })
            .fold(f64::INFINITY, f64::min);
        passed += usize::from(best <= 1e-3);
        detail.push(format!("{best:.1e}"));
    }
    check(passed == 3, format!("{passed}/3 directions, best relative errors [{}]", detail.join(", ")))
}

fn store_equivalence() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let ext_len = (35usize).pow(3) as u64;
    let extra = format!("check_mem = 1.0\nmem_budget_bytes = {}\n", 5 * 2 * 8 * ext_len);
    let (cfg, initial) = gradient_setup(dir.path(), &extra, &serial());
    let mut grads = Vec::new();
    for store in [StoreKind::Memory, StoreKind::Disk, StoreKind::Checkpoint] {
        let opts = RunOptions { store, ..serial() };
        let setup = Setup::load(&cfg, &opts, true).unwrap();
        if store == StoreKind::Checkpoint {
            let s = seiswave::store::slots_from_budget(cfg.check_mem, cfg.mem_budget_bytes, 2 * 8 * ext_len).slots;
            assert_eq!(s, 5, "checkpoint budget gives {s} slots");
        }
        let e = FwiProblem::new(setup, &initial).unwrap().evaluate(&initial).unwrap();
        grads.push((store, e));
    }
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b) = (&grads[i].1.gradient, &grads[j].1.gradient);
            let scale = max_abs(a.data()).max(max_abs(b.data()));
            let diff = a.data().iter().zip(b.data()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            worst = worst.max(diff / scale);
        }
    }
    check(worst <= 1e-12, format!("memory/disk/checkpoint(s = 5) largest pairwise relative difference {worst:.1e}"))
}

fn checkpoint_optimality() -> Outcome {
    match common::checkpoint_optimality(64, 8) {
        None => Ok("all 512 plans valid and equal to the recurrence minimum".into()),
        Some(e) => Err(e),
    }
}

fn cfl_condition() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = example_config(dir.path());
    let grid = Grid::from_config(&cfg, false);
    let coeffs = fd_coefficients(4).unwrap();
    let ok = check_cfl(&grid, 1e-3, 3500.0, &coeffs);
    let bad = check_cfl(&grid, 2e-3, 3500.0, &coeffs);
    if (ok.dt_max - 1.29e-3).abs() > 0.005e-3 || !ok.ok || bad.ok {
        return Err(format!("dt_max = {:.4} ms, 1 ms ok = {}, 2 ms ok = {}", ok.dt_max * 1e3, ok.ok, bad.ok));
    }
    let truth = gaussian_sphere_interior(&grid, 2500.0, 5.0).unwrap();
    write_project(&cfg, &Survey::example(), &truth).unwrap();
    let vel = seiswave::model::extend_model(&grid, &truth).unwrap();
    let prop = Propagator::new(&grid, &vel, None, &PropagatorOptions::new(1e-3)).unwrap();
    let w = ricker(500, 1e-3, 10.0, 1e5).unwrap();
    let src = prop.locate(Coordinate3::new(120.0, 120.0, 120.0)).unwrap();
    let mut state = prop.new_state();
    let (mut at50, mut peak) = (0.0, 0.0f64);
    for n in 0..500 {
        prop.step(&mut state, &[prop.source_injection(src, w.sample(n))]).unwrap();
        peak = peak.max(state.max_abs());
        if n + 1 == 50 {
            at50 = state.max_abs();
        }
    }
    let bounded = state.is_finite() && peak <= 1e3 * at50;
    cfg.dt = 2e-3;
    let rejected = matches!(run_modeling(&cfg, &serial()), Err(Error::Validation(_)));
    check(
        bounded && rejected,
        format!(
            "dt_max = {:.4} ms; 500 steps at 1 ms peak/step-50 = {:.1}; 2 ms run rejected = {rejected}",
            ok.dt_max * 1e3,
            peak / at50
        ),
    )
}

fn greens_function() -> Outcome {
    let (c, fpeak, dt) = (2000.0, 15.0, 1e-3);
    let mut grid = Grid::cube(61, 10.0, 25);
    grid.free_surface = false;
    let prop = Propagator::new(&grid, &build_constant_model(&grid, c), None, &PropagatorOptions::new(dt)).unwrap();
    let ns = 260;
    let w = ricker(ns, dt, fpeak, 1e5).unwrap();
    let shot = ShotRecord {
        id: 0,
        source: Coordinate3::new(300.0, 300.0, 300.0),
        receivers: vec![Coordinate3::new(300.0, 300.0, 450.0)],
        data: None,
    };
    let seis = prop.forward_shot(&shot, &w, ns, None).unwrap();
    let r = 150.0;
    let t0 = 1.0 / fpeak;
    let ricker_at = |t: f64| {
        let a = (std::f64::consts::PI * fpeak * (t - t0)).powi(2);
        1e5 * (1.0 - 2.0 * a) * (-a).exp()
    };
    let (mut err, mut norm) = (0.0, 0.0);
    for n in 0..ns {
        let tau = (n + 1) as f64 * dt - r / c;
        if (0.0..=2.0 * t0).contains(&tau) {
            let exact = ricker_at(tau) / (4.0 * std::f64::consts::PI * c * c * r);
            err += (seis.sample(0, n) - exact).powi(2);
            norm += exact * exact;
        }
    }
    let rel = (err / norm).sqrt();
    check(rel <= 0.05, format!("relative RMS misfit to f(t - r/c)/(4 pi c^2 r) over the main pulse: {:.2}%", 100.0 * rel))
}

fn convergence_order() -> Outcome {
    let length = 400.0;
    let field = |x: f64, y: f64, z: f64| {
        let k = [2.0 * std::f64::consts::PI / 200.0, 2.0 * std::f64::consts::PI / 250.0, 2.0 * std::f64::consts::PI / 300.0];
        let u = (k[0] * x + 0.3).sin() * (k[1] * y + 0.1).sin() * (k[2] * z + 0.7).sin();
        (u, -(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * u)
    };
    let mut errors = Vec::new();
    for h in [20.0, 10.0, 5.0] {
        let n = (length / h) as usize + 1;
        let grid = Grid::cube(n, h, 0);
        let prop = Propagator::new(&grid, &build_constant_model(&grid, 1000.0), None, &PropagatorOptions::new(1e-4)).unwrap();
        let ext = grid.extended();
        let mut u = vec![0.0; ext.len()];
        let mut exact = vec![0.0; ext.len()];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (v, l) = field(i as f64 * h, j as f64 * h, k as f64 * h);
                    u[ext.index(i, j, k)] = v;
                    exact[ext.index(i, j, k)] = l;
                }
            }
        }
        let lap = prop.laplacian(&u);
        let inside = |i: usize| (100.0..=300.0).contains(&(i as f64 * h));
        let mut e: f64 = 0.0;
        for i in (0..n).filter(|&i| inside(i)) {
            for j in (0..n).filter(|&j| inside(j)) {
                for k in (0..n).filter(|&k| inside(k)) {
                    let o = ext.index(i, j, k);
                    e = e.max((lap[o] - exact[o]).abs());
                }
            }
        }
        errors.push(e);
    }
    let slopes = [(errors[0] / errors[1]).log2(), (errors[1] / errors[2]).log2()];
    check(
        slopes.iter().all(|s| *s >= 6.0),
        format!("errors {:.2e}, {:.2e}, {:.2e}; slopes {:.2}, {:.2}", errors[0], errors[1], errors[2], slopes[0], slopes[1]),
    )
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example_config(dir.path());
    let grid = Grid::from_config(&cfg, false);
    let truth = gaussian_sphere_interior(&grid, 2500.0, 5.0).unwrap();
    let project = write_project(&cfg, &Survey::example(), &truth).unwrap();
    let report = run_modeling(&cfg, &serial()).unwrap();
    let produced = (0..27).filter(|&i| project.observed(i).exists()).count();
    let initial = Field3D::filled(grid.interior(), Unit::MetersPerSecond, 2500.0);
    let mut inv = cfg.clone();
    inv.vel = "velocity_initial.bin".into();
    write_model(&project.file(&inv.vel), &initial).unwrap();
    let out = fwi_run(&inv, &FwiOptions { run: serial(), ..FwiOptions::default() }).unwrap();

    let decreasing = out.misfits.windows(2).all(|w| w[1] < w[0]) && out.misfits.len() >= 2;
    let ratio = out.misfits.last().unwrap() / out.misfits[0];
    let (at, _) = out
        .model
        .data()
        .iter()
        .zip(initial.data())
        .map(|(a, b)| a - b)
        .enumerate()
        .fold((0, f64::MIN), |best, (i, d)| if d > best.1 { (i, d) } else { best });
    let (x, y, z) = grid.interior().coords(at);
    let dist = ((x as f64 - 12.0).powi(2) + (y as f64 - 12.0).powi(2) + (z as f64 - 12.0).powi(2)).sqrt();
    let in_box = out.model.min() >= 2000.0 && out.model.max() <= 3500.0;
    let on_disk = read_model(&project.final_model(), &grid, Unit::MetersPerSecond).unwrap() == out.model;
    let iter_files = (1..=out.updates).all(|k| project.iteration_model(k).exists());
    let ok = produced == 27 && decreasing && ratio <= 0.2 && dist <= 3.0 && in_box && on_disk && iter_files;
    check(
        ok,
        format!(
            "{produced} seismograms in {:.0} s; {:?} after {} evaluations, {} updates; \
             (a) J strictly decreasing = {decreasing}; (b) J_final/J_0 = {ratio:.3}; \
             (c) max update at ({x},{y},{z}), {dist:.1} cells from centre; (d) v in [{:.0}, {:.0}]",
            report.seconds,
            out.status,
            out.evaluations,
            out.updates,
            out.model.min(),
            out.model.max()
        ),
    )
}

fn scheduler() -> Outcome {
    for seed in 0..100 {
        common::scheduler_instance(seed).map_err(|e| format!("instance {seed}: {e}"))?;
    }
    let (st, ws) = common::skewed_makespans();
    check(
        ws <= 0.7 * st,
        format!("100 random instances exactly-once; skewed makespan ctws {ws} vs static {st} ({:.2})", ws / st),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let extra = "lbfgsb = 2\nlbfgsb_lower_bound = 1800\nlbfgsb_upper_bound = 3200\nn_iter = 4\nmax_viter = 2\n\
                 gradient_preconditioning_mode = 2\n";
    let (cfg, _) = gradient_setup(dir.path(), extra, &serial());
    let project = seiswave::seismic_io::Project::new(&cfg.proj_dir);
    let dobs = read_f64s(&project.observed(0)).unwrap();
    let mut reference: Option<Vec<u64>> = None;
    let mut runs = 0;
    for ws in [false, true] {
        for workers in [1, 2, 4] {
            let mut c = cfg.clone();
            c.ws_flag = ws;
            let opts = RunOptions { workers, ..serial() };
            let mut model_cfg = c.clone();
            model_cfg.vel = "true.bin".into();
            run_modeling(&model_cfg, &opts).unwrap();
            if read_f64s(&project.observed(0)).unwrap() != dobs {
                return Err(format!("modeled data differ with {workers} workers, ws_flag = {ws}"));
            }
            let out = fwi_run(&c, &FwiOptions { run: opts, ..FwiOptions::default() }).unwrap();
            if out.status == Status::LineSearchFailed {
                return Err("line search failed".into());
            }
            let bits: Vec<u64> = read_f64s(&project.final_model()).unwrap().iter().map(|v| v.to_bits()).collect();
            match &reference {
                None => reference = Some(bits),
                Some(r) if *r != bits => return Err(format!("v-final.bin differs with {workers} workers, ws_flag = {ws}")),
                Some(_) => {}
            }
            runs += 1;
        }
    }
    Ok(format!("v-final.bin bitwise identical over {runs} runs (workers 1, 2, 4; static and ctws)"))
}

fn io_round_trips() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..100 {
        common::io_round_trip(dir.path(), seed).map_err(|f| format!("payload {seed}: {f} does not round-trip"))?;
    }
    common::model_layout_fixture(dir.path())?;
    Ok("five formats bitwise on 100 payloads; 2x2x2 fixture matches (ix*ny + iy)*nz + iz".into())
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let minutes = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria = [
        Criterion { name: "adjoint correctness", limit: minutes(2), run: adjoint_correctness },
        Criterion { name: "store equivalence", limit: minutes(3), run: store_equivalence },
        Criterion { name: "checkpoint optimality", limit: Some(Duration::from_secs(10)), run: checkpoint_optimality },
        Criterion { name: "cfl", limit: None, run: cfl_condition },
        Criterion { name: "green's function", limit: minutes(2), run: greens_function },
        Criterion { name: "convergence order", limit: None, run: convergence_order },
        Criterion { name: "end-to-end example", limit: minutes(15), run: end_to_end },
        Criterion { name: "scheduler", limit: None, run: scheduler },
        Criterion { name: "determinism", limit: None, run: determinism },
        Criterion { name: "i/o round-trips", limit: None, run: io_round_trips },
    ];
    let mut failures = 0;
    let mut ran = 0;
    for c in criteria.iter().filter(|c| filters.is_empty() || filters.iter().any(|f| c.name.contains(f.as_str()))) {
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(d), Some(limit)) if elapsed > limit => Err(format!("{d}; exceeded {} s limit", limit.as_secs())),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {} ({:.1} s): {detail}", c.name, elapsed.as_secs_f64());
        failures += usize::from(result.is_err());
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
