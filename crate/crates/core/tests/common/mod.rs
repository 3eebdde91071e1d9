//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seiswave::config::{parse_config, Config};
use seiswave::model::{Field3D, Grid, Shape, Unit};
use seiswave::survey::{write_project, Survey};
use seiswave::workflow::{run_modeling, RunOptions};

/// Parameter-file text for a cubic grid of `n` points at 10 m spacing.
pub fn config_text(dir: &Path, n: usize, border: usize, ns: usize, fpeak: f64, n_src: usize, extra: &str) -> String {
    format!(
        "nx = {n}\nny = {n}\nnz = {n}\ndx = 10.0\ndy = 10.0\ndz = 10.0\nox = 0.0\noy = 0.0\noz = 0.0\n\
         border = {border}\nns = {ns}\ndt = 0.001\nfpeak = {fpeak}\namplitude = 100000\nn_src = {n_src}\n\
         proj_dir = {}\nvel = true.bin\nstencil = 4\n{extra}",
        dir.display()
    )
}

pub fn config(text: &str) -> Config {
    parse_config(text).expect("fixture config parses").config
}

/// The 15³ survey used for gradient checks: four shots at mid depth and a
/// 3×3 receiver plane at 20 m depth.
pub fn small_survey() -> Survey {
    let mut sources = Vec::new();
    for &x in &[40.0, 100.0] {
        for &y in &[40.0, 100.0] {
            sources.push(seiswave::seismic_io::Coordinate3::new(x, y, 70.0));
        }
    }
    let plane = Survey::lattice(&[0.0], &[20.0, 70.0, 120.0], 20.0).receivers[0].clone();
    Survey {
        receivers: vec![plane; sources.len()],
        sources,
    }
}

/// Writes the inputs and models observed data with `true_model`; returns
/// the configuration with `vel` switched to `initial.bin` holding `initial`.
pub fn prepare_inversion(cfg: &Config, survey: &Survey, true_model: &Field3D, initial: &Field3D, opts: &RunOptions) -> Config {
    let project = write_project(cfg, survey, true_model).expect("project written");
    run_modeling(cfg, opts).expect("modeling succeeds");
    let mut inv = cfg.clone();
    inv.vel = "initial.bin".into();
    seiswave::seismic_io::write_model(&project.file(&inv.vel), initial).expect("initial model written");
    inv
}

/// Smooth random field: a sum of three Gaussian bumps of random sign,
/// scaled to unit maximum magnitude.
pub fn smooth_direction(shape: Shape, seed: u64) -> Field3D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<([f64; 3], f64, f64)> = (0..3)
        .map(|_| {
            let c = [
                rng.gen_range(2.0..shape.nx as f64 - 3.0),
                rng.gen_range(2.0..shape.ny as f64 - 3.0),
                rng.gen_range(2.0..shape.nz as f64 - 3.0),
            ];
            (c, rng.gen_range(1.5..3.0), if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        })
        .collect();
    let f = Field3D::from_fn(shape, Unit::MetersPerSecond, |i, j, k| {
        bumps
            .iter()
            .map(|(c, s, a)| {
                let d2 = (i as f64 - c[0]).powi(2) + (j as f64 - c[1]).powi(2) + (k as f64 - c[2]).powi(2);
                a * (-0.5 * d2 / (s * s)).exp()
            })
            .sum()
    });
    let m = f.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    f.map(Unit::MetersPerSecond, |v| v / m)
}

pub fn axpy(a: f64, x: &Field3D, y: &Field3D) -> Field3D {
    let data = x.data().iter().zip(y.data()).map(|(xi, yi)| a * xi + yi).collect();
    Field3D::new(x.shape(), y.unit(), data).unwrap()
}

pub fn dot(a: &Field3D, b: &Field3D) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

pub fn grid_of(cfg: &Config) -> Grid {
    Grid::from_config(cfg, false)
}

/// Arbitrary finite double, drawn over the full bit range.
pub fn finite_f64(rng: &mut impl Rng) -> f64 {
    loop {
        let v = f64::from_bits(rng.gen());
        if v.is_finite() {
            return v;
        }
    }
}

pub fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Writes and re-reads one random payload through each of the five file
/// formats; returns the name of the first format that does not round-trip
/// bitwise.
pub fn io_round_trip(dir: &Path, seed: u64) -> Result<(), String> {
    use seiswave::seismic_io::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coord = |rng: &mut ChaCha8Rng| Coordinate3::new(finite_f64(rng), finite_f64(rng), finite_f64(rng));
    let coords_bits = |c: &[Coordinate3]| c.iter().flat_map(|c| [c.x, c.y, c.z]).collect::<Vec<_>>();

    let n_src = rng.gen_range(0..20);
    let sources: Vec<_> = (0..n_src).map(|_| coord(&mut rng)).collect();
    let p = dir.join("src_coord.bin");
    write_coords(&p, &sources).map_err(|e| e.to_string())?;
    let back = read_source_coords(&p, n_src).map_err(|e| e.to_string())?;
    if !same_bits(&coords_bits(&sources), &coords_bits(&back)) || file_len(&p) != 24 * n_src as u64 {
        return Err("src_coord.bin".into());
    }

    let receivers: Vec<_> = (0..rng.gen_range(0..40)).map(|_| coord(&mut rng)).collect();
    let p = dir.join("rcv_coord_0.bin");
    write_coords(&p, &receivers).map_err(|e| e.to_string())?;
    let back = read_receiver_coords(&p).map_err(|e| e.to_string())?;
    if !same_bits(&coords_bits(&receivers), &coords_bits(&back)) {
        return Err("rcv_coord_i.bin".into());
    }

    let ns = rng.gen_range(0..300);
    let samples: Vec<f64> = (0..ns).map(|_| finite_f64(&mut rng)).collect();
    let p = dir.join("source.bin");
    write_wavelet(&p, &samples).map_err(|e| e.to_string())?;
    if !same_bits(&samples, &read_wavelet(&p, ns).map_err(|e| e.to_string())?) || file_len(&p) != 8 * ns as u64 {
        return Err("source.bin".into());
    }

    let ns = rng.gen_range(1..200);
    let traces = rng.gen_range(0..12);
    let data: Vec<f64> = (0..ns * traces).map(|_| finite_f64(&mut rng)).collect();
    let seis = Seismogram::from_traces(0, ns, 1e-3, data).map_err(|e| e.to_string())?;
    let p = dir.join("dobs_0.bin");
    write_seismogram(&p, &seis).map_err(|e| e.to_string())?;
    let back = read_seismogram(&p, ns, 1e-3, 0).map_err(|e| e.to_string())?;
    if !same_bits(seis.data(), back.data()) || back.n_receivers() != traces || file_len(&p) != (8 * ns * traces) as u64 {
        return Err("dobs_i.bin".into());
    }

    let mut grid = Grid::cube(1, 10.0, 0);
    grid.nx = rng.gen_range(1..9);
    grid.ny = rng.gen_range(1..9);
    grid.nz = rng.gen_range(1..9);
    let field = Field3D::from_fn(grid.interior(), Unit::MetersPerSecond, |_, _, _| finite_f64(&mut rng));
    let p = dir.join("v-final.bin");
    write_model(&p, &field).map_err(|e| e.to_string())?;
    let back = read_model(&p, &grid, Unit::MetersPerSecond).map_err(|e| e.to_string())?;
    if !same_bits(field.data(), back.data()) || file_len(&p) != (8 * grid.interior().len()) as u64 {
        return Err("model".into());
    }
    Ok(())
}

fn file_len(p: &Path) -> u64 {
    std::fs::metadata(p).map(|m| m.len()).unwrap_or(u64::MAX)
}

/// A 2×2×2 model with value `100·ix + 10·iy + iz` must be stored with z
/// fastest: the file holds 0, 1, 10, 11, 100, 101, 110, 111.
pub fn model_layout_fixture(dir: &Path) -> Result<(), String> {
    use seiswave::seismic_io::{read_f64s, read_model, write_model};
    let grid = Grid::cube(2, 10.0, 0);
    let field = Field3D::from_fn(grid.interior(), Unit::MetersPerSecond, |i, j, k| {
        (100 * i + 10 * j + k) as f64
    });
    let p = dir.join("fixture.bin");
    write_model(&p, &field).map_err(|e| e.to_string())?;
    let raw = read_f64s(&p).map_err(|e| e.to_string())?;
    let expect = [0.0, 1.0, 10.0, 11.0, 100.0, 101.0, 110.0, 111.0];
    if raw != expect {
        return Err(format!("file order {raw:?}"));
    }
    let bytes = std::fs::read(&p).map_err(|e| e.to_string())?;
    if bytes[8..16] != 1.0f64.to_le_bytes() {
        return Err("not little-endian".into());
    }
    let back = read_model(&p, &grid, Unit::MetersPerSecond).map_err(|e| e.to_string())?;
    if back.get(1, 0, 1) != 101.0 || back.get(0, 1, 0) != 10.0 {
        return Err("reader disagrees with the offset formula".into());
    }
    Ok(())
}

/// One randomized scheduling instance: the simulated schedule and a real
/// thread pool must each run every shot exactly once in both modes.
pub fn scheduler_instance(seed: u64) -> Result<(), String> {
    use seiswave::scheduler::{run_pool, simulate_makespan, ScheduleMode};
    use std::sync::atomic::{AtomicUsize, Ordering};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_shots = rng.gen_range(0..60);
    let n_workers = rng.gen_range(1..9);
    let costs: Vec<f64> = (0..n_shots * n_workers).map(|_| rng.gen_range(0.1..10.0)).collect();
    for mode in [ScheduleMode::Static, ScheduleMode::Ctws] {
        let sim = simulate_makespan(n_shots, n_workers, mode, |s, w| costs[s * n_workers + w]);
        let mut seen: Vec<usize> = sim.executed.iter().flatten().copied().collect();
        seen.sort_unstable();
        if seen != (0..n_shots).collect::<Vec<_>>() {
            return Err(format!("{mode:?} simulation ran {seen:?} for {n_shots} shots on {n_workers} workers"));
        }
        let claims: Vec<AtomicUsize> = (0..n_shots).map(|_| AtomicUsize::new(0)).collect();
        let out = run_pool(n_shots, n_workers, mode, |s, w| {
            claims[s].fetch_add(1, Ordering::SeqCst);
            let spin = (costs[s * n_workers + w] * 2000.0) as u64;
            Ok((0..spin).fold(s as u64, |a, b| a.wrapping_mul(31).wrapping_add(b)))
        })
        .map_err(|e| e.to_string())?;
        if let Some(s) = claims.iter().position(|c| c.load(Ordering::SeqCst) != 1) {
            return Err(format!("{mode:?} pool ran shot {s} {} times", claims[s].load(Ordering::SeqCst)));
        }
        if out.results.len() != n_shots || out.worker_of.iter().any(|&w| w >= n_workers) {
            return Err(format!("{mode:?} pool returned malformed output"));
        }
    }
    Ok(())
}

/// Makespans `(static, ctws)` with worker 1 ten times slower than worker 0
/// on 32 unit-cost shots.
pub fn skewed_makespans() -> (f64, f64) {
    use seiswave::scheduler::{simulate_makespan, ScheduleMode};
    let cost = |_: usize, w: usize| if w == 1 { 10.0 } else { 1.0 };
    (
        simulate_makespan(32, 2, ScheduleMode::Static, cost).makespan,
        simulate_makespan(32, 2, ScheduleMode::Ctws, cost).makespan,
    )
}

pub fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1u64, |acc, i| acc * (n + 1 - i) / i)
}

/// Closed-form minimal advance count for reversing `l` states with `s`
/// snapshots beyond the initial state.
pub fn griewank_advances(l: u64, s: u64) -> u64 {
    if l <= 1 {
        return 0;
    }
    let beta = |s: u64, r: u64| binomial(s + r, s);
    let r = (1..).find(|&r| beta(s, r - 1) < l && l <= beta(s, r)).unwrap();
    r * l - beta(s + 1, r - 1)
}

/// Brute-force recurrence over the position of the first snapshot.
pub fn dp_advances(ns: usize, slots: usize) -> Vec<Vec<u64>> {
    let mut w = vec![vec![u64::MAX; slots + 1]; ns + 1];
    for s in 0..=slots {
        w[1][s] = 0;
    }
    for l in 2..=ns {
        for s in 1..=slots {
            w[l][s] = (1..l)
                .filter(|&k| w[l - k][s - 1] != u64::MAX)
                .map(|k| k as u64 + w[l - k][s - 1] + w[k][s])
                .min()
                .unwrap();
        }
    }
    w
}

/// First `(ns, slots)` pair with `ns ≤ max_ns`, `slots ≤ max_slots` whose
/// plan is invalid or not optimal, if any.
pub fn checkpoint_optimality(max_ns: usize, max_slots: usize) -> Option<String> {
    use seiswave::store::plan_checkpoints;
    let dp = dp_advances(max_ns, max_slots);
    for ns in 1..=max_ns {
        for s in 1..=max_slots {
            let plan = match plan_checkpoints(ns, s) {
                Ok(p) => p,
                Err(e) => return Some(format!("ns = {ns}, s = {s}: {e}")),
            };
            if let Err(e) = plan.validate() {
                return Some(format!("ns = {ns}, s = {s}: {e}"));
            }
            if plan.advance_count() != dp[ns][s] {
                return Some(format!("ns = {ns}, s = {s}: {} advances, optimum {}", plan.advance_count(), dp[ns][s]));
            }
        }
    }
    None
}
