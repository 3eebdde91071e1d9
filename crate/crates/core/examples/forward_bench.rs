//! Times one forward shot on a cube: `forward_bench [n] [nb] [steps]`.

use std::time::Instant;

use seiswave::model::{build_constant_model, Grid};
use seiswave::propagator::{ricker, Propagator, PropagatorOptions};
use seiswave::seismic_io::{Coordinate3, ShotRecord};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let n = args.first().copied().unwrap_or(25);
    let nb = args.get(1).copied().unwrap_or(25);
    let steps = args.get(2).copied().unwrap_or(500);
    let grid = Grid::cube(n, 10.0, nb);
    let vel = build_constant_model(&grid, 2500.0);
    let prop = Propagator::new(&grid, &vel, None, &PropagatorOptions::new(1e-3)).expect("propagator");
    let wavelet = ricker(steps, 1e-3, 10.0, 1e5).expect("wavelet");
    let c = (n / 2) as f64 * 10.0;
    let shot = ShotRecord {
        id: 0,
        source: Coordinate3::new(c, c, c),
        receivers: vec![Coordinate3::new(0.0, 0.0, 0.0)],
        data: None,
    };
    let start = Instant::now();
    let seis = prop.forward_shot(&shot, &wavelet, steps, None).expect("forward");
    let secs = start.elapsed().as_secs_f64();
    let points = grid.extended().len() as f64 * steps as f64;
    println!(
        "{}^3 extended, {steps} steps: {secs:.3} s ({:.2} ns/point), last sample {:e}",
        grid.extended().nx,
        secs * 1e9 / points,
        seis.sample(0, steps - 1)
    );
}
