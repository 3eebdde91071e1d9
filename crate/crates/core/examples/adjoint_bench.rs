//! Times the phases of one adjoint-state shot on the 25³ example grid.

use std::time::Instant;

use seiswave::inversion::adjoint_shot;
use seiswave::model::{build_constant_model, Grid};
use seiswave::propagator::{ricker, Propagator, PropagatorOptions};
use seiswave::seismic_io::{Coordinate3, ShotRecord};
use seiswave::store::{MemoryStore, WavefieldStore};

fn main() {
    let grid = Grid::cube(25, 10.0, 25);
    let vel = build_constant_model(&grid, 2500.0);
    let prop = Propagator::new(&grid, &vel, None, &PropagatorOptions::new(1e-3)).unwrap();
    let wavelet = ricker(500, 1e-3, 10.0, 1e5).unwrap();
    let mut shot = ShotRecord {
        id: 0,
        source: Coordinate3::new(120.0, 120.0, 120.0),
        receivers: vec![Coordinate3::new(10.0, 10.0, 10.0); 25],
        data: None,
    };
    let t = Instant::now();
    let d = prop.forward_shot(&shot, &wavelet, 500, None).unwrap();
    println!("forward only {:.3}", t.elapsed().as_secs_f64());
    let mut store = MemoryStore::new();
    let t = Instant::now();
    prop.forward_shot(&shot, &wavelet, 500, Some(&mut store as &mut dyn WavefieldStore)).unwrap();
    println!("forward + save (first) {:.3}", t.elapsed().as_secs_f64());
    store.end_shot().unwrap();
    let t = Instant::now();
    prop.forward_shot(&shot, &wavelet, 500, Some(&mut store as &mut dyn WavefieldStore)).unwrap();
    println!("forward + save (reuse) {:.3}", t.elapsed().as_secs_f64());
    store.end_shot().unwrap();
    let mut dd = d.clone();
    dd.trace_mut(0)[100] += 1.0;
    shot.data = Some(dd);
    for _ in 0..2 {
        let t = Instant::now();
        adjoint_shot(&prop, &shot, &wavelet, 500, &mut store).unwrap();
        println!("adjoint shot {:.3}", t.elapsed().as_secs_f64());
    }
}
