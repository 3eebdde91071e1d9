//! Wavefield stores returning forward states during the backward sweep.

mod common;

use seiswave::inversion::adjoint_shot;
use seiswave::model::{build_gaussian_sphere_model, Grid};
use seiswave::propagator::{ricker, Propagator, PropagatorOptions, SourceWavelet};
use seiswave::seismic_io::{Coordinate3, Seismogram, ShotRecord};
use seiswave::store::{optimal_advances, CheckpointStore, DiskStore, MemoryStore, WavefieldStore};

const NS: usize = 80;

fn setup() -> (Propagator, ShotRecord, SourceWavelet) {
    let g = Grid::cube(15, 10.0, 5);
    let vel = build_gaussian_sphere_model(&g, 2000.0, 3.0).unwrap();
    let prop = Propagator::new(&g, &vel, None, &PropagatorOptions::new(1e-3)).unwrap();
    let shot = ShotRecord {
        id: 3,
        source: Coordinate3::new(40.0, 70.0, 60.0),
        receivers: vec![Coordinate3::new(100.0, 70.0, 20.0), Coordinate3::new(20.0, 120.0, 20.0)],
        data: None,
    };
    (prop, shot, ricker(NS, 1e-3, 30.0, 1e5).unwrap())
}

/// Every stored state, retrieved from the last step down to the first.
fn reversed_states(store: &mut dyn WavefieldStore) -> Vec<Vec<f64>> {
    let (prop, shot, w) = setup();
    prop.forward_shot(&shot, &w, NS, Some(&mut *store)).unwrap();
    let src = prop.locate(shot.source).unwrap();
    let mut replay = prop.replay(src, &w);
    let mut out = Vec::new();
    let mut states = Vec::new();
    for t in (0..NS).rev() {
        store.retrieve(t, &mut replay, &mut out).unwrap();
        states.push(out.clone());
    }
    store.end_shot().unwrap();
    states
}

#[test]
fn all_stores_return_identical_states() {
    let reference = reversed_states(&mut MemoryStore::new());
    let dir = tempfile::tempdir().unwrap();
    let disk = reversed_states(&mut DiskStore::new(dir.path()));
    assert_eq!(disk, reference);
    for slots in [1, 2, 5, 12] {
        let chk = reversed_states(&mut CheckpointStore::new(slots));
        assert_eq!(chk, reference, "checkpointing with {slots} slots");
    }
    assert!(reference[0].iter().any(|v| *v != 0.0));
}

#[test]
fn disk_scratch_file_holds_every_state() {
    let (prop, shot, w) = setup();
    let dir = tempfile::tempdir().unwrap();
    let mut store = DiskStore::new(dir.path());
    prop.forward_shot(&shot, &w, NS, Some(&mut store)).unwrap();
    let src = prop.locate(shot.source).unwrap();
    let mut out = Vec::new();
    store.retrieve(NS - 1, &mut prop.replay(src, &w), &mut out).unwrap();
    let path = store.current_path().unwrap().to_path_buf();
    let bytes = std::fs::metadata(&path).unwrap().len();
    assert_eq!(bytes, (NS * prop.extended_shape().len() * 8) as u64);
    store.end_shot().unwrap();
    assert!(!path.exists(), "scratch file removed after the shot");
}

#[test]
fn checkpointing_without_pressure_recomputes_nothing() {
    let mut store = CheckpointStore::new(NS);
    reversed_states(&mut store);
    assert_eq!(store.recomputed_steps(), 0);
}

#[test]
fn checkpointing_recomputation_is_minimal_and_within_slots() {
    for slots in [1, 3, 6] {
        let mut store = CheckpointStore::new(slots);
        reversed_states(&mut store);
        let minimal = optimal_advances(NS, slots).unwrap() - (NS as u64 - 1);
        assert_eq!(store.recomputed_steps(), minimal, "{slots} slots");
        assert!(store.peak_live() <= slots);
    }
}

#[test]
fn gradient_kernel_is_store_independent() {
    let (prop, mut shot, w) = setup();
    let clean = prop.forward_shot(&shot, &w, NS, None).unwrap();
    let mut observed = Seismogram::zeros(shot.id, 2, NS, 1e-3);
    for r in 0..2 {
        for n in 0..NS {
            observed.set_sample(r, n, 0.9 * clean.sample(r, n));
        }
    }
    shot.data = Some(observed);
    let dir = tempfile::tempdir().unwrap();
    let mut stores: Vec<Box<dyn WavefieldStore>> = vec![
        Box::new(MemoryStore::new()),
        Box::new(DiskStore::new(dir.path())),
        Box::new(CheckpointStore::new(5)),
    ];
    let kernels: Vec<_> = stores
        .iter_mut()
        .map(|s| adjoint_shot(&prop, &shot, &w, NS, s.as_mut()).unwrap())
        .collect();
    let scale = kernels[0].kernel.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(scale > 0.0);
    for k in &kernels[1..] {
        assert_eq!(k.misfit, kernels[0].misfit);
        let worst = k
            .kernel
            .data()
            .iter()
            .zip(kernels[0].kernel.data())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(worst <= 1e-12 * scale);
    }
}
