//! Synthetic acquisition layouts and project-directory generation.

use crate::config::Config;
use crate::model::Field3D;
use crate::propagator::ricker;
use crate::seismic_io::{write_coords, write_model, write_wavelet, Coordinate3, Project};
use crate::{Error, Result};

/// Source positions and per-shot receiver positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Survey {
    pub sources: Vec<Coordinate3>,
    pub receivers: Vec<Vec<Coordinate3>>,
}

fn lattice(xs: &[f64], ys: &[f64], zs: &[f64]) -> Vec<Coordinate3> {
    let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &x in xs {
        for &y in ys {
            for &z in zs {
                out.push(Coordinate3 { x, y, z });
            }
        }
    }
    out
}

impl Survey {
    /// Sources on the lattice `src_axis³`; every shot records the same
    /// receiver plane `rcv_axis² × {rcv_depth}`.
    pub fn lattice(src_axis: &[f64], rcv_axis: &[f64], rcv_depth: f64) -> Self {
        let sources = lattice(src_axis, src_axis, src_axis);
        let plane = lattice(rcv_axis, rcv_axis, &[rcv_depth]);
        Survey {
            receivers: vec![plane; sources.len()],
            sources,
        }
    }

    /// 27 sources at 20, 120 and 220 m per axis and 25 receivers at 10 m
    /// depth spaced 50 m from 10 to 210 m.
    pub fn example() -> Self {
        Survey::lattice(&[20.0, 120.0, 220.0], &[10.0, 60.0, 110.0, 160.0, 210.0], 10.0)
    }

    pub fn n_shots(&self) -> usize {
        self.sources.len()
    }
}

/// Writes the modeling inputs of `cfg` into its `proj_dir`: a Ricker
/// `source.bin`, `src_coord.bin`, one `rcv_coord_<i>.bin` per shot, and the
/// interior velocity model under the name `cfg.vel`.
pub fn write_project(cfg: &Config, survey: &Survey, velocity: &Field3D) -> Result<Project> {
    if survey.n_shots() != cfg.n_src || survey.receivers.len() != survey.sources.len() {
        return Err(Error::InvalidArgument(format!(
            "survey has {} sources and {} receiver sets, config expects {} shots",
            survey.sources.len(),
            survey.receivers.len(),
            cfg.n_src
        )));
    }
    std::fs::create_dir_all(&cfg.proj_dir).map_err(|e| Error::io(&cfg.proj_dir, e))?;
    let project = Project::new(&cfg.proj_dir);
    let wavelet = ricker(cfg.ns, cfg.dt, cfg.fpeak, cfg.amplitude)?;
    write_wavelet(&project.source_wavelet(), &wavelet.samples)?;
    write_coords(&project.source_coords(), &survey.sources)?;
    for (i, rcv) in survey.receivers.iter().enumerate() {
        write_coords(&project.receiver_coords(i), rcv)?;
    }
    write_model(&project.file(&cfg.vel), velocity)?;
    Ok(project)
}
