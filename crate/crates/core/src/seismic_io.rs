//! Raw binary files exchanged through the project directory.
//!
//! Every file is a flat sequence of little-endian IEEE-754 doubles with no
//! header:
//!
//! | file               | content                                            |
//! |--------------------|----------------------------------------------------|
//! | `src_coord.bin`    | one `(x, y, z)` triple per shot, in shot-ID order   |
//! | `rcv_coord_<i>.bin`| `(x, y, z)` per receiver of shot `i`, in trace order|
//! | `source.bin`       | `ns` wavelet samples                               |
//! | `dobs_<i>.bin`     | trace-major seismogram: trace 0's `ns` samples, … |
//! | models             | `nx·ny·nz` values, x slowest and z fastest         |

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::model::{Field3D, Grid, Unit};
use crate::{Error, Result};

const F64: u64 = std::mem::size_of::<f64>() as u64;

/// A point in meters, stored in the order `(x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coordinate3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Coordinate3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Coordinate3 { x, y, z }
    }

    pub fn distance(&self, other: &Coordinate3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

/// Receiver-by-time samples of one shot, stored trace-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Seismogram {
    pub shot: usize,
    pub dt: f64,
    ns: usize,
    n_receivers: usize,
    data: Vec<f64>,
}

impl Seismogram {
    pub fn zeros(shot: usize, n_receivers: usize, ns: usize, dt: f64) -> Self {
        Seismogram {
            shot,
            dt,
            ns,
            n_receivers,
            data: vec![0.0; n_receivers * ns],
        }
    }

    pub fn from_traces(shot: usize, ns: usize, dt: f64, data: Vec<f64>) -> Result<Self> {
        let n_receivers = match (ns, data.len()) {
            (0, 0) => 0,
            (0, _) => return Err(Error::InvalidArgument("samples given for ns = 0".into())),
            (ns, len) if len % ns == 0 => len / ns,
            (ns, len) => {
                return Err(Error::InvalidArgument(format!(
                    "{len} samples is not a whole number of {ns}-sample traces"
                )))
            }
        };
        Ok(Seismogram {
            shot,
            dt,
            ns,
            n_receivers,
            data,
        })
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn n_receivers(&self) -> usize {
        self.n_receivers
    }

    pub fn trace(&self, r: usize) -> &[f64] {
        &self.data[r * self.ns..(r + 1) * self.ns]
    }

    pub fn trace_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.ns..(r + 1) * self.ns]
    }

    #[inline]
    pub fn sample(&self, r: usize, n: usize) -> f64 {
        self.data[r * self.ns + n]
    }

    #[inline]
    pub fn set_sample(&mut self, r: usize, n: usize, value: f64) {
        self.data[r * self.ns + n] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Acquisition geometry of one shot, with optional recorded data.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRecord {
    pub id: usize,
    pub source: Coordinate3,
    /// Receiver order matches trace order.
    pub receivers: Vec<Coordinate3>,
    pub data: Option<Seismogram>,
}

fn file_len(path: &Path) -> Result<u64> {
    Ok(std::fs::metadata(path).map_err(|e| Error::io(path, e))?.len())
}

/// Reads a whole file of little-endian doubles.
pub fn read_f64s(path: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() as u64 % F64 != 0 {
        let actual = bytes.len() as u64;
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected: actual - actual % F64,
            actual,
        });
    }
    Ok(bytes
        .chunks_exact(F64 as usize)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn read_exact_count(path: &Path, count: usize) -> Result<Vec<f64>> {
    let expected = count as u64 * F64;
    let actual = file_len(path)?;
    if actual != expected {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    read_f64s(path)
}

/// Writes doubles as little-endian bytes, replacing any existing file.
pub fn write_f64s(path: &Path, values: &[f64]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn check_finite(path: &Path, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            path: path.to_path_buf(),
            index,
        }),
        None => Ok(()),
    }
}

fn to_coords(values: Vec<f64>) -> Vec<Coordinate3> {
    values
        .chunks_exact(3)
        .map(|c| Coordinate3::new(c[0], c[1], c[2]))
        .collect()
}

pub fn write_coords(path: &Path, coords: &[Coordinate3]) -> Result<()> {
    let flat: Vec<f64> = coords.iter().flat_map(|c| [c.x, c.y, c.z]).collect();
    write_f64s(path, &flat)
}

/// Reads `n_src` source coordinates sorted by shot ID.
pub fn read_source_coords(path: &Path, n_src: usize) -> Result<Vec<Coordinate3>> {
    let values = read_exact_count(path, 3 * n_src)?;
    check_finite(path, &values)?;
    Ok(to_coords(values))
}

/// Reads a receiver file; the count follows from the file size.
pub fn read_receiver_coords(path: &Path) -> Result<Vec<Coordinate3>> {
    let actual = file_len(path)?;
    if actual % (3 * F64) != 0 {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected: actual - actual % (3 * F64),
            actual,
        });
    }
    let values = read_f64s(path)?;
    check_finite(path, &values)?;
    Ok(to_coords(values))
}

pub fn read_wavelet(path: &Path, ns: usize) -> Result<Vec<f64>> {
    let values = read_exact_count(path, ns)?;
    check_finite(path, &values)?;
    Ok(values)
}

pub fn write_wavelet(path: &Path, samples: &[f64]) -> Result<()> {
    write_f64s(path, samples)
}

/// Reads a trace-major seismogram of `ns`-sample traces.
pub fn read_seismogram(path: &Path, ns: usize, dt: f64, shot: usize) -> Result<Seismogram> {
    let actual = file_len(path)?;
    let trace_bytes = ns as u64 * F64;
    if (trace_bytes == 0 && actual != 0) || (trace_bytes != 0 && actual % trace_bytes != 0) {
        return Err(Error::SizeMismatch {
            path: path.to_path_buf(),
            expected: if trace_bytes == 0 { 0 } else { actual - actual % trace_bytes },
            actual,
        });
    }
    let values = read_f64s(path)?;
    check_finite(path, &values)?;
    Seismogram::from_traces(shot, ns, dt, values)
}

pub fn write_seismogram(path: &Path, seismogram: &Seismogram) -> Result<()> {
    write_f64s(path, seismogram.data())
}

/// Reads an interior-sized model (`nx·ny·nz` doubles, z fastest).
pub fn read_model(path: &Path, grid: &Grid, unit: Unit) -> Result<Field3D> {
    let shape = grid.interior();
    let values = read_exact_count(path, shape.len())?;
    check_finite(path, &values)?;
    Field3D::new(shape, unit, values)
}

pub fn write_model(path: &Path, field: &Field3D) -> Result<()> {
    write_f64s(path, field.data())
}

/// File names inside the project directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Project {
    pub root: PathBuf,
}

impl Project {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Project { root: root.into() }
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn source_wavelet(&self) -> PathBuf {
        self.file("source.bin")
    }

    pub fn source_coords(&self) -> PathBuf {
        self.file("src_coord.bin")
    }

    pub fn receiver_coords(&self, shot: usize) -> PathBuf {
        self.file(&format!("rcv_coord_{shot}.bin"))
    }

    pub fn observed(&self, shot: usize) -> PathBuf {
        self.file(&format!("dobs_{shot}.bin"))
    }

    pub fn iteration_model(&self, k: usize) -> PathBuf {
        self.file(&format!("v-iter-{k}.bin"))
    }

    pub fn final_model(&self) -> PathBuf {
        self.file("v-final.bin")
    }

    pub fn scratch_dir(&self) -> PathBuf {
        self.file("scratch")
    }
}
