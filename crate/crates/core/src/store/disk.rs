use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::model::Shape;
use crate::propagator::WaveState;
use crate::{Error, Result};

use super::{Replay, StoreKind, Sweep, WavefieldStore};

/// Appends forward fields to a per-shot scratch file of little-endian
/// doubles and reads them back.
#[derive(Debug)]
pub struct DiskStore {
    dir: PathBuf,
    path: Option<PathBuf>,
    writer: Option<BufWriter<File>>,
    reader: Option<File>,
    len: usize,
    buf: Vec<f64>,
    bytes: Vec<u8>,
    sweep: Sweep,
}

impl DiskStore {
    /// Scratch files are created in `dir` as `shot_<i>.wf`.
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DiskStore {
            dir: dir.into(),
            path: None,
            writer: None,
            reader: None,
            len: 0,
            buf: Vec::new(),
            bytes: Vec::new(),
            sweep: Sweep::default(),
        }
    }

    pub fn scratch_path(&self, shot: usize) -> PathBuf {
        self.dir.join(format!("shot_{shot}.wf"))
    }

    /// Path of the scratch file of the shot in progress.
    pub fn current_path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    fn finish_writing(&mut self) -> Result<()> {
        if let Some(mut w) = self.writer.take() {
            let path = self.path.clone().unwrap_or_default();
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        if self.reader.is_none() {
            let path = self.path.clone().ok_or_else(|| Error::Store("no scratch file".into()))?;
            self.reader = Some(File::open(&path).map_err(|e| Error::io(&path, e))?);
        }
        Ok(())
    }
}

impl WavefieldStore for DiskStore {
    fn kind(&self) -> StoreKind {
        StoreKind::Disk
    }

    fn begin_shot(&mut self, shot: usize, ns: usize, shape: Shape) -> Result<()> {
        if self.path.is_some() {
            self.end_shot()?;
        }
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.scratch_path(shot);
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;
        self.writer = Some(BufWriter::with_capacity(1 << 20, file));
        self.path = Some(path);
        self.len = shape.len();
        self.buf.resize(self.len, 0.0);
        self.bytes.resize(self.len * 8, 0);
        self.sweep.begin(ns);
        Ok(())
    }

    fn save(&mut self, t: usize, state: &WaveState) -> Result<()> {
        self.sweep.check_save(t)?;
        state.copy_current(&mut self.buf);
        for (chunk, v) in self.bytes.chunks_exact_mut(8).zip(&self.buf) {
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        let path = self.path.clone().unwrap_or_default();
        let w = self
            .writer
            .as_mut()
            .ok_or_else(|| Error::Store("save after the forward sweep".into()))?;
        w.write_all(&self.bytes).map_err(|e| Error::io(path, e))
    }

    fn retrieve(&mut self, t: usize, _replay: &mut dyn Replay, out: &mut Vec<f64>) -> Result<()> {
        self.sweep.check_retrieve(t)?;
        out.resize(self.len, 0.0);
        self.finish_writing()?;
        let path = self.path.clone().unwrap_or_default();
        let r = self.reader.as_mut().expect("reader opened");
        r.seek(SeekFrom::Start((t * self.len * 8) as u64))
            .and_then(|_| r.read_exact(&mut self.bytes))
            .map_err(|e| Error::io(&path, e))?;
        for (o, chunk) in out.iter_mut().zip(self.bytes.chunks_exact(8)) {
            *o = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Ok(())
    }

    fn end_shot(&mut self) -> Result<()> {
        self.writer = None;
        self.reader = None;
        self.sweep.active = false;
        if let Some(path) = self.path.take() {
            if let Err(e) = fs::remove_file(&path) {
                log::warn!("could not delete scratch file {}: {e}", path.display());
            }
        }
        Ok(())
    }

    fn allocated_bytes(&self) -> usize {
        (self.buf.len() + self.bytes.len() / 8) * 8
    }
}

impl Drop for DiskStore {
    fn drop(&mut self) {
        let _ = self.end_shot();
    }
}
