use crate::model::Shape;
use crate::propagator::WaveState;
use crate::Result;

use super::{Replay, StoreKind, Sweep, WavefieldStore};

/// Keeps every forward field in memory. Buffers are reused across shots.
#[derive(Debug, Default)]
pub struct MemoryStore {
    fields: Vec<Vec<f64>>,
    len: usize,
    sweep: Sweep,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl WavefieldStore for MemoryStore {
    fn kind(&self) -> StoreKind {
        StoreKind::Memory
    }

    fn begin_shot(&mut self, _shot: usize, ns: usize, shape: Shape) -> Result<()> {
        self.sweep.begin(ns);
        if self.len != shape.len() {
            self.fields.clear();
            self.len = shape.len();
        }
        while self.fields.len() < ns {
            self.fields.push(vec![0.0; self.len]);
        }
        Ok(())
    }

    fn save(&mut self, t: usize, state: &WaveState) -> Result<()> {
        self.sweep.check_save(t)?;
        state.copy_current(&mut self.fields[t]);
        Ok(())
    }

    fn retrieve(&mut self, t: usize, _replay: &mut dyn Replay, out: &mut Vec<f64>) -> Result<()> {
        self.sweep.check_retrieve(t)?;
        out.resize(self.len, 0.0);
        std::mem::swap(out, &mut self.fields[t]);
        Ok(())
    }

    fn end_shot(&mut self) -> Result<()> {
        self.sweep.active = false;
        Ok(())
    }

    fn allocated_bytes(&self) -> usize {
        self.fields.iter().map(|f| f.len() * 8).sum()
    }
}
