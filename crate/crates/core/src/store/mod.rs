//! Forward-wavefield management for the backward (adjoint) sweep.
//!
//! Stores receive the field after every forward step `t = 0..ns` and hand
//! them back in strictly decreasing order of `t`.

mod checkpoint;
mod disk;
mod memory;
pub mod plan;

use std::fmt;
use std::str::FromStr;

use crate::model::Shape;
use crate::propagator::WaveState;
use crate::Result;

pub use checkpoint::CheckpointStore;
pub use disk::DiskStore;
pub use memory::MemoryStore;
pub use plan::{optimal_advances, plan_checkpoints, Action, CheckpointPlan, SlotRef};

/// Forward re-computation capability offered to stores during retrieval.
pub trait Replay {
    /// Makes `(prev, curr)` the current pair; `curr` is the state at step `t`.
    fn load(&mut self, t: usize, prev: &[f64], curr: &[f64]);
    /// Runs one more forward step.
    fn advance(&mut self) -> Result<()>;
    /// Step index of the current state, if one is loaded.
    fn position(&self) -> Option<usize>;
    fn copy_pair(&self, prev: &mut [f64], curr: &mut [f64]);
    fn copy_current(&self, out: &mut [f64]);
}

/// A replay that cannot recompute anything.
pub struct NoReplay;

impl Replay for NoReplay {
    fn load(&mut self, _: usize, _: &[f64], _: &[f64]) {}

    fn advance(&mut self) -> Result<()> {
        Err(crate::Error::Store("this store cannot recompute wavefields".into()))
    }

    fn position(&self) -> Option<usize> {
        None
    }

    fn copy_pair(&self, _: &mut [f64], _: &mut [f64]) {}

    fn copy_current(&self, _: &mut [f64]) {}
}

pub trait WavefieldStore: Send {
    fn kind(&self) -> StoreKind;
    /// Prepares for a shot of `ns` steps on fields of the given shape.
    fn begin_shot(&mut self, shot: usize, ns: usize, shape: Shape) -> Result<()>;
    /// Offers the state after forward step `t`.
    fn save(&mut self, t: usize, state: &WaveState) -> Result<()>;
    /// Puts the forward field at step `t` into `out`, resized to the field
    /// length. The buffer may be exchanged with an internal one, since a
    /// retrieved step is never requested again.
    fn retrieve(&mut self, t: usize, replay: &mut dyn Replay, out: &mut Vec<f64>) -> Result<()>;
    /// Releases per-shot resources; the store may then begin another shot.
    fn end_shot(&mut self) -> Result<()>;
    /// Bytes of field storage currently held in memory.
    fn allocated_bytes(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoreKind {
    Memory,
    Disk,
    Checkpoint,
}

impl fmt::Display for StoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StoreKind::Memory => "memory",
            StoreKind::Disk => "disk",
            StoreKind::Checkpoint => "checkpoint",
        })
    }
}

impl FromStr for StoreKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "memory" => Ok(StoreKind::Memory),
            "disk" => Ok(StoreKind::Disk),
            "checkpoint" => Ok(StoreKind::Checkpoint),
            other => Err(format!("unknown store `{other}` (expected memory, disk or checkpoint)")),
        }
    }
}

/// Snapshot slots affordable within a memory budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotBudget {
    pub slots: usize,
    /// Set when one snapshot alone exceeds the budget.
    pub clamped: bool,
}

/// `floor(check_mem·budget/field_bytes)`, at least one.
pub fn slots_from_budget(check_mem: f64, mem_budget_bytes: u64, field_bytes: u64) -> SlotBudget {
    let raw = (check_mem * mem_budget_bytes as f64 / field_bytes.max(1) as f64).floor();
    if raw < 1.0 {
        log::warn!(
            "a checkpoint of {field_bytes} bytes exceeds {check_mem} of the {mem_budget_bytes}-byte budget; using one slot"
        );
        SlotBudget { slots: 1, clamped: true }
    } else {
        SlotBudget {
            slots: raw as usize,
            clamped: false,
        }
    }
}

/// Tracks the strictly decreasing retrieval order shared by all stores.
#[derive(Debug, Default)]
pub(crate) struct Sweep {
    pub ns: usize,
    pub active: bool,
    pub last: Option<usize>,
    pub saved: usize,
}

impl Sweep {
    pub fn begin(&mut self, ns: usize) {
        *self = Sweep {
            ns,
            active: true,
            last: None,
            saved: 0,
        };
    }

    pub fn check_save(&mut self, t: usize) -> Result<()> {
        if !self.active {
            return Err(crate::Error::Store("save outside a shot".into()));
        }
        if t != self.saved || t >= self.ns {
            return Err(crate::Error::Store(format!(
                "expected save of step {}, got {t}",
                self.saved
            )));
        }
        self.saved += 1;
        Ok(())
    }

    pub fn check_retrieve(&mut self, t: usize) -> Result<()> {
        if !self.active {
            return Err(crate::Error::Store("retrieve outside a shot".into()));
        }
        if self.saved != self.ns {
            return Err(crate::Error::Store(format!(
                "retrieve before the forward sweep finished ({} of {} steps saved)",
                self.saved, self.ns
            )));
        }
        let ok = match self.last {
            None => t < self.ns,
            Some(prev) => t < prev,
        };
        if !ok {
            return Err(crate::Error::Store(format!(
                "retrieval of step {t} out of order (previous {:?})",
                self.last
            )));
        }
        self.last = Some(t);
        Ok(())
    }
}
