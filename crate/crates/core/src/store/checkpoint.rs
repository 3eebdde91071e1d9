use std::path::PathBuf;

use crate::model::Shape;
use crate::propagator::WaveState;
use crate::seismic_io::write_f64s;
use crate::{Error, Result};

use super::plan::{plan_checkpoints, Action, CheckpointPlan, SlotRef};
use super::{Replay, StoreKind, Sweep, WavefieldStore};

type Pair = (Vec<f64>, Vec<f64>);

/// Keeps at most `slots` state pairs and recomputes the rest following an
/// optimal [`CheckpointPlan`].
#[derive(Debug)]
pub struct CheckpointStore {
    slots: usize,
    plan: Option<CheckpointPlan>,
    /// Slot assigned to each step during the forward sweep.
    forward_slot: Vec<Option<usize>>,
    base: Pair,
    bufs: Vec<Pair>,
    held: Vec<Option<usize>>,
    last: Vec<f64>,
    len: usize,
    cursor: usize,
    replaying: bool,
    recomputed: u64,
    peak_live: usize,
    shot: usize,
    dump_dir: Option<PathBuf>,
    sweep: Sweep,
}

impl CheckpointStore {
    pub fn new(slots: usize) -> Self {
        CheckpointStore {
            slots,
            plan: None,
            forward_slot: Vec::new(),
            base: (Vec::new(), Vec::new()),
            bufs: Vec::new(),
            held: Vec::new(),
            last: Vec::new(),
            len: 0,
            cursor: 0,
            replaying: false,
            recomputed: 0,
            peak_live: 0,
            shot: 0,
            dump_dir: None,
            sweep: Sweep::default(),
        }
    }

    /// Writes the snapshot buffers of every shot to `dir/chkbuf_<shot>.bin`
    /// once its forward sweep ends.
    pub fn with_dump_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dump_dir = Some(dir.into());
        self
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn plan(&self) -> Option<&CheckpointPlan> {
        self.plan.as_ref()
    }

    /// Forward steps recomputed so far in the current shot.
    pub fn recomputed_steps(&self) -> u64 {
        self.recomputed
    }

    /// Largest number of simultaneously held snapshots in the current shot.
    pub fn peak_live(&self) -> usize {
        self.peak_live
    }

    fn live(&self) -> usize {
        self.held.iter().filter(|h| h.is_some()).count()
    }

    fn dump(&self) -> Result<()> {
        let Some(dir) = &self.dump_dir else {
            return Ok(());
        };
        let mut data = Vec::with_capacity(self.len * 2 * (self.live() + 1));
        data.extend_from_slice(&self.base.0);
        data.extend_from_slice(&self.base.1);
        for (i, h) in self.held.iter().enumerate() {
            if h.is_some() {
                data.extend_from_slice(&self.bufs[i].0);
                data.extend_from_slice(&self.bufs[i].1);
            }
        }
        write_f64s(&dir.join(format!("chkbuf_{}.bin", self.shot)), &data)
    }
}

impl WavefieldStore for CheckpointStore {
    fn kind(&self) -> StoreKind {
        StoreKind::Checkpoint
    }

    fn begin_shot(&mut self, shot: usize, ns: usize, shape: Shape) -> Result<()> {
        if ns == 0 {
            self.sweep.begin(0);
            return Ok(());
        }
        if self.plan.as_ref().map(|p| p.ns()) != Some(ns) {
            let plan = plan_checkpoints(ns, self.slots)?;
            self.forward_slot = vec![None; ns];
            for a in &plan.actions()[..plan.forward_prefix()] {
                if let Action::Snapshot { step, slot } = *a {
                    self.forward_slot[step] = Some(slot);
                }
            }
            self.plan = Some(plan);
        }
        let used = self.slots.min(ns - 1);
        if self.len != shape.len() {
            self.bufs.clear();
            self.len = shape.len();
        }
        self.bufs.truncate(used);
        while self.bufs.len() < used {
            self.bufs.push((vec![0.0; self.len], vec![0.0; self.len]));
        }
        self.base.0.resize(self.len, 0.0);
        self.base.1.resize(self.len, 0.0);
        self.last.resize(self.len, 0.0);
        self.held = vec![None; used];
        self.cursor = self.plan.as_ref().map_or(0, |p| p.forward_prefix());
        self.replaying = false;
        self.recomputed = 0;
        self.peak_live = 0;
        self.shot = shot;
        self.sweep.begin(ns);
        Ok(())
    }

    fn save(&mut self, t: usize, state: &WaveState) -> Result<()> {
        self.sweep.check_save(t)?;
        if t == 0 {
            state.copy_pair(&mut self.base.0, &mut self.base.1);
        }
        if let Some(slot) = self.forward_slot[t] {
            let (p, c) = &mut self.bufs[slot];
            state.copy_pair(p, c);
            self.held[slot] = Some(t);
            self.peak_live = self.peak_live.max(self.live());
        }
        if t + 1 == self.sweep.ns {
            state.copy_current(&mut self.last);
            self.dump()?;
        }
        Ok(())
    }

    fn retrieve(&mut self, t: usize, replay: &mut dyn Replay, out: &mut Vec<f64>) -> Result<()> {
        self.sweep.check_retrieve(t)?;
        out.resize(self.len, 0.0);
        let plan = self.plan.as_ref().ok_or_else(|| Error::Store("no plan".into()))?;
        loop {
            let action = *plan
                .actions()
                .get(self.cursor)
                .ok_or_else(|| Error::Store("checkpoint plan exhausted".into()))?;
            self.cursor += 1;
            match action {
                Action::Reverse { step } => {
                    if step != t {
                        return Err(Error::Store(format!("plan reverses step {step}, requested {t}")));
                    }
                    if self.replaying {
                        if replay.position() != Some(step) {
                            return Err(Error::Store(format!("replay is not at step {step}")));
                        }
                        replay.copy_current(out);
                    } else {
                        out.copy_from_slice(&self.last);
                        self.replaying = true;
                    }
                    return Ok(());
                }
                Action::Advance { from, to } => {
                    if replay.position() != Some(from) {
                        return Err(Error::Store(format!(
                            "replay at {:?}, plan advances from {from}",
                            replay.position()
                        )));
                    }
                    for _ in from..to {
                        replay.advance()?;
                    }
                    self.recomputed += (to - from) as u64;
                }
                Action::Snapshot { step, slot } => {
                    let (p, c) = &mut self.bufs[slot];
                    replay.copy_pair(p, c);
                    self.held[slot] = Some(step);
                    let live = self.live();
                    if live > self.slots {
                        return Err(Error::Store(format!("{live} snapshots exceed {} slots", self.slots)));
                    }
                    self.peak_live = self.peak_live.max(live);
                }
                Action::Restore { step, slot } => match slot {
                    SlotRef::Base => replay.load(0, &self.base.0, &self.base.1),
                    SlotRef::Index(i) => {
                        if self.held[i] != Some(step) {
                            return Err(Error::Store(format!("slot {i} does not hold step {step}")));
                        }
                        let (p, c) = &self.bufs[i];
                        replay.load(step, p, c);
                    }
                },
                Action::Discard { slot } => self.held[slot] = None,
            }
        }
    }

    fn end_shot(&mut self) -> Result<()> {
        self.sweep.active = false;
        self.held.iter_mut().for_each(|h| *h = None);
        Ok(())
    }

    fn allocated_bytes(&self) -> usize {
        8 * (self.bufs.iter().map(|(p, c)| p.len() + c.len()).sum::<usize>()
            + self.base.0.len()
            + self.base.1.len()
            + self.last.len())
    }
}
