//! Optimal checkpoint schedules for reversing a chain of time steps.
//!
//! Step indices `0..ns` name the forward states produced by each time step.
//! Reversal needs the states in decreasing order. State 0 is the base of the
//! schedule and is kept outside the `s` snapshot slots.

use std::fmt;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRef {
    /// The state at step 0, held for the whole sweep.
    Base,
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Re-run the time steps taking the state at `from` to the state at `to`.
    Advance { from: usize, to: usize },
    /// Copy the current state (at `step`) into a slot.
    Snapshot { step: usize, slot: usize },
    /// Make the state held in `slot` (at `step`) current.
    Restore { step: usize, slot: SlotRef },
    /// Hand the current state at `step` to the backward sweep.
    Reverse { step: usize },
    /// Release a slot.
    Discard { slot: usize },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Advance { from, to } => write!(f, "advance {from}->{to}"),
            Action::Snapshot { step, slot } => write!(f, "snapshot {step} -> slot {slot}"),
            Action::Restore { step, slot: SlotRef::Base } => write!(f, "restore {step} <- base"),
            Action::Restore {
                step,
                slot: SlotRef::Index(i),
            } => write!(f, "restore {step} <- slot {i}"),
            Action::Reverse { step } => write!(f, "reverse {step}"),
            Action::Discard { slot } => write!(f, "discard slot {slot}"),
        }
    }
}

/// Minimal advance counts `W(l, s)` for reversing `l` states with `s` free
/// slots, and the first-snapshot offsets achieving them.
struct CostTable {
    slots: usize,
    cost: Vec<u64>,
    split: Vec<usize>,
}

const INFEASIBLE: u64 = u64::MAX;

impl CostTable {
    fn build(ns: usize, slots: usize) -> Self {
        let width = slots + 1;
        let mut cost = vec![INFEASIBLE; (ns + 1) * width];
        let mut split = vec![0; (ns + 1) * width];
        for s in 0..=slots {
            cost[width + s] = 0;
        }
        for l in 2..=ns {
            for s in 1..=slots {
                let mut best = INFEASIBLE;
                let mut best_k = 0;
                for k in 1..l {
                    let right = cost[(l - k) * width + s - 1];
                    let left = cost[k * width + s];
                    if right == INFEASIBLE || left == INFEASIBLE {
                        continue;
                    }
                    let c = k as u64 + right + left;
                    if c < best {
                        best = c;
                        best_k = k;
                    }
                }
                cost[l * width + s] = best;
                split[l * width + s] = best_k;
            }
        }
        CostTable { slots, cost, split }
    }

    fn cost(&self, l: usize, s: usize) -> u64 {
        self.cost[l * (self.slots + 1) + s]
    }

    fn split(&self, l: usize, s: usize) -> usize {
        self.split[l * (self.slots + 1) + s]
    }
}

/// Minimal number of advanced steps to reverse `ns` states with `slots`
/// snapshots, or `None` when impossible.
pub fn optimal_advances(ns: usize, slots: usize) -> Option<u64> {
    if ns == 0 {
        return Some(0);
    }
    let slots = slots.min(ns - 1);
    let c = CostTable::build(ns, slots).cost(ns, slots);
    (c != INFEASIBLE).then_some(c)
}

/// An action schedule for one backward sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointPlan {
    ns: usize,
    slots: usize,
    actions: Vec<Action>,
}

/// Builds the schedule minimizing the number of advanced steps.
pub fn plan_checkpoints(ns: usize, slots: usize) -> Result<CheckpointPlan> {
    if ns == 0 {
        return Err(Error::InvalidArgument("cannot plan a sweep over zero steps".into()));
    }
    if slots == 0 && ns > 1 {
        return Err(Error::InvalidArgument(format!(
            "reversing {ns} steps needs at least one checkpoint slot"
        )));
    }
    let used = slots.min(ns - 1);
    let table = CostTable::build(ns, used);
    let mut emitter = Emitter {
        table: &table,
        actions: Vec::new(),
        free: (0..used).rev().collect(),
    };
    emitter.emit(0, ns, used, SlotRef::Base);
    Ok(CheckpointPlan {
        ns,
        slots,
        actions: emitter.actions,
    })
}

struct Emitter<'a> {
    table: &'a CostTable,
    actions: Vec<Action>,
    free: Vec<usize>,
}

impl Emitter<'_> {
    /// Reverses states `start..start+len`; `start` is current and held by
    /// `holder`.
    fn emit(&mut self, start: usize, len: usize, s: usize, holder: SlotRef) {
        if len == 1 {
            self.actions.push(Action::Reverse { step: start });
            return;
        }
        let k = self.table.split(len, s);
        let slot = self.free.pop().expect("free slot available");
        self.actions.push(Action::Advance {
            from: start,
            to: start + k,
        });
        self.actions.push(Action::Snapshot { step: start + k, slot });
        self.emit(start + k, len - k, s - 1, SlotRef::Index(slot));
        self.actions.push(Action::Discard { slot });
        self.free.push(slot);
        self.actions.push(Action::Restore { step: start, slot: holder });
        self.emit(start, k, s, holder);
    }
}

impl CheckpointPlan {
    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// Total number of time steps advanced, including the initial sweep.
    pub fn advance_count(&self) -> u64 {
        self.actions
            .iter()
            .map(|a| match *a {
                Action::Advance { from, to } => (to - from) as u64,
                _ => 0,
            })
            .sum()
    }

    /// Steps recomputed beyond the initial forward sweep.
    pub fn recomputed_steps(&self) -> u64 {
        self.advance_count() - (self.ns as u64 - 1)
    }

    /// Index of the first `Reverse`; everything before it is the initial
    /// forward sweep.
    pub fn forward_prefix(&self) -> usize {
        self.actions
            .iter()
            .position(|a| matches!(a, Action::Reverse { .. }))
            .unwrap_or(self.actions.len())
    }

    /// Checks the schedule by simulating it.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let mut current = Some(0usize);
        let mut held: Vec<Option<usize>> = vec![None; self.slots];
        let mut next_reverse = self.ns as isize - 1;
        for (i, a) in self.actions.iter().enumerate() {
            let fail = |msg: String| Err(format!("action {i} ({a}): {msg}"));
            match *a {
                Action::Advance { from, to } => {
                    if current != Some(from) || to <= from || to >= self.ns {
                        return fail(format!("current state is {current:?}"));
                    }
                    current = Some(to);
                }
                Action::Snapshot { step, slot } => {
                    if current != Some(step) {
                        return fail(format!("current state is {current:?}"));
                    }
                    match held.get_mut(slot) {
                        Some(h @ None) => *h = Some(step),
                        Some(Some(_)) => return fail("slot already occupied".into()),
                        None => return fail("slot out of range".into()),
                    }
                }
                Action::Restore { step, slot } => {
                    let ok = match slot {
                        SlotRef::Base => step == 0,
                        SlotRef::Index(s) => held.get(s).copied().flatten() == Some(step),
                    };
                    if !ok {
                        return fail("slot does not hold that state".into());
                    }
                    current = Some(step);
                }
                Action::Reverse { step } => {
                    if step as isize != next_reverse || current != Some(step) {
                        return fail(format!("expected reverse of {next_reverse} with current {current:?}"));
                    }
                    next_reverse -= 1;
                    current = None;
                }
                Action::Discard { slot } => match held.get_mut(slot) {
                    Some(h @ Some(_)) => *h = None,
                    _ => return fail("slot is empty".into()),
                },
            }
        }
        if next_reverse != -1 {
            return Err(format!("sweep stopped before step {next_reverse}"));
        }
        Ok(())
    }
}
