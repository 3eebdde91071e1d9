//! Shot distribution over an in-process worker pool: static blocks or
//! cyclic token-based work stealing (CTWS).

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleMode {
    Static,
    Ctws,
}

impl ScheduleMode {
    /// `ws_flag = 1` selects work stealing.
    pub fn from_ws_flag(ws_flag: bool) -> Self {
        if ws_flag {
            ScheduleMode::Ctws
        } else {
            ScheduleMode::Static
        }
    }
}

/// Contiguous blocks of shot IDs whose sizes differ by at most one, larger
/// blocks first.
pub fn static_assign(n_shots: usize, n_workers: usize) -> Vec<Vec<usize>> {
    assert!(n_workers >= 1, "at least one worker is required");
    let base = n_shots / n_workers;
    let extra = n_shots % n_workers;
    let mut next = 0;
    (0..n_workers)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let block = (next..next + len).collect();
            next += len;
            block
        })
        .collect()
}

/// Per-worker queues of shot IDs.
///
/// A worker calling [`next_shot`](Self::next_shot) is taken to have
/// finished its previous shot. In CTWS mode a worker whose queue is empty
/// takes the ring token and passes it from its successor onwards; the first
/// worker with more than one shot remaining (queued plus running) gives up
/// the back half of its queue.
#[derive(Debug)]
pub struct ShotSchedule {
    mode: ScheduleMode,
    queues: Vec<Mutex<VecDeque<usize>>>,
    running: Vec<AtomicUsize>,
    token: Mutex<()>,
    steals: AtomicUsize,
}

impl ShotSchedule {
    pub fn new(n_shots: usize, n_workers: usize, mode: ScheduleMode) -> Self {
        let queues = static_assign(n_shots, n_workers)
            .into_iter()
            .map(|b| Mutex::new(b.into_iter().collect()))
            .collect();
        ShotSchedule {
            mode,
            queues,
            running: (0..n_workers).map(|_| AtomicUsize::new(0)).collect(),
            token: Mutex::new(()),
            steals: AtomicUsize::new(0),
        }
    }

    pub fn n_workers(&self) -> usize {
        self.queues.len()
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    /// Number of successful steals so far.
    pub fn steals(&self) -> usize {
        self.steals.load(Ordering::Relaxed)
    }

    /// The next shot for `worker`, or `None` once no work is left for it.
    pub fn next_shot(&self, worker: usize) -> Option<usize> {
        assert!(worker < self.queues.len(), "worker index out of range");
        if let Some(shot) = self.pop_own(worker) {
            return Some(shot);
        }
        if self.mode == ScheduleMode::Ctws && self.steal(worker) {
            if let Some(shot) = self.pop_own(worker) {
                return Some(shot);
            }
        }
        self.running[worker].store(0, Ordering::SeqCst);
        None
    }

    fn pop_own(&self, worker: usize) -> Option<usize> {
        let mut q = self.queues[worker].lock().expect("queue lock");
        let shot = q.pop_front();
        self.running[worker].store(usize::from(shot.is_some()), Ordering::SeqCst);
        shot
    }

    /// Circulates the token once around the ring; true if shots moved.
    fn steal(&self, thief: usize) -> bool {
        let _token = self.token.lock().expect("token lock");
        let n = self.queues.len();
        for hop in 1..n {
            let victim = (thief + hop) % n;
            let mut vq = self.queues[victim].lock().expect("queue lock");
            let remaining = vq.len() + self.running[victim].load(Ordering::SeqCst);
            if remaining > 1 && !vq.is_empty() {
                let take = vq.len().div_ceil(2);
                let keep = vq.len() - take;
                let stolen = vq.split_off(keep);
                drop(vq);
                self.queues[thief].lock().expect("queue lock").extend(stolen);
                self.steals.fetch_add(1, Ordering::Relaxed);
                return true;
            }
        }
        false
    }
}

/// Results of [`run_pool`], indexed by shot ID.
#[derive(Debug)]
pub struct PoolOutput<T> {
    pub results: Vec<T>,
    /// Worker that executed each shot.
    pub worker_of: Vec<usize>,
}

impl<T> PoolOutput<T> {
    /// Shots executed by each worker.
    pub fn executed_counts(&self, n_workers: usize) -> Vec<usize> {
        let mut counts = vec![0; n_workers];
        for &w in &self.worker_of {
            counts[w] += 1;
        }
        counts
    }
}

/// Runs `work(shot, worker)` for every shot on `n_workers` threads.
///
/// With one worker the shots run on the calling thread in ID order. The
/// first failure stops further dispatch and is returned.
pub fn run_pool<T, F>(n_shots: usize, n_workers: usize, mode: ScheduleMode, work: F) -> Result<PoolOutput<T>>
where
    T: Send,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    let n_workers = n_workers.max(1);
    let schedule = ShotSchedule::new(n_shots, n_workers, mode);
    let slots: Vec<Mutex<Option<(T, usize)>>> = (0..n_shots).map(|_| Mutex::new(None)).collect();
    let failed = AtomicBool::new(false);
    let first_error: Mutex<Option<Error>> = Mutex::new(None);

    let worker_loop = |worker: usize| {
        while !failed.load(Ordering::SeqCst) {
            let Some(shot) = schedule.next_shot(worker) else {
                break;
            };
            match work(shot, worker) {
                Ok(value) => *slots[shot].lock().expect("result lock") = Some((value, worker)),
                Err(e) => {
                    failed.store(true, Ordering::SeqCst);
                    let mut first = first_error.lock().expect("error lock");
                    if first.is_none() {
                        *first = Some(Error::Shot {
                            shot,
                            source: Box::new(e),
                        });
                    }
                }
            }
        }
    };

    if n_workers == 1 {
        worker_loop(0);
    } else {
        std::thread::scope(|scope| {
            for w in 0..n_workers {
                let worker_loop = &worker_loop;
                scope.spawn(move || worker_loop(w));
            }
        });
    }

    if let Some(e) = first_error.into_inner().expect("error lock") {
        return Err(e);
    }
    let mut results = Vec::with_capacity(n_shots);
    let mut worker_of = Vec::with_capacity(n_shots);
    for (shot, slot) in slots.into_iter().enumerate() {
        let (value, w) = slot
            .into_inner()
            .expect("result lock")
            .ok_or_else(|| Error::InvalidArgument(format!("shot {shot} was never executed")))?;
        results.push(value);
        worker_of.push(w);
    }
    Ok(PoolOutput { results, worker_of })
}

/// Outcome of a discrete-event replay of a schedule with known costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub makespan: f64,
    /// Shot IDs in the order each worker ran them.
    pub executed: Vec<Vec<usize>>,
}

/// Simulates workers pulling shots from a [`ShotSchedule`], where shot
/// `s` on worker `w` takes `cost(s, w)` time units. The worker that becomes
/// idle first (lowest index on ties) asks next.
pub fn simulate_makespan(
    n_shots: usize,
    n_workers: usize,
    mode: ScheduleMode,
    cost: impl Fn(usize, usize) -> f64,
) -> Simulation {
    let schedule = ShotSchedule::new(n_shots, n_workers, mode);
    let mut free_at = vec![0.0f64; n_workers];
    let mut done = vec![false; n_workers];
    let mut executed = vec![Vec::new(); n_workers];
    let mut makespan = 0.0f64;
    while let Some(w) = (0..n_workers)
        .filter(|&w| !done[w])
        .min_by(|&a, &b| free_at[a].total_cmp(&free_at[b]).then(a.cmp(&b)))
    {
        match schedule.next_shot(w) {
            Some(shot) => {
                free_at[w] += cost(shot, w);
                makespan = makespan.max(free_at[w]);
                executed[w].push(shot);
            }
            None => done[w] = true,
        }
    }
    Simulation { makespan, executed }
}
