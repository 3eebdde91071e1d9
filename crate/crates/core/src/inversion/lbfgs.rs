//! Projected limited-memory BFGS with box constraints, driven by reverse
//! communication: the caller evaluates `J` and its gradient whenever the
//! optimizer asks.

use std::collections::VecDeque;

use crate::config::BoundMode;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOptions {
    /// Number of stored correction pairs.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    pub max_backtracks: usize,
    /// Projected-gradient tolerance relative to `max(1, ‖x‖∞)`.
    pub pgtol: f64,
    /// Relative decrease of `J` below which the run stops.
    pub ftol: f64,
    /// Cap on objective/gradient evaluations.
    pub max_evaluations: usize,
    /// Cap on accepted model updates.
    pub max_updates: usize,
    /// Largest change of any component on a step without curvature
    /// information. `None` uses a step of length `min(1, 1/‖d‖₂)`.
    pub max_first_change: Option<f64>,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 5,
            c1: 1e-4,
            max_backtracks: 20,
            pgtol: 1e-8,
            ftol: 1e-12,
            max_evaluations: 100,
            max_updates: 100,
            max_first_change: None,
        }
    }
}

/// Elementwise box; infinite entries are unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const UNBOUNDED: Bounds = Bounds {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::Validation(format!("inconsistent bounds [{lower}, {upper}]")));
        }
        Ok(Bounds { lower, upper })
    }

    /// Bounds selected by the `lbfgsb` mode code.
    pub fn from_mode(mode: BoundMode, lower: Option<f64>, upper: Option<f64>) -> Result<Self> {
        let pick = |wanted: bool, v: Option<f64>, default: f64, name: &str| -> Result<f64> {
            match (wanted, v) {
                (false, _) => Ok(default),
                (true, Some(v)) => Ok(v),
                (true, None) => Err(Error::Validation(format!("bound mode {} requires {name}", mode.code()))),
            }
        };
        Bounds::new(
            pick(mode.has_lower(), lower, f64::NEG_INFINITY, "lbfgsb_lower_bound")?,
            pick(mode.has_upper(), upper, f64::INFINITY, "lbfgsb_upper_bound")?,
        )
    }

    #[inline]
    pub fn project(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|v| *v >= self.lower && *v <= self.upper)
    }
}

/// Request issued to the caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Evaluate `J` and its gradient at [`Lbfgs::x`] and call `tell`.
    Evaluate,
    /// A step was accepted; [`Lbfgs::x`] is the new model. Call `resume`.
    NewIterate,
    Stop(Status),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Projected gradient small, relative decrease negligible, or no
    /// feasible descent left.
    Converged,
    EvaluationLimit,
    UpdateLimit,
    LineSearchFailed,
}

impl Status {
    pub fn is_failure(self) -> bool {
        self == Status::LineSearchFailed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Initial,
    Search,
    Accepted,
    Done(Status),
}

#[derive(Debug, Clone)]
struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Lbfgs {
    opts: LbfgsOptions,
    bounds: Bounds,
    /// Point the caller is asked about (trial or accepted).
    x: Vec<f64>,
    xk: Vec<f64>,
    fk: f64,
    gk: Vec<f64>,
    f_prev: f64,
    dir: Vec<f64>,
    alpha: f64,
    backtracks: usize,
    pairs: VecDeque<Pair>,
    phase: Phase,
    evaluations: usize,
    updates: usize,
}

impl Lbfgs {
    /// `x0` is projected onto the box.
    pub fn new(x0: Vec<f64>, bounds: Bounds, opts: LbfgsOptions) -> Self {
        let x: Vec<f64> = x0.into_iter().map(|v| bounds.project(v)).collect();
        Lbfgs {
            opts,
            bounds,
            xk: x.clone(),
            x,
            fk: f64::NAN,
            gk: Vec::new(),
            f_prev: f64::NAN,
            dir: Vec::new(),
            alpha: 0.0,
            backtracks: 0,
            pairs: VecDeque::new(),
            phase: Phase::Idle,
            evaluations: 0,
            updates: 0,
        }
    }

    pub fn start(&mut self) -> Task {
        assert_eq!(self.phase, Phase::Idle, "optimizer already started");
        if self.opts.max_evaluations == 0 {
            return self.stop(Status::EvaluationLimit);
        }
        self.phase = Phase::Initial;
        Task::Evaluate
    }

    /// Point to evaluate, or the accepted model after `NewIterate` and
    /// `Stop`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Objective at the last accepted model.
    pub fn f(&self) -> f64 {
        self.fk
    }

    pub fn gradient(&self) -> &[f64] {
        &self.gk
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn status(&self) -> Option<Status> {
        match self.phase {
            Phase::Done(s) => Some(s),
            _ => None,
        }
    }

    /// ‖P(x − g) − x‖∞ at the accepted model.
    pub fn projected_gradient_norm(&self) -> f64 {
        self.xk
            .iter()
            .zip(&self.gk)
            .map(|(x, g)| (self.bounds.project(x - g) - x).abs())
            .fold(0.0, f64::max)
    }

    /// Reports `J` and its gradient at [`x`](Self::x).
    pub fn tell(&mut self, f: f64, g: &[f64]) -> Task {
        assert_eq!(g.len(), self.x.len(), "gradient length mismatch");
        self.evaluations += 1;
        match self.phase {
            Phase::Initial => {
                if !f.is_finite() {
                    return self.stop(Status::LineSearchFailed);
                }
                self.xk.copy_from_slice(&self.x);
                self.fk = f;
                self.gk = g.to_vec();
                self.begin_search()
            }
            Phase::Search => {
                let predicted: f64 = self.gk.iter().zip(&self.x).zip(&self.xk).map(|((g, x), xk)| g * (x - xk)).sum();
                if f.is_finite() && f <= self.fk + self.opts.c1 * predicted {
                    self.accept(f, g);
                    return Task::NewIterate;
                }
                self.backtracks += 1;
                if self.backtracks > self.opts.max_backtracks {
                    return self.stop(Status::LineSearchFailed);
                }
                if self.evaluations >= self.opts.max_evaluations {
                    return self.stop(Status::EvaluationLimit);
                }
                self.alpha *= 0.5;
                self.set_trial();
                Task::Evaluate
            }
            phase => panic!("tell called in phase {phase:?}"),
        }
    }

    /// Continues after `NewIterate`.
    pub fn resume(&mut self) -> Task {
        assert_eq!(self.phase, Phase::Accepted, "resume called without a new iterate");
        if self.updates >= self.opts.max_updates {
            return self.stop(Status::UpdateLimit);
        }
        let scale = self.f_prev.abs().max(self.fk.abs()).max(f64::MIN_POSITIVE);
        if (self.f_prev - self.fk) <= self.opts.ftol * scale {
            return self.stop(Status::Converged);
        }
        self.begin_search()
    }

    fn stop(&mut self, status: Status) -> Task {
        self.x.copy_from_slice(&self.xk);
        self.phase = Phase::Done(status);
        Task::Stop(status)
    }

    fn accept(&mut self, f: f64, g: &[f64]) {
        let s: Vec<f64> = self.x.iter().zip(&self.xk).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&self.gk).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if sy > f64::EPSILON * yy {
            if self.pairs.len() == self.opts.memory {
                self.pairs.pop_front();
            }
            if self.opts.memory > 0 {
                self.pairs.push_back(Pair { s, y });
            }
        }
        self.f_prev = self.fk;
        self.xk.copy_from_slice(&self.x);
        self.fk = f;
        self.gk.copy_from_slice(g);
        self.updates += 1;
        self.phase = Phase::Accepted;
    }

    fn begin_search(&mut self) -> Task {
        let xnorm = self.xk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if self.projected_gradient_norm() <= self.opts.pgtol * xnorm.max(1.0) {
            return self.stop(Status::Converged);
        }
        if self.updates >= self.opts.max_updates {
            return self.stop(Status::UpdateLimit);
        }
        if self.evaluations >= self.opts.max_evaluations {
            return self.stop(Status::EvaluationLimit);
        }
        let curvature = self.direction();
        let dinf = self.dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dinf == 0.0 {
            return self.stop(Status::Converged);
        }
        self.alpha = if curvature {
            1.0
        } else {
            match self.opts.max_first_change {
                Some(delta) => delta / dinf,
                None => {
                    let d2 = self.dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (1.0 / d2).min(1.0)
                }
            }
        };
        self.backtracks = 0;
        self.phase = Phase::Search;
        self.set_trial();
        if self.x == self.xk {
            return self.stop(Status::Converged);
        }
        Task::Evaluate
    }

    fn set_trial(&mut self) {
        let (a, b) = (self.alpha, &self.bounds);
        for ((x, xk), d) in self.x.iter_mut().zip(&self.xk).zip(&self.dir) {
            *x = b.project(xk + a * d);
        }
    }

    /// Two-loop recursion restricted to the free variables. Returns whether
    /// curvature pairs shaped the direction.
    fn direction(&mut self) -> bool {
        let free: Vec<bool> = self
            .xk
            .iter()
            .zip(&self.gk)
            .map(|(&x, &g)| !((x <= self.bounds.lower && g > 0.0) || (x >= self.bounds.upper && g < 0.0)))
            .collect();
        let fdot = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).zip(&free).filter(|(_, f)| **f).map(|((x, y), _)| x * y).sum()
        };
        let mut q: Vec<f64> = self.gk.iter().zip(&free).map(|(g, f)| if *f { *g } else { 0.0 }).collect();
        let used: Vec<(&Pair, f64)> = self
            .pairs
            .iter()
            .filter_map(|p| {
                let sy = fdot(&p.s, &p.y);
                (sy > 0.0).then_some((p, 1.0 / sy))
            })
            .collect();
        let mut alphas = vec![0.0; used.len()];
        for (i, (p, rho)) in used.iter().enumerate().rev() {
            let a = rho * fdot(&p.s, &q);
            alphas[i] = a;
            q.iter_mut().zip(&p.y).zip(&free).for_each(|((qi, yi), f)| {
                if *f {
                    *qi -= a * yi
                }
            });
        }
        if let Some((p, rho)) = used.last() {
            let gamma = 1.0 / (rho * fdot(&p.y, &p.y));
            q.iter_mut().for_each(|v| *v *= gamma);
        }
        for (i, (p, rho)) in used.iter().enumerate() {
            let b = rho * fdot(&p.y, &q);
            q.iter_mut().zip(&p.s).zip(&free).for_each(|((qi, si), f)| {
                if *f {
                    *qi += (alphas[i] - b) * si
                }
            });
        }
        self.dir = q.iter().map(|v| -v).collect();
        let descent: f64 = self.dir.iter().zip(&self.gk).map(|(d, g)| d * g).sum();
        if used.is_empty() || !(descent < 0.0) {
            self.dir = self.gk.iter().zip(&free).map(|(g, f)| if *f { -g } else { 0.0 }).collect();
            return false;
        }
        true
    }
}
