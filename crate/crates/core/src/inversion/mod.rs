//! Full-waveform inversion: misfit, adjoint-state gradient, gradient
//! post-processing and the bound-constrained optimizer loop.

pub mod adjoint;
pub mod fwi;
pub mod lbfgs;
pub mod misfit;
pub mod precondition;

pub use adjoint::{adjoint_shot, GradientKernel};
pub use fwi::{fwi_run, multiply_adjoint, Evaluation, FwiOptions, FwiOutcome, FwiProblem, DEFAULT_FIRST_STEP_FRACTION};
pub use lbfgs::{Bounds, Lbfgs, LbfgsOptions, Status, Task};
pub use misfit::{misfit, residual};
pub use precondition::{precondition_gradient, zeroes_near_surface, Smoothing};
