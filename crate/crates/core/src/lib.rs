//! Acoustic finite-difference modeling and full-waveform inversion.

pub mod config;
pub mod error;
pub mod inversion;
pub mod model;
pub mod propagator;
pub mod scheduler;
pub mod seismic_io;
pub mod stencil;
pub mod store;
pub mod survey;
pub mod workflow;

pub use error::{Error, Result};
