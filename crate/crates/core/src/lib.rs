//! Design and analysis toolkit for a self-aligning knee exoskeleton: knee
//! and rolling-joint kinematics, attachment misalignment and roller-size
//! optimisation, strap statics, actuator calibration and stance-phase
//! assistance simulation.

pub mod actuation;
pub mod chain;
pub mod cli;
pub mod config;
pub mod error;
pub mod gait;
pub mod geometry;
pub mod io;
pub mod knee;
pub mod mechanism;
pub mod numeric;
pub mod statics;
pub mod synth;

pub use error::{Error, Result};
