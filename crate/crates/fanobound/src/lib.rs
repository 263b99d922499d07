//! File formats, Monte Carlo checks, soundness fuzzing and the command-line
//! front end for [`fanobound_core`].

pub mod cli;
pub mod fuzz;
pub mod io;
pub mod mc;
pub mod render;

/// Master seed of the committed verification run.
pub const DEFAULT_SEED: u64 = 0x5EED_F4A0;
