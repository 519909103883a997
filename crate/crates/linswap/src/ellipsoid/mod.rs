//! Central-cut ellipsoid engine and the shell-ellipsoid search over affine
//! maps.

mod engine;
mod optimize;
mod shell;

pub use engine::*;
pub use optimize::{maximize, CutMax};
pub use shell::{shell_ellipsoid, Frontier, Region, ShellOutcome};
