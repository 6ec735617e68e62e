//! File formats, command line and experiment drivers around `tlr-core`.
//!
//! * [`traces`]: line-delimited trace files.
//! * [`rules`]: `.tlr` rule files.
//! * [`checkpoint`]: structure checkpoints and training metrics.
//! * [`drivers`]: demonstrations, ablation sweep, end-to-end pipeline.
//! * [`cli`]: the `tlr` binary.

pub mod checkpoint;
pub mod cli;
pub mod clock;
pub mod drivers;
pub mod error;
pub mod header;
pub mod parallel;
pub mod rules;
pub mod traces;

pub use clock::SystemClock;
pub use error::{CliError, CliResult};
