//! File formats, batch orchestration and the command-line interface around
//! `erel-core`.

pub mod batch;
pub mod cli;
pub mod config;
pub mod contour_io;
pub mod error;
pub mod overlay;
pub mod pgm;
pub mod report;

pub use batch::{run_batch, BatchConfig, BatchSummary, Mode};
pub use error::{IvusError, Result};
