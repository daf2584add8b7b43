//! Configuration, file formats, experiment pipelines and report emission
//! around `screenlab-core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod lp_export;
pub mod pipelines;
pub mod report;

pub use config::{Coarseness, Command, ExperimentConfig, Format};
pub use error::{AppError, AppResult};
pub use pipelines::run;
pub use report::Output;
