//! Calibration assessment for binary risk predictions based on partial sums
//! of prediction errors.
//!
//! Predictions are sorted, and the standardized cumulative sum of
//! `Y_i - π_i` forms a random walk that behaves like Brownian motion when
//! the model is calibrated. The crate provides:
//!
//! * [`process`]: validated datasets and the walk with its statistics,
//! * [`dist`]: the limiting distributions and their critical values,
//! * [`inference`]: the Brownian-motion and bridge tests, Hosmer–Lemeshow,
//!   the likelihood-ratio test of weak calibration and Monte Carlo tests,
//! * [`sim`]: the null and power simulation studies,
//! * [`plot`]: SVG rendering of cumulative and binned calibration plots,
//! * [`io`]: CSV input, JSON reports and key/value configuration.
//!
//! Replicate loops run on rayon when the default `parallel` feature is
//! enabled; [`Execution::Sequential`] is always available.

pub mod casestudy;
pub mod dist;
pub mod error;
pub mod exec;
pub mod inference;
pub mod io;
pub mod plot;
pub mod process;
pub mod sim;

pub use error::{Error, Result};
pub use exec::Execution;
pub use process::{
    build_dataset, cumulative_process, walk_statistics, CalibrationDataset, CumulativeProcess,
    WalkLocation, WalkStatistics,
};
