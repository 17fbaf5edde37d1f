//! File formats and command-line front end for `consreg-core`.
//!
//! * [`csv_io`]: `x_`/`s_`/`y_` prefixed CSV datasets, predictions and curves
//! * [`model_file`]: versioned JSON model files that round-trip byte for byte
//! * [`metrics`]: RMSE and HSIC reports
//! * [`cli`]: the `consreg` binary

pub mod cli;
pub mod csv_io;
pub mod error;
pub mod metrics;
pub mod model_file;

pub use error::{DataError, Error, ModelFileError, Result};
pub use metrics::MetricsReport;
pub use model_file::ModelFile;
