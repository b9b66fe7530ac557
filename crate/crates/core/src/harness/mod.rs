//! Monte Carlo experiment orchestration: coefficient moments, MSE sweeps,
//! training comparisons and their tabular outputs.

mod convergence;
mod exec;
pub mod moments;
pub mod mse;
mod sweep;
pub mod table;
mod trial;

pub use convergence::{compare_convergence, compare_convergence_with, write_trace_csv, ConvergenceReport, ConvergenceSummary, TRACE_HEADER};
pub use exec::{resolve_workers, Executor, BLOCK_SIZE, WORKERS_ENV};
pub use moments::{estimate_coefficient_moments, CoefficientMoment, DeviceRole, MomentEstimate};
pub use mse::{correlated_gradients, empirical_mse, GradientSource, MseEstimate};
pub use sweep::{apply_axis, sweep, SweepAxis, SweepSettings, SyntheticGradients};
pub use table::{loglog_slope, table_loglog_slope, Metric, ResultTable, TableRow};
pub use trial::{experiment_geometry, trial_stream, TrialContext, TrialDraw};
