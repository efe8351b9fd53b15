//! Dwell-time versus jamming-power experiments and the double-exponential
//! decay fit.

mod experiment;
mod fit;
mod report;

use std::fmt;

pub use experiment::{
    measure, run_sweep_experiment, search, sweep, ExperimentError, StepResult, SweepSettings,
};
pub use fit::{evaluate_fit, fit_double_exponential, fit_points, FitCoefficients, FitError, FitResult, MAX_ITERATIONS};
pub use report::{
    fit_report, parse_table, plot_data, write_table, TableError, TableRow, CSV_HEADER, DWELL_TABLE_CSV,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Increasing => "increasing",
            Direction::Decreasing => "decreasing",
        })
    }
}

/// Jammer power needed to break the link at one dwell time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JamMeasurement {
    pub dwell_time: f64,
    pub jam_power: f64,
    pub direction: Direction,
}
