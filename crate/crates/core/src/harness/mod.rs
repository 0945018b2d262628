//! Monte Carlo strong-error studies, rate fitting and moment statistics.

mod fit;
mod initial;
mod moments;
mod stats;
mod study;

pub use fit::{fit_rate, RateFit};
pub use initial::{random_smooth_field, InitialCondition};
pub use moments::{moment_report, write_moments_csv, MomentRow, MomentStatistic};
pub use study::{
    cross_scheme_study, run_ensemble, strong_error_study, write_errors_csv, write_rates_csv, CrossSample,
    ErrorReport, ErrorRow, NoiseSpec, RateRow, StudyConfig,
};
