//! Configuration, dataset files and the command-line workflow.

mod commands;
mod config;
mod data;

pub use commands::{
    cmd_bootstrap, cmd_covariance, cmd_fit, cmd_simulate, cmd_tail, exit_code, fit_table, read_fit_report, run_fit,
    simulate_field, FitReport,
};
pub use config::{
    BootstrapSection, CovarianceSection, FitSection, LoadedConfig, PathsSection, RunConfig, SimMethod,
    SimulationSection, SitesSection, TailSection,
};
pub use data::{csv_bytes, field_csv, fmt_f64, header_line, load_dataset, write_atomic};
