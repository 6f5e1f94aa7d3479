//! Spec parsing and subcommands behind the `hvcollapse` binary.

pub mod commands;
pub mod error;
pub mod spec;

pub use commands::{cmd_collapse, cmd_evolve, cmd_sweep, SweepAxis, SweepPoint};
pub use error::CliError;
pub use spec::{parse_evolve_spec, parse_spec, EvolveInitial, EvolveSpec, Override};

/// Parse `v1,v2,...` into numbers.
pub fn parse_values(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::validation("--values", format!("`{s}` is not a number")))
        })
        .collect()
}
