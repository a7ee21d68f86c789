//! Config-driven runner around `calderon`: each subcommand builds a problem
//! from a JSON configuration, runs one pipeline and writes CSV/JSON artifacts.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod output;
pub mod run;
