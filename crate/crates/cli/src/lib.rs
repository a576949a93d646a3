//! Command-line driver: configuration, signal files, reports and the
//! subcommands of `orbitlet`.

// `!(a < b)` is how NaN is rejected throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod config;
pub mod defaults;
pub mod io;
pub mod report;
pub mod verify;
