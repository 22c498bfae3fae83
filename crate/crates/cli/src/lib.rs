//! Command-line front end for the driven XY chain.

pub mod commands;
pub mod config;
pub mod output;
